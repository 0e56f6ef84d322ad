#pragma once

#include "idwattn/model.hpp"

#include <utility>
#include <vector>

namespace idw {

/// A special case to pin: at input q the model must predict target_class.
/// margin < 0 selects the default 1e-6 * (1 + |eta|); the tie point alone
/// would leave the winner implementation-defined.
struct AugmentRequest {
    std::vector<double> input;
    int target_class = 0;
    double margin = -1.0;
};

struct AugmentResult {
    bool applied = false; // false: the model already predicted the target
    double eta = 0.0;
    double margin = 0.0;
    int pre_class = 0;
    int post_class = 0;
};

/// Normalized reciprocal weights over Euclidean distances:
/// sigma(d)_i = (eps + d_i^p)^-1 / sum_j (eps + d_j^p)^-1.
/// Matches idw_weights on the squared distances exactly (shared kernel).
std::vector<double> sigma_weights(const std::vector<double>& dists, double p, double eps);

struct EtaResult {
    double eta = 0.0;
    bool already_target = false;
    int pre_class = 0;
};

/// Minimal logit mass eta on the target class for a prototype placed at the
/// query itself (distance 0, unnormalized weight 1/eps):
///
///   eta = (1 + eps * sum_j (eps + d_j^p)^-1)
///         * [ max_{k != c} sigma~ . V_{:,k}  -  sigma~ . V_{:,c} ]
///
/// where sigma~ are the original prototypes' weights after the new one is
/// appended. eta is the exact tie point; callers add a margin to win.
EtaResult compute_eta(const std::vector<double>& dists, const Matrix& values, int target_class,
                      double p, double eps);

/// Appends (key := q, value := (eta + margin) * e_c). Only defined for the
/// inverse-distance weighting kind; the closed form above is specific to it.
/// Returns the grown net and the audit record; a no-op request returns the
/// net unchanged with applied == false.
std::pair<PrototypeNet, AugmentResult> inject(const PrototypeNet& net, const AugmentRequest& req);

} // namespace idw

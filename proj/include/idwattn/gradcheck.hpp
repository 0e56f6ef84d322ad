#pragma once

#include "idwattn/attention.hpp"
#include "idwattn/matrix.hpp"
#include "idwattn/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace idw {

/// Comparison of an analytic gradient against central finite differences of
/// a scalar loss. Entries where both sides are below `abs_floor` are treated
/// as matching zero (the difference quotient is pure rounding noise there).
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t entries_checked = 0;
};

/// `loss` re-evaluates the scalar from the current parameter values; the
/// parameters are perturbed in place and restored. This path never touches
/// the analytic backward code, so it stays an independent oracle.
GradCheckReport compare_grads(const std::function<double()>& loss,
                              const std::vector<Matrix*>& params,
                              const std::vector<std::string>& names,
                              const std::vector<Matrix>& analytic, double h = 1e-5,
                              double abs_floor = 1e-7);

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

/// Random-instance finite-difference checks of the model backward path
/// (cross-entropy loss through forward) for one architecture.
/// `arch` is a score-kind name or "fcrelu".
GradCheckCase gradcheck_arch(const std::string& arch, std::size_t trials, double tol, Rng rng);

/// All five score kinds plus the fc baseline.
std::vector<GradCheckCase> gradcheck_all(std::size_t trials, double tol, std::uint64_t seed);

} // namespace idw

#pragma once

#include "idwattn/matrix.hpp"

#include <string>
#include <string_view>

namespace idw {

enum class Score {
    ScaledDot,  // q.k / sqrt(d)
    NegDist,    // -D^2
    GaussDist,  // exp(-D^2 / sigma^2)
    InvDist,    // 1 / (eps + D^p)
    NegLogDist, // -log(eps + D^p); inside softmax this is exactly IDW
};

/// Score function selector plus its hyperparameters. p/eps apply to the
/// inverse and negative-log kinds, sigma to the Gaussian kernel.
struct ScoreKind {
    Score score = Score::NegLogDist;
    double p = 2.0;
    double eps = 1e-3;
    double sigma = 1.0;

    static ScoreKind scaled_dot();
    static ScoreKind neg_dist();
    static ScoreKind gauss_dist(double sigma = 1.0);
    static ScoreKind inv_dist(double p = 2.0, double eps = 1e-3);
    static ScoreKind neglog_dist(double p = 2.0, double eps = 1e-3);

    bool distance_based() const { return score != Score::ScaledDot; }
    void validate() const; // p > 0, eps > 0, sigma > 0

    std::string_view name() const;
    static Score score_from_name(std::string_view name);
};

/// Forward attention result plus the intermediates backward needs.
/// `basis` holds squared distances for the distance kinds and q.K^T for
/// scaled dot product.
struct AttentionOut {
    Matrix weights; // B x P, rows nonnegative, each summing to 1
    Matrix output;  // B x C
    Matrix basis;   // B x P
    Matrix scores;  // B x P
};

/// D^p from the squared distance z: exp((p/2) log z), with D^p := 0 at z = 0
/// so the log is never taken at zero.
double dist_pow(double sq_dist, double p);

/// d(D^p)/dz. At z = 0 this is the true limit 0 for p > 2 and 1 for p = 2;
/// for p < 2 the derivative is singular there and is clamped to 0.
double dist_pow_deriv(double sq_dist, double p);

/// Applies the selected score function entrywise. For distance kinds `basis`
/// must hold squared distances (>= 0); for ScaledDot it holds q.K^T and
/// `dim` is the feature dimension used for the 1/sqrt(d) scaling.
Matrix score(const ScoreKind& kind, const Matrix& basis, std::size_t dim);

/// Row-wise softmax with max-subtraction.
Matrix softmax_rows(const Matrix& scores);

/// Inverse-distance weights, computed directly in reciprocal form:
/// w(b,i) = (eps + D^p)^-1 / sum_j (eps + D^p)^-1. No exp/log round trip,
/// and exact at D = 0.
Matrix idw_weights(const Matrix& sq_dist, double p, double eps);

/// idw_weights at a large power and small eps; as p grows the weighting
/// degenerates to one-hot on the nearest key (nearest-key assignment).
Matrix voronoi_limit(const Matrix& sq_dist, double p_large = 64.0, double eps = 1e-9);

AttentionOut attend(const ScoreKind& kind, const Matrix& q, const Matrix& keys,
                    const Matrix& values);

struct AttendGrads {
    Matrix query;  // B x d
    Matrix keys;   // P x d
    Matrix values; // P x C
};

/// Analytic gradients of sum(grad_output . output) with respect to q, K, V,
/// flowing through the distance, score, and softmax.
AttendGrads attend_backward(const ScoreKind& kind, const Matrix& q, const Matrix& keys,
                            const Matrix& values, const AttentionOut& out,
                            const Matrix& grad_output);

} // namespace idw

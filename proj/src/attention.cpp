#include "idwattn/attention.hpp"

#include "idwattn/error.hpp"

#include <cmath>
#include <string>

namespace idw {

ScoreKind ScoreKind::scaled_dot() { return {Score::ScaledDot, 2.0, 1e-3, 1.0}; }
ScoreKind ScoreKind::neg_dist() { return {Score::NegDist, 2.0, 1e-3, 1.0}; }
ScoreKind ScoreKind::gauss_dist(double sigma) { return {Score::GaussDist, 2.0, 1e-3, sigma}; }
ScoreKind ScoreKind::inv_dist(double p, double eps) { return {Score::InvDist, p, eps, 1.0}; }
ScoreKind ScoreKind::neglog_dist(double p, double eps) { return {Score::NegLogDist, p, eps, 1.0}; }

void ScoreKind::validate() const {
    switch (score) {
    case Score::GaussDist:
        if (!(sigma > 0.0)) throw ValueError("ScoreKind: sigma must be > 0");
        break;
    case Score::InvDist:
    case Score::NegLogDist:
        if (!(p > 0.0)) throw ValueError("ScoreKind: p must be > 0");
        if (!(eps > 0.0)) throw ValueError("ScoreKind: eps must be > 0");
        break;
    case Score::ScaledDot:
    case Score::NegDist:
        break;
    }
}

std::string_view ScoreKind::name() const {
    switch (score) {
    case Score::ScaledDot: return "scaled_dot";
    case Score::NegDist: return "neg_dist";
    case Score::GaussDist: return "gauss_dist";
    case Score::InvDist: return "inv_dist";
    case Score::NegLogDist: return "neglog_dist";
    }
    return "?";
}

Score ScoreKind::score_from_name(std::string_view name) {
    if (name == "scaled_dot") return Score::ScaledDot;
    if (name == "neg_dist") return Score::NegDist;
    if (name == "gauss_dist") return Score::GaussDist;
    if (name == "inv_dist") return Score::InvDist;
    if (name == "neglog_dist" || name == "idw") return Score::NegLogDist;
    throw ValueError("unknown score kind '" + std::string(name) + "'");
}

double dist_pow(double sq_dist, double p) {
    if (sq_dist == 0.0) return 0.0;
    return std::exp(0.5 * p * std::log(sq_dist));
}

double dist_pow_deriv(double sq_dist, double p) {
    if (sq_dist == 0.0) {
        if (p == 2.0) return 1.0;
        return 0.0; // true limit for p > 2; clamped for p < 2 (singular there)
    }
    return 0.5 * p * std::exp((0.5 * p - 1.0) * std::log(sq_dist));
}

namespace {

void require_sq_dists(const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            if (!(m(r, c) >= 0.0)) throw ValueError("negative squared distance");
}

} // namespace

Matrix score(const ScoreKind& kind, const Matrix& basis, std::size_t dim) {
    kind.validate();
    Matrix out(basis.rows(), basis.cols());
    if (kind.score == Score::ScaledDot) {
        if (dim == 0) throw ValueError("score: dim must be > 0 for scaled dot product");
        const double inv_sqrt_d = 1.0 / std::sqrt(double(dim));
        for (std::size_t i = 0; i < basis.size(); ++i) out.data()[i] = basis.data()[i] * inv_sqrt_d;
        out.require_finite("scaled dot scores");
        return out;
    }
    require_sq_dists(basis);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const double z = basis.data()[i];
        double s = 0.0;
        switch (kind.score) {
        case Score::NegDist: s = -z; break;
        case Score::GaussDist: s = std::exp(-z / (kind.sigma * kind.sigma)); break;
        case Score::InvDist: s = 1.0 / (kind.eps + dist_pow(z, kind.p)); break;
        case Score::NegLogDist: s = -std::log(kind.eps + dist_pow(z, kind.p)); break;
        case Score::ScaledDot: break; // handled above
        }
        out.data()[i] = s;
    }
    out.require_finite("scores");
    return out;
}

Matrix softmax_rows(const Matrix& scores) {
    scores.require_finite("softmax input");
    Matrix out(scores.rows(), scores.cols());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        double max = scores(r, 0);
        for (std::size_t c = 1; c < scores.cols(); ++c) max = std::max(max, scores(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < scores.cols(); ++c) {
            const double e = std::exp(scores(r, c) - max);
            out(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < scores.cols(); ++c) out(r, c) /= sum;
    }
    return out;
}

Matrix idw_weights(const Matrix& sq_dist, double p, double eps) {
    if (!(p > 0.0)) throw ValueError("idw_weights: p must be > 0");
    if (!(eps > 0.0)) throw ValueError("idw_weights: eps must be > 0");
    require_sq_dists(sq_dist);
    Matrix out(sq_dist.rows(), sq_dist.cols());
    for (std::size_t r = 0; r < sq_dist.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < sq_dist.cols(); ++c) {
            const double w = 1.0 / (eps + dist_pow(sq_dist(r, c), p));
            out(r, c) = w;
            sum += w;
        }
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw NumericError("idw_weights: weight row underflowed to zero");
        for (std::size_t c = 0; c < sq_dist.cols(); ++c) out(r, c) /= sum;
    }
    return out;
}

Matrix voronoi_limit(const Matrix& sq_dist, double p_large, double eps) {
    return idw_weights(sq_dist, p_large, eps);
}

AttentionOut attend(const ScoreKind& kind, const Matrix& q, const Matrix& keys,
                    const Matrix& values) {
    kind.validate();
    if (q.cols() != keys.cols())
        throw ShapeError("attend: query dim " + std::to_string(q.cols()) + " vs key dim " +
                         std::to_string(keys.cols()));
    if (keys.rows() != values.rows())
        throw ShapeError("attend: " + std::to_string(keys.rows()) + " keys vs " +
                         std::to_string(values.rows()) + " value rows");
    AttentionOut out;
    if (kind.score == Score::ScaledDot) {
        out.basis = matmul(q, keys.transposed());
    } else {
        out.basis = pairwise_sq_dist(q, keys);
    }
    out.scores = score(kind, out.basis, q.cols());
    // The negative-log score inside softmax reduces algebraically to the
    // reciprocal weighting, which we evaluate directly: it is exact at
    // distance zero.
    out.weights = kind.score == Score::NegLogDist ? idw_weights(out.basis, kind.p, kind.eps)
                                                  : softmax_rows(out.scores);
    out.output = matmul(out.weights, values);
    out.output.require_finite("attention output");
    return out;
}

AttendGrads attend_backward(const ScoreKind& kind, const Matrix& q, const Matrix& keys,
                            const Matrix& values, const AttentionOut& out,
                            const Matrix& grad_output) {
    if (out.weights.rows() != q.rows() || out.weights.cols() != keys.rows())
        throw ShapeError("attend_backward: cache does not match inputs");
    if (grad_output.rows() != q.rows() || grad_output.cols() != values.cols())
        throw ShapeError("attend_backward: grad_output shape mismatch");

    AttendGrads g;
    g.values = matmul(out.weights.transposed(), grad_output);

    // Through the softmax: dS(b,i) = W(b,i) * (dW(b,i) - sum_j dW(b,j) W(b,j)).
    // For NegLogDist the weights equal softmax(scores) exactly, so the same
    // formula applies to the reciprocal-form weights.
    const Matrix grad_w = matmul(grad_output, values.transposed());
    Matrix grad_s(grad_w.rows(), grad_w.cols());
    for (std::size_t b = 0; b < grad_w.rows(); ++b) {
        double rowdot = 0.0;
        for (std::size_t i = 0; i < grad_w.cols(); ++i) rowdot += grad_w(b, i) * out.weights(b, i);
        for (std::size_t i = 0; i < grad_w.cols(); ++i)
            grad_s(b, i) = out.weights(b, i) * (grad_w(b, i) - rowdot);
    }

    if (kind.score == Score::ScaledDot) {
        const double inv_sqrt_d = 1.0 / std::sqrt(double(q.cols()));
        Matrix grad_t(grad_s.rows(), grad_s.cols());
        for (std::size_t i = 0; i < grad_s.size(); ++i)
            grad_t.data()[i] = grad_s.data()[i] * inv_sqrt_d;
        g.query = matmul(grad_t, keys);
        g.keys = matmul(grad_t.transposed(), q);
        return g;
    }

    // Score derivative with respect to the squared distance z.
    Matrix grad_z(grad_s.rows(), grad_s.cols());
    for (std::size_t b = 0; b < grad_s.rows(); ++b)
        for (std::size_t i = 0; i < grad_s.cols(); ++i) {
            const double z = out.basis(b, i);
            double dsdz = 0.0;
            switch (kind.score) {
            case Score::NegDist: dsdz = -1.0; break;
            case Score::GaussDist: dsdz = -out.scores(b, i) / (kind.sigma * kind.sigma); break;
            case Score::InvDist: {
                const double s = out.scores(b, i); // 1 / (eps + D^p)
                dsdz = -dist_pow_deriv(z, kind.p) * s * s;
                break;
            }
            case Score::NegLogDist:
                dsdz = -dist_pow_deriv(z, kind.p) / (kind.eps + dist_pow(z, kind.p));
                break;
            case Score::ScaledDot: break; // handled above
            }
            grad_z(b, i) = grad_s(b, i) * dsdz;
        }

    // z(b,i) = |q_b - k_i|^2: dz/dq = 2(q_b - k_i), dz/dk = -2(q_b - k_i).
    g.query = Matrix(q.rows(), q.cols());
    g.keys = Matrix(keys.rows(), keys.cols());
    for (std::size_t b = 0; b < q.rows(); ++b)
        for (std::size_t i = 0; i < keys.rows(); ++i) {
            const double gz2 = 2.0 * grad_z(b, i);
            if (gz2 == 0.0) continue;
            for (std::size_t j = 0; j < q.cols(); ++j) {
                const double diff = q(b, j) - keys(i, j);
                g.query(b, j) += gz2 * diff;
                g.keys(i, j) -= gz2 * diff;
            }
        }
    g.query.require_finite("attention query gradient");
    g.keys.require_finite("attention key gradient");
    g.values.require_finite("attention value gradient");
    return g;
}

} // namespace idw

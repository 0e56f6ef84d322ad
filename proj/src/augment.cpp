#include "idwattn/augment.hpp"

#include "idwattn/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace idw {

namespace {

std::vector<double> reciprocal_weights(const std::vector<double>& dists, double p, double eps) {
    if (!(p > 0.0)) throw ValueError("sigma_weights: p must be > 0");
    if (!(eps > 0.0)) throw ValueError("sigma_weights: eps must be > 0");
    std::vector<double> r(dists.size());
    for (std::size_t i = 0; i < dists.size(); ++i) {
        if (!(dists[i] >= 0.0)) throw ValueError("sigma_weights: negative distance");
        r[i] = 1.0 / (eps + dist_pow(dists[i] * dists[i], p));
    }
    return r;
}

} // namespace

std::vector<double> sigma_weights(const std::vector<double>& dists, double p, double eps) {
    std::vector<double> w = reciprocal_weights(dists, p, eps);
    double sum = 0.0;
    for (double wi : w) sum += wi;
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw NumericError("sigma_weights: weights underflowed");
    for (double& wi : w) wi /= sum;
    return w;
}

EtaResult compute_eta(const std::vector<double>& dists, const Matrix& values, int target_class,
                      double p, double eps) {
    if (dists.size() != values.rows())
        throw ShapeError("compute_eta: distance count != prototype count");
    const std::size_t classes = values.cols();
    if (target_class < 0 || std::size_t(target_class) >= classes)
        throw ValueError("compute_eta: target class out of range");

    const std::vector<double> r = reciprocal_weights(dists, p, eps);
    double r_sum = 0.0;
    for (double ri : r) r_sum += ri;

    // Per-class logit mass carried by the existing prototypes, up to one
    // common normalizer that cancels out of every comparison below.
    std::vector<double> class_mass(classes, 0.0);
    for (std::size_t i = 0; i < dists.size(); ++i)
        for (std::size_t k = 0; k < classes; ++k) class_mass[k] += r[i] * values(i, k);

    EtaResult result;
    std::size_t pre = 0;
    for (std::size_t k = 1; k < classes; ++k)
        if (class_mass[k] > class_mass[pre]) pre = k;
    result.pre_class = int(pre);
    if (result.pre_class == target_class) {
        result.already_target = true;
        return result;
    }

    // sigma~ over the original prototypes once a distance-0 prototype
    // (unnormalized weight 1/eps) joins the pool.
    const double denom = r_sum + 1.0 / eps;
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) {
        if (int(k) == target_class) continue;
        best_other = std::max(best_other, class_mass[k] / denom);
    }
    const double target_mass = class_mass[std::size_t(target_class)] / denom;
    result.eta = (1.0 + eps * r_sum) * (best_other - target_mass);
    if (!std::isfinite(result.eta)) throw NumericError("compute_eta: non-finite eta");
    return result;
}

std::pair<PrototypeNet, AugmentResult> inject(const PrototypeNet& net, const AugmentRequest& req) {
    if (net.kind.score != Score::NegLogDist)
        throw ValueError(std::string("inject: unsupported score kind '") +
                         std::string(net.kind.name()) +
                         "'; closed-form injection is defined for neglog_dist only");
    if (req.input.size() != net.dim())
        throw ShapeError("inject: input dim " + std::to_string(req.input.size()) + " vs model " +
                         std::to_string(net.dim()));
    if (req.target_class < 0 || std::size_t(req.target_class) >= net.classes())
        throw ValueError("inject: target class out of range");

    Matrix q(1, net.dim());
    for (std::size_t j = 0; j < net.dim(); ++j) q(0, j) = req.input[j];
    q.require_finite("augment input");

    const Matrix sq = pairwise_sq_dist(q, net.keys);
    std::vector<double> dists(net.prototypes());
    for (std::size_t i = 0; i < dists.size(); ++i) dists[i] = std::sqrt(sq(0, i));

    const EtaResult eta = compute_eta(dists, net.values, req.target_class, net.kind.p,
                                      net.kind.eps);
    AugmentResult result;
    result.eta = eta.eta;
    result.pre_class = eta.pre_class;
    if (eta.already_target) {
        result.post_class = eta.pre_class;
        return {net, result};
    }

    result.applied = true;
    result.margin = req.margin >= 0.0 ? req.margin : 1e-6 * (1.0 + std::abs(eta.eta));

    PrototypeNet grown;
    grown.kind = net.kind;
    grown.keys = Matrix(net.prototypes() + 1, net.dim());
    grown.values = Matrix(net.prototypes() + 1, net.classes());
    for (std::size_t i = 0; i < net.prototypes(); ++i) {
        for (std::size_t j = 0; j < net.dim(); ++j) grown.keys(i, j) = net.keys(i, j);
        for (std::size_t k = 0; k < net.classes(); ++k) grown.values(i, k) = net.values(i, k);
    }
    for (std::size_t j = 0; j < net.dim(); ++j) grown.keys(net.prototypes(), j) = q(0, j);
    grown.values(net.prototypes(), std::size_t(req.target_class)) = eta.eta + result.margin;

    const Matrix logits = grown.forward(q);
    result.post_class = int(logits.row_argmax(0));
    if (result.post_class != req.target_class)
        throw NumericError("inject: post-injection prediction is class " +
                           std::to_string(result.post_class) + ", wanted " +
                           std::to_string(req.target_class));
    return {std::move(grown), result};
}

} // namespace idw

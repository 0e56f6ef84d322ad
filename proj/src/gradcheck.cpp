#include "idwattn/gradcheck.hpp"

#include "idwattn/error.hpp"
#include "idwattn/model.hpp"
#include "idwattn/optim.hpp"

#include <cmath>

namespace idw {

GradCheckReport compare_grads(const std::function<double()>& loss,
                              const std::vector<Matrix*>& params,
                              const std::vector<std::string>& names,
                              const std::vector<Matrix>& analytic, double h, double abs_floor) {
    if (params.size() != analytic.size() || params.size() != names.size())
        throw ShapeError("compare_grads: tensor count mismatch");
    GradCheckReport report;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& theta = *params[t];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta.data()[i];
            theta.data()[i] = saved + h;
            const double up = loss();
            theta.data()[i] = saved - h;
            const double down = loss();
            theta.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double exact = analytic[t].data()[i];
            ++report.entries_checked;
            const double scale = std::max(std::abs(numeric), std::abs(exact));
            if (scale < abs_floor) continue;
            const double rel = std::abs(numeric - exact) / scale;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = names[t] + "[" + std::to_string(i) + "]";
            }
        }
    }
    return report;
}

namespace {

// Small random instance in a range where all score kinds stay well
// conditioned: entries of moderate size keep distances off both zero and
// the fully-saturated Gaussian tail.
template <typename Net>
GradCheckCase check_net(const std::string& name, Net net, std::size_t batch, std::size_t trials,
                        double tol, Rng& rng) {
    GradCheckCase result{name, 0.0, false};
    const std::size_t classes = std::as_const(net).params().back()->cols();
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Matrix x(batch, net.dim());
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 1.2 * (rng.uniform() - 0.5);
        std::vector<int> y(batch);
        for (auto& label : y) label = int(rng.below(classes));

        typename Net::Cache cache;
        const Matrix logits = net.forward(x, &cache);
        const auto [loss0, grad_logits] = cross_entropy(logits, y);
        (void)loss0;
        const std::vector<Matrix> analytic = net.backward(cache, grad_logits);

        std::vector<std::string> names;
        for (std::size_t t = 0; t < analytic.size(); ++t)
            names.push_back(name + ".param" + std::to_string(t));
        const auto report = compare_grads(
            [&]() { return cross_entropy(net.forward(x), y).first; }, net.params(), names,
            analytic);
        result.max_rel_err = std::max(result.max_rel_err, report.max_rel_err);
    }
    result.pass = result.max_rel_err < tol;
    return result;
}

} // namespace

GradCheckCase gradcheck_arch(const std::string& arch, std::size_t trials, double tol, Rng rng) {
    const std::size_t batch = 3, dim = 4, classes = 3, protos = 5;
    Matrix fake_train(8, dim);
    for (std::size_t i = 0; i < fake_train.size(); ++i)
        fake_train.data()[i] = 2.0 * (rng.uniform() - 0.5);

    if (arch == "fcrelu") {
        FcReluNet net = init_fc_relu_net(dim, protos, classes, rng);
        return check_net(arch, std::move(net), batch, trials, tol, rng);
    }
    ScoreKind kind;
    kind.score = ScoreKind::score_from_name(arch);
    PrototypeNet net = init_prototype_net(fake_train, classes, protos, kind, rng);
    // Zero values make every gradient through the softmax vanish; start the
    // value table at small random logits instead.
    for (std::size_t i = 0; i < net.values.size(); ++i)
        net.values.data()[i] = rng.uniform() - 0.5;
    return check_net(arch, std::move(net), batch, trials, tol, rng);
}

std::vector<GradCheckCase> gradcheck_all(std::size_t trials, double tol, std::uint64_t seed) {
    const Rng master(seed);
    std::vector<GradCheckCase> cases;
    for (const char* arch :
         {"scaled_dot", "neg_dist", "gauss_dist", "inv_dist", "neglog_dist", "fcrelu"})
        cases.push_back(gradcheck_arch(arch, trials, tol, master.stream(arch)));
    return cases;
}

} // namespace idw

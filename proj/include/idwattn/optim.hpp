#pragma once

#include "idwattn/data.hpp"
#include "idwattn/error.hpp"
#include "idwattn/matrix.hpp"
#include "idwattn/rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace idw {

struct TrainConfig {
    std::size_t batch_size = 10;
    double lr_max = 0.01;
    std::size_t epochs = 25;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const;
};

/// AMSGrad per-parameter state. v_max tracks the running entrywise maximum
/// of the bias-corrected second moment and never decreases.
struct AmsgradState {
    explicit AmsgradState(const std::vector<const Matrix*>& params);
    std::vector<Matrix> m, v, v_max;
    std::size_t step = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    /// Header "epoch,lr,loss,train_acc,test_acc", one row per epoch.
    std::string csv() const;
};

/// Mean negative log-likelihood over the batch via the log-sum-exp form,
/// plus its gradient (softmax(logits) - onehot) / B.
std::pair<double, Matrix> cross_entropy(const Matrix& logits, const std::vector<int>& labels);

/// lr(t) = 0.5 * lr_max * (1 + cos(pi t / T)); lr(0) = lr_max, lr(T) = 0.
double cosine_lr(std::size_t step, std::size_t total, double lr_max);

/// One AMSGrad update over all parameter tensors. Fails fast on non-finite
/// gradients. Bias correction is applied to both moments, with v_max taken
/// over the corrected second moment.
void amsgrad_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                  AmsgradState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double adam_eps = 1e-8);

/// Fraction of rows whose argmax logit equals the label. Serial reduction,
/// fixed order.
template <typename Net>
double evaluate(const Net& net, const Dataset& ds) {
    const Matrix logits = net.forward(ds.x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (logits.row_argmax(i) == std::size_t(ds.y[i])) ++correct;
    return double(correct) / double(ds.size());
}

namespace detail {

inline Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& order,
                          std::size_t begin, std::size_t end) {
    Matrix out(end - begin, x.cols());
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i - begin, j) = x(order[i], j);
    return out;
}

} // namespace detail

/// Mini-batch training: per-epoch shuffle from a dedicated RNG stream of the
/// config seed, cosine schedule indexed per epoch, last partial batch kept.
/// Identical (seed, config, data) reproduce bit-identical parameters.
template <typename Net>
TrainLog train(Net& net, const Dataset& train_set, const Dataset& test_set,
               const TrainConfig& cfg) {
    cfg.validate();
    train_set.validate();
    test_set.validate();
    if (train_set.dim() != test_set.dim())
        throw ShapeError("train: train/test feature dims differ");

    Rng shuffle_rng = Rng(cfg.seed).stream("shuffle");
    AmsgradState state(std::as_const(net).params());
    TrainLog log;

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max);
        if (cfg.shuffle) order = shuffle_rng.permutation(n);

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, n);
            const Matrix bx = detail::gather_rows(train_set.x, order, begin, end);
            std::vector<int> by(end - begin);
            for (std::size_t i = begin; i < end; ++i) by[i - begin] = train_set.y[order[i]];

            typename Net::Cache cache;
            const Matrix logits = net.forward(bx, &cache);
            auto [loss, grad_logits] = cross_entropy(logits, by);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch offset " + std::to_string(begin));
            loss_sum += loss * double(end - begin);
            const std::vector<Matrix> grads = net.backward(cache, grad_logits);
            amsgrad_step(net.params(), grads, state, lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.loss = loss_sum / double(n);
        rec.train_acc = evaluate(net, train_set);
        rec.test_acc = evaluate(net, test_set);
        log.epochs.push_back(rec);
    }
    return log;
}

} // namespace idw

#include "idwattn/optim.hpp"

#include "idwattn/io.hpp"

#include <cmath>
#include <numbers>

namespace idw {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ValueError("TrainConfig: batch_size must be >= 1");
    if (epochs == 0) throw ValueError("TrainConfig: epochs must be >= 1");
    if (!(lr_max >= 0.0)) throw ValueError("TrainConfig: lr_max must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValueError("TrainConfig: beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValueError("TrainConfig: beta2 must be in (0,1)");
    if (!(adam_eps > 0.0)) throw ValueError("TrainConfig: adam_eps must be > 0");
}

AmsgradState::AmsgradState(const std::vector<const Matrix*>& params) {
    for (const Matrix* p : params) {
        m.emplace_back(p->rows(), p->cols());
        v.emplace_back(p->rows(), p->cols());
        v_max.emplace_back(p->rows(), p->cols());
    }
}

std::string TrainLog::csv() const {
    std::string text = "epoch,lr,loss,train_acc,test_acc\n";
    for (const auto& rec : epochs) {
        text += std::to_string(rec.epoch);
        text += ',';
        text += fmt_double(rec.lr);
        text += ',';
        text += fmt_double(rec.loss);
        text += ',';
        text += fmt_double(rec.train_acc);
        text += ',';
        text += fmt_double(rec.test_acc);
        text += '\n';
    }
    return text;
}

std::pair<double, Matrix> cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows())
        throw ShapeError("cross_entropy: label count != logit rows");
    const std::size_t b = logits.rows(), c = logits.cols();
    for (int label : labels)
        if (label < 0 || std::size_t(label) >= c)
            throw ValueError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                             std::to_string(c) + ")");
    Matrix grad(b, c);
    double loss_sum = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        double max = logits(r, 0);
        for (std::size_t j = 1; j < c; ++j) max = std::max(max, logits(r, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(logits(r, j) - max);
        const double lse = max + std::log(sum);
        loss_sum += lse - logits(r, std::size_t(labels[r]));
        for (std::size_t j = 0; j < c; ++j)
            grad(r, j) = std::exp(logits(r, j) - lse) / double(b);
        grad(r, std::size_t(labels[r])) -= 1.0 / double(b);
    }
    return {loss_sum / double(b), std::move(grad)};
}

double cosine_lr(std::size_t step, std::size_t total, double lr_max) {
    if (total == 0) throw ValueError("cosine_lr: total must be >= 1");
    if (step > total) throw ValueError("cosine_lr: step " + std::to_string(step) + " > total " +
                                       std::to_string(total));
    return 0.5 * lr_max * (1.0 + std::cos(std::numbers::pi * double(step) / double(total)));
}

void amsgrad_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                  AmsgradState& state, double lr, double beta1, double beta2, double adam_eps) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("amsgrad_step: parameter/gradient/state tensor counts differ");
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t]->same_shape(grads[t]))
            throw ShapeError("amsgrad_step: gradient shape mismatch at tensor " +
                             std::to_string(t));
        grads[t].require_finite("gradient tensor " + std::to_string(t));
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(beta2, double(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& theta = *params[t];
        const Matrix& g = grads[t];
        Matrix& m = state.m[t];
        Matrix& v = state.v[t];
        Matrix& vmax = state.v_max[t];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g.data()[i];
            m.data()[i] = beta1 * m.data()[i] + (1.0 - beta1) * gi;
            v.data()[i] = beta2 * v.data()[i] + (1.0 - beta2) * gi * gi;
            const double m_hat = m.data()[i] / bc1;
            const double v_hat = v.data()[i] / bc2;
            if (v_hat > vmax.data()[i]) vmax.data()[i] = v_hat;
            theta.data()[i] -= lr * m_hat / (std::sqrt(vmax.data()[i]) + adam_eps);
        }
    }
}

} // namespace idw

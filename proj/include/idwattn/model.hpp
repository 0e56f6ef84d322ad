#pragma once

#include "idwattn/attention.hpp"
#include "idwattn/matrix.hpp"
#include "idwattn/rng.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace idw {

/// One audited behavior edit: which class was forced, the minimal logit mass
/// that achieved it, and the prediction before/after. Kept in the model file
/// so edits are traceable.
struct AugmentRecord {
    int target_class = 0;
    double eta = 0.0;
    double margin = 0.0;
    int pre_class = 0;
    int post_class = 0;
};

/// Single-hidden-layer attention classifier: P keys living in input space
/// and P value rows holding per-class logits. No bias, no output softmax;
/// the loss handles normalization.
struct PrototypeNet {
    Matrix keys;    // P x d
    Matrix values;  // P x C
    ScoreKind kind;

    struct Cache {
        Matrix input;
        AttentionOut att;
    };

    std::size_t prototypes() const { return keys.rows(); }
    std::size_t dim() const { return keys.cols(); }
    std::size_t classes() const { return values.cols(); }
    std::size_t param_count() const { return keys.size() + values.size(); }

    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
    /// Gradients in params() order: {keys, values}.
    std::vector<Matrix> backward(const Cache& cache, const Matrix& grad_logits) const;

    std::vector<Matrix*> params() { return {&keys, &values}; }
    std::vector<const Matrix*> params() const { return {&keys, &values}; }
};

/// Fully-connected baseline: relu(x w1 + b1) w2 + b2, hidden width matching
/// the prototype count it is compared against.
struct FcReluNet {
    Matrix w1; // d x H
    Matrix b1; // 1 x H
    Matrix w2; // H x C
    Matrix b2; // 1 x C

    struct Cache {
        Matrix input;
        Matrix pre_act; // x w1 + b1
        Matrix hidden;  // relu(pre_act)
    };

    std::size_t dim() const { return w1.rows(); }
    std::size_t hidden() const { return w1.cols(); }
    std::size_t classes() const { return w2.cols(); }
    std::size_t param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
    /// Gradients in params() order: {w1, b1, w2, b2}.
    std::vector<Matrix> backward(const Cache& cache, const Matrix& grad_logits) const;

    std::vector<Matrix*> params() { return {&w1, &b1, &w2, &b2}; }
    std::vector<const Matrix*> params() const { return {&w1, &b1, &w2, &b2}; }
};

/// Keys drawn per column as Normal(column mean, 0.1 * column std) of the
/// training features; values start at exactly zero, so the initial logits
/// are zero and the initial predictive distribution is uniform.
PrototypeNet init_prototype_net(const Matrix& train_x, std::size_t classes,
                                std::size_t prototypes, const ScoreKind& kind, Rng& rng);

/// w1, w2 ~ Normal(0, 1/sqrt(fan_in)), biases zero.
FcReluNet init_fc_relu_net(std::size_t dim, std::size_t hidden, std::size_t classes, Rng& rng);

using AnyNet = std::variant<PrototypeNet, FcReluNet>;

/// Free-form key/value metadata plus the augmentation ledger.
struct ModelMeta {
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<AugmentRecord> augments;

    void set(const std::string& key, const std::string& value);
    const std::string* get(const std::string& key) const;
};

struct LoadedModel {
    AnyNet net;
    ModelMeta meta;
};

/// Self-describing single-file format: ASCII header (magic, schema version,
/// arch tag, hyperparameters, metadata, ledger, shape table) followed by the
/// raw little-endian float64 payload. save/load round-trips bit-exactly.
void save_model(const std::string& path, const AnyNet& net, const ModelMeta& meta = {});
LoadedModel load_model(const std::string& path);

/// Serialized form of save_model, for byte-level tests.
std::vector<unsigned char> serialize_model(const AnyNet& net, const ModelMeta& meta = {});
LoadedModel deserialize_model(const std::vector<unsigned char>& bytes);

} // namespace idw

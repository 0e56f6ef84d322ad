#pragma once

#include "idwattn/augment.hpp"
#include "idwattn/data.hpp"
#include "idwattn/model.hpp"
#include "idwattn/optim.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace idw {

/// One experiment, parsed from a versioned key-value config file. Unknown
/// keys are rejected; command-line overrides go through the same set() used
/// by the parser. to_text() emits the fully resolved document, which every
/// command echoes into its output directory.
struct ExperimentConfig {
    std::string dataset = "moons"; // moons | mnist
    std::string mnist_dir;         // empty: $IDWATTN_MNIST_DIR, then data/mnist
    std::size_t subset = 0;        // train subsample size, 0 = full set
    std::string arch = "prototype"; // prototype | fcrelu
    ScoreKind kind = ScoreKind::neglog_dist();
    std::size_t prototypes = 16;
    std::size_t n_train = 100;
    std::size_t n_test = 20;
    double noise_std = 0.1;
    TrainConfig train;
    std::string out_dir = "out";

    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    std::string to_text() const;
    void validate() const;

    std::string resolved_mnist_dir() const;
};

/// Builds the datasets the config describes (generated moons or MNIST from
/// disk, with the optional train subsample applied).
std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& cfg);

/// Fresh network per the config, keys/weights drawn from the seed's
/// key-init stream.
AnyNet build_net(const ExperimentConfig& cfg, const Dataset& train_set);

struct TrainOutcome {
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::string model_path;
    std::string log_path;
};

/// Trains per config; writes model.idw, train_log.csv, and config.txt into
/// the output directory and prints the one-line summary.
TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& out);

/// Accuracy of a saved model on the config's dataset.
void cmd_eval(const std::string& model_path, const ExperimentConfig& cfg, std::ostream& out);

/// Full (p, eps) cross product, one training run per cell at the config
/// seed. Cell failures are reported and recorded as nan rows; the sweep
/// keeps going. Returns the number of failed cells.
std::size_t cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& p_list,
                      const std::vector<double>& eps_list, std::ostream& out);

/// Prototype images (PGM, min-max normalized per key) or 2-D key
/// coordinates (CSV), ordered by value-argmax class then index, plus an
/// index CSV. Works for both architectures; for the fc baseline the "keys"
/// are the first weight matrix's columns.
void cmd_export_keys(const std::string& model_path, const std::string& out_dir,
                     std::ostream& out);

struct GridBox {
    double x0 = -1.5, x1 = 2.5;
    double y0 = -1.0, y1 = 1.5;
};

/// Decision-region dump for 2-D models: res x res sample points spanning
/// the box inclusively, with predicted class and max-weight prototype index
/// (-1 for the fc baseline) per point.
void cmd_grid(const std::string& model_path, const GridBox& box, std::size_t res,
              const std::string& out_csv);

struct AugmentCaseReport {
    AugmentResult result;
    double train_acc_before = -1.0, train_acc_after = -1.0;
    double test_acc_before = -1.0, test_acc_after = -1.0;
};

/// Applies the cases CSV (headerless rows: d feature values then the target
/// class) sequentially, writes the grown model plus report.csv, and prints
/// per-case lines. `cfg` supplies the dataset for before/after accuracy;
/// pass nullptr to skip accuracy accounting.
std::vector<AugmentCaseReport> cmd_augment(const std::string& model_path,
                                           const std::string& cases_csv,
                                           const std::string& out_model,
                                           const ExperimentConfig* cfg, std::ostream& out);

/// Finite-difference audit of every architecture. Returns true if all pass.
bool cmd_gradcheck(std::size_t trials, double tol, std::uint64_t seed, std::ostream& out);

/// Prototype-fidelity score: mean Pearson correlation between each key (or
/// first-layer weight column, for the fc baseline) and the pixel-mean image
/// of its value-argmax class. Near 1 when keys look like class exemplars,
/// near 0 for noise; constant keys or constant class means count as 0.
double key_class_correlation(const AnyNet& net, const Dataset& ds);

/// Process exit codes shared by the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumeric = 4,
    kExitGradcheck = 5,
};

} // namespace idw

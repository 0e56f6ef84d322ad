#include "idwattn/cli.hpp"

#include "idwattn/error.hpp"
#include "idwattn/gradcheck.hpp"
#include "idwattn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>

namespace idw {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kConfigMagic = "idwattn-config";
constexpr int kConfigVersion = 1;

std::size_t parse_count(const std::string& key, const std::string& value) {
    try {
        const long long n = std::stoll(value);
        if (n < 0) throw ConfigError(key + ": must be >= 0, got " + value);
        return std::size_t(n);
    } catch (const std::invalid_argument&) {
        throw ConfigError(key + ": not an integer: '" + value + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError(key + ": out of range: '" + value + "'");
    }
}

double parse_num(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const FormatError&) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string acc_summary(double train_acc, double test_acc) {
    return "train_acc=" + fmt_double(train_acc) + ", test_acc=" + fmt_double(test_acc);
}

double eval_any(const AnyNet& net, const Dataset& ds) {
    return std::visit([&](const auto& n) { return evaluate(n, ds); }, net);
}

} // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "dataset") {
        if (value != "moons" && value != "mnist")
            throw ConfigError("dataset: expected moons|mnist, got '" + value + "'");
        dataset = value;
    } else if (key == "mnist_dir") {
        mnist_dir = value;
    } else if (key == "subset") {
        subset = parse_count(key, value);
    } else if (key == "arch") {
        if (value != "prototype" && value != "fcrelu")
            throw ConfigError("arch: expected prototype|fcrelu, got '" + value + "'");
        arch = value;
    } else if (key == "score") {
        try {
            kind.score = ScoreKind::score_from_name(value);
        } catch (const ValueError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "p") {
        kind.p = parse_num(key, value);
    } else if (key == "eps") {
        kind.eps = parse_num(key, value);
    } else if (key == "sigma") {
        kind.sigma = parse_num(key, value);
    } else if (key == "prototypes") {
        prototypes = parse_count(key, value);
    } else if (key == "n_train") {
        n_train = parse_count(key, value);
    } else if (key == "n_test") {
        n_test = parse_count(key, value);
    } else if (key == "noise_std") {
        noise_std = parse_num(key, value);
    } else if (key == "batch_size") {
        train.batch_size = parse_count(key, value);
    } else if (key == "lr") {
        train.lr_max = parse_num(key, value);
    } else if (key == "epochs") {
        train.epochs = parse_count(key, value);
    } else if (key == "seed") {
        train.seed = std::uint64_t(parse_count(key, value));
    } else if (key == "shuffle") {
        if (value != "true" && value != "false")
            throw ConfigError("shuffle: expected true|false, got '" + value + "'");
        train.shuffle = value == "true";
    } else if (key == "out") {
        out_dir = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    const auto lines = split(text, '\n');
    if (lines.empty() || lines[0].rfind(kConfigMagic, 0) != 0)
        throw ConfigError("config must start with '" + std::string(kConfigMagic) + " v" +
                          std::to_string(kConfigVersion) + "'");
    const auto magic = split(lines[0], ' ');
    if (magic.size() != 2 || magic[1] != "v" + std::to_string(kConfigVersion))
        throw ConfigError("config schema '" + lines[0] + "' not supported; this build reads v" +
                          std::to_string(kConfigVersion));
    ExperimentConfig cfg;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = lines[i];
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
        line = line.substr(start);
        if (line.empty()) continue;
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw ConfigError("line " + std::to_string(i + 1) + ": expected 'key value', got '" +
                              line + "'");
        cfg.set(line.substr(0, sp), line.substr(sp + 1));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    try {
        return from_text(read_text_file(path));
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
}

std::string ExperimentConfig::to_text() const {
    std::string text;
    text += kConfigMagic;
    text += " v" + std::to_string(kConfigVersion) + "\n";
    text += "dataset " + dataset + "\n";
    if (!mnist_dir.empty()) text += "mnist_dir " + mnist_dir + "\n";
    text += "subset " + std::to_string(subset) + "\n";
    text += "arch " + arch + "\n";
    text += "score " + std::string(kind.name()) + "\n";
    text += "p " + fmt_double(kind.p) + "\n";
    text += "eps " + fmt_double(kind.eps) + "\n";
    text += "sigma " + fmt_double(kind.sigma) + "\n";
    text += "prototypes " + std::to_string(prototypes) + "\n";
    text += "n_train " + std::to_string(n_train) + "\n";
    text += "n_test " + std::to_string(n_test) + "\n";
    text += "noise_std " + fmt_double(noise_std) + "\n";
    text += "batch_size " + std::to_string(train.batch_size) + "\n";
    text += "lr " + fmt_double(train.lr_max) + "\n";
    text += "epochs " + std::to_string(train.epochs) + "\n";
    text += "seed " + std::to_string(train.seed) + "\n";
    text += std::string("shuffle ") + (train.shuffle ? "true" : "false") + "\n";
    text += "out " + out_dir + "\n";
    return text;
}

void ExperimentConfig::validate() const {
    if (arch == "prototype") kind.validate();
    if (prototypes == 0) throw ConfigError("prototypes: must be >= 1");
    try {
        train.validate();
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
}

std::string ExperimentConfig::resolved_mnist_dir() const {
    if (!mnist_dir.empty()) return mnist_dir;
    if (const char* env = std::getenv("IDWATTN_MNIST_DIR"); env && *env) return env;
    return "data/mnist";
}

std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset == "moons") {
        MoonsConfig mc{cfg.n_train, cfg.n_test, cfg.noise_std, cfg.train.seed};
        return gen_moons(mc);
    }
    auto [train_set, test_set] = load_mnist(cfg.resolved_mnist_dir());
    if (cfg.subset > 0) train_set = subset(train_set, cfg.subset, cfg.train.seed);
    return {std::move(train_set), std::move(test_set)};
}

AnyNet build_net(const ExperimentConfig& cfg, const Dataset& train_set) {
    Rng init_rng = Rng(cfg.train.seed).stream("key-init");
    if (cfg.arch == "prototype")
        return init_prototype_net(train_set.x, train_set.num_classes, cfg.prototypes, cfg.kind,
                                  init_rng);
    return init_fc_relu_net(train_set.dim(), cfg.prototypes, train_set.num_classes, init_rng);
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_dir(cfg.out_dir);
    write_text_file(cfg.out_dir + "/config.txt", cfg.to_text());

    auto [train_set, test_set] = load_dataset(cfg);
    AnyNet net = build_net(cfg, train_set);
    const TrainLog log = std::visit(
        [&](auto& n) { return train(n, train_set, test_set, cfg.train); }, net);

    TrainOutcome outcome;
    outcome.train_acc = log.epochs.back().train_acc;
    outcome.test_acc = log.epochs.back().test_acc;
    outcome.model_path = cfg.out_dir + "/model.idw";
    outcome.log_path = cfg.out_dir + "/train_log.csv";

    ModelMeta meta;
    meta.set("seed", std::to_string(cfg.train.seed));
    meta.set("epochs", std::to_string(cfg.train.epochs));
    meta.set("dataset", cfg.dataset);
    save_model(outcome.model_path, net, meta);
    write_text_file(outcome.log_path, log.csv());
    out << acc_summary(outcome.train_acc, outcome.test_acc) << "\n";
    return outcome;
}

void cmd_eval(const std::string& model_path, const ExperimentConfig& cfg, std::ostream& out) {
    const LoadedModel model = load_model(model_path);
    auto [train_set, test_set] = load_dataset(cfg);
    out << acc_summary(eval_any(model.net, train_set), eval_any(model.net, test_set)) << "\n";
}

std::size_t cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& p_list,
                      const std::vector<double>& eps_list, std::ostream& out) {
    if (p_list.empty() || eps_list.empty())
        throw ConfigError("sweep: p and eps lists must be nonempty");
    cfg.validate();
    ensure_dir(cfg.out_dir);
    write_text_file(cfg.out_dir + "/config.txt", cfg.to_text());

    auto [train_set, test_set] = load_dataset(cfg);
    std::string csv = "p,eps,train_acc,test_acc\n";
    std::size_t failures = 0;
    for (double p : p_list)
        for (double eps : eps_list) {
            ExperimentConfig cell = cfg;
            cell.kind.p = p;
            cell.kind.eps = eps;
            csv += fmt_double(p) + "," + fmt_double(eps) + ",";
            try {
                cell.validate();
                AnyNet net = build_net(cell, train_set);
                const TrainLog log = std::visit(
                    [&](auto& n) { return train(n, train_set, test_set, cell.train); }, net);
                csv += fmt_double(log.epochs.back().train_acc) + "," +
                       fmt_double(log.epochs.back().test_acc) + "\n";
            } catch (const Error& e) {
                ++failures;
                csv += "nan,nan\n";
                out << "sweep cell p=" << fmt_double(p) << " eps=" << fmt_double(eps)
                    << " failed: " << e.what() << "\n";
            }
        }
    write_text_file(cfg.out_dir + "/sweep.csv", csv);
    return failures;
}

namespace {

struct ExportableKeys {
    Matrix keys;                   // one row per unit, in input space
    std::vector<int> unit_class;   // value-argmax per unit
};

ExportableKeys exportable_keys(const AnyNet& net) {
    ExportableKeys ex;
    if (const auto* p = std::get_if<PrototypeNet>(&net)) {
        ex.keys = p->keys;
        for (std::size_t i = 0; i < p->prototypes(); ++i)
            ex.unit_class.push_back(int(p->values.row_argmax(i)));
    } else {
        const auto& f = std::get<FcReluNet>(net);
        ex.keys = f.w1.transposed();
        for (std::size_t i = 0; i < f.hidden(); ++i)
            ex.unit_class.push_back(int(f.w2.row_argmax(i)));
    }
    return ex;
}

std::vector<std::size_t> class_then_index_order(const std::vector<int>& unit_class) {
    std::vector<std::size_t> order(unit_class.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return unit_class[a] < unit_class[b];
    });
    return order;
}

std::vector<unsigned char> normalize_to_bytes(const double* key, std::size_t n) {
    double lo = key[0], hi = key[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, key[i]);
        hi = std::max(hi, key[i]);
    }
    std::vector<unsigned char> px(n, 0);
    if (hi > lo)
        for (std::size_t i = 0; i < n; ++i)
            px[i] = (unsigned char)std::lround((key[i] - lo) / (hi - lo) * 255.0);
    return px; // constant keys pin to 0
}

} // namespace

void cmd_export_keys(const std::string& model_path, const std::string& out_dir,
                     std::ostream& out) {
    const LoadedModel model = load_model(model_path);
    const ExportableKeys ex = exportable_keys(model.net);
    ensure_dir(out_dir);
    const std::vector<std::size_t> order = class_then_index_order(ex.unit_class);

    if (ex.keys.cols() == 2) {
        std::string csv = "x1,x2,class\n";
        for (std::size_t i : order)
            csv += fmt_double(ex.keys(i, 0)) + "," + fmt_double(ex.keys(i, 1)) + "," +
                   std::to_string(ex.unit_class[i]) + "\n";
        write_text_file(out_dir + "/keys.csv", csv);
        out << "wrote " << order.size() << " keys to " << out_dir << "/keys.csv\n";
        return;
    }

    const std::size_t side = std::size_t(std::lround(std::sqrt(double(ex.keys.cols()))));
    if (side < 2 || side * side != ex.keys.cols())
        throw ValueError("export-keys: dim " + std::to_string(ex.keys.cols()) +
                         " is neither 2 nor a square image size");

    std::string index_csv = "file,unit,class\n";
    std::size_t rank = 0;
    for (std::size_t i : order) {
        char name[64];
        std::snprintf(name, sizeof name, "key_c%d_%03zu.pgm", ex.unit_class[i], rank++);
        write_pgm(out_dir + "/" + name, side, side,
                  normalize_to_bytes(ex.keys.row(i), ex.keys.cols()));
        index_csv += std::string(name) + "," + std::to_string(i) + "," +
                     std::to_string(ex.unit_class[i]) + "\n";
    }
    write_text_file(out_dir + "/index.csv", index_csv);
    out << "wrote " << order.size() << " key images to " << out_dir << "\n";
}

void cmd_grid(const std::string& model_path, const GridBox& box, std::size_t res,
              const std::string& out_csv) {
    if (res < 2) throw ValueError("grid: resolution must be >= 2 per axis");
    const LoadedModel model = load_model(model_path);
    const std::size_t dim = std::visit([](const auto& n) { return n.dim(); }, model.net);
    if (dim != 2) throw ValueError("grid: model dim is " + std::to_string(dim) + ", need 2");

    Matrix points(res * res, 2);
    for (std::size_t yi = 0; yi < res; ++yi)
        for (std::size_t xi = 0; xi < res; ++xi) {
            points(yi * res + xi, 0) = box.x0 + (box.x1 - box.x0) * double(xi) / double(res - 1);
            points(yi * res + xi, 1) = box.y0 + (box.y1 - box.y0) * double(yi) / double(res - 1);
        }

    std::string csv = "x,y,pred,proto\n";
    if (const auto* p = std::get_if<PrototypeNet>(&model.net)) {
        const AttentionOut att = attend(p->kind, points, p->keys, p->values);
        for (std::size_t i = 0; i < points.rows(); ++i)
            csv += fmt_double(points(i, 0)) + "," + fmt_double(points(i, 1)) + "," +
                   std::to_string(att.output.row_argmax(i)) + "," +
                   std::to_string(att.weights.row_argmax(i)) + "\n";
    } else {
        const Matrix logits = std::get<FcReluNet>(model.net).forward(points);
        for (std::size_t i = 0; i < points.rows(); ++i)
            csv += fmt_double(points(i, 0)) + "," + fmt_double(points(i, 1)) + "," +
                   std::to_string(logits.row_argmax(i)) + ",-1\n";
    }
    write_text_file(out_csv, csv);
}

std::vector<AugmentCaseReport> cmd_augment(const std::string& model_path,
                                           const std::string& cases_csv,
                                           const std::string& out_model,
                                           const ExperimentConfig* cfg, std::ostream& out) {
    LoadedModel model = load_model(model_path);
    auto* proto = std::get_if<PrototypeNet>(&model.net);
    if (!proto || proto->kind.score != Score::NegLogDist)
        throw ValueError("augment: model must use the neglog_dist (IDW) score");

    std::vector<AugmentRequest> cases;
    for (const std::string& line : split(read_text_file(cases_csv), '\n')) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != proto->dim() + 1)
            throw FormatError(cases_csv + ": expected " + std::to_string(proto->dim()) +
                              " features + target class, got " + std::to_string(cells.size()) +
                              " cells");
        AugmentRequest req;
        for (std::size_t j = 0; j < proto->dim(); ++j)
            req.input.push_back(parse_double(cells[j]));
        try {
            req.target_class = std::stoi(cells.back());
        } catch (const std::exception&) {
            throw FormatError(cases_csv + ": bad target class '" + cells.back() + "'");
        }
        cases.push_back(std::move(req));
    }

    Dataset train_set, test_set;
    const bool with_data = cfg != nullptr;
    if (with_data) std::tie(train_set, test_set) = load_dataset(*cfg);

    std::vector<AugmentCaseReport> reports;
    std::string report_csv =
        "case,eta,applied,pre_class,post_class,train_acc_before,train_acc_after,"
        "test_acc_before,test_acc_after\n";
    for (std::size_t c = 0; c < cases.size(); ++c) {
        AugmentCaseReport rep;
        if (with_data) {
            rep.train_acc_before = evaluate(*proto, train_set);
            rep.test_acc_before = evaluate(*proto, test_set);
        }
        auto [grown, result] = inject(*proto, cases[c]);
        *proto = std::move(grown);
        rep.result = result;
        if (result.applied)
            model.meta.augments.push_back({cases[c].target_class, result.eta, result.margin,
                                           result.pre_class, result.post_class});
        if (with_data) {
            rep.train_acc_after = evaluate(*proto, train_set);
            rep.test_acc_after = evaluate(*proto, test_set);
        }
        out << "case " << c << ": "
            << (result.applied ? "eta=" + fmt_double(result.eta) : "no-op (already predicted)")
            << " pre=" << result.pre_class << " post=" << result.post_class;
        if (with_data)
            out << " train " << fmt_double(rep.train_acc_before) << "->"
                << fmt_double(rep.train_acc_after) << " test " << fmt_double(rep.test_acc_before)
                << "->" << fmt_double(rep.test_acc_after);
        out << "\n";

        report_csv += std::to_string(c) + "," + fmt_double(result.eta) + "," +
                      (result.applied ? "1" : "0") + "," + std::to_string(result.pre_class) + "," +
                      std::to_string(result.post_class) + ",";
        auto acc_cell = [](double v) { return v < 0.0 ? std::string() : fmt_double(v); };
        report_csv += acc_cell(rep.train_acc_before) + "," + acc_cell(rep.train_acc_after) + "," +
                      acc_cell(rep.test_acc_before) + "," + acc_cell(rep.test_acc_after) + "\n";
        reports.push_back(rep);
    }
    if (cases.empty()) out << "no cases in " << cases_csv << "; model unchanged\n";

    save_model(out_model, model.net, model.meta);
    write_text_file(out_model + ".report.csv", report_csv);
    return reports;
}

double key_class_correlation(const AnyNet& net, const Dataset& ds) {
    const ExportableKeys ex = exportable_keys(net);
    if (ex.keys.cols() != ds.dim())
        throw ShapeError("key_class_correlation: key dim != dataset dim");

    // Per-class pixel means over the dataset.
    Matrix class_mean(ds.num_classes, ds.dim());
    std::vector<std::size_t> counts(ds.num_classes, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto label = std::size_t(ds.y[i]);
        ++counts[label];
        for (std::size_t j = 0; j < ds.dim(); ++j) class_mean(label, j) += ds.x(i, j);
    }
    for (std::size_t k = 0; k < ds.num_classes; ++k)
        if (counts[k] > 0)
            for (std::size_t j = 0; j < ds.dim(); ++j) class_mean(k, j) /= double(counts[k]);

    auto pearson = [&](const double* a, const double* b, std::size_t n) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            ma += a[j];
            mb += b[j];
        }
        ma /= double(n);
        mb /= double(n);
        double cov = 0.0, va = 0.0, vb = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            cov += (a[j] - ma) * (b[j] - mb);
            va += (a[j] - ma) * (a[j] - ma);
            vb += (b[j] - mb) * (b[j] - mb);
        }
        if (va <= 0.0 || vb <= 0.0) return 0.0;
        return cov / std::sqrt(va * vb);
    };

    double sum = 0.0;
    for (std::size_t i = 0; i < ex.keys.rows(); ++i)
        sum += pearson(ex.keys.row(i), class_mean.row(std::size_t(ex.unit_class[i])), ds.dim());
    return sum / double(ex.keys.rows());
}

bool cmd_gradcheck(std::size_t trials, double tol, std::uint64_t seed, std::ostream& out) {
    // tol = 0 is allowed and can never pass: floating-point gradients always
    // disagree with the difference quotient by something.
    if (tol < 0.0 || !std::isfinite(tol)) throw ValueError("gradcheck: tolerance must be >= 0");
    bool all_pass = true;
    for (const auto& c : gradcheck_all(trials, tol, seed)) {
        out << (c.pass ? "PASS" : "FAIL") << "  " << c.name
            << "  max_rel_err=" << fmt_double(c.max_rel_err) << "\n";
        all_pass = all_pass && c.pass;
    }
    return all_pass;
}

} // namespace idw

#include "idwattn/cli.hpp"
#include "idwattn/error.hpp"
#include "idwattn/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

idw::ExperimentConfig resolve_config(const std::string& config_path,
                                     const std::vector<std::string>& overrides) {
    idw::ExperimentConfig cfg = config_path.empty()
                                    ? idw::ExperimentConfig{}
                                    : idw::ExperimentConfig::from_file(config_path);
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw idw::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> values;
    for (const std::string& cell : idw::split(csv, ','))
        if (!cell.empty()) values.push_back(idw::parse_double(cell));
    return values;
}

int map_error(const idw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (dynamic_cast<const idw::ConfigError*>(&e)) return idw::kExitConfig;
    if (dynamic_cast<const idw::IoError*>(&e) || dynamic_cast<const idw::FormatError*>(&e) ||
        dynamic_cast<const idw::VersionError*>(&e))
        return idw::kExitData;
    if (dynamic_cast<const idw::NumericError*>(&e)) return idw::kExitNumeric;
    return idw::kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype networks with distance-based attention: training, "
                 "experiment reproduction, and closed-form behavior editing"};
    app.require_subcommand(1);

    std::string config_path, model_path, out_path, cases_path;
    std::vector<std::string> overrides;

    auto add_config_opts = [&](CLI::App* cmd, bool required) {
        cmd->add_option("-c,--config", config_path, "experiment config file")->required(required);
        cmd->add_option("--set", overrides, "override a config key (key=value, repeatable)");
    };

    // gen-moons
    auto* gen = app.add_subcommand("gen-moons", "generate the two-moons dataset as CSV");
    std::size_t gen_train = 100, gen_test = 20;
    double gen_noise = 0.1;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "out";
    gen->add_option("--n-train", gen_train, "training points");
    gen->add_option("--n-test", gen_test, "test points");
    gen->add_option("--noise", gen_noise, "coordinate noise std");
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("-o,--out", gen_out, "output directory");

    auto* train_cmd = app.add_subcommand("train", "train a model per the config");
    add_config_opts(train_cmd, true);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on the config's data");
    eval_cmd->add_option("-m,--model", model_path, "model file")->required();
    add_config_opts(eval_cmd, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "train over a (p, eps) cross product");
    std::string p_csv = "1,2,8", eps_csv = "1e-3";
    sweep_cmd->add_option("--p-list", p_csv, "comma-separated p values");
    sweep_cmd->add_option("--eps-list", eps_csv, "comma-separated eps values");
    add_config_opts(sweep_cmd, true);

    auto* export_cmd = app.add_subcommand("export-keys", "dump learned keys as images or CSV");
    export_cmd->add_option("-m,--model", model_path, "model file")->required();
    export_cmd->add_option("-o,--out", out_path, "output directory")->required();

    auto* grid_cmd = app.add_subcommand("grid", "decision-region dump for a 2-D model");
    idw::GridBox box;
    std::size_t grid_res = 50;
    grid_cmd->add_option("-m,--model", model_path, "model file")->required();
    grid_cmd->add_option("-o,--out", out_path, "output CSV")->required();
    grid_cmd->add_option("--res", grid_res, "points per axis");
    grid_cmd->add_option("--x0", box.x0);
    grid_cmd->add_option("--x1", box.x1);
    grid_cmd->add_option("--y0", box.y0);
    grid_cmd->add_option("--y1", box.y1);

    auto* aug_cmd = app.add_subcommand("augment", "inject special-case prototypes from a CSV");
    aug_cmd->add_option("-m,--model", model_path, "model file")->required();
    aug_cmd->add_option("--cases", cases_path, "headerless CSV: features..., target class")
        ->required();
    aug_cmd->add_option("-o,--out", out_path, "output model file")->required();
    add_config_opts(aug_cmd, false);

    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference audit of all gradients");
    std::size_t gc_trials = 20;
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 0;
    gc_cmd->add_option("--trials", gc_trials, "random instances per architecture");
    gc_cmd->add_option("--tol", gc_tol, "max relative error");
    gc_cmd->add_option("--seed", gc_seed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto [train_set, test_set] = idw::gen_moons({gen_train, gen_test, gen_noise, gen_seed});
            std::filesystem::create_directories(gen_out);
            idw::write_points_csv(gen_out + "/train.csv", train_set);
            idw::write_points_csv(gen_out + "/test.csv", test_set);
            std::cout << "wrote " << gen_out << "/train.csv and " << gen_out << "/test.csv\n";
        } else if (train_cmd->parsed()) {
            idw::cmd_train(resolve_config(config_path, overrides), std::cout);
        } else if (eval_cmd->parsed()) {
            idw::cmd_eval(model_path, resolve_config(config_path, overrides), std::cout);
        } else if (sweep_cmd->parsed()) {
            const std::size_t failures =
                idw::cmd_sweep(resolve_config(config_path, overrides), parse_list(p_csv),
                               parse_list(eps_csv), std::cout);
            if (failures > 0) {
                std::cerr << failures << " sweep cell(s) failed\n";
                return idw::kExitNumeric;
            }
        } else if (export_cmd->parsed()) {
            idw::cmd_export_keys(model_path, out_path, std::cout);
        } else if (grid_cmd->parsed()) {
            idw::cmd_grid(model_path, box, grid_res, out_path);
        } else if (aug_cmd->parsed()) {
            if (config_path.empty()) {
                idw::cmd_augment(model_path, cases_path, out_path, nullptr, std::cout);
            } else {
                const idw::ExperimentConfig cfg = resolve_config(config_path, overrides);
                idw::cmd_augment(model_path, cases_path, out_path, &cfg, std::cout);
            }
        } else if (gc_cmd->parsed()) {
            if (!idw::cmd_gradcheck(gc_trials, gc_tol, gc_seed, std::cout))
                return idw::kExitGradcheck;
        }
    } catch (const idw::Error& e) {
        return map_error(e);
    }
    return idw::kExitOk;
}

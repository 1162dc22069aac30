#include "netdecode/export.hpp"
#include "netdecode/runner.hpp"
#include "netdecode/synth.hpp"
#include "netdecode/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

// exit codes: 0 success, 1 partial (entry failures or I/O), 2 invalid config
constexpr int exit_ok = 0;
constexpr int exit_partial = 1;
constexpr int exit_bad_config = 2;

int cmd_run(const std::string& config_path) {
    try {
        const auto cfg = netdecode::load_run_config(config_path);
        std::cerr << "[netdecode] running " << cfg.outcomes.size() << " outcome(s) x "
                  << std::max<std::size_t>(cfg.thresholds.size(), 1) << " threshold(s)\n";
        const auto bundle = netdecode::run_config(cfg);
        netdecode::export_results(bundle, cfg.output_dir);
        const auto plot_log = netdecode::render_plots(bundle, cfg.output_dir);
        netdecode::write_run_metadata(bundle, cfg.output_dir, plot_log);
        for (const auto& e : bundle.entries) {
            std::cerr << "[netdecode] " << e.dir_name() << ": "
                      << (e.failed ? "FAILED (" + e.error + ")" : "ok") << "\n";
        }
        return bundle.any_failed() ? exit_partial : exit_ok;
    } catch (const netdecode::ConfigError& e) {
        std::cerr << "[netdecode] config error: " << e.what() << "\n";
        return exit_bad_config;
    } catch (const netdecode::Error& e) {
        std::cerr << "[netdecode] error: " << e.what() << "\n";
        return exit_partial;
    }
}

int cmd_validate(const std::string& config_path) {
    try {
        const auto cfg = netdecode::load_run_config(config_path);
        // data-dependent checks without running anything: the sheet must
        // exist and every named column must be present and compatible
        const auto sheet = netdecode::load_variable_sheet(cfg.data.variable_sheet);
        const auto task = netdecode::task_of(cfg.learner);
        for (const auto& outcome : cfg.outcomes) {
            const auto* col = sheet.find(outcome);
            if (!col) throw netdecode::ConfigError("outcome column '" + outcome + "' not in sheet");
            const bool binary = col->type == netdecode::VariableColumn::Type::categorical;
            if (binary != (task == netdecode::Task::classification))
                throw netdecode::ConfigError("outcome '" + outcome +
                                             "' type does not match learner task");
        }
        for (const auto& name : cfg.features.additional)
            if (!sheet.find(name))
                throw netdecode::ConfigError("additional column '" + name + "' not in sheet");
        for (const auto& name : cfg.features.nuisance)
            if (!sheet.find(name))
                throw netdecode::ConfigError("nuisance column '" + name + "' not in sheet");
        std::cerr << "[netdecode] config ok\n";
        return exit_ok;
    } catch (const netdecode::ConfigError& e) {
        std::cerr << "[netdecode] config error: " << e.what() << "\n";
        return exit_bad_config;
    } catch (const netdecode::Error& e) {
        std::cerr << "[netdecode] config error: " << e.what() << "\n";
        return exit_bad_config;
    }
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    try {
        std::ifstream in(spec_path);
        if (!in) throw netdecode::ConfigError("cannot open generator spec: " + spec_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw netdecode::ConfigError(std::string("generator spec parse error: ") + e.what());
        }
        const auto spec = netdecode::parse_synth_spec(j);
        netdecode::generate_synthetic(spec, out_dir);
        std::cerr << "[netdecode] wrote synthetic dataset to " << out_dir << "\n";
        return exit_ok;
    } catch (const netdecode::ConfigError& e) {
        std::cerr << "[netdecode] config error: " << e.what() << "\n";
        return exit_bad_config;
    } catch (const netdecode::Error& e) {
        std::cerr << "[netdecode] error: " << e.what() << "\n";
        return exit_partial;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"netdecode: decoding models over connectivity data"};
    app.set_version_flag("--version", netdecode::version);
    app.require_subcommand(1);

    std::string config_path, spec_path, out_dir;

    auto* run = app.add_subcommand("run", "execute a run configuration");
    run->add_option("config", config_path, "run configuration (JSON)")->required();

    auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
    validate->add_option("config", config_path, "run configuration (JSON)")->required();

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("genspec", spec_path, "generator spec (JSON)")->required();
    synth->add_option("out_dir", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path);
    if (validate->parsed()) return cmd_validate(config_path);
    if (synth->parsed()) return cmd_synth(spec_path, out_dir);
    return exit_bad_config;
}

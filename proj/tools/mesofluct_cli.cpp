// mesofluct: runs one experiment and writes its table.
//
//   mesofluct stability --config sweep.cfg --out sweep.csv
//   mesofluct mc --seed 7 --format json
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 failed checks.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mesofluct/experiments.hpp"

extern "C" void openblas_set_num_threads(int);

namespace ex = mesofluct::experiments;

namespace {

struct Args {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string format = "csv";
    bool quiet = false;
};

int run(const std::string& id, const Args& args) {
    ex::ExperimentConfig defaults;
    defaults.experiment = id;
    auto cfg = args.config.empty() ? defaults : ex::load_config(args.config, defaults);
    if (cfg.experiment != id)
        throw mesofluct::ConfigError("config file names experiment '" + cfg.experiment + "' but the subcommand is '" +
                                     id + "'");
    if (args.seed) cfg.seed = *args.seed;
    if (!args.out.empty()) cfg.output = args.out;
    if (args.threads < 1) throw mesofluct::ConfigError("--threads must be >= 1");
    openblas_set_num_threads(args.threads);
    const auto fmt = ex::parse_format(args.format);

    ex::RunOptions opt;
    if (!args.quiet) opt.log = &std::cerr;
    const auto result = ex::run_experiment(cfg, opt);
    if (cfg.output.empty()) {
        ex::write_result(std::cout, result, fmt);
    } else {
        ex::write_result_files(cfg.output, result, fmt);
    }
    for (const auto& c : result.checks)
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " [" + c.detail + "]")
                  << "\n";
    return result.passed() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mesoscopic fluctuation experiments for orthogonal polynomial ensembles"};
    app.require_subcommand(1);
    Args args;
    std::string chosen;
    for (const auto& id : ex::experiment_ids()) {
        auto* sub = app.add_subcommand(id, "run the " + id + " experiment");
        sub->add_option("--config", args.config, "flat key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output path (stdout when omitted)");
        sub->add_option("--seed", args.seed, "master seed (overrides the config)");
        sub->add_option("--threads", args.threads, "BLAS threads")->capture_default_str();
        sub->add_option("--format", args.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
        sub->add_flag("--quiet", args.quiet, "no progress lines on stderr");
        sub->callback([&chosen, id] { chosen = id; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return run(chosen, args);
    } catch (const mesofluct::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mesofluct::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mesofluct::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

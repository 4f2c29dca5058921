#include "rankfs/parallel.hpp"
#include "rankfs/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kPipelineError = 1;
constexpr int kUsageError = 2;

} // namespace

int main(int argc, char** argv)
{
    using namespace rankfs;

    CLI::App app{"Feature-space partitioned Boruta ranking and ensemble evaluation for expression matrices"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    std::vector<std::string> overrides;
    std::size_t workers = 0;
    bool print_config = false;
    app.add_option("-c,--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("-s,--set", overrides, "Override a config field, e.g. --set cv.k=5 (repeatable)");
    app.add_option("-j,--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    app.add_flag("--print-config", print_config, "Print the effective config and exit");

    for (const char* name : {"synth", "preprocess", "select", "evaluate", "report"}) {
        app.add_subcommand(name);
    }
    app.get_subcommand("synth")->description("Generate a synthetic dataset with planted informative features");
    app.get_subcommand("preprocess")->description("Filter low-expression features, log-transform, write partition stats");
    app.get_subcommand("select")->description("Run the FSFSP depth sweep and write ranked feature sets");
    app.get_subcommand("evaluate")->description("Cross-validate classifiers and ensembles on the chosen feature sets");
    app.get_subcommand("report")->description("Re-render rank and evaluation tables from saved JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (workers > 0) {
            overrides.push_back("workers=" + std::to_string(workers));
        }
        const auto cfg = pipeline::load_config(config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file),
                                               overrides);
        if (print_config) {
            std::cout << cfg.raw.dump(2) << '\n';
            return kOk;
        }
        set_default_workers(cfg.workers);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "synth") {
            pipeline::cmd_synth(cfg, std::cerr);
        } else if (cmd == "preprocess") {
            pipeline::cmd_preprocess(cfg, std::cerr);
        } else if (cmd == "select") {
            pipeline::cmd_select(cfg, std::cerr);
        } else if (cmd == "evaluate") {
            pipeline::cmd_evaluate(cfg, std::cerr);
        } else {
            pipeline::cmd_report(cfg, std::cout);
        }
    } catch (const pipeline::ConfigError& e) {
        std::cerr << "rankfs: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "rankfs: " << e.what() << '\n';
        return kPipelineError;
    }
    return kOk;
}

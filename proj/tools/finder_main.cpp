#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "finder/commands.hpp"
#include "finder/config.hpp"

namespace {

finder::cli::RunConfig resolve_config(const std::string& config_path,
                                      const std::string& output_dir) {
    finder::cli::RunConfig config;
    if (!config_path.empty()) {
        config = finder::cli::load_config(config_path);
    }
    if (!output_dir.empty()) {
        config.output_dir = output_dir;
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finder: retrieval-filtered entity and attribute extraction"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    bool verbose = false;
    app.add_option("--config", config_path, "Path to a JSON run config");
    app.add_option("--output-dir", output_dir,
                   "Output directory (overrides the config)");
    app.add_flag("--verbose", verbose, "Stream filter probe logs to stderr");

    auto* ingest = app.add_subcommand("ingest", "Add documents to the corpus");
    std::vector<std::string> ingest_paths;
    ingest->add_option("paths", ingest_paths,
                       "Files or directories to ingest");

    app.add_subcommand("index", "Build the chunk embedding index");
    auto* extract =
        app.add_subcommand("extract", "Run the extraction pipeline");
    auto* record = app.add_subcommand(
        "record", "Run extraction while recording completions");
    auto* replay = app.add_subcommand(
        "replay", "Run extraction against a recorded completion cache");

    auto* eval = app.add_subcommand("eval", "Score predictions against gold");
    std::string predictions_path;
    std::string gold_path;
    eval->add_option("--predictions", predictions_path,
                     "Predictions JSON file")
        ->required();
    eval->add_option("--gold", gold_path, "Gold annotations JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    finder::cli::CommandStreams streams{std::cin, std::cout, std::cerr};
    return finder::cli::guarded(std::cerr, [&]() -> int {
        finder::cli::RunConfig config = resolve_config(config_path, output_dir);
        if (app.got_subcommand("ingest")) {
            return finder::cli::cmd_ingest(config, ingest_paths, streams);
        }
        if (app.got_subcommand("index")) {
            return finder::cli::cmd_index(config, streams);
        }
        if (app.got_subcommand("extract")) {
            return finder::cli::cmd_extract(
                config, streams, finder::cli::ExtractMode::normal, verbose);
        }
        if (app.got_subcommand("record")) {
            return finder::cli::cmd_extract(
                config, streams, finder::cli::ExtractMode::record, verbose);
        }
        if (app.got_subcommand("replay")) {
            config.gateway.backend = "replay";
            return finder::cli::cmd_extract(
                config, streams, finder::cli::ExtractMode::normal, verbose);
        }
        return finder::cli::cmd_eval(config, predictions_path, gold_path,
                                     streams);
    });
}

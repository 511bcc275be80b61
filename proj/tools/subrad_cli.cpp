// subrad: run collective-emission scenarios from a config file or bundled name.
//
//   subrad list-scenarios
//   subrad run dicke-n4 --out-dir out
//   subrad compare scenarios/compare-n4.json --format json

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "subrad/error.hpp"
#include "subrad/scenario.hpp"

namespace cli = subrad::cli;

namespace {

int report(const cli::Artifacts& art, const std::string& out_dir) {
    cli::write_artifacts(art, out_dir);
    for (const auto& f : art.files) std::cout << "wrote " << out_dir << "/" << f.first << "\n";
    for (const auto& v : art.violations) std::cerr << "violation: " << v << "\n";
    return art.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-photon superradiance and subradiance scenario runner"};
    app.set_version_flag("--version", cli::tool_version());
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string format;
    app.add_option("--out-dir", out_dir, "Directory for output artifacts");
    app.add_option("--seed-override", seed, "Replace geometry.seed");
    app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));

    std::string source;
    auto* run = app.add_subcommand("run", "Run a scenario");
    run->add_option("config", source, "Config path or bundled scenario name")->required();
    auto* compare = app.add_subcommand("compare", "Cross-check kernel, ww and dicke-oracle engines");
    compare->add_option("config", source, "Config path or bundled scenario name")->required();
    auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");
    for (auto* sub : {run, compare}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::parse_error;
    }

    if (list->parsed()) {
        for (const auto& s : cli::bundled_scenarios()) std::cout << s.name << "\n";
        return cli::ok;
    }

    std::optional<cli::TableFormat> fmt;
    if (format == "csv") fmt = cli::TableFormat::csv;
    if (format == "json") fmt = cli::TableFormat::json;

    try {
        const cli::ScenarioConfig cfg = cli::load_config(source, seed);
        if (run->parsed()) return report(cli::run_scenario(cfg, fmt), out_dir);

        const cli::CompareReport rep = cli::compare_engines(cfg);
        for (const auto& row : rep.rows) {
            std::cout << row.state << ": " << (row.pass ? "agree" : "DISAGREE");
            for (const auto& s : row.skips) std::cout << " [skip " << s << "]";
            std::cout << "\n";
        }
        std::printf("compare finished in %.1f s\n", rep.seconds);
        return report(cli::compare_artifacts(cfg, rep, fmt), out_dir);
    } catch (const cli::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return cli::parse_error;
    } catch (const cli::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return cli::validation_error;
    } catch (const std::exception& e) {
        std::cerr << "engine error: " << e.what() << "\n";
        return cli::engine_error;
    }
}

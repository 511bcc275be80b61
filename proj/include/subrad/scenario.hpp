// scenario.hpp: Config-driven scenario runner behind the `subrad` tool
//
// A config is one JSON object with five sections:
//
//   geometry  atom layout, seed and transition parameters
//   state     list of collective states to study
//   engine    which engines run (kernel, ww, dicke-oracle) and their settings
//   protocol  optional preparation / switching steps
//   output    file prefix, table format, trajectory sampling
//
// Runs are deterministic: every artifact is assembled in memory, stamped with
// the tool version and a hash of the effective config, and written only after
// the whole scenario has finished.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subrad/ensemble.hpp"
#include "subrad/prep_switch.hpp"
#include "subrad/ww_integrator.hpp"

namespace subrad::cli {

enum ExitCode : int { ok = 0, parse_error = 2, validation_error = 3, engine_error = 4, acceptance_violation = 5 };

// Malformed JSON (with line) or a field of the wrong type / unknown key.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed config whose values cannot be honored.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TableFormat { csv, json };

struct StateSpec {
    std::string kind;  // plus | minus | three_bin | multiplet | basis | explicit
    std::string label;
    MultipletLabel multiplet;
    std::size_t atom{0};
    Eigen::VectorXcd amplitudes;
    bool promote{false};
};

struct EngineSpec {
    bool kernel{true};
    bool ww{false};
    bool oracle{false};
    double tolerance{0.1};                         // WW vs kernel, relative with a γ floor
    std::optional<double> closed_form_tolerance;   // asserts |Γ − closed form| when set
    GridSpec grid;
    double t_end{1.0};                             // fit window in units of 1/γ
    double dt{0.0};                                // 0 selects the largest admissible step
    std::size_t samples{200};
};

struct SwitchStep {
    double switch_time{0.5};
    std::vector<std::size_t> bin;  // empty selects the second half
    double t_end{2.0};
    std::size_t samples{200};
};
struct TimedStep {
    Target target{Target::plus};
};
struct SingletStep {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};
struct ConditionalStep {
    Target target{Target::plus};
    double epsilon{0.1};
};
struct NetworkStep {
    OpticalNetwork network;
    double pulse_area{0.0};
};

using ProtocolStep = std::variant<SwitchStep, TimedStep, SingletStep, ConditionalStep, NetworkStep>;

struct OutputSpec {
    std::string prefix;
    TableFormat format{TableFormat::csv};
    bool trajectory{false};
    double t_end{1.0};
    std::size_t samples{200};
    bool multiplets{false};
};

struct ScenarioConfig {
    std::string name;
    GeometrySpec geometry;
    EnsembleOptions ensemble_options;
    std::vector<StateSpec> states;
    EngineSpec engine;
    std::vector<ProtocolStep> protocol;
    OutputSpec output;
    nlohmann::json effective;  // normalized config the hash is taken over
    std::string hash;          // FNV-1a 64 of effective.dump(), hex
};

struct BundledScenario {
    const char* name;
    const char* text;
};

const std::vector<BundledScenario>& bundled_scenarios();

// Throws ParseError or ValidationError.
ScenarioConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);
// `source` is a file path or the name of a bundled scenario.
ScenarioConfig load_config(const std::string& source, std::optional<std::uint64_t> seed_override = std::nullopt);

std::string fnv1a_hex(const std::string& bytes);
// 17 significant digits, '.' separator.
std::string format_double(double x);

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // name → contents
    nlohmann::json summary;
    std::vector<std::string> violations;

    int exit_code() const noexcept { return violations.empty() ? ok : acceptance_violation; }
};

// Engine failures propagate as subrad exceptions; the caller maps them to
// engine_error.  `format` overrides the config's table format.
Artifacts run_scenario(const ScenarioConfig& config, std::optional<TableFormat> format = std::nullopt);

struct EngineRow {
    std::string state;
    std::optional<double> kernel;       // rate_of
    std::optional<double> kernel_fit;   // fitted on the kernel trajectory
    std::optional<double> ww_fit;
    std::optional<double> oracle;
    std::vector<std::string> skips;
    std::optional<double> kernel_oracle_deviation;
    std::optional<double> kernel_ww_deviation;
    bool pass{true};
};

struct CompareReport {
    std::vector<EngineRow> rows;
    double tolerance{0.0};
    double seconds{0.0};
    bool pass() const noexcept;
};

CompareReport compare_engines(const ScenarioConfig& config);
Artifacts compare_artifacts(const ScenarioConfig& config, const CompareReport& report,
                            std::optional<TableFormat> format = std::nullopt);

void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& out_dir);

std::string tool_version();

}  // namespace subrad::cli

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "subrad/scenario.hpp"

namespace fs = std::filesystem;
using namespace subrad::cli;

namespace {

const fs::path kTmp = SUBRAD_TEST_TMP;

fs::path fresh_dir(const std::string& name) {
    const fs::path d = kTmp / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const std::string& name, const std::string& body) {
    fs::create_directories(kTmp);
    const fs::path p = kTmp / (name + ".json");
    std::ofstream(p) << body;
    return p;
}

int run_cli(const std::string& args, const fs::path& out_dir, const std::string& capture = "") {
    std::string cmd = std::string("\"") + SUBRAD_CLI_PATH + "\" --out-dir \"" + out_dir.string() + "\" " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >\"" + capture + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& d) {
    std::map<std::string, std::string> out;
    for (const auto& f : fs::directory_iterator(d)) out[f.path().filename().string()] = slurp(f.path());
    return out;
}

const std::string kCluster = R"({
  "name": "unit-cluster",
  "geometry": {"kind": "cluster", "n": 4, "spread": 0.0},
  "state": {"states": [{"kind": "plus"}, {"kind": "minus"}]},
  "engine": {"engines": ["kernel", "dicke-oracle"]}
})";

const std::string kSlab = R"({
  "name": "unit-slab",
  "geometry": {"kind": "slab", "n": 32, "area": 10.0, "depth": 2.0, "seed": 3},
  "state": {"states": [{"kind": "plus"}, {"kind": "minus"}]},
  "engine": {"engines": ["kernel"]}
})";

}  // namespace

TEST_CASE("hash and number formatting") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(0.5).find(',') == std::string::npos);
}

TEST_CASE("malformed JSON reports the line") {
    try {
        parse_config("{\n  \"name\": \"x\",\n  \"geometry\": {\"kind\": \"cluster\" \"n\": 2}\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("unknown keys and wrong types are parse errors naming the field") {
    try {
        parse_config(R"({"name": "x", "geometry": {"kind": "cluster", "n": 2, "sprad": 0.1},
                         "state": {"states": [{"kind": "plus"}]}})");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("geometry.sprad") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"name": "x", "geometry": {"kind": "cluster", "n": "two"},
                                     "state": {"states": [{"kind": "plus"}]}})"),
                    ParseError);
}

TEST_CASE("invalid values are validation errors") {
    CHECK_THROWS_AS(parse_config(R"({"name": "x", "geometry": {"kind": "cluster", "n": 4},
                                     "state": {"states": [{"kind": "plus"}]},
                                     "engine": {"engines": ["ww"], "grid": {"n_angles": 4}}})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"name": "x", "geometry": {"kind": "cluster", "n": 3},
                                     "state": {"states": [{"kind": "minus"}]}})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"name": "x", "geometry": {"kind": "slab", "n": 12, "area": 4, "depth": 1},
                                     "state": {"states": [{"kind": "plus"}]},
                                     "engine": {"engines": ["dicke-oracle"]}})"),
                    ValidationError);
}

TEST_CASE("effective config and seed override") {
    const ScenarioConfig a = parse_config(kSlab);
    const ScenarioConfig b = parse_config(kSlab, 99);
    CHECK(a.hash == fnv1a_hex(a.effective.dump()));
    CHECK(a.hash != b.hash);
    CHECK(b.effective["geometry"]["seed"] == 99);
    CHECK(parse_config(kSlab).hash == a.hash);
}

TEST_CASE("every bundled scenario parses") {
    REQUIRE(bundled_scenarios().size() >= 5);
    for (const BundledScenario& s : bundled_scenarios()) {
        INFO(s.name);
        CHECK_NOTHROW(load_config(s.name));
        CHECK(load_config(s.name).name == s.name);
    }
}

TEST_CASE("cli exit codes") {
    const fs::path ok_cfg = write_config("ok", kCluster);
    const fs::path d0 = fresh_dir("exit0");
    CHECK(run_cli("run \"" + ok_cfg.string() + "\"", d0) == ok);
    CHECK(fs::exists(d0 / "unit-cluster_rates.csv"));
    CHECK(fs::exists(d0 / "unit-cluster_summary.json"));

    const fs::path bad = write_config("bad", "{\n \"name\": \"bad\",\n \"geometry\": [\n");
    const fs::path d2 = fresh_dir("exit2");
    CHECK(run_cli("run \"" + bad.string() + "\"", d2) == parse_error);
    CHECK(fs::is_empty(d2));
    CHECK(run_cli("frobnicate", d2) == parse_error);

    const fs::path invalid = write_config("invalid", R"({"name": "invalid",
      "geometry": {"kind": "line", "n": 4, "spacing": -1.0},
      "state": {"states": [{"kind": "plus"}]}})");
    const fs::path d3 = fresh_dir("exit3");
    CHECK(run_cli("run \"" + invalid.string() + "\"", d3) == validation_error);
    CHECK(fs::is_empty(d3));

    // 16 atoms on the coarsest comb recur well before t_end.
    const fs::path engine = write_config("engine", R"({"name": "engine",
      "geometry": {"kind": "cluster", "n": 16},
      "state": {"states": [{"kind": "plus"}]},
      "engine": {"engines": ["kernel", "ww"], "grid": {"n_angles": 6, "n_radial": 64}, "t_end": 1.0}})");
    const fs::path d4 = fresh_dir("exit4");
    CHECK(run_cli("run \"" + engine.string() + "\"", d4) == engine_error);
    CHECK(fs::is_empty(d4));

    const fs::path strict = write_config("strict", R"({"name": "strict",
      "geometry": {"kind": "slab", "n": 32, "area": 10.0, "depth": 2.0, "seed": 3},
      "state": {"states": [{"kind": "plus"}]},
      "engine": {"engines": ["kernel"], "closed_form_tolerance": 0.001}})");
    const fs::path d5 = fresh_dir("exit5");
    CHECK(run_cli("run \"" + strict.string() + "\"", d5) == acceptance_violation);
    const std::string summary = slurp(d5 / "strict_summary.json");
    CHECK(nlohmann::json::parse(summary)["violations"].size() >= 1);
}

TEST_CASE("repeated runs are byte-identical and stamped") {
    const fs::path cfg = write_config("slab", kSlab);
    const fs::path d1 = fresh_dir("repeat1");
    const fs::path d2 = fresh_dir("repeat2");
    REQUIRE(run_cli("run \"" + cfg.string() + "\"", d1) == ok);
    REQUIRE(run_cli("run \"" + cfg.string() + "\"", d2) == ok);
    const auto c1 = dir_contents(d1);
    CHECK(c1 == dir_contents(d2));

    const std::string hash = parse_config(kSlab).hash;
    const std::string rates = c1.at("unit-slab_rates.csv");
    const std::string header = rates.substr(0, rates.find('\n'));
    CHECK(header.find("config_hash=" + hash) != std::string::npos);
    CHECK(header.find(tool_version()) != std::string::npos);
    CHECK(nlohmann::json::parse(c1.at("unit-slab_summary.json"))["meta"]["config_hash"] == hash);

    const fs::path d3 = fresh_dir("repeat3");
    REQUIRE(run_cli("--seed-override 4 run \"" + cfg.string() + "\"", d3) == ok);
    const auto c3 = dir_contents(d3);
    CHECK(c3.at("unit-slab_rates.csv") != rates);
    CHECK(c3.at("unit-slab_rates.csv").find("config_hash=" + parse_config(kSlab, 4).hash) != std::string::npos);

    const fs::path dj = fresh_dir("repeat_json");
    REQUIRE(run_cli("--format json run \"" + cfg.string() + "\"", dj) == ok);
    CHECK(fs::exists(dj / "unit-slab_rates.json"));
    CHECK_FALSE(nlohmann::json::parse(slurp(dj / "unit-slab_rates.json")).empty());
}

TEST_CASE("list-scenarios and bundled runs") {
    const fs::path d = fresh_dir("list");
    const std::string capture = (d / "list.txt").string();
    REQUIRE(run_cli("list-scenarios", d, capture) == ok);
    const std::string listed = slurp(capture);
    for (const BundledScenario& s : bundled_scenarios()) CHECK(listed.find(s.name) != std::string::npos);

    const fs::path r = fresh_dir("bundled");
    CHECK(run_cli("run dicke-n4", r) == ok);
    CHECK(fs::exists(r / "dicke-n4_multiplets.json"));
    CHECK(run_cli("compare dicke-n4", r) == ok);
}

// scenario.cpp

#include "subrad/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "subrad/collective_states.hpp"
#include "subrad/decay_kernel.hpp"
#include "subrad/dicke_algebra.hpp"
#include "subrad/error.hpp"

#ifndef SUBRAD_VERSION
#define SUBRAD_VERSION "unknown"
#endif

namespace subrad::cli {

namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------- field access

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError("field " + (path.empty() ? std::string("<root>") : path) + ": expected an object");
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            throw ParseError("field " + join(path, k) + ": unknown field");
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& obj, const std::string& path, const char* key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (v == nullptr) {
        if (fallback) return *fallback;
        throw ParseError("field " + join(path, key) + ": missing");
    }
    if (!v->is_number()) throw ParseError("field " + join(path, key) + ": expected a number");
    return v->get<double>();
}

long long integer(const json& obj, const std::string& path, const char* key,
                  std::optional<long long> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (v == nullptr) {
        if (fallback) return *fallback;
        throw ParseError("field " + join(path, key) + ": missing");
    }
    if (!v->is_number_integer()) throw ParseError("field " + join(path, key) + ": expected an integer");
    return v->get<long long>();
}

std::string text(const json& obj, const std::string& path, const char* key,
                 std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (v == nullptr) {
        if (fallback) return *fallback;
        throw ParseError("field " + join(path, key) + ": missing");
    }
    if (!v->is_string()) throw ParseError("field " + join(path, key) + ": expected a string");
    return v->get<std::string>();
}

bool boolean(const json& obj, const std::string& path, const char* key, bool fallback) {
    const json* v = find(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ParseError("field " + join(path, key) + ": expected true or false");
    return v->get<bool>();
}

Vec3 vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
        throw ParseError("field " + path + ": expected [x, y, z]");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

std::size_t count(long long v, const std::string& path) {
    if (v < 0) throw ValidationError("field " + path + ": must be >= 0");
    return static_cast<std::size_t>(v);
}

void positive(double v, const std::string& path) {
    if (!(v > 0.0)) throw ValidationError("field " + path + ": must be > 0");
}

Target target_of(const std::string& s, const std::string& path) {
    if (s == "plus") return Target::plus;
    if (s == "minus") return Target::minus;
    throw ValidationError("field " + path + ": target must be plus or minus");
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// ---------------------------------------------------------------- sections

void parse_geometry(const json& g, ScenarioConfig& cfg) {
    const std::string path = "geometry";
    require_object(g, path);
    allow_keys(g, path, {"kind", "n", "spread", "spacing", "axis", "area", "depth", "positions", "seed", "lambda0",
                         "gamma", "k0_direction", "area_override"});
    const std::string kind = text(g, path, "kind");
    const auto seed = static_cast<std::uint64_t>(integer(g, path, "seed", 0));
    auto n_atoms = [&] {
        const long long n = integer(g, path, "n");
        if (n < 1) throw ValidationError("field geometry.n: must be >= 1");
        return static_cast<int>(n);
    };
    if (kind == "cluster") {
        cfg.geometry = PointCluster{n_atoms(), number(g, path, "spread", 0.0), seed};
    } else if (kind == "line") {
        LineGeometry line{n_atoms(), number(g, path, "spacing"), {0.0, 0.0, 1.0}};
        if (const json* a = find(g, "axis")) line.axis = vec3(*a, "geometry.axis");
        cfg.geometry = line;
    } else if (kind == "slab") {
        cfg.geometry = SlabGeometry{n_atoms(), number(g, path, "area"), number(g, path, "depth"), seed};
    } else if (kind == "explicit") {
        const json* p = find(g, "positions");
        if (p == nullptr || !p->is_array()) throw ParseError("field geometry.positions: expected an array of [x, y, z]");
        ExplicitGeometry ex;
        for (std::size_t i = 0; i < p->size(); ++i) {
            ex.positions.push_back(vec3((*p)[i], "geometry.positions[" + std::to_string(i) + "]"));
        }
        cfg.geometry = ex;
    } else {
        throw ValidationError("field geometry.kind: unknown geometry '" + kind + "' (cluster, line, slab, explicit)");
    }
    cfg.ensemble_options.lambda0 = number(g, path, "lambda0", 1.0);
    cfg.ensemble_options.gamma = number(g, path, "gamma", 1.0);
    if (const json* d = find(g, "k0_direction")) cfg.ensemble_options.k0_direction = vec3(*d, "geometry.k0_direction");
    if (find(g, "area_override") != nullptr) cfg.ensemble_options.area_override = number(g, path, "area_override");
}

StateSpec parse_state(const json& s, const std::string& path) {
    require_object(s, path);
    allow_keys(s, path, {"kind", "label", "R", "m", "p", "atom", "amplitudes", "promote"});
    StateSpec st;
    st.kind = text(s, path, "kind");
    st.promote = boolean(s, path, "promote", false);
    if (st.kind == "multiplet") {
        const double r2 = 2.0 * number(s, path, "R");
        const double m2 = 2.0 * number(s, path, "m");
        if (r2 != std::round(r2) || m2 != std::round(m2)) {
            throw ValidationError("field " + path + ": R and m must be integers or half-integers");
        }
        const long long p = integer(s, path, "p", 1);
        if (p < 1) throw ValidationError("field " + join(path, "p") + ": must be >= 1");
        st.multiplet = {static_cast<int>(r2), static_cast<int>(m2), static_cast<int>(p)};
    } else if (st.kind == "basis") {
        st.atom = count(integer(s, path, "atom"), join(path, "atom"));
    } else if (st.kind == "explicit") {
        const json* a = find(s, "amplitudes");
        if (a == nullptr || !a->is_array()) throw ParseError("field " + join(path, "amplitudes") + ": expected [[re, im], ...]");
        st.amplitudes.resize(static_cast<Eigen::Index>(a->size()));
        for (std::size_t i = 0; i < a->size(); ++i) {
            const json& c = (*a)[i];
            if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
                throw ParseError("field " + join(path, "amplitudes") + "[" + std::to_string(i) + "]: expected [re, im]");
            }
            st.amplitudes(static_cast<Eigen::Index>(i)) = cplx{c[0].get<double>(), c[1].get<double>()};
        }
    } else if (st.kind != "plus" && st.kind != "minus" && st.kind != "three_bin") {
        throw ValidationError("field " + join(path, "kind") + ": unknown state constructor '" + st.kind +
                              "' (plus, minus, three_bin, multiplet, basis, explicit)");
    }
    std::string fallback = st.kind;
    if (st.kind == "multiplet") fallback = st.multiplet.to_string();
    if (st.kind == "basis") fallback = "basis:" + std::to_string(st.atom);
    if (st.promote) fallback = "R+" + fallback;
    st.label = text(s, path, "label", fallback);
    return st;
}

void parse_engine(const json& e, EngineSpec& eng) {
    const std::string path = "engine";
    require_object(e, path);
    allow_keys(e, path, {"engines", "tolerance", "closed_form_tolerance", "grid", "t_end", "dt", "samples"});
    if (const json* list = find(e, "engines")) {
        if (!list->is_array()) throw ParseError("field engine.engines: expected an array of engine names");
        eng.kernel = eng.ww = eng.oracle = false;
        for (const json& name : *list) {
            if (!name.is_string()) throw ParseError("field engine.engines: expected engine names");
            const auto s = name.get<std::string>();
            if (s == "kernel") eng.kernel = true;
            else if (s == "ww") eng.ww = true;
            else if (s == "dicke-oracle") eng.oracle = true;
            else throw ValidationError("field engine.engines: unknown engine '" + s + "' (kernel, ww, dicke-oracle)");
        }
    }
    eng.tolerance = number(e, path, "tolerance", 0.1);
    positive(eng.tolerance, "engine.tolerance");
    if (find(e, "closed_form_tolerance") != nullptr) {
        eng.closed_form_tolerance = number(e, path, "closed_form_tolerance");
        positive(*eng.closed_form_tolerance, "engine.closed_form_tolerance");
    }
    if (const json* g = find(e, "grid")) {
        require_object(*g, "engine.grid");
        allow_keys(*g, "engine.grid", {"n_angles", "n_radial", "cutoff_multiple"});
        eng.grid.n_angles = static_cast<int>(integer(*g, "engine.grid", "n_angles", 12));
        eng.grid.n_radial = static_cast<int>(integer(*g, "engine.grid", "n_radial", 256));
        eng.grid.cutoff_multiple = number(*g, "engine.grid", "cutoff_multiple", 20.0);
        if (eng.grid.n_angles < 6) throw ValidationError("field engine.grid.n_angles: must be >= 6");
        if (eng.grid.n_radial < 64) throw ValidationError("field engine.grid.n_radial: must be >= 64");
        if (!(eng.grid.cutoff_multiple >= 20.0)) throw ValidationError("field engine.grid.cutoff_multiple: must be >= 20");
    }
    eng.t_end = number(e, path, "t_end", 1.0);
    positive(eng.t_end, "engine.t_end");
    eng.dt = number(e, path, "dt", 0.0);
    if (eng.dt < 0.0) throw ValidationError("field engine.dt: must be >= 0");
    eng.samples = count(integer(e, path, "samples", 200), "engine.samples");
    if (eng.samples < 10) throw ValidationError("field engine.samples: must be >= 10");
}

OpticalNetwork parse_network(const json& step, const std::string& path, std::size_t atoms) {
    const json* els = find(step, "elements");
    if (els == nullptr || !els->is_array()) throw ParseError("field " + join(path, "elements") + ": expected an array");
    OpticalNetwork net;
    for (std::size_t i = 0; i < els->size(); ++i) {
        const json& el = (*els)[i];
        const std::string ep = join(path, "elements") + "[" + std::to_string(i) + "]";
        require_object(el, ep);
        allow_keys(el, ep, {"type", "r", "phi"});
        const std::string type = text(el, ep, "type");
        if (type == "splitter") net.elements.emplace_back(BeamSplitter{number(el, ep, "r")});
        else if (type == "phase") net.elements.emplace_back(PhaseShifter{number(el, ep, "phi")});
        else if (type == "mirror") net.elements.emplace_back(Mirror{});
        else throw ValidationError("field " + join(ep, "type") + ": unknown element '" + type + "' (splitter, phase, mirror)");
    }
    if (const json* t = find(step, "targets")) {
        if (!t->is_array()) throw ParseError("field " + join(path, "targets") + ": expected [[leg, atom], ...]");
        for (const json& pair : *t) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
                throw ParseError("field " + join(path, "targets") + ": expected [[leg, atom], ...]");
            }
            const auto leg = pair[0].get<std::size_t>();
            if (net.targets.count(leg) != 0) throw ValidationError("field " + join(path, "targets") + ": leg listed twice");
            net.targets[leg] = pair[1].get<std::size_t>();
        }
    } else {
        for (std::size_t j = 0; j < std::min(net.leg_count(), atoms); ++j) net.targets[j] = j;
    }
    try {
        net.validate();
    } catch (const InvalidParameter& e) {
        throw ValidationError("field " + path + ": " + e.what());
    }
    for (const auto& [leg, atom] : net.targets) {
        if (atom >= atoms) throw ValidationError("field " + join(path, "targets") + ": atom " + std::to_string(atom) +
                                                 " outside the ensemble");
    }
    return net;
}

ProtocolStep parse_step(const json& s, const std::string& path, std::size_t atoms, const EngineSpec& eng) {
    require_object(s, path);
    const std::string kind = text(s, path, "kind");
    if (kind == "switch") {
        allow_keys(s, path, {"kind", "switch_time", "bin", "t_end", "samples"});
        if (!eng.kernel) throw ValidationError("field " + path + ": the switch protocol runs on the kernel engine");
        SwitchStep sw;
        sw.switch_time = number(s, path, "switch_time", 0.5);
        sw.t_end = number(s, path, "t_end", 2.0);
        sw.samples = count(integer(s, path, "samples", 200), join(path, "samples"));
        positive(sw.switch_time, join(path, "switch_time"));
        if (!(sw.t_end > sw.switch_time)) throw ValidationError("field " + join(path, "t_end") + ": must exceed switch_time");
        if (sw.samples < 10) throw ValidationError("field " + join(path, "samples") + ": must be >= 10");
        if (const json* b = find(s, "bin")) {
            if (!b->is_array()) throw ParseError("field " + join(path, "bin") + ": expected an array of atom indices");
            for (const json& x : *b) {
                if (!x.is_number_unsigned()) throw ParseError("field " + join(path, "bin") + ": expected atom indices");
                if (x.get<std::size_t>() >= atoms) throw ValidationError("field " + join(path, "bin") + ": atom index out of range");
                sw.bin.push_back(x.get<std::size_t>());
            }
        } else {
            for (std::size_t j = atoms / 2; j < atoms; ++j) sw.bin.push_back(j);
        }
        return sw;
    }
    if (kind == "timed") {
        allow_keys(s, path, {"kind", "target"});
        TimedStep t{target_of(text(s, path, "target", "plus"), join(path, "target"))};
        if (t.target == Target::minus && atoms % 2 != 0) throw ValidationError("field " + path + ": timed minus needs even N");
        return t;
    }
    if (kind == "singlet_pairs") {
        allow_keys(s, path, {"kind", "pairs"});
        if (atoms > static_cast<std::size_t>(kMaxFullSpaceAtoms)) {
            throw ValidationError("field " + path + ": singlet preparation needs the full space (N <= 8)");
        }
        const json* p = find(s, "pairs");
        if (p == nullptr || !p->is_array()) throw ParseError("field " + join(path, "pairs") + ": expected [[i, j], ...]");
        SingletStep st;
        std::set<std::size_t> used;
        for (const json& pair : *p) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
                throw ParseError("field " + join(path, "pairs") + ": expected [[i, j], ...]");
            }
            const auto i = pair[0].get<std::size_t>();
            const auto j = pair[1].get<std::size_t>();
            if (i == j || i >= atoms || j >= atoms || !used.insert(i).second || !used.insert(j).second) {
                throw ValidationError("field " + join(path, "pairs") + ": pairs must use distinct atoms inside the ensemble");
            }
            st.pairs.emplace_back(i, j);
        }
        return st;
    }
    if (kind == "conditional") {
        allow_keys(s, path, {"kind", "target", "epsilon"});
        ConditionalStep c{target_of(text(s, path, "target", "plus"), join(path, "target")), number(s, path, "epsilon", 0.1)};
        if (c.epsilon < 0.0) throw ValidationError("field " + join(path, "epsilon") + ": must be >= 0");
        if (c.target == Target::minus && atoms % 2 != 0) throw ValidationError("field " + path + ": minus target needs even N");
        return c;
    }
    if (kind == "network") {
        allow_keys(s, path, {"kind", "elements", "targets", "pulse_area"});
        NetworkStep n{parse_network(s, path, atoms), number(s, path, "pulse_area", kPi)};
        if (n.pulse_area < 0.0) throw ValidationError("field " + join(path, "pulse_area") + ": must be >= 0");
        return n;
    }
    throw ValidationError("field " + join(path, "kind") + ": unknown protocol '" + kind +
                          "' (switch, timed, singlet_pairs, conditional, network)");
}

void parse_output(const json& o, OutputSpec& out) {
    const std::string path = "output";
    require_object(o, path);
    allow_keys(o, path, {"prefix", "format", "trajectory", "t_end", "samples", "multiplets"});
    out.prefix = text(o, path, "prefix", out.prefix);
    const std::string fmt = text(o, path, "format", "csv");
    if (fmt == "csv") out.format = TableFormat::csv;
    else if (fmt == "json") out.format = TableFormat::json;
    else throw ValidationError("field output.format: must be csv or json");
    out.trajectory = boolean(o, path, "trajectory", false);
    out.t_end = number(o, path, "t_end", 1.0);
    positive(out.t_end, "output.t_end");
    out.samples = count(integer(o, path, "samples", 200), "output.samples");
    if (out.samples < 1) throw ValidationError("field output.samples: must be >= 1");
    out.multiplets = boolean(o, path, "multiplets", false);
}

AtomEnsemble build_ensemble(const ScenarioConfig& cfg) {
    return make_ensemble(cfg.geometry, cfg.ensemble_options);
}

// ---------------------------------------------------------------- states

struct Materialized {
    std::string label;
    std::string kind;
    bool promoted{false};
    std::optional<ExcitationState> single;
    std::optional<FullState> full;
};

Materialized materialize(const StateSpec& spec, const AtomEnsemble& ens) {
    const std::size_t n = ens.size();
    const bool fits = n <= static_cast<std::size_t>(kMaxFullSpaceAtoms);
    Materialized m;
    m.label = spec.label;
    m.kind = spec.kind;
    m.promoted = spec.promote;
    if (spec.kind == "plus") m.single = plus_state(ens);
    else if (spec.kind == "minus") m.single = minus_state(ens, halves(ens));
    else if (spec.kind == "three_bin") m.single = three_bin_state(ens, thirds(ens));
    else if (spec.kind == "basis") m.single = basis_state(n, spec.atom);
    else if (spec.kind == "explicit") m.single = ExcitationState{spec.amplitudes, spec.label};
    else if (spec.kind == "multiplet") {
        m.full = multiplet_state(static_cast<int>(n), spec.multiplet);
        if (spec.multiplet.two_m + static_cast<int>(n) == 2) m.single = single_excitation_part(*m.full);
    }
    if (m.single) m.single->label = spec.label;
    if (m.single && fits && !m.full) m.full = embed(*m.single);
    if (spec.promote) {
        m.full = promote(*m.full);
        m.single.reset();
    }
    return m;
}

void validate_states(const ScenarioConfig& cfg, const AtomEnsemble& ens) {
    const std::size_t n = ens.size();
    const bool fits = n <= static_cast<std::size_t>(kMaxFullSpaceAtoms);
    for (std::size_t i = 0; i < cfg.states.size(); ++i) {
        const StateSpec& s = cfg.states[i];
        const std::string path = "state.states[" + std::to_string(i) + "]";
        if (s.kind == "minus" && n % 2 != 0) throw ValidationError("field " + path + ": minus state needs even N");
        if (s.kind == "three_bin" && n % 3 != 0) throw ValidationError("field " + path + ": three_bin state needs N divisible by 3");
        if (s.kind == "basis" && s.atom >= n) throw ValidationError("field " + path + ".atom: outside the ensemble");
        if (s.kind == "explicit") {
            if (static_cast<std::size_t>(s.amplitudes.size()) != n) {
                throw ValidationError("field " + path + ".amplitudes: length must equal N");
            }
            if (std::abs(s.amplitudes.norm() - 1.0) > 1e-9) throw ValidationError("field " + path + ".amplitudes: must be unit norm");
        }
        if ((s.kind == "multiplet" || s.promote) && !fits) {
            throw ValidationError("field " + path + ": full-space states need N <= 8");
        }
        try {
            materialize(s, ens);
        } catch (const std::exception& e) {
            throw ValidationError("field " + path + ": " + e.what());
        }
    }
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

Cell opt(const std::optional<double>& v) {
    if (v) return *v;
    return std::monostate{};
}

json meta_json(const ScenarioConfig& cfg) {
    return {{"tool", "subrad"}, {"version", tool_version()}, {"config_hash", cfg.hash}, {"scenario", cfg.name}};
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render(const Table& t, const ScenarioConfig& cfg, TableFormat fmt) {
    if (fmt == TableFormat::json) {
        json rows = json::array();
        for (const auto& r : t.rows) {
            json o = json::object();
            for (std::size_t c = 0; c < t.columns.size(); ++c) {
                std::visit(
                    [&](const auto& v) {
                        using V = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<V, std::monostate>) o[t.columns[c]] = nullptr;
                        else o[t.columns[c]] = v;
                    },
                    r[c]);
            }
            rows.push_back(o);
        }
        return json{{"meta", meta_json(cfg)}, {"columns", t.columns}, {"rows", rows}}.dump(2) + "\n";
    }
    std::string out = "# subrad " + tool_version() + " config_hash=" + cfg.hash + " scenario=" + cfg.name + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
    out += "\n";
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out += ",";
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) out += format_double(v);
                    else if constexpr (std::is_same_v<V, long long>) out += std::to_string(v);
                    else if constexpr (std::is_same_v<V, std::string>) out += csv_text(v);
                },
                r[c]);
        }
        out += "\n";
    }
    return out;
}

std::string extension(TableFormat f) { return f == TableFormat::csv ? ".csv" : ".json"; }

// ---------------------------------------------------------------- engines

struct Engines {
    const AtomEnsemble& ens;
    const EngineSpec& spec;
    DecayKernel kernel;
    std::optional<ModeGrid> grid;

    double t_end() const { return spec.t_end / ens.gamma(); }

    std::vector<double> fit_grid() const { return uniform_grid(t_end(), spec.samples); }

    RateFit kernel_fit(const ExcitationState& s) const {
        const auto t = fit_grid();
        return extract_rate(evolve_amplitudes(s, kernel, t), s);
    }

    const ModeGrid& mode_grid() {
        if (!grid) grid = make_mode_grid(ens, spec.grid);
        return *grid;
    }

    WWTrajectory ww(const ExcitationState& s) {
        const ModeGrid& g = mode_grid();
        const double dt = spec.dt > 0.0 ? spec.dt : max_ww_step(ens);
        const auto steps = static_cast<std::size_t>(std::ceil(t_end() / dt));
        const std::size_t stride = std::max<std::size_t>(1, steps / spec.samples);
        return integrate_ww(ens, g, s, t_end(), dt, stride);
    }
};

double rel_dev(double value, double reference, double floor) {
    return std::abs(value - reference) / std::max(std::abs(reference), floor);
}

std::optional<double> dicke_prediction(const Materialized& m, const StateSpec& spec, const AtomEnsemble& ens) {
    if (!ens.is_dicke_limit() || m.promoted) return std::nullopt;
    const double n = static_cast<double>(ens.size());
    if (m.kind == "plus") return n * ens.gamma();
    if (m.kind == "minus" || m.kind == "three_bin") return 0.0;
    if (m.kind == "multiplet") return ladder_rate(spec.multiplet, ens.gamma());
    return std::nullopt;
}

struct ClosedForm {
    std::string name;
    double printed;
};

std::optional<ClosedForm> closed_form(const Materialized& m, const AtomEnsemble& ens) {
    if (m.promoted) return std::nullopt;
    if (m.kind == "plus") return ClosedForm{"large_sample_plus", rate_plus_closed_form(ens)};
    if (m.kind == "minus") return ClosedForm{"large_sample_minus", rate_minus_closed_form(ens)};
    if (m.kind == "three_bin") return ClosedForm{"large_sample_three_bin", rate_three_bin_closed_form(ens)};
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- public

std::string tool_version() { return SUBRAD_VERSION; }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

bool CompareReport::pass() const noexcept {
    return std::all_of(rows.begin(), rows.end(), [](const EngineRow& r) { return r.pass; });
}

ScenarioConfig parse_config(const std::string& source, std::optional<std::uint64_t> seed_override) {
    json root;
    try {
        root = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_of(source, e.byte)) + ": " + e.what());
    }
    require_object(root, "");
    allow_keys(root, "", {"name", "description", "geometry", "state", "engine", "protocol", "output"});
    if (seed_override) {
        if (const json* g = find(root, "geometry"); g != nullptr && g->is_object()) root["geometry"]["seed"] = *seed_override;
    }

    ScenarioConfig cfg;
    cfg.name = text(root, "", "name", "scenario");
    if (find(root, "description") != nullptr) text(root, "", "description");
    const json* g = find(root, "geometry");
    if (g == nullptr) throw ParseError("field geometry: missing");
    parse_geometry(*g, cfg);

    std::optional<AtomEnsemble> ens;
    try {
        ens.emplace(build_ensemble(cfg));
    } catch (const std::exception& e) {
        throw ValidationError(std::string("field geometry: ") + e.what());
    }
    const std::size_t n = ens->size();

    const json* st = find(root, "state");
    if (st == nullptr) throw ParseError("field state: missing");
    require_object(*st, "state");
    allow_keys(*st, "state", {"states"});
    const json* list = find(*st, "states");
    if (list == nullptr || !list->is_array() || list->empty()) {
        throw ParseError("field state.states: expected a non-empty array");
    }
    for (std::size_t i = 0; i < list->size(); ++i) {
        cfg.states.push_back(parse_state((*list)[i], "state.states[" + std::to_string(i) + "]"));
    }

    if (const json* e = find(root, "engine")) parse_engine(*e, cfg.engine);
    if (!cfg.engine.kernel && !cfg.engine.ww && !cfg.engine.oracle) {
        throw ValidationError("field engine.engines: select at least one engine");
    }
    if (cfg.engine.oracle) {
        if (n > static_cast<std::size_t>(kMaxFullSpaceAtoms)) {
            throw ValidationError("field engine.engines: dicke-oracle holds at most 8 atoms");
        }
        if (!ens->is_dicke_limit()) throw ValidationError("field engine.engines: dicke-oracle needs a Dicke-limit geometry");
    }
    if (cfg.engine.ww && n > 16) throw ValidationError("field engine.engines: ww engine holds at most 16 atoms");
    if (cfg.engine.ww && cfg.engine.dt > max_ww_step(*ens) * (1.0 + 1e-12)) {
        throw ValidationError("field engine.dt: must be <= 0.002/(N gamma)");
    }
    validate_states(cfg, *ens);

    if (const json* p = find(root, "protocol")) {
        if (!p->is_array()) throw ParseError("field protocol: expected an array of steps");
        for (std::size_t i = 0; i < p->size(); ++i) {
            cfg.protocol.push_back(parse_step((*p)[i], "protocol[" + std::to_string(i) + "]", n, cfg.engine));
        }
    }

    cfg.output.prefix = cfg.name;
    if (const json* o = find(root, "output")) parse_output(*o, cfg.output);
    if (cfg.output.prefix.empty() || cfg.output.prefix.find('/') != std::string::npos) {
        throw ValidationError("field output.prefix: must be a plain, non-empty file name prefix");
    }

    cfg.effective = root;
    cfg.hash = fnv1a_hex(root.dump());
    return cfg;
}

ScenarioConfig load_config(const std::string& source, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(source);
    if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), seed_override);
    }
    for (const BundledScenario& b : bundled_scenarios()) {
        if (source == b.name) return parse_config(b.text, seed_override);
    }
    throw ParseError("cannot read '" + source + "': no such file or bundled scenario");
}

Artifacts run_scenario(const ScenarioConfig& cfg, std::optional<TableFormat> format) {
    const TableFormat fmt = format.value_or(cfg.output.format);
    const AtomEnsemble ens = build_ensemble(cfg);
    const double gamma = ens.gamma();
    const double n = static_cast<double>(ens.size());
    Engines eng{ens, cfg.engine, build_kernel(ens), std::nullopt};

    Artifacts art;
    json summary;
    summary["meta"] = meta_json(cfg);
    summary["atoms"] = ens.size();
    summary["ensemble"] = {{"dicke_limit", ens.is_dicke_limit()},
                           {"radius", ens.radius()},
                           {"area", ens.area()},
                           {"lambda_sq_over_area", ens.lambda_sq_over_area()},
                           {"gamma", gamma}};

    std::vector<Materialized> states;
    for (const StateSpec& s : cfg.states) states.push_back(materialize(s, ens));

    Table rates{{"state", "engine", "rate", "closed_form", "closed_form_printed", "closed_form_population",
                 "relative_deviation", "dicke_prediction", "dicke_deviation"},
                {}};
    Table ww_table{{"state", "time", "atom_population", "field_population", "projection"}, {}};
    json rate_records = json::array();

    for (std::size_t i = 0; i < states.size(); ++i) {
        const Materialized& m = states[i];
        const StateSpec& spec = cfg.states[i];
        const double norm = m.single ? m.single->norm() : m.full->norm();
        if (std::abs(norm - 1.0) > 1e-12) art.violations.push_back(m.label + ": state norm " + format_double(norm));

        const auto cf = closed_form(m, ens);
        const auto dicke = dicke_prediction(m, spec, ens);
        std::map<std::string, double> by_engine;
        std::optional<double> ww_drift;

        if (cfg.engine.kernel && m.single) by_engine["kernel"] = rate_of(*m.single, eng.kernel);
        if (cfg.engine.oracle && m.full) by_engine["dicke-oracle"] = dicke_decay_oracle(*m.full, gamma);
        if (cfg.engine.ww && m.single) {
            const WWTrajectory traj = eng.ww(*m.single);
            const RateFit fit = extract_rate(traj, *m.single);
            by_engine["ww"] = fit.rate;
            const double drift_rate = traj.max_norm_drift / (gamma * eng.t_end());
            ww_drift = drift_rate;
            if (drift_rate > 1e-6) {
                art.violations.push_back(m.label + ": ww norm drift " + format_double(drift_rate) + " per unit gamma t");
            }
            for (const WWSample& s : traj.samples) {
                ww_table.rows.push_back({m.label, s.time, s.atom_population, s.field_population,
                                         std::norm(m.single->amplitudes.dot(s.beta))});
            }
            const double kfit = eng.kernel_fit(*m.single).rate;
            by_engine["kernel-fit"] = kfit;
            if (rel_dev(fit.rate, kfit, gamma) > cfg.engine.tolerance) {
                art.violations.push_back(m.label + ": ww rate " + format_double(fit.rate) + " vs kernel fit " +
                                         format_double(kfit) + " exceeds tolerance");
            }
        }
        if (by_engine.count("kernel") && by_engine.count("dicke-oracle") &&
            rel_dev(by_engine["kernel"], by_engine["dicke-oracle"], gamma) > 1e-8) {
            art.violations.push_back(m.label + ": kernel and dicke-oracle disagree");
        }

        json rec = {{"state", m.label}, {"rates", by_engine}};
        if (ww_drift) rec["ww_norm_drift_per_gamma_t"] = *ww_drift;
        for (const auto& [engine, rate] : by_engine) {
            std::vector<Cell> row{m.label, engine, rate};
            if (cf) {
                const double population = 2.0 * cf->printed;
                const double dev = rel_dev(rate, population, 0.0);
                row.insert(row.end(), {cf->name, cf->printed, population,
                                       population > 0.0 ? Cell{dev} : Cell{std::monostate{}}});
            } else {
                row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{}});
            }
            row.push_back(opt(dicke));
            row.push_back(dicke ? Cell{std::abs(rate - *dicke) / gamma} : Cell{std::monostate{}});
            rates.rows.push_back(std::move(row));
        }
        if (cf) {
            const double population = 2.0 * cf->printed;
            json c = {{"name", cf->name}, {"printed", cf->printed}, {"population_convention", population}};
            if (subradiant_closed_form_clamped(ens) && m.kind != "plus") c["clamped"] = true;
            json devs = json::object();
            for (const auto& [engine, rate] : by_engine) {
                devs[engine] = population > 0.0 ? json(rel_dev(rate, population, 0.0)) : json(nullptr);
            }
            c["relative_deviation"] = devs;
            rec["closed_form"] = c;
            if (cfg.engine.closed_form_tolerance && by_engine.count("kernel") && population > 0.0 &&
                rel_dev(by_engine["kernel"], population, 0.0) > *cfg.engine.closed_form_tolerance) {
                art.violations.push_back(m.label + ": kernel rate deviates from the closed form beyond tolerance");
            }
        }
        if (dicke) {
            json devs = json::object();
            for (const auto& [engine, rate] : by_engine) devs[engine] = std::abs(rate - *dicke) / gamma;
            rec["dicke_limit"] = {{"prediction", *dicke}, {"absolute_deviation_over_gamma", devs}};
        }
        rate_records.push_back(rec);
    }
    summary["rates"] = rate_records;
    if (eng.grid) {
        const ModeGrid& g = *eng.grid;
        summary["ww_grid"] = {{"n_angles", g.spec.n_angles},
                              {"n_radial", g.spec.n_radial},
                              {"cutoff_multiple", g.spec.cutoff_multiple},
                              {"cutoff", g.cutoff},
                              {"modes", g.mode_count()},
                              {"recurrence_time", g.recurrence_time()},
                              {"calibration",
                               {{"gamma_eff", g.calibration.gamma_eff},
                                {"relative_error", g.calibration.relative_error},
                                {"quadrature_gamma", g.calibration.quadrature_gamma}}}};
    }

    const std::string& prefix = cfg.output.prefix;
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back(prefix + "_rates" + extension(fmt), render(rates, cfg, fmt));
    if (cfg.engine.ww) files.emplace_back(prefix + "_ww" + extension(fmt), render(ww_table, cfg, fmt));

    if (cfg.output.trajectory) {
        Table traj{{"state", "time", "survival", "projection"}, {}};
        for (std::size_t j = 0; j < ens.size(); ++j) {
            traj.columns.push_back("re_b" + std::to_string(j));
            traj.columns.push_back("im_b" + std::to_string(j));
        }
        const auto grid = uniform_grid(cfg.output.t_end / gamma, cfg.output.samples);
        for (const Materialized& m : states) {
            if (!m.single) continue;
            const DecayTrajectory d = evolve_amplitudes(*m.single, eng.kernel, grid);
            for (std::size_t k = 0; k < d.times.size(); ++k) {
                std::vector<Cell> row{m.label, d.times[k], d.survival[k], std::norm(m.single->amplitudes.dot(d.amplitudes[k]))};
                for (Eigen::Index j = 0; j < d.amplitudes[k].size(); ++j) {
                    row.emplace_back(d.amplitudes[k](j).real());
                    row.emplace_back(d.amplitudes[k](j).imag());
                }
                traj.rows.push_back(std::move(row));
            }
        }
        files.emplace_back(prefix + "_trajectory" + extension(fmt), render(traj, cfg, fmt));
    }

    json protocol = json::array();
    for (std::size_t si = 0; si < cfg.protocol.size(); ++si) {
        const ProtocolStep& step = cfg.protocol[si];
        json rec;
        if (const auto* sw = std::get_if<SwitchStep>(&step)) {
            Table t{{"state", "time", "survival", "phase"}, {}};
            rec["kind"] = "switch";
            rec["switch_time"] = sw->switch_time / gamma;
            json per_state = json::array();
            for (const Materialized& m : states) {
                if (!m.single) continue;
                const double ts = sw->switch_time / gamma;
                const double te = sw->t_end / gamma;
                const auto pre_n = std::max<std::size_t>(
                    2, static_cast<std::size_t>(std::llround(static_cast<double>(sw->samples) * sw->switch_time / sw->t_end)));
                const auto post_n = std::max<std::size_t>(2, sw->samples - std::min(sw->samples, pre_n));
                const DecayTrajectory pre = evolve_amplitudes(*m.single, eng.kernel, uniform_grid(ts, pre_n));
                ExcitationState mid{pre.amplitudes.back(), m.label};
                const ExcitationState switched = switch_2pi(mid, sw->bin);
                const DecayTrajectory post = evolve_amplitudes(switched, eng.kernel, uniform_grid(te - ts, post_n));
                for (std::size_t k = 0; k < pre.times.size(); ++k) t.rows.push_back({m.label, pre.times[k], pre.survival[k], "pre"});
                for (std::size_t k = 0; k < post.times.size(); ++k) {
                    t.rows.push_back({m.label, ts + post.times[k], post.survival[k], "post"});
                }
                const RateFit before = fit_decay(pre.times, pre.survival);
                const RateFit after = fit_decay(post.times, post.survival);
                const double mid_norm2 = mid.amplitudes.squaredNorm();
                ExcitationState normalized = switched;
                normalized.amplitudes /= std::sqrt(mid_norm2);
                per_state.push_back({{"state", m.label},
                                     {"rate_before", before.rate},
                                     {"flat_before", before.flat},
                                     {"rate_after", after.rate},
                                     {"kernel_rate_after", rate_of(normalized, eng.kernel)},
                                     {"collective_rate_reference", n * gamma}});
            }
            rec["states"] = per_state;
            files.emplace_back(prefix + "_switch" + std::to_string(si) + extension(fmt), render(t, cfg, fmt));
        } else if (const auto* ts = std::get_if<TimedStep>(&step)) {
            const bool plus = ts->target == Target::plus;
            const Preparation p = plus ? prepare_timed_plus(ens) : prepare_timed_minus(ens);
            const ExcitationState ideal = plus ? plus_state(ens) : minus_state(ens, halves(ens));
            const double f = fidelity(ideal, p.state);
            rec = {{"kind", "timed"},
                   {"target", plus ? "plus" : "minus"},
                   {"fidelity", f},
                   {"success_probability", p.success_probability},
                   {"field_vacuum_probability", 1.0 - p.final.legs.squaredNorm() - std::norm(p.final.rail)},
                   {"rate", rate_of(p.state, eng.kernel)}};
            if (f < 1.0 - 1e-10 || std::abs(p.success_probability - 1.0) > 1e-10) {
                art.violations.push_back("timed preparation below fidelity or success requirement");
            }
        } else if (const auto* sp = std::get_if<SingletStep>(&step)) {
            FullState s = ground_state(static_cast<int>(ens.size()));
            FullState reference = s;
            double prob = 1.0;
            json pairs = json::array();
            for (const auto& [i, j] : sp->pairs) {
                const FullPreparation fp = prepare_singlet_pair(s, i, j);
                s = fp.state;
                prob *= fp.success_probability;
                reference = with_singlet(reference, static_cast<int>(i), static_cast<int>(j));
                pairs.push_back({i, j});
            }
            const CollectiveOps ops = collective_ops(static_cast<int>(ens.size()));
            const double f = fidelity(reference, s);
            rec = {{"kind", "singlet_pairs"},
                   {"pairs", pairs},
                   {"fidelity", f},
                   {"success_probability", prob},
                   {"dicke_rate", dicke_decay_oracle(s, gamma)},
                   {"r2", expectation(ops.r2, s)},
                   {"rz", expectation(ops.rz, s)}};
            if (f < 1.0 - 1e-10 || std::abs(prob - 1.0) > 1e-10) {
                art.violations.push_back("singlet preparation below fidelity or success requirement");
            }
        } else if (const auto* cs = std::get_if<ConditionalStep>(&step)) {
            const ConditionalOutcome o = conditional_prepare(ens, cs->target, cs->epsilon);
            rec = {{"kind", "conditional"},
                   {"target", cs->target == Target::plus ? "plus" : "minus"},
                   {"epsilon", cs->epsilon},
                   {"no_count_probability", o.no_count_probability},
                   {"count_probability", o.count_probability},
                   {"first_order_probability", o.first_order_probability},
                   {"fidelity", o.state ? json(o.fidelity) : json(nullptr)},
                   {"thin_medium_violated", o.thin_medium_violated}};
            if (o.state && o.fidelity < 1.0 - cs->epsilon * cs->epsilon) {
                art.violations.push_back("conditional preparation fidelity below 1 - eps^2");
            }
            if (std::abs(o.no_count_probability + o.count_probability - 1.0) > 1e-12) {
                art.violations.push_back("conditional branch probabilities do not sum to 1");
            }
        } else if (const auto* ns = std::get_if<NetworkStep>(&step)) {
            const Preparation p = run_network(ens, ns->network, ns->pulse_area);
            json amps = json::array();
            for (Eigen::Index j = 0; j < p.state.amplitudes.size(); ++j) {
                amps.push_back({p.state.amplitudes(j).real(), p.state.amplitudes(j).imag()});
            }
            rec = {{"kind", "network"},
                   {"success_probability", p.success_probability},
                   {"excitation_number", p.final.excitation()},
                   {"state", amps},
                   {"rate", rate_of(p.state, eng.kernel)},
                   {"plus_fidelity", fidelity(plus_state(ens), p.state)}};
            if (std::abs(p.final.excitation() - 1.0) > 1e-12) {
                art.violations.push_back("network propagation does not conserve excitation number");
            }
        }
        protocol.push_back(rec);
    }
    if (!protocol.empty()) summary["protocol"] = protocol;

    if (cfg.output.multiplets) {
        if (ens.size() > static_cast<std::size_t>(kMaxFullSpaceAtoms)) {
            throw CapacityError("multiplet table needs N <= 8");
        }
        json table = multiplet_table_json(static_cast<int>(ens.size()));
        table["meta"] = meta_json(cfg);
        files.emplace_back(prefix + "_multiplets.json", table.dump(2) + "\n");
    }

    summary["violations"] = art.violations;
    json names = json::array();
    for (const auto& f : files) names.push_back(f.first);
    names.push_back(prefix + "_summary.json");
    summary["files"] = names;
    files.emplace_back(prefix + "_summary.json", summary.dump(2) + "\n");
    art.summary = std::move(summary);
    art.files = std::move(files);
    return art;
}

CompareReport compare_engines(const ScenarioConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const AtomEnsemble ens = build_ensemble(cfg);
    const double gamma = ens.gamma();
    const std::size_t n = ens.size();
    Engines eng{ens, cfg.engine, build_kernel(ens), std::nullopt};

    CompareReport report;
    report.tolerance = cfg.engine.tolerance;
    for (const StateSpec& spec : cfg.states) {
        const Materialized m = materialize(spec, ens);
        EngineRow row;
        row.state = m.label;
        if (m.single) {
            row.kernel = rate_of(*m.single, eng.kernel);
            row.kernel_fit = eng.kernel_fit(*m.single).rate;
        } else {
            row.skips.push_back("kernel: state outside the single-excitation sector");
        }
        if (n > static_cast<std::size_t>(kMaxFullSpaceAtoms)) {
            row.skips.push_back("dicke-oracle: capacity exceeded (N > 8)");
        } else if (!ens.is_dicke_limit()) {
            row.skips.push_back("dicke-oracle: geometry is not in the Dicke limit");
        } else if (m.full) {
            row.oracle = dicke_decay_oracle(*m.full, gamma);
        }
        if (n > 16) {
            row.skips.push_back("ww: capacity exceeded (N > 16)");
        } else if (m.single) {
            row.ww_fit = extract_rate(eng.ww(*m.single), *m.single).rate;
        } else {
            row.skips.push_back("ww: state outside the single-excitation sector");
        }
        if (row.kernel && row.oracle) {
            row.kernel_oracle_deviation = rel_dev(*row.kernel, *row.oracle, gamma);
            if (*row.kernel_oracle_deviation > 1e-8) row.pass = false;
        }
        if (row.kernel_fit && row.ww_fit) {
            row.kernel_ww_deviation = rel_dev(*row.ww_fit, *row.kernel_fit, gamma);
            if (*row.kernel_ww_deviation > report.tolerance) row.pass = false;
        }
        report.rows.push_back(std::move(row));
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

Artifacts compare_artifacts(const ScenarioConfig& cfg, const CompareReport& report, std::optional<TableFormat> format) {
    const TableFormat fmt = format.value_or(cfg.output.format);
    Table t{{"state", "kernel", "kernel_fit", "ww_fit", "dicke_oracle", "kernel_oracle_deviation", "kernel_ww_deviation",
             "pass", "skips"},
            {}};
    json rows = json::array();
    Artifacts art;
    for (const EngineRow& r : report.rows) {
        std::string skips;
        for (const std::string& s : r.skips) skips += (skips.empty() ? "" : "; ") + s;
        t.rows.push_back({r.state, opt(r.kernel), opt(r.kernel_fit), opt(r.ww_fit), opt(r.oracle),
                          opt(r.kernel_oracle_deviation), opt(r.kernel_ww_deviation), r.pass ? "yes" : "no", skips});
        auto j = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        rows.push_back({{"state", r.state},
                        {"kernel", j(r.kernel)},
                        {"kernel_fit", j(r.kernel_fit)},
                        {"ww_fit", j(r.ww_fit)},
                        {"dicke_oracle", j(r.oracle)},
                        {"kernel_oracle_deviation", j(r.kernel_oracle_deviation)},
                        {"kernel_ww_deviation", j(r.kernel_ww_deviation)},
                        {"pass", r.pass},
                        {"skips", r.skips}});
        if (!r.pass) art.violations.push_back(r.state + ": engines disagree beyond tolerance");
    }
    const std::string& prefix = cfg.output.prefix;
    json summary = {{"meta", meta_json(cfg)},
                    {"tolerance", report.tolerance},
                    {"kernel_oracle_tolerance", 1e-8},
                    {"rows", rows},
                    {"pass", report.pass()},
                    {"violations", art.violations}};
    art.files.emplace_back(prefix + "_compare" + extension(fmt), render(t, cfg, fmt));
    art.files.emplace_back(prefix + "_compare_summary.json", summary.dump(2) + "\n");
    art.summary = std::move(summary);
    return art;
}

void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, contents] : artifacts.files) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
        out << contents;
    }
}

}  // namespace subrad::cli

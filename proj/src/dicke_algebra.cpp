// dicke_algebra.cpp

#include "subrad/dicke_algebra.hpp"

#include <algorithm>
#include <cmath>

#include "subrad/error.hpp"

namespace subrad {

namespace {

void check_atoms(int n) {
    if (n < 1) throw InvalidParameter("dicke: atom count must be >= 1");
    if (n > kMaxFullSpaceAtoms) throw CapacityError("dicke: full-space engine is limited to N <= 8");
}

Eigen::Index dim(int n) { return Eigen::Index{1} << n; }

struct Partial {
    int two_r;
    std::vector<int> path;
    std::vector<Eigen::VectorXd> ladder;  // over 2^k for k coupled atoms
};

// Couples atom k (bit k) onto a multiplet of the first k atoms.
std::vector<Partial> couple(const Partial& in, int k) {
    const int tj = in.two_r;
    const Eigen::Index new_dim = Eigen::Index{1} << (k + 1);
    const Eigen::Index up = Eigen::Index{1} << k;
    auto old = [&](int two_m) -> const Eigen::VectorXd* {
        if (std::abs(two_m) > tj) return nullptr;
        return &in.ladder[static_cast<std::size_t>((two_m + tj) / 2)];
    };
    auto place = [&](Eigen::VectorXd& out, const Eigen::VectorXd* v, double c, bool excited) {
        if (v == nullptr || c == 0.0) return;
        const Eigen::Index off = excited ? up : 0;
        out.segment(off, up) += c * (*v);
    };

    std::vector<Partial> result;
    for (int tJ : {tj + 1, tj - 1}) {
        if (tJ < 0) continue;
        Partial p;
        p.two_r = tJ;
        p.path = in.path;
        p.path.push_back(tJ);
        for (int tM = -tJ; tM <= tJ; tM += 2) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(new_dim);
            const double denom = 2.0 * (tj + 1);
            const double cp = std::sqrt((tj + tM + 1) / denom);
            const double cm = std::sqrt((tj - tM + 1) / denom);
            if (tJ == tj + 1) {
                place(v, old(tM - 1), cp, true);
                place(v, old(tM + 1), cm, false);
            } else {
                place(v, old(tM - 1), -cm, true);
                place(v, old(tM + 1), cp, false);
            }
            p.ladder.push_back(std::move(v));
        }
        result.push_back(std::move(p));
    }
    return result;
}

FullState make_state(const Eigen::VectorXcd& v, int n) {
    return FullState{v, n};
}

}  // namespace

std::string MultipletLabel::to_string() const {
    auto half = [](int twice) {
        if (twice % 2 == 0) return std::to_string(twice / 2);
        return std::to_string(twice) + "/2";
    };
    return "|" + half(two_r) + "," + half(two_m) + ">_" + std::to_string(p);
}

CollectiveOps collective_ops(int n) {
    check_atoms(n);
    const Eigen::Index d = dim(n);
    CollectiveOps ops;
    ops.atoms = n;
    ops.raise = Eigen::MatrixXd::Zero(d, d);
    ops.rz = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index s = 0; s < d; ++s) {
        int excited = 0;
        for (int j = 0; j < n; ++j) {
            const Eigen::Index bit = Eigen::Index{1} << j;
            if (s & bit) {
                ++excited;
            } else {
                ops.raise(s | bit, s) += 1.0;
            }
        }
        ops.rz(s, s) = excited - 0.5 * n;
    }
    ops.lower = ops.raise.transpose();
    ops.r2 = ops.raise * ops.lower + ops.rz * ops.rz - ops.rz;
    return ops;
}

FullState ground_state(int n) {
    check_atoms(n);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim(n));
    v(0) = 1.0;
    return make_state(v, n);
}

FullState embed(const ExcitationState& state) {
    const int n = static_cast<int>(state.size());
    check_atoms(n);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim(n));
    for (int j = 0; j < n; ++j) v(Eigen::Index{1} << j) = state.amplitudes(j);
    return make_state(v, n);
}

ExcitationState single_excitation_part(const FullState& state) {
    ExcitationState out;
    out.amplitudes.resize(state.atoms);
    double inside = 0.0;
    for (int j = 0; j < state.atoms; ++j) {
        out.amplitudes(j) = state.amplitudes(Eigen::Index{1} << j);
        inside += std::norm(out.amplitudes(j));
    }
    if (std::abs(state.amplitudes.squaredNorm() - inside) > 1e-12) {
        throw InvalidParameter("single_excitation_part: state has weight outside the one-excitation sector");
    }
    out.label = "embedded";
    return out;
}

FullState with_singlet(const FullState& rest, int i, int j) {
    const int n = rest.atoms;
    if (i == j) throw InvalidParameter("singlet: atoms must differ");
    if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidParameter("singlet: atom index out of range");
    const Eigen::Index bi = Eigen::Index{1} << i;
    const Eigen::Index bj = Eigen::Index{1} << j;
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim(n));
    for (Eigen::Index idx = 0; idx < dim(n); ++idx) {
        const cplx amp = rest.amplitudes(idx);
        if (amp == cplx{0.0, 0.0}) continue;
        if (idx & (bi | bj)) throw InvalidParameter("with_singlet: target atoms must be in the ground level");
        v(idx | bi) += s * amp;
        v(idx | bj) -= s * amp;
    }
    return make_state(v, n);
}

FullState singlet(int i, int j, int n) {
    return with_singlet(ground_state(n), i, j);
}

cplx inner_product(const FullState& a, const FullState& b) {
    if (a.atoms != b.atoms) throw InvalidParameter("inner_product: atom count mismatch");
    return a.amplitudes.dot(b.amplitudes);
}

double fidelity(const FullState& a, const FullState& b) {
    return std::norm(inner_product(a, b)) / (a.amplitudes.squaredNorm() * b.amplitudes.squaredNorm());
}

const FullState& Multiplet::state(int two_m) const {
    if (std::abs(two_m) > two_r || (two_m + two_r) % 2 != 0) throw InvalidParameter("Multiplet: m out of range");
    return ladder[static_cast<std::size_t>((two_m + two_r) / 2)];
}

std::vector<Multiplet> multiplet_basis(int n) {
    check_atoms(n);
    std::vector<Partial> stage;
    Partial first;
    first.two_r = 1;
    first.path = {1};
    first.ladder = {Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Unit(2, 1)};
    stage.push_back(first);
    for (int k = 1; k < n; ++k) {
        std::vector<Partial> next;
        for (const Partial& p : stage) {
            for (Partial& q : couple(p, k)) next.push_back(std::move(q));
        }
        stage = std::move(next);
    }
    std::sort(stage.begin(), stage.end(), [](const Partial& a, const Partial& b) {
        if (a.two_r != b.two_r) return a.two_r > b.two_r;
        return a.path < b.path;
    });

    std::vector<Multiplet> out;
    int last_r = -1;
    int p = 0;
    for (const Partial& s : stage) {
        p = (s.two_r == last_r) ? p + 1 : 1;
        last_r = s.two_r;
        Multiplet m;
        m.two_r = s.two_r;
        m.p = p;
        m.path = s.path;
        for (const Eigen::VectorXd& v : s.ladder) m.ladder.push_back(make_state(v.cast<cplx>(), n));
        out.push_back(std::move(m));
    }
    return out;
}

FullState multiplet_state(int n, const MultipletLabel& label) {
    for (const Multiplet& m : multiplet_basis(n)) {
        if (m.two_r == label.two_r && m.p == label.p) return m.state(label.two_m);
    }
    throw InvalidParameter("multiplet_state: no multiplet " + label.to_string() + " for N = " + std::to_string(n));
}

std::vector<std::pair<MultipletLabel, FullState>> table1_states() {
    constexpr int n = 4;
    auto sum = [](std::initializer_list<FullState> parts, double scale) {
        FullState out = *parts.begin();
        out.amplitudes.setZero();
        for (const FullState& s : parts) out.amplitudes += s.amplitudes;
        out.amplitudes *= scale;
        return out;
    };
    // Atom labels 1..4 map to indices 0..3.
    const FullState s12 = singlet(0, 1, n);
    const FullState s13 = singlet(0, 2, n);
    const FullState s23 = singlet(1, 2, n);
    const FullState s14 = singlet(0, 3, n);
    const FullState s24 = singlet(1, 3, n);
    const FullState s34 = singlet(2, 3, n);

    std::vector<std::pair<MultipletLabel, FullState>> rows;
    rows.emplace_back(MultipletLabel{2, -2, 1}, s12);
    rows.emplace_back(MultipletLabel{2, -2, 2}, sum({s13, s23}, 1.0 / std::sqrt(3.0)));
    rows.emplace_back(MultipletLabel{2, -2, 3}, sum({s14, s24, s34}, 1.0 / std::sqrt(6.0)));
    rows.emplace_back(MultipletLabel{0, 0, 1}, with_singlet(s12, 2, 3));
    rows.emplace_back(MultipletLabel{0, 0, 2},
                      sum({with_singlet(s13, 1, 3), with_singlet(s23, 0, 3)}, 1.0 / std::sqrt(3.0)));
    return rows;
}

double ladder_rate(const MultipletLabel& label, double gamma) {
    if (label.two_r < 0 || std::abs(label.two_m) > label.two_r || (label.two_r + label.two_m) % 2 != 0) {
        throw InvalidParameter("ladder_rate: invalid label " + label.to_string());
    }
    const double r = label.R();
    const double m = label.m();
    return (r + m) * (r - m + 1.0) * gamma;
}

FullState promote(const FullState& state) {
    const CollectiveOps ops = collective_ops(state.atoms);
    Eigen::VectorXcd v = ops.raise.cast<cplx>() * state.amplitudes;
    const double nv = v.norm();
    if (nv < 1e-12) throw DegenerateInput("promote: state is annihilated by R+");
    return make_state(v / nv, state.atoms);
}

double dicke_decay_oracle(const FullState& state, double gamma) {
    const CollectiveOps ops = collective_ops(state.atoms);
    return gamma * (ops.lower.cast<cplx>() * state.amplitudes).squaredNorm();
}

double expectation(const Eigen::MatrixXd& op, const FullState& state) {
    return state.amplitudes.dot(op.cast<cplx>() * state.amplitudes).real();
}

nlohmann::json multiplet_table_json(int n) {
    auto basis_label = [n](Eigen::Index idx) {
        std::string s;
        for (int j = 0; j < n; ++j) s += (idx & (Eigen::Index{1} << j)) ? 'a' : 'b';
        return s;
    };
    nlohmann::json table = nlohmann::json::array();
    for (const Multiplet& m : multiplet_basis(n)) {
        nlohmann::json states = nlohmann::json::array();
        for (int tm = -m.two_r; tm <= m.two_r; tm += 2) {
            nlohmann::json expansion = nlohmann::json::array();
            const FullState& s = m.state(tm);
            for (Eigen::Index idx = 0; idx < s.amplitudes.size(); ++idx) {
                const cplx c = s.amplitudes(idx);
                if (std::abs(c) < 1e-14) continue;
                expansion.push_back({{"basis", basis_label(idx)}, {"re", c.real()}, {"im", c.imag()}});
            }
            states.push_back({{"m", 0.5 * tm}, {"expansion", expansion}});
        }
        std::vector<double> path;
        for (int t : m.path) path.push_back(0.5 * t);
        table.push_back({{"R", 0.5 * m.two_r}, {"p", m.p}, {"path", path}, {"states", states}});
    }
    return {{"atoms", n}, {"multiplets", table}};
}

}  // namespace subrad

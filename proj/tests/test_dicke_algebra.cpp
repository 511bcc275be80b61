#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "subrad/collective_states.hpp"
#include "subrad/dicke_algebra.hpp"
#include "subrad/error.hpp"

using namespace subrad;

namespace {

using Vec = Eigen::VectorXcd;

// Hand-built operators on the 2^n product basis, bit j set ↔ atom j excited.
Vec raise(const Vec& v, int n) {
    Vec out = Vec::Zero(v.size());
    for (Eigen::Index idx = 0; idx < v.size(); ++idx) {
        for (int j = 0; j < n; ++j) {
            if (!(idx & (Eigen::Index{1} << j))) out(idx | (Eigen::Index{1} << j)) += v(idx);
        }
    }
    return out;
}

Vec lower(const Vec& v, int n) {
    Vec out = Vec::Zero(v.size());
    for (Eigen::Index idx = 0; idx < v.size(); ++idx) {
        for (int j = 0; j < n; ++j) {
            if (idx & (Eigen::Index{1} << j)) out(idx & ~(Eigen::Index{1} << j)) += v(idx);
        }
    }
    return out;
}

double m_value(Eigen::Index idx, int n) { return __builtin_popcountll(static_cast<unsigned long long>(idx)) - 0.5 * n; }

Vec r2(const Vec& v, int n) {
    Vec out = raise(lower(v, n), n);
    for (Eigen::Index idx = 0; idx < v.size(); ++idx) {
        const double m = m_value(idx, n);
        out(idx) += (m * m - m) * v(idx);
    }
    return out;
}

// (|a_i b_j⟩ − |b_i a_j⟩)/√2 ⊗ `rest`, written out on the bits directly.
Vec hand_singlet(const Vec& rest, int i, int j) {
    Vec out = Vec::Zero(rest.size());
    for (Eigen::Index idx = 0; idx < rest.size(); ++idx) {
        if (rest(idx) == cplx{}) continue;
        out(idx | (Eigen::Index{1} << i)) += rest(idx) / std::sqrt(2.0);
        out(idx | (Eigen::Index{1} << j)) -= rest(idx) / std::sqrt(2.0);
    }
    return out;
}

Vec vacuum(int n) {
    Vec v = Vec::Zero(Eigen::Index{1} << n);
    v(0) = 1.0;
    return v;
}

double overlap(const Vec& a, const Vec& b) { return std::norm(a.dot(b)); }

}  // namespace

TEST_CASE("collective operators satisfy the angular momentum algebra") {
    for (int n : {1, 2, 3, 5}) {
        const CollectiveOps ops = collective_ops(n);
        const Eigen::MatrixXd comm = ops.raise * ops.lower - ops.lower * ops.raise;
        CHECK((comm - 2.0 * ops.rz).norm() < 1e-12);
        CHECK((ops.rz * ops.raise - ops.raise * ops.rz - ops.raise).norm() < 1e-12);
        CHECK((ops.rz * ops.lower - ops.lower * ops.rz + ops.lower).norm() < 1e-12);
        CHECK((ops.r2 * ops.raise - ops.raise * ops.r2).norm() < 1e-12);
        CHECK((ops.raise.transpose() - ops.lower).norm() == 0.0);

        Vec probe = Vec::Zero(Eigen::Index{1} << n);
        for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = cplx(std::sin(1.0 + i), std::cos(0.3 * i));
        CHECK((ops.raise.cast<cplx>() * probe - raise(probe, n)).norm() < 1e-12);
        CHECK((ops.r2.cast<cplx>() * probe - r2(probe, n)).norm() < 1e-12);
    }
    CHECK_THROWS_AS(collective_ops(9), CapacityError);
    CHECK_THROWS_AS(collective_ops(0), InvalidParameter);
}

TEST_CASE("one and two atoms") {
    const CollectiveOps one = collective_ops(1);
    CHECK(expectation(one.rz, ground_state(1)) == doctest::Approx(-0.5));
    CHECK(dicke_decay_oracle(embed(basis_state(1, 0))) == doctest::Approx(1.0));

    const FullState s = singlet(0, 1, 2);
    CHECK((s.amplitudes - hand_singlet(vacuum(2), 0, 1)).norm() < 1e-15);
    CHECK(std::abs(expectation(collective_ops(2).r2, s)) < 1e-14);
    CHECK(dicke_decay_oracle(s) < 1e-14);
    const FullState t = multiplet_state(2, MultipletLabel{2, 0, 1});
    CHECK(expectation(collective_ops(2).r2, t) == doctest::Approx(2.0));
    CHECK(dicke_decay_oracle(t, 3.0) == doctest::Approx(6.0));
}

TEST_CASE("overlapping singlets") {
    const FullState s13 = singlet(0, 2, 3);
    const FullState s23 = singlet(1, 2, 3);
    CHECK(inner_product(s13, s23).real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(inner_product(s13, s23).imag()) < 1e-15);
}

TEST_CASE("four-atom singlet-product table") {
    const int n = 4;
    const Vec v = vacuum(n);
    std::map<int, Vec> printed;  // keyed by 10·R + p
    printed[11] = hand_singlet(v, 0, 1);
    printed[12] = (hand_singlet(v, 0, 2) + hand_singlet(v, 1, 2)) / std::sqrt(3.0);
    printed[13] = (hand_singlet(v, 0, 3) + hand_singlet(v, 1, 3) + hand_singlet(v, 2, 3)) / std::sqrt(6.0);
    printed[1] = hand_singlet(hand_singlet(v, 0, 1), 2, 3);
    printed[2] = (hand_singlet(hand_singlet(v, 0, 2), 1, 3) + hand_singlet(hand_singlet(v, 1, 2), 0, 3)) / std::sqrt(3.0);

    const auto rows = table1_states();
    REQUIRE(rows.size() == 5);
    for (const auto& [label, state] : rows) {
        const int key = 10 * (label.two_r / 2) + label.p;
        INFO(label.to_string());
        REQUIRE(printed.count(key) == 1);
        const Vec& hand = printed[key];
        CHECK((state.amplitudes - hand).norm() < 1e-14);
        CHECK(hand.norm() == doctest::Approx(1.0).epsilon(1e-14));
        const double r = label.R();
        CHECK((r2(hand, n) - r * (r + 1.0) * hand).norm() < 1e-13);
        for (Eigen::Index idx = 0; idx < hand.size(); ++idx) {
            if (std::abs(hand(idx)) > 0.0) CHECK(m_value(idx, n) == label.m());
        }
        // The coupling-path basis carries the same p subscripts.
        CHECK(overlap(multiplet_state(n, label).amplitudes, hand) == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (const auto& [ka, a] : printed) {
        for (const auto& [kb, b] : printed) {
            if (ka != kb) CHECK(std::abs(a.dot(b)) < 1e-14);
        }
    }
}

TEST_CASE("multiplet bases are complete and orthonormal") {
    for (int n : {2, 3, 4}) {
        const auto basis = multiplet_basis(n);
        std::vector<Vec> all;
        for (const Multiplet& mp : basis) {
            CHECK(static_cast<int>(mp.ladder.size()) == mp.two_r + 1);
            CHECK(static_cast<int>(mp.path.size()) == n);
            for (const FullState& s : mp.ladder) all.push_back(s.amplitudes);
        }
        CHECK(all.size() == (std::size_t{1} << n));
        Eigen::MatrixXcd gram(all.size(), all.size());
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = 0; j < all.size(); ++j) gram(i, j) = all[i].dot(all[j]);
        CHECK((gram - Eigen::MatrixXcd::Identity(all.size(), all.size())).norm() < 1e-12);
    }
    // 16 = 5 + 3·3 + 2·1 for four atoms.
    std::map<int, int> count;
    for (const Multiplet& mp : multiplet_basis(4)) ++count[mp.two_r];
    CHECK(count == std::map<int, int>{{0, 2}, {2, 3}, {4, 1}});
}

TEST_CASE("ladder decay rates") {
    CHECK(ladder_rate(MultipletLabel{4, 0, 1}) == 6.0);
    CHECK(ladder_rate(MultipletLabel{4, -4, 1}) == 0.0);
    CHECK(ladder_rate(MultipletLabel{2, 2, 1}, 2.0) == 4.0);
    CHECK_THROWS_AS(ladder_rate(MultipletLabel{2, 4, 1}), InvalidParameter);
    CHECK_THROWS_AS(ladder_rate(MultipletLabel{2, 1, 1}), InvalidParameter);
    for (const Multiplet& mp : multiplet_basis(5)) {
        for (int k = 0; k <= mp.two_r; ++k) {
            const MultipletLabel label{mp.two_r, -mp.two_r + 2 * k, mp.p};
            const FullState& s = mp.state(label.two_m);
            CHECK(dicke_decay_oracle(s) == doctest::Approx(ladder_rate(label)).epsilon(1e-12));
            CHECK(lower(s.amplitudes, 5).squaredNorm() == doctest::Approx(ladder_rate(label)).epsilon(1e-12));
        }
    }
}

TEST_CASE("oracle equals the Dicke-limit kernel rate in the one-excitation sector") {
    for (int n : {2, 4, 6}) {
        const AtomEnsemble e = make_ensemble(PointCluster{n, 0.0, 0});
        Eigen::VectorXcd amps(n);
        for (int j = 0; j < n; ++j) amps(j) = cplx(std::cos(0.7 * j + 0.1), std::sin(1.3 * j));
        const ExcitationState random{amps.normalized(), "random"};
        for (const ExcitationState& s : {plus_state(e), minus_state(e, halves(e)), random}) {
            // Γ_jl = γ for co-located atoms, so Γ(ψ) = γ|Σβ|².
            const double kernel = std::norm(s.amplitudes.sum());
            CHECK(dicke_decay_oracle(embed(s)) == doctest::Approx(kernel).epsilon(1e-12));
            CHECK((single_excitation_part(embed(s)).amplitudes - s.amplitudes).norm() < 1e-15);
        }
    }
    CHECK_THROWS_AS(single_excitation_part(ground_state(3)), InvalidParameter);
}

TEST_CASE("promoting the minus state gives the paired-singlet expansion") {
    for (int n : {4, 6, 8}) {
        const AtomEnsemble e = make_ensemble(PointCluster{n, 0.0, 0});
        const FullState promoted = promote(embed(minus_state(e, halves(e))));
        // (N/2)^{-1/2} Σ_j |s_{j,j+N/2}⟩ ⊗ |+_{j,j+N/2}⟩, with |+_{jj'}⟩ the
        // symmetric single excitation of the remaining N − 2 atoms.
        Vec expansion = Vec::Zero(Eigen::Index{1} << n);
        for (int j = 0; j < n / 2; ++j) {
            const int jp = j + n / 2;
            Vec rest = Vec::Zero(expansion.size());
            for (int k = 0; k < n; ++k) {
                if (k != j && k != jp) rest(Eigen::Index{1} << k) = 1.0 / std::sqrt(n - 2.0);
            }
            expansion += hand_singlet(rest, j, jp);
        }
        expansion /= std::sqrt(n / 2.0);
        INFO("N=" << n << " expansion norm " << expansion.norm());
        if (n == 4) CHECK(expansion.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(overlap(promoted.amplitudes, expansion.normalized()) >= 1.0 - 1e-12);
        CHECK(promoted.norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(promote(multiplet_state(4, MultipletLabel{0, 0, 1})), DegenerateInput);
    CHECK_THROWS_AS(promote(singlet(0, 1, 2)), DegenerateInput);
}

TEST_CASE("with_singlet and JSON export") {
    const FullState s12 = singlet(0, 1, 4);
    CHECK_THROWS_AS(with_singlet(s12, 0, 2), InvalidParameter);
    CHECK_THROWS_AS(singlet(1, 1, 4), InvalidParameter);
    CHECK_THROWS_AS(multiplet_state(4, MultipletLabel{6, 0, 1}), InvalidParameter);

    const nlohmann::json j = multiplet_table_json(2);
    CHECK(j["atoms"] == 2);
    CHECK(j["multiplets"].size() == 2);
    bool found_singlet = false;
    for (const auto& mp : j["multiplets"]) {
        if (mp["R"].get<double>() != 0.0) continue;
        found_singlet = true;
        const auto& exp = mp["states"][0]["expansion"];
        REQUIRE(exp.size() == 2);
        std::map<std::string, double> amp;
        for (const auto& term : exp) amp[term["basis"]] = term["re"];
        CHECK(amp["ab"] == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(amp["ba"] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    }
    CHECK(found_singlet);
}

// dicke_algebra.hpp: Exact 2^N Dicke machinery for small ensembles (N ≤ 8)
//
// Product basis: bit j of the basis index is 1 when atom j is in the upper
// level |a⟩ and 0 for |b⟩.  Collective operators are R± = Σ_j σ_j±,
// R_z = Σ_j σ_j^z/2 (eigenvalue m = (N_a − N_b)/2) and R² = R⁺R⁻ + R_z² − R_z.
//
// Multiplets are built by coupling atoms one at a time in index order with
// Condon–Shortley Clebsch–Gordan coefficients.  Each multiplet is identified
// by its coupling path (intermediate cooperation numbers); the degeneracy
// index p counts multiplets of equal R in lexicographic path order, starting
// at 1.  For N = 4 this reproduces the subscripts of the singlet-product
// table: p = 1 couples atoms 1,2 to a singlet first.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subrad/collective_states.hpp"

namespace subrad {

inline constexpr int kMaxFullSpaceAtoms = 8;

struct FullState {
    Eigen::VectorXcd amplitudes;
    int atoms{0};

    double norm() const { return amplitudes.norm(); }
};

// Half-integer quantum numbers stored doubled so they stay exact.
struct MultipletLabel {
    int two_r{0};
    int two_m{0};
    int p{1};

    double R() const noexcept { return 0.5 * two_r; }
    double m() const noexcept { return 0.5 * two_m; }
    std::string to_string() const;
    bool operator==(const MultipletLabel&) const = default;
};

struct CollectiveOps {
    int atoms{0};
    Eigen::MatrixXd raise;  // R⁺
    Eigen::MatrixXd lower;  // R⁻
    Eigen::MatrixXd rz;     // R_z
    Eigen::MatrixXd r2;     // R²
};

// Throws CapacityError for N > 8 and InvalidParameter for N < 1.
CollectiveOps collective_ops(int n);

FullState ground_state(int n);
// Embeds a single-excitation amplitude vector: |j⟩ ↦ basis index 2^j.
FullState embed(const ExcitationState& state);
// Inverse of embed; throws InvalidParameter if the state has weight outside
// the single-excitation sector above 1e−12.
ExcitationState single_excitation_part(const FullState& state);

// |s_ij⟩ = (|a_i b_j⟩ − |b_i a_j⟩)/√2 with every other atom in |b⟩.
FullState singlet(int i, int j, int n);
// |s_ij⟩ ⊗ (rest): replaces the ground pair (i, j) of `rest` by the singlet.
// Atoms i and j must be in |b⟩ in every component of `rest`.
FullState with_singlet(const FullState& rest, int i, int j);

cplx inner_product(const FullState& a, const FullState& b);
double fidelity(const FullState& a, const FullState& b);

struct Multiplet {
    int two_r{0};
    int p{1};
    std::vector<int> path;           // doubled intermediate R after atoms 1..N
    std::vector<FullState> ladder;   // index k ↔ m = −R + k
    const FullState& state(int two_m) const;
};

std::vector<Multiplet> multiplet_basis(int n);
FullState multiplet_state(int n, const MultipletLabel& label);

// The five singlet-product states of the four-atom table, built from their
// printed singlet expansions: |1,−1⟩₁..₃, |0,0⟩₁, |0,0⟩₂.
std::vector<std::pair<MultipletLabel, FullState>> table1_states();

// (R + m)(R − m + 1)·γ
double ladder_rate(const MultipletLabel& label, double gamma = 1.0);

// Normalized R⁺ψ.  Throws DegenerateInput if ‖R⁺ψ‖ < 1e−12.
FullState promote(const FullState& state);

// γ‖R⁻ψ‖²: total emission rate at t = 0 in the Dicke limit.
double dicke_decay_oracle(const FullState& state, double gamma = 1.0);

double expectation(const Eigen::MatrixXd& op, const FullState& state);

// { "atoms", "multiplets": [{ "R", "p", "path", "states": [{ "m", "expansion":
//   [{ "basis": "abbb", "re", "im" }, ...] }] }] }; basis strings list atom 1 first.
nlohmann::json multiplet_table_json(int n);

}  // namespace subrad

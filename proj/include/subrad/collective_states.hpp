// collective_states.hpp: Single-excitation collective states and structure factors
//
// A state is an amplitude vector β over the basis |j⟩ = |b_1 … a_j … b_N⟩
// (atom j excited, all others in the ground level).

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <string>

#include <json.hpp>

#include "subrad/ensemble.hpp"

namespace subrad {

using cplx = std::complex<double>;

struct ExcitationState {
    Eigen::VectorXcd amplitudes;
    std::string label;

    std::size_t size() const noexcept { return static_cast<std::size_t>(amplitudes.size()); }
    double norm() const { return amplitudes.norm(); }
};

// β_j = e^{i k0·r_j}/√N.  In the Dicke limit this is the symmetric state.
ExcitationState plus_state(const AtomEnsemble& ensemble);

// β_j = w_bin(j) e^{i k0·r_j} / √(Σ_b w_b²|bin_b|) for a two-bin partition.
ExcitationState minus_state(const AtomEnsemble& ensemble, const BinPartition& partition);

// Same construction for the three-bin (1, −2, 1) partition.
ExcitationState three_bin_state(const AtomEnsemble& ensemble, const BinPartition& partition);

// Weighted timed state for any partition; the arity-checked constructors
// above forward here.
ExcitationState binned_state(const AtomEnsemble& ensemble, const BinPartition& partition, std::string label);

// Atom j excited with amplitude 1.
ExcitationState basis_state(std::size_t n, std::size_t j);

// S(k) = Σ_j β_j e^{−i k·r_j}
cplx structure_factor(const ExcitationState& state, const AtomEnsemble& ensemble, const Vec3& k);

// β_j → e^{iφ} β_j for j in indices.
ExcitationState apply_bin_phase(const ExcitationState& state, std::span<const std::size_t> indices, double phase);

cplx inner_product(const ExcitationState& a, const ExcitationState& b);
// |⟨a|b⟩|² for unit vectors; global phases drop out.
double fidelity(const ExcitationState& a, const ExcitationState& b);

// {"label": ..., "amplitudes": [[re, im], ...]}
nlohmann::json to_json(const ExcitationState& state);
ExcitationState excitation_state_from_json(const nlohmann::json& j);

}  // namespace subrad

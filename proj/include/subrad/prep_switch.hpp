// prep_switch.hpp: Optical preparation of collective states and 2π switching
//
// Beam-splitter convention: a splitter of amplitude reflectance r maps
// (rail, side) → (t·rail + i r·side, i r·rail + t·side), t = √(1 − r²).
// The reflected amplitude leaves on a new output leg; the transmitted part
// continues along the rail to the next element.  A mirror is a splitter with
// r = 1.  Every leg therefore carries the phase i, and the single-photon π
// pulse contributes −i, so the absorbed amplitudes come out real and positive
// before any propagation phase is added.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "subrad/collective_states.hpp"
#include "subrad/dicke_algebra.hpp"
#include "subrad/ensemble.hpp"

namespace subrad {

struct BeamSplitter {
    double reflectance{0.0};  // amplitude r ∈ [0, 1]
};
struct PhaseShifter {
    double phase{0.0};
};
struct Mirror {};

using OpticalElement = std::variant<BeamSplitter, PhaseShifter, Mirror>;

struct OpticalNetwork {
    std::vector<OpticalElement> elements;
    std::map<std::size_t, std::size_t> targets;  // output leg → atom index

    // Beam splitters and mirrors each open one output leg, in element order.
    std::size_t leg_count() const noexcept;
    // Throws InvalidParameter for r ∉ [0, 1], unknown legs or a non-injective
    // leg → atom map.
    void validate() const;
};

// Photon in one output leg (atoms in the ground level), photon left on the
// rail past the last element, or one atom excited with the field in vacuum.
struct PhotonAtomState {
    Eigen::VectorXcd legs;
    cplx rail{0.0, 0.0};
    Eigen::VectorXcd atoms;

    // Total excitation number; equals the norm² in this sector.
    double excitation() const { return legs.squaredNorm() + std::norm(rail) + atoms.squaredNorm(); }
};

// r_j = 1/√(N − j + 1) for j = 1..N−1 followed by a mirror; leg j → atom j.
OpticalNetwork equal_split_network(std::size_t n);

// One photon entering the rail; atoms all in the ground level.
PhotonAtomState propagate(const OpticalNetwork& network, std::size_t atoms);

// Unitary from input ports (rail, then the side port of each splitter/mirror)
// to output ports (legs in order, then the rail exit).
Eigen::MatrixXcd scattering_matrix(const OpticalNetwork& network);

// Two-level atom ⊗ single mode, basis {|b,0⟩, |b,1⟩, |a,0⟩, |a,1⟩}.
using JCState = Eigen::Vector4cd;

JCState jc_basis(bool excited, int photons);
// Resonant evolution: U|b,1⟩ = cos(gt/2)|b,1⟩ − i sin(gt/2)|a,0⟩ and its
// partner on |a,0⟩; |b,0⟩ and |a,1⟩ are left alone.  Requires g > 0, t ≥ 0.
JCState jc_pulse(const JCState& state, double g, double t);
JCState jc_pulse(bool excited, int photons, double g, double t);

// Runs each targeted leg into its atom through a pulse of area g·t
// (π by default).  Untargeted legs keep their photon.
PhotonAtomState absorb(const PhotonAtomState& state, const OpticalNetwork& network, double pulse_area);

struct Preparation {
    ExcitationState state;         // normalized atomic part
    double success_probability{0.0};
    PhotonAtomState final;         // unnormalized joint state after absorption
};

// Network → propagation phase e^{i k0·r_j} on the leg feeding atom j → π
// pulses.  Throws InvalidParameter when a target names an atom outside the
// ensemble or when no amplitude reaches the atoms.
Preparation run_network(const AtomEnsemble& ensemble, const OpticalNetwork& network, double pulse_area);

Preparation prepare_timed_plus(const AtomEnsemble& ensemble);
// π phase shifter between splitters N/2 and N/2 + 1.  Throws on odd N.
Preparation prepare_timed_minus(const AtomEnsemble& ensemble);

struct FullPreparation {
    FullState state;
    double success_probability{0.0};
};

// 50/50 splitter, π shifter, mirror feeding atoms i and j.  The overload
// adds the pair to an existing state; both atoms must be in |b⟩ there.
FullPreparation prepare_singlet_pair(std::size_t i, std::size_t j, std::size_t atoms);
FullPreparation prepare_singlet_pair(const FullState& existing, std::size_t i, std::size_t j);

enum class Target { plus, minus };

struct ConditionalOutcome {
    std::optional<ExcitationState> state;  // no-count branch, absent for ε = 0
    double no_count_probability{0.0};
    double count_probability{0.0};
    double first_order_probability{0.0};   // ε²
    double fidelity{0.0};                  // with the target; 0 when no state
    bool thin_medium_violated{false};      // ε ≥ 0.3
};

// Weakly driven ensemble: the photon crosses the atoms in index order and
// each atom couples with mixing angle θ = ε/√N, imprinting e^{i k0·r_j}
// (plus π on the second half for the minus target).  No detector count
// heralds an absorbed photon.
ConditionalOutcome conditional_prepare(const AtomEnsemble& ensemble, Target target, double epsilon);

// 2π cycling a → a′ → a of the atoms in `bin`: a factor −1 on their
// amplitudes.
ExcitationState switch_2pi(const ExcitationState& state, std::span<const std::size_t> bin);

}  // namespace subrad

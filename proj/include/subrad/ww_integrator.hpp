// ww_integrator.hpp: Mode-resolved Weisskopf–Wigner dynamics of atoms + photon modes
//
// The single-excitation sector is integrated exactly in a discretized photon
// continuum:
//
//   i β̇_j    = Σ_{a,m} ĝ_m √w_a e^{+i k_a·r_j} c_{am}
//   i ċ_{am} = Δ_m c_{am} + ĝ_m √w_a Σ_j e^{−i k_a·r_j} β_j
//
// where a runs over propagation directions (|k_a| = k0, retardation across the
// sample neglected), m over detunings Δ_m = c|k| − ω on a uniform symmetric
// grid, and ĝ_m² = (γ/2π)·δΔ_m is the flat resonant coupling.  Eliminating
// the modes in the Markov limit gives β̇ = −½Γβ with Γ_jl = γ sinc(k0 r_jl).

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "subrad/collective_states.hpp"
#include "subrad/decay_kernel.hpp"
#include "subrad/ensemble.hpp"

namespace subrad {

struct GridSpec {
    int n_angles{12};              // Gauss–Legendre nodes in cos θ; 2·n_angles azimuths
    int n_radial{256};             // detuning nodes
    double cutoff_multiple{20.0};  // band half-width in units of Nγ
};

struct GridCalibration {
    double gamma_eff{0.0};         // fitted single-atom decay rate
    double relative_error{0.0};    // |γ_eff − γ|/γ
    double quadrature_gamma{0.0};  // 2π Σ_m ĝ_m² L(Δ_m), L the unit Lorentzian of width γ
};

struct Mode {
    Vec3 k_vec;
    double weight;    // w_a·δΔ_m
    double coupling;  // flat g with g² = γ/2π; the discrete mode couples with g√weight
    double detuning;
};

struct ModeGrid {
    std::vector<Vec3> directions;        // unit vectors
    Eigen::VectorXd direction_weights;   // sum to 1
    Eigen::VectorXd detunings;           // symmetric about 0
    Eigen::VectorXd detuning_weights;    // δΔ_m
    double coupling_sq{0.0};             // γ/2π
    double cutoff{0.0};                  // max |Δ_m| band edge
    double k0{0.0};
    double gamma{0.0};
    std::size_t atoms{0};
    GridSpec spec;
    GridCalibration calibration;

    std::size_t mode_count() const noexcept {
        return directions.size() * static_cast<std::size_t>(detunings.size());
    }
    // Flattened index a·n_radial + m.
    Mode mode(std::size_t index) const;
    // Revival time 2π/δΔ of the uniform detuning comb.
    double recurrence_time() const;
};

// Builds the direction × detuning product grid for this ensemble and
// calibrates it against a single atom.  Throws InvalidParameter for grids
// below the minimum sizes and ConfigurationError (carrying γ_eff) when the
// calibrated single-atom rate misses γ by more than 2%.
ModeGrid make_mode_grid(const AtomEnsemble& ensemble, const GridSpec& spec);

// Single-atom decay rate fitted on the detuning comb alone (the angular sum
// collapses for one atom).
GridCalibration calibrate_detuning_grid(const Eigen::VectorXd& detunings, const Eigen::VectorXd& weights,
                                        double gamma, double cutoff);

struct WWState {
    Eigen::VectorXcd beta;
    Eigen::MatrixXcd field;  // n_radial × n_directions mode amplitudes
    double time{0.0};
};

struct WWSample {
    double time;
    Eigen::VectorXcd beta;
    double atom_population;
    double field_population;
};

struct WWTrajectory {
    std::vector<WWSample> samples;
    WWState final_state;
    double max_norm_drift{0.0};
};

// Integrates from `initial` (field in vacuum) to t_end with RK4 step ≤ dt.
// Requires dt ≤ 0.002/(Nγ) and t_end below half the grid recurrence time.
// Throws IntegrationError if the total norm drifts by more than 1e−4.
WWTrajectory integrate_ww(const AtomEnsemble& ensemble, const ModeGrid& grid, const ExcitationState& initial,
                          double t_end, double dt, std::size_t sample_stride = 1);

// Largest admissible step for an N-atom ensemble.
double max_ww_step(const AtomEnsemble& ensemble);

// ------------------------------------------------------------------ fitting

struct FitOptions {
    double skip_fraction{0.05};       // leading part of the window dropped (non-Markov transient)
    double flat_tolerance{1e-3};      // relative population drop treated as no decay
    double monotone_tolerance{1e-3};  // relative rise tolerated between samples
};

struct RateFit {
    double rate{0.0};
    double std_error{0.0};
    double upper_bound{0.0};
    bool flat{false};
    bool spans_decade{false};
    std::size_t points{0};
};

// Log-linear least-squares fit of p(t) ∝ e^{−rate·t}.  Throws FitError when
// p rises beyond tolerance or too few usable points remain.
RateFit fit_decay(std::span<const double> times, std::span<const double> populations, const FitOptions& options = {});

// Fit of |⟨subspace|β(t)⟩|² along a trajectory.
RateFit extract_rate(const WWTrajectory& trajectory, const ExcitationState& subspace, const FitOptions& options = {});
RateFit extract_rate(const DecayTrajectory& trajectory, const ExcitationState& subspace,
                     const FitOptions& options = {});

}  // namespace subrad

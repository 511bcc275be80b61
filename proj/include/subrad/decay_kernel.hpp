// decay_kernel.hpp: Markov-limit collective decay kernel and closed-form rates
//
// Rate convention: a state ψ loses population at Γ(ψ) = Σ_jl β_j* Γ_jl β_l,
// so its amplitude decays at Γ(ψ)/2.  With this convention the symmetric
// Dicke state of N atoms decays at Nγ.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "subrad/collective_states.hpp"
#include "subrad/ensemble.hpp"

namespace subrad {

// sin(x)/x with sinc(0) = 1.
double sinc(double x) noexcept;

class DecayKernel {
public:
    DecayKernel(Eigen::MatrixXd gamma_matrix, double gamma);

    const Eigen::MatrixXd& matrix() const noexcept { return gamma_matrix_; }
    double gamma() const noexcept { return gamma_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(gamma_matrix_.rows()); }

private:
    Eigen::MatrixXd gamma_matrix_;
    double gamma_;
};

// Ascending eigenvalues (collective decay rates) with orthonormal eigenvectors
// as columns.
struct KernelSpectrum {
    Eigen::VectorXd rates;
    Eigen::MatrixXd modes;
};

KernelSpectrum spectrum(const DecayKernel& kernel);

// Γ_jl = γ·sinc(k0 |r_j − r_l|): the resonant-shell average of e^{ik·(r_j−r_l)}
// for a scalar photon.
DecayKernel build_kernel(const AtomEnsemble& ensemble);

double rate_of(const ExcitationState& state, const DecayKernel& kernel);

// Γ₊ ≅ (γ/2)[1 + (3/8π)(λ²/A)(N−1)]
double rate_plus_closed_form(const AtomEnsemble& ensemble);
// Γ₋ ≅ (γ/2)[(1 − (3/8π)λ²/A) + (3/8π)(λ²/A)(N/2 − N/2)], clamped at 0.
double rate_minus_closed_form(const AtomEnsemble& ensemble);
// Γ_{3,N} ≅ (γ/2)[(1 − (3/8π)λ²/A) + (3/8π)(λ²/A)(N/3 − N/3)], clamped at 0.
double rate_three_bin_closed_form(const AtomEnsemble& ensemble);
// True when the unclamped subradiant closed forms would be negative
// (λ²/A > 8π/3); reports flag such values.
bool subradiant_closed_form_clamped(const AtomEnsemble& ensemble);

struct DecayTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXcd> amplitudes;
    std::vector<double> survival;  // Σ_j |β_j(t)|²
};

// Integrates β̇ = −½Γβ with fixed-step RK4, step ≤ 0.01/(Nγ), sampling at
// every point of t_grid (increasing, starting at 0).
DecayTrajectory evolve_amplitudes(const ExcitationState& state, const DecayKernel& kernel,
                                  std::span<const double> t_grid);

// Evenly spaced grid 0, t_end/n, ..., t_end.
std::vector<double> uniform_grid(double t_end, std::size_t intervals);

}  // namespace subrad

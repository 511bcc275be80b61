// decay_kernel.cpp

#include "subrad/decay_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subrad/error.hpp"

namespace subrad {

namespace {

constexpr double kThreeOverEightPi = 3.0 / (8.0 * std::numbers::pi);

double subradiant_bracket(const AtomEnsemble& e, double bins) {
    const double n = static_cast<double>(e.size());
    const double geo = kThreeOverEightPi * e.lambda_sq_over_area();
    // (N/b − N/b) is kept literally; it vanishes identically.
    return (1.0 - geo) + geo * (n / bins - n / bins);
}

}  // namespace

double sinc(double x) noexcept {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

DecayKernel::DecayKernel(Eigen::MatrixXd gamma_matrix, double gamma)
    : gamma_matrix_(std::move(gamma_matrix)), gamma_(gamma) {
    if (gamma_matrix_.rows() != gamma_matrix_.cols() || gamma_matrix_.rows() == 0) {
        throw InvalidParameter("DecayKernel: matrix must be square and non-empty");
    }
    if (!(gamma_ > 0.0)) throw InvalidParameter("DecayKernel: gamma must be > 0");
}

KernelSpectrum spectrum(const DecayKernel& kernel) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel.matrix());
    if (solver.info() != Eigen::Success) throw std::runtime_error("spectrum: eigen decomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

DecayKernel build_kernel(const AtomEnsemble& ensemble) {
    const auto n = static_cast<Eigen::Index>(ensemble.size());
    const double g = ensemble.gamma();
    const double k0 = ensemble.k0();
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        m(j, j) = g;
        for (Eigen::Index l = j + 1; l < n; ++l) {
            const double r = (ensemble.position(static_cast<std::size_t>(j)) -
                              ensemble.position(static_cast<std::size_t>(l))).norm();
            m(j, l) = m(l, j) = g * sinc(k0 * r);
        }
    }
    return DecayKernel(std::move(m), g);
}

double rate_of(const ExcitationState& state, const DecayKernel& kernel) {
    if (state.size() != kernel.size()) throw InvalidParameter("rate_of: state/kernel dimension mismatch");
    const Eigen::VectorXcd gb = kernel.matrix().cast<cplx>() * state.amplitudes;
    return state.amplitudes.dot(gb).real();
}

double rate_plus_closed_form(const AtomEnsemble& ensemble) {
    const double n = static_cast<double>(ensemble.size());
    return 0.5 * ensemble.gamma() * (1.0 + kThreeOverEightPi * ensemble.lambda_sq_over_area() * (n - 1.0));
}

double rate_minus_closed_form(const AtomEnsemble& ensemble) {
    return std::max(0.0, 0.5 * ensemble.gamma() * subradiant_bracket(ensemble, 2.0));
}

double rate_three_bin_closed_form(const AtomEnsemble& ensemble) {
    return std::max(0.0, 0.5 * ensemble.gamma() * subradiant_bracket(ensemble, 3.0));
}

bool subradiant_closed_form_clamped(const AtomEnsemble& ensemble) {
    return subradiant_bracket(ensemble, 2.0) < 0.0;
}

std::vector<double> uniform_grid(double t_end, std::size_t intervals) {
    if (intervals == 0 || !(t_end > 0.0)) throw InvalidParameter("uniform_grid: need t_end > 0 and intervals >= 1");
    std::vector<double> t(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) t[i] = t_end * static_cast<double>(i) / static_cast<double>(intervals);
    return t;
}

DecayTrajectory evolve_amplitudes(const ExcitationState& state, const DecayKernel& kernel,
                                  std::span<const double> t_grid) {
    if (state.size() != kernel.size()) throw InvalidParameter("evolve_amplitudes: state/kernel dimension mismatch");
    if (t_grid.empty() || t_grid.front() != 0.0) throw InvalidParameter("evolve_amplitudes: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) throw InvalidParameter("evolve_amplitudes: time grid must increase");
    }

    const Eigen::MatrixXcd gen = -0.5 * kernel.matrix().cast<cplx>();
    const double h_max = 0.01 / (static_cast<double>(kernel.size()) * kernel.gamma());

    DecayTrajectory out;
    out.times.assign(t_grid.begin(), t_grid.end());
    Eigen::VectorXcd b = state.amplitudes;
    out.amplitudes.push_back(b);
    out.survival.push_back(b.squaredNorm());

    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        const auto steps = static_cast<std::size_t>(std::ceil(span / h_max));
        const double h = span / static_cast<double>(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            const Eigen::VectorXcd k1 = gen * b;
            const Eigen::VectorXcd k2 = gen * (b + 0.5 * h * k1);
            const Eigen::VectorXcd k3 = gen * (b + 0.5 * h * k2);
            const Eigen::VectorXcd k4 = gen * (b + h * k3);
            b += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.amplitudes.push_back(b);
        out.survival.push_back(b.squaredNorm());
    }
    return out;
}

}  // namespace subrad

// ww_integrator.cpp

#include "subrad/ww_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "subrad/error.hpp"

namespace subrad {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss–Legendre nodes/weights on [−1, 1] via Golub–Welsch.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        jac(i, i - 1) = jac(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jac);
    nodes = solver.eigenvalues();
    weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
}

// Right-hand side of the coupled atom/field equations.
//   coupling: n_dir × N, entries √w_a e^{−i k_a·r_j}
//   g:        n_radial, ĝ_m
struct WWSystem {
    Eigen::MatrixXcd coupling;
    Eigen::VectorXd g;
    Eigen::VectorXd detuning;

    // dβ = −i U†(Fᵀg),  dF = −i(ΔF + g (Uβ)ᵀ).  Buffers are resized once.
    void derivative(const Eigen::VectorXcd& beta, const Eigen::MatrixXcd& field, Eigen::VectorXcd& dbeta,
                    Eigen::MatrixXcd& dfield, Eigen::VectorXcd& drive, Eigen::VectorXcd& back) const {
        drive.noalias() = coupling * beta;
        back.resize(field.cols());
        for (Eigen::Index a = 0; a < field.cols(); ++a) back(a) = field.col(a).transpose() * g.cast<cplx>();
        dbeta.noalias() = coupling.adjoint() * back;
        dbeta *= cplx{0.0, -1.0};
        const Eigen::Index nr = field.rows();
        dfield.resize(field.rows(), field.cols());
        for (Eigen::Index a = 0; a < field.cols(); ++a) {
            const cplx d = drive(a);
            const cplx* f = field.col(a).data();
            cplx* out = dfield.col(a).data();
            for (Eigen::Index m = 0; m < nr; ++m) {
                const cplx v = detuning(m) * f[m] + g(m) * d;
                out[m] = cplx{v.imag(), -v.real()};
            }
        }
    }
};

struct Propagation {
    std::vector<WWSample> samples;
    Eigen::VectorXcd beta;
    Eigen::MatrixXcd field;
    double max_drift{0.0};
};

Propagation propagate(const WWSystem& sys, const Eigen::VectorXcd& beta0, double t_end, std::size_t steps,
                      std::size_t stride, bool check_norm) {
    const double h = t_end / static_cast<double>(steps);
    Propagation out;
    out.beta = beta0;
    out.field = Eigen::MatrixXcd::Zero(sys.g.size(), sys.coupling.rows());
    const double norm0 = beta0.squaredNorm();

    Eigen::VectorXcd kb, acc_b, tmp_b, drive, back;
    Eigen::MatrixXcd kf, acc_f, tmp_f;

    auto record = [&](std::size_t step) {
        const double pa = out.beta.squaredNorm();
        const double pf = out.field.squaredNorm();
        const double drift = std::abs(pa + pf - norm0);
        out.max_drift = std::max(out.max_drift, drift);
        if (check_norm && drift > 1e-4) {
            throw IntegrationError("integrate_ww: norm drift " + std::to_string(drift) +
                                   " exceeds 1e-4; reduce dt");
        }
        out.samples.push_back({static_cast<double>(step) * h, out.beta, pa, pf});
    };

    record(0);
    for (std::size_t s = 1; s <= steps; ++s) {
        sys.derivative(out.beta, out.field, kb, kf, drive, back);
        acc_b = kb;
        acc_f = kf;
        tmp_b = out.beta + (0.5 * h) * kb;
        tmp_f = out.field + (0.5 * h) * kf;
        sys.derivative(tmp_b, tmp_f, kb, kf, drive, back);
        acc_b += 2.0 * kb;
        acc_f += 2.0 * kf;
        tmp_b = out.beta + (0.5 * h) * kb;
        tmp_f = out.field + (0.5 * h) * kf;
        sys.derivative(tmp_b, tmp_f, kb, kf, drive, back);
        acc_b += 2.0 * kb;
        acc_f += 2.0 * kf;
        tmp_b = out.beta + h * kb;
        tmp_f = out.field + h * kf;
        sys.derivative(tmp_b, tmp_f, kb, kf, drive, back);
        acc_b += kb;
        acc_f += kf;
        out.beta += (h / 6.0) * acc_b;
        out.field += (h / 6.0) * acc_f;
        if (s % stride == 0 || s == steps) record(s);
    }
    return out;
}

}  // namespace

Mode ModeGrid::mode(std::size_t index) const {
    const auto nr = static_cast<std::size_t>(detunings.size());
    if (index >= mode_count()) throw InvalidParameter("ModeGrid::mode: index out of range");
    const std::size_t a = index / nr;
    const auto m = static_cast<Eigen::Index>(index % nr);
    return {k0 * directions[a], direction_weights(static_cast<Eigen::Index>(a)) * detuning_weights(m),
            std::sqrt(coupling_sq), detunings(m)};
}

double ModeGrid::recurrence_time() const {
    return 2.0 * kPi / detuning_weights(0);
}

GridCalibration calibrate_detuning_grid(const Eigen::VectorXd& detunings, const Eigen::VectorXd& weights,
                                        double gamma, double cutoff) {
    const double h2 = gamma / (2.0 * kPi);
    WWSystem sys;
    sys.coupling = Eigen::MatrixXcd::Ones(1, 1);
    sys.g = (h2 * weights.array()).sqrt().matrix();
    sys.detuning = detunings;

    const double recurrence = 2.0 * kPi / weights(0);
    const double window = std::min(3.0 / gamma, 0.45 * recurrence);
    const double dt = std::min(0.002 / gamma, 0.04 / cutoff);
    const auto steps = static_cast<std::size_t>(std::ceil(window / dt));
    const Propagation run = propagate(sys, Eigen::VectorXcd::Ones(1), window, steps, 1, false);

    std::vector<double> t, p;
    for (const WWSample& s : run.samples) {
        t.push_back(s.time);
        p.push_back(s.atom_population);
    }
    FitOptions opts;
    opts.skip_fraction = std::max(0.05, 4.0 / (cutoff * window));
    const RateFit fit = fit_decay(t, p, opts);

    GridCalibration cal;
    cal.gamma_eff = fit.rate;
    cal.relative_error = std::abs(fit.rate - gamma) / gamma;
    double quad = 0.0;
    for (Eigen::Index m = 0; m < detunings.size(); ++m) {
        const double d = detunings(m);
        quad += h2 * weights(m) * (gamma / (2.0 * kPi)) / (d * d + 0.25 * gamma * gamma);
    }
    cal.quadrature_gamma = 2.0 * kPi * quad;
    return cal;
}

ModeGrid make_mode_grid(const AtomEnsemble& ensemble, const GridSpec& spec) {
    if (!(spec.cutoff_multiple > 0.0)) {
        throw ConfigurationError("make_mode_grid: cutoff_multiple must be > 0", 0.0);
    }
    if (spec.n_angles < 6) throw InvalidParameter("make_mode_grid: n_angles must be >= 6");
    if (spec.n_radial < 64) throw InvalidParameter("make_mode_grid: n_radial must be >= 64");
    if (spec.cutoff_multiple < 20.0) {
        throw ConfigurationError("make_mode_grid: cutoff_multiple must be >= 20", 0.0);
    }

    ModeGrid grid;
    grid.spec = spec;
    grid.k0 = ensemble.k0();
    grid.gamma = ensemble.gamma();
    grid.atoms = ensemble.size();
    grid.coupling_sq = grid.gamma / (2.0 * kPi);
    grid.cutoff = spec.cutoff_multiple * static_cast<double>(ensemble.size()) * grid.gamma;

    // Directions: Gauss–Legendre in cos θ × uniform azimuth, weights normalized
    // to the unit sphere average.
    Eigen::VectorXd mu, wmu;
    gauss_legendre(spec.n_angles, mu, wmu);
    const int n_phi = 2 * spec.n_angles;
    grid.direction_weights.resize(spec.n_angles * n_phi);
    Eigen::Index a = 0;
    for (int i = 0; i < spec.n_angles; ++i) {
        const double st = std::sqrt(std::max(0.0, 1.0 - mu(i) * mu(i)));
        for (int k = 0; k < n_phi; ++k) {
            const double phi = 2.0 * kPi * (k + 0.5) / n_phi;
            grid.directions.emplace_back(st * std::cos(phi), st * std::sin(phi), mu(i));
            grid.direction_weights(a++) = 0.5 * wmu(i) / n_phi;
        }
    }

    // Detunings: midpoint rule on [−cutoff, cutoff], symmetric about 0.
    const double step = 2.0 * grid.cutoff / spec.n_radial;
    grid.detunings.resize(spec.n_radial);
    grid.detuning_weights = Eigen::VectorXd::Constant(spec.n_radial, step);
    for (int m = 0; m < spec.n_radial; ++m) grid.detunings(m) = -grid.cutoff + (m + 0.5) * step;

    grid.calibration = calibrate_detuning_grid(grid.detunings, grid.detuning_weights, grid.gamma, grid.cutoff);
    if (grid.calibration.relative_error > 0.02) {
        throw ConfigurationError("make_mode_grid: single-atom calibration missed gamma by " +
                                     std::to_string(100.0 * grid.calibration.relative_error) +
                                     "% (gamma_eff = " + std::to_string(grid.calibration.gamma_eff) + ")",
                                 grid.calibration.gamma_eff);
    }
    return grid;
}

double max_ww_step(const AtomEnsemble& ensemble) {
    return 0.002 / (static_cast<double>(ensemble.size()) * ensemble.gamma());
}

WWTrajectory integrate_ww(const AtomEnsemble& ensemble, const ModeGrid& grid, const ExcitationState& initial,
                          double t_end, double dt, std::size_t sample_stride) {
    const std::size_t n = ensemble.size();
    if (initial.size() != n) throw InvalidParameter("integrate_ww: state/ensemble size mismatch");
    if (grid.atoms != n) throw InvalidParameter("integrate_ww: grid was built for a different ensemble");
    if (!(t_end > 0.0)) throw InvalidParameter("integrate_ww: t_end must be > 0");
    if (!(dt > 0.0) || dt > max_ww_step(ensemble) * (1.0 + 1e-12)) {
        throw InvalidParameter("integrate_ww: dt must satisfy 0 < dt <= 0.002/(N gamma)");
    }
    if (t_end > 0.5 * grid.recurrence_time()) {
        throw ConfigurationError("integrate_ww: t_end exceeds half the grid recurrence time " +
                                     std::to_string(grid.recurrence_time()) + "; increase n_radial",
                                 grid.recurrence_time());
    }
    if (sample_stride == 0) sample_stride = 1;

    WWSystem sys;
    const auto n_dir = static_cast<Eigen::Index>(grid.directions.size());
    sys.coupling.resize(n_dir, static_cast<Eigen::Index>(n));
    for (Eigen::Index a = 0; a < n_dir; ++a) {
        const Vec3 k = grid.k0 * grid.directions[static_cast<std::size_t>(a)];
        const double sw = std::sqrt(grid.direction_weights(a));
        for (std::size_t j = 0; j < n; ++j) {
            sys.coupling(a, static_cast<Eigen::Index>(j)) = std::polar(sw, -k.dot(ensemble.position(j)));
        }
    }
    sys.g = (grid.coupling_sq * grid.detuning_weights.array()).sqrt().matrix();
    sys.detuning = grid.detunings;

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt));
    Propagation run = propagate(sys, initial.amplitudes, t_end, steps, sample_stride, true);

    WWTrajectory out;
    out.samples = std::move(run.samples);
    out.final_state = {std::move(run.beta), std::move(run.field), t_end};
    out.max_norm_drift = run.max_drift;
    return out;
}

// ------------------------------------------------------------------ fitting

RateFit fit_decay(std::span<const double> times, std::span<const double> populations, const FitOptions& options) {
    if (times.size() != populations.size()) throw FitError("fit_decay: times/populations size mismatch");
    if (times.size() < 3) throw FitError("fit_decay: need at least 3 samples");
    const double t0 = times.front();
    const double duration = times.back() - t0;
    if (!(duration > 0.0)) throw FitError("fit_decay: zero-length window");

    for (std::size_t i = 1; i < populations.size(); ++i) {
        if (populations[i] > populations[i - 1] * (1.0 + options.monotone_tolerance) + 1e-14) {
            throw FitError("fit_decay: population rises at t = " + std::to_string(times[i]));
        }
    }

    const double t_start = t0 + options.skip_fraction * duration;
    std::size_t first = 0;
    while (first < times.size() && times[first] < t_start) ++first;
    if (first >= times.size()) throw FitError("fit_decay: skip window covers the whole trajectory");
    const double p_first = populations[first];
    if (!(p_first > 0.0)) throw FitError("fit_decay: population vanishes before the fit window");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = first; i < times.size(); ++i) {
        if (!(populations[i] > 1e-10 * p_first)) break;
        const double x = times[i];
        const double y = std::log(populations[i]);
        pts.emplace_back(x, y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) throw FitError("fit_decay: fewer than 3 usable samples");

    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    const double slope = (dn * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / dn;
    double ss = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = y - (intercept + slope * x);
        ss += r * r;
    }
    const double sigma2 = n > 2 ? ss / (dn - 2.0) : 0.0;
    const double se = std::sqrt(sigma2 * dn / denom);

    RateFit fit;
    fit.points = n;
    fit.std_error = se;
    const double p_last = populations[first + n - 1];
    fit.spans_decade = p_last <= 0.1 * p_first;
    const double drop = 1.0 - p_last / p_first;
    if (drop < options.flat_tolerance) {
        fit.flat = true;
        fit.rate = 0.0;
        fit.upper_bound = std::max(0.0, -slope) + 3.0 * se;
    } else {
        fit.rate = -slope;
        fit.upper_bound = fit.rate + 3.0 * se;
    }
    return fit;
}

namespace {

template <class Times, class Amps>
RateFit fit_projection(const Times& times, const Amps& amplitudes, const ExcitationState& subspace,
                       const FitOptions& options) {
    std::vector<double> p;
    p.reserve(amplitudes.size());
    for (const auto& b : amplitudes) {
        if (b.size() != subspace.amplitudes.size()) throw FitError("extract_rate: subspace dimension mismatch");
        p.push_back(std::norm(subspace.amplitudes.dot(b)));
    }
    return fit_decay(times, p, options);
}

}  // namespace

RateFit extract_rate(const WWTrajectory& trajectory, const ExcitationState& subspace, const FitOptions& options) {
    std::vector<double> t;
    std::vector<Eigen::VectorXcd> b;
    for (const WWSample& s : trajectory.samples) {
        t.push_back(s.time);
        b.push_back(s.beta);
    }
    return fit_projection(t, b, subspace, options);
}

RateFit extract_rate(const DecayTrajectory& trajectory, const ExcitationState& subspace, const FitOptions& options) {
    return fit_projection(trajectory.times, trajectory.amplitudes, subspace, options);
}

}  // namespace subrad

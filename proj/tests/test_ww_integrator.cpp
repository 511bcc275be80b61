#include <doctest.h>

#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include "subrad/collective_states.hpp"
#include "subrad/decay_kernel.hpp"
#include "subrad/ensemble.hpp"
#include "subrad/error.hpp"
#include "subrad/ww_integrator.hpp"

using namespace subrad;

namespace {

std::vector<double> projection(const WWTrajectory& tr, const ExcitationState& s) {
    std::vector<double> p;
    for (const WWSample& x : tr.samples) p.push_back(std::norm(s.amplitudes.dot(x.beta)));
    return p;
}

std::vector<double> times(const WWTrajectory& tr) {
    std::vector<double> t;
    for (const WWSample& x : tr.samples) t.push_back(x.time);
    return t;
}

}  // namespace

TEST_CASE("single-atom calibration is within 2 percent") {
    const AtomEnsemble e = make_ensemble(PointCluster{1, 0.0, 0});
    for (const GridSpec& s : {GridSpec{6, 64, 20.0}, GridSpec{8, 256, 20.0}, GridSpec{6, 128, 40.0}}) {
        const ModeGrid g = make_mode_grid(e, s);
        CHECK(g.calibration.relative_error < 0.02);
        CHECK(g.mode_count() == static_cast<std::size_t>(s.n_angles * 2 * s.n_angles * s.n_radial));
        CHECK(g.direction_weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
        for (Eigen::Index m = 0; m < g.detunings.size(); ++m) {
            CHECK(g.detunings(m) == doctest::Approx(-g.detunings(g.detunings.size() - 1 - m)).epsilon(1e-13));
        }
        const Mode first = g.mode(0);
        CHECK(first.weight > 0.0);
        CHECK(first.k_vec.norm() == doctest::Approx(e.k0()).epsilon(1e-13));
    }
}

TEST_CASE("calibration error halves when the band doubles") {
    // At fixed band edge the comb is already resolved over the fit window, so
    // the residual error is the truncated Lorentzian tail ≈ 1/(π·cutoff).
    // Doubling n_radial together with the cutoff keeps the spacing and halves it.
    const AtomEnsemble e = make_ensemble(PointCluster{1, 0.0, 0});
    double previous = make_mode_grid(e, GridSpec{6, 128, 20.0}).calibration.relative_error;
    CHECK(previous == doctest::Approx(1.0 / (std::numbers::pi * 20.0)).epsilon(0.05));
    for (int k = 1; k <= 2; ++k) {
        const GridSpec s{6, 128 << k, 20.0 * (1 << k)};
        const double err = make_mode_grid(e, s).calibration.relative_error;
        CHECK(err / previous > 0.45);
        CHECK(err / previous < 0.55);
        previous = err;
    }
    // Refining the comb alone changes the fitted rate far less than the tail does.
    const double coarse = make_mode_grid(e, GridSpec{6, 64, 20.0}).calibration.gamma_eff;
    const double fine = make_mode_grid(e, GridSpec{6, 512, 20.0}).calibration.gamma_eff;
    CHECK(std::abs(coarse - fine) < 1e-4);
}

TEST_CASE("grid configuration errors") {
    const AtomEnsemble e = make_ensemble(PointCluster{2, 0.0, 0});
    CHECK_THROWS_AS(make_mode_grid(e, GridSpec{6, 64, 0.0}), ConfigurationError);
    CHECK_THROWS_AS(make_mode_grid(e, GridSpec{6, 64, 10.0}), ConfigurationError);
    CHECK_THROWS_AS(make_mode_grid(e, GridSpec{5, 64, 20.0}), InvalidParameter);
    CHECK_THROWS_AS(make_mode_grid(e, GridSpec{6, 32, 20.0}), InvalidParameter);

    const ModeGrid g = make_mode_grid(e, GridSpec{6, 64, 20.0});
    CHECK_THROWS_AS(integrate_ww(e, g, plus_state(e), 0.1, 2.0 * max_ww_step(e)), InvalidParameter);
    CHECK_THROWS_AS(integrate_ww(e, g, plus_state(e), g.recurrence_time(), max_ww_step(e)), ConfigurationError);
    const AtomEnsemble other = make_ensemble(PointCluster{3, 0.0, 0});
    CHECK_THROWS_AS(integrate_ww(other, g, plus_state(other), 0.1, max_ww_step(other)), InvalidParameter);
}

TEST_CASE("Dicke limit: plus decays at N gamma, minus is trapped") {
    const AtomEnsemble e = make_ensemble(PointCluster{4, 0.0, 0});
    const ModeGrid g = make_mode_grid(e, GridSpec{6, 64, 20.0});
    const ExcitationState plus = plus_state(e);
    const ExcitationState minus = minus_state(e, halves(e));

    const WWTrajectory tp = integrate_ww(e, g, plus, 1.0, max_ww_step(e), 10);
    CHECK(extract_rate(tp, plus).rate == doctest::Approx(4.0).epsilon(0.05));
    CHECK(tp.max_norm_drift / 1.0 <= 1e-6);

    const DecayTrajectory kt = evolve_amplitudes(plus, build_kernel(e), times(tp));
    CHECK(extract_rate(tp, plus).rate == doctest::Approx(extract_rate(kt, plus).rate).epsilon(0.05));

    const WWTrajectory tm = integrate_ww(e, g, minus, 1.0, max_ww_step(e), 10);
    for (double p : projection(tm, minus)) CHECK(std::abs(p - 1.0) < 1e-3);
    const RateFit flat = extract_rate(tm, minus);
    CHECK(flat.flat);
    CHECK(flat.rate == 0.0);
    CHECK(flat.upper_bound < 1e-3);
}

TEST_CASE("single excited atom decays at gamma") {
    const AtomEnsemble e = make_ensemble(PointCluster{1, 0.0, 0});
    const ModeGrid g = make_mode_grid(e, GridSpec{6, 128, 20.0});
    const WWTrajectory tr = integrate_ww(e, g, basis_state(1, 0), 3.0, max_ww_step(e), 10);
    CHECK(extract_rate(tr, basis_state(1, 0)).rate == doctest::Approx(1.0).epsilon(0.05));
    CHECK(tr.max_norm_drift / 3.0 <= 1e-6);
    const WWSample& last = tr.samples.back();
    CHECK(last.atom_population + last.field_population == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("early-time decay is quadratic") {
    const AtomEnsemble e = make_ensemble(PointCluster{1, 0.0, 0});
    const ModeGrid g = make_mode_grid(e, GridSpec{6, 128, 20.0});
    const double t_end = 1.0;
    const WWTrajectory tr = integrate_ww(e, g, basis_state(1, 0), t_end, 1e-4);
    // First 1% of the trajectory, excluding t = 0.
    double sq2 = 0, sq1 = 0, y2 = 0, y1 = 0, yy = 0;
    double lx = 0, ly = 0, lxx = 0, lxy = 0;
    int n = 0;
    for (const WWSample& s : tr.samples) {
        if (s.time <= 0.0 || s.time > 0.01 * t_end) continue;
        const double loss = 1.0 - s.atom_population;
        const double t = s.time;
        sq2 += t * t * t * t;
        y2 += loss * t * t;
        sq1 += t * t;
        y1 += loss * t;
        yy += loss * loss;
        lx += std::log(t);
        ly += std::log(loss);
        lxx += std::log(t) * std::log(t);
        lxy += std::log(t) * std::log(loss);
        ++n;
    }
    REQUIRE(n > 20);
    const double res_quadratic = yy - y2 * y2 / sq2;
    const double res_linear = yy - y1 * y1 / sq1;
    CHECK(res_quadratic < 0.1 * res_linear);
    const double slope = (n * lxy - lx * ly) / (n * lxx - lx * lx);
    CHECK(slope > 1.8);
    CHECK(slope < 2.05);
    // Small-t expansion: 1 − P ≈ t² Σ_m ĝ_m² = γ·cutoff·t²/π.
    const double t0 = tr.samples[5].time;
    CHECK(1.0 - tr.samples[5].atom_population ==
          doctest::Approx(g.cutoff * t0 * t0 / std::numbers::pi).epsilon(0.05));
}

TEST_CASE("mode-resolved rates agree with the kernel on small clusters") {
    // Eigenvectors of the kernel decay single-exponentially in the Markov limit.
    for (const auto& [n, spread, seed] : {std::tuple{4, 0.3, 1ULL}, std::tuple{6, 0.5, 2ULL}, std::tuple{8, 0.7, 3ULL}}) {
        const AtomEnsemble e = make_ensemble(PointCluster{n, spread, seed});
        REQUIRE(e.k0() * e.radius() <= 5.0);
        const DecayKernel k = build_kernel(e);
        const KernelSpectrum sp = spectrum(k);
        const ModeGrid g = make_mode_grid(e, GridSpec{12, 128, 20.0});
        const double t_end = std::min(1.0, 0.45 * g.recurrence_time());
        for (Eigen::Index c : {Eigen::Index{0}, sp.rates.size() - 1}) {
            const ExcitationState v{sp.modes.col(c).cast<cplx>(), "mode"};
            const WWTrajectory tr = integrate_ww(e, g, v, t_end, max_ww_step(e), 20);
            CHECK(tr.max_norm_drift / t_end <= 1e-6);
            FitOptions opt;
            opt.monotone_tolerance = 1e-2;
            const double ww = extract_rate(tr, v, opt).rate;
            const double kernel = rate_of(v, k);
            INFO("N=" << n << " kernel=" << kernel << " ww=" << ww);
            if (kernel > 0.2) {
                CHECK(std::abs(ww - kernel) <= 0.1 * kernel);
            } else if (kernel < 0.1) {
                CHECK(ww < 0.1);
            }
        }
    }
}

TEST_CASE("fit_decay on synthetic input") {
    std::vector<double> t, p, flat, rising;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(0.01 * i);
        p.push_back(std::exp(-2.0 * t.back()));
        flat.push_back(0.7);
        rising.push_back(1.0 + t.back());
    }
    const RateFit fit = fit_decay(t, p);
    CHECK(std::abs(fit.rate - 2.0) < 1e-6);
    CHECK(fit.std_error < 1e-6);
    CHECK(fit.spans_decade);
    const RateFit f = fit_decay(t, flat);
    CHECK(f.flat);
    CHECK(f.rate == 0.0);
    CHECK(f.upper_bound >= 0.0);
    CHECK(f.upper_bound < 1e-6);
    CHECK_THROWS_AS(fit_decay(t, rising), FitError);
    const std::vector<double> two{0.0, 1.0};
    CHECK_THROWS_AS(fit_decay(two, two), FitError);
}

// prep_switch.cpp

#include "subrad/prep_switch.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "subrad/error.hpp"

namespace subrad {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

// Reflectance of a leg-opening element, nullopt for phase shifters.
std::optional<double> reflectance_of(const OpticalElement& e) {
    return std::visit(overloaded{[](const BeamSplitter& b) -> std::optional<double> { return b.reflectance; },
                                 [](const Mirror&) -> std::optional<double> { return 1.0; },
                                 [](const PhaseShifter&) -> std::optional<double> { return std::nullopt; }},
                      e);
}

// Amplitudes on every output port for a given input port.
Eigen::VectorXcd scatter(const OpticalNetwork& network, std::size_t input) {
    const std::size_t legs = network.leg_count();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(legs + 1));
    cplx rail = input == 0 ? 1.0 : 0.0;
    std::size_t leg = 0;
    for (const OpticalElement& e : network.elements) {
        if (const auto* ps = std::get_if<PhaseShifter>(&e)) {
            rail *= std::polar(1.0, ps->phase);
            continue;
        }
        const double r = *reflectance_of(e);
        const double t = std::sqrt(std::max(0.0, 1.0 - r * r));
        const cplx side = input == leg + 1 ? 1.0 : 0.0;
        out(static_cast<Eigen::Index>(leg)) = kI * r * rail + t * side;
        rail = t * rail + kI * r * side;
        ++leg;
    }
    out(static_cast<Eigen::Index>(legs)) = rail;
    return out;
}

void check_pulse(double g, double t) {
    if (!(g > 0.0)) throw InvalidParameter("jc_pulse: coupling g must be > 0");
    if (!(t >= 0.0)) throw InvalidParameter("jc_pulse: duration must be >= 0");
}

OpticalNetwork split_with_shift(std::size_t n, std::optional<std::size_t> shift_after) {
    OpticalNetwork net = equal_split_network(n);
    if (shift_after) {
        net.elements.insert(net.elements.begin() + static_cast<std::ptrdiff_t>(*shift_after), PhaseShifter{kPi});
    }
    return net;
}

}  // namespace

std::size_t OpticalNetwork::leg_count() const noexcept {
    std::size_t legs = 0;
    for (const OpticalElement& e : elements) {
        if (!std::holds_alternative<PhaseShifter>(e)) ++legs;
    }
    return legs;
}

void OpticalNetwork::validate() const {
    for (const OpticalElement& e : elements) {
        const auto r = reflectance_of(e);
        if (r && !(*r >= 0.0 && *r <= 1.0)) {
            throw InvalidParameter("OpticalNetwork: reflectance must lie in [0, 1]");
        }
    }
    const std::size_t legs = leg_count();
    std::set<std::size_t> atoms;
    for (const auto& [leg, atom] : targets) {
        if (leg >= legs) throw InvalidParameter("OpticalNetwork: target names leg " + std::to_string(leg) +
                                                " but the network has " + std::to_string(legs));
        if (!atoms.insert(atom).second) {
            throw InvalidParameter("OpticalNetwork: atom " + std::to_string(atom) + " is fed by two legs");
        }
    }
}

OpticalNetwork equal_split_network(std::size_t n) {
    if (n < 1) throw InvalidParameter("equal_split_network: N must be >= 1");
    OpticalNetwork net;
    for (std::size_t j = 1; j < n; ++j) {
        net.elements.emplace_back(BeamSplitter{1.0 / std::sqrt(static_cast<double>(n - j + 1))});
    }
    net.elements.emplace_back(Mirror{});
    for (std::size_t j = 0; j < n; ++j) net.targets[j] = j;
    return net;
}

PhotonAtomState propagate(const OpticalNetwork& network, std::size_t atoms) {
    network.validate();
    const Eigen::VectorXcd out = scatter(network, 0);
    const auto legs = static_cast<Eigen::Index>(network.leg_count());
    PhotonAtomState s;
    s.legs = out.head(legs);
    s.rail = out(legs);
    s.atoms = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(atoms));
    return s;
}

Eigen::MatrixXcd scattering_matrix(const OpticalNetwork& network) {
    network.validate();
    const std::size_t ports = network.leg_count() + 1;
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(ports), static_cast<Eigen::Index>(ports));
    for (std::size_t c = 0; c < ports; ++c) m.col(static_cast<Eigen::Index>(c)) = scatter(network, c);
    return m;
}

JCState jc_basis(bool excited, int photons) {
    if (photons != 0 && photons != 1) throw InvalidParameter("jc_basis: photon number must be 0 or 1");
    JCState s = JCState::Zero();
    s((excited ? 2 : 0) + photons) = 1.0;
    return s;
}

JCState jc_pulse(const JCState& state, double g, double t) {
    check_pulse(g, t);
    const double c = std::cos(0.5 * g * t);
    const double s = std::sin(0.5 * g * t);
    JCState out = state;
    out(1) = c * state(1) - kI * s * state(2);
    out(2) = -kI * s * state(1) + c * state(2);
    return out;
}

JCState jc_pulse(bool excited, int photons, double g, double t) {
    return jc_pulse(jc_basis(excited, photons), g, t);
}

PhotonAtomState absorb(const PhotonAtomState& state, const OpticalNetwork& network, double pulse_area) {
    const double c = std::cos(0.5 * pulse_area);
    const double s = std::sin(0.5 * pulse_area);
    PhotonAtomState out = state;
    for (const auto& [leg, atom] : network.targets) {
        if (atom >= static_cast<std::size_t>(state.atoms.size())) {
            throw InvalidParameter("absorb: target atom " + std::to_string(atom) + " outside the ensemble");
        }
        const cplx photon = state.legs(static_cast<Eigen::Index>(leg));
        out.legs(static_cast<Eigen::Index>(leg)) = c * photon;
        out.atoms(static_cast<Eigen::Index>(atom)) += -kI * s * photon;
    }
    return out;
}

Preparation run_network(const AtomEnsemble& ensemble, const OpticalNetwork& network, double pulse_area) {
    PhotonAtomState s = propagate(network, ensemble.size());
    for (const auto& [leg, atom] : network.targets) {
        if (atom >= ensemble.size()) {
            throw InvalidParameter("run_network: network targets atom " + std::to_string(atom) + " but the ensemble has " +
                                   std::to_string(ensemble.size()));
        }
        s.legs(static_cast<Eigen::Index>(leg)) *= std::polar(1.0, ensemble.k0_vec().dot(ensemble.position(atom)));
    }
    Preparation p;
    p.final = absorb(s, network, pulse_area);
    p.success_probability = p.final.atoms.squaredNorm();
    if (!(p.success_probability > 1e-300)) throw InvalidParameter("run_network: no amplitude reaches the atoms");
    p.state.amplitudes = p.final.atoms / std::sqrt(p.success_probability);
    p.state.label = "network";
    return p;
}

Preparation prepare_timed_plus(const AtomEnsemble& ensemble) {
    Preparation p = run_network(ensemble, equal_split_network(ensemble.size()), kPi);
    p.state.label = "plus";
    return p;
}

Preparation prepare_timed_minus(const AtomEnsemble& ensemble) {
    const std::size_t n = ensemble.size();
    if (n % 2 != 0) throw InvalidParameter("prepare_timed_minus: N must be even");
    Preparation p = run_network(ensemble, split_with_shift(n, n / 2), kPi);
    p.state.label = "minus";
    return p;
}

FullPreparation prepare_singlet_pair(const FullState& existing, std::size_t i, std::size_t j) {
    const auto n = static_cast<std::size_t>(existing.atoms);
    if (i == j) throw InvalidParameter("prepare_singlet_pair: atoms must differ");
    if (i >= n || j >= n) throw InvalidParameter("prepare_singlet_pair: atom index out of range");

    OpticalNetwork net;
    net.elements = {BeamSplitter{1.0 / std::sqrt(2.0)}, PhaseShifter{kPi}, Mirror{}};
    net.targets = {{0, 0}, {1, 1}};
    const PhotonAtomState field = absorb(propagate(net, 2), net, kPi);
    const cplx ai = field.atoms(0);
    const cplx aj = field.atoms(1);

    const Eigen::Index bi = Eigen::Index{1} << i;
    const Eigen::Index bj = Eigen::Index{1} << j;
    FullPreparation out;
    out.state.atoms = existing.atoms;
    out.state.amplitudes = Eigen::VectorXcd::Zero(existing.amplitudes.size());
    for (Eigen::Index idx = 0; idx < existing.amplitudes.size(); ++idx) {
        const cplx amp = existing.amplitudes(idx);
        if (amp == cplx{0.0, 0.0}) continue;
        if (idx & (bi | bj)) throw InvalidParameter("prepare_singlet_pair: target atoms must be in the ground level");
        out.state.amplitudes(idx | bi) += ai * amp;
        out.state.amplitudes(idx | bj) += aj * amp;
    }
    out.success_probability = out.state.amplitudes.squaredNorm() / existing.amplitudes.squaredNorm();
    out.state.amplitudes /= std::sqrt(out.state.amplitudes.squaredNorm());
    return out;
}

FullPreparation prepare_singlet_pair(std::size_t i, std::size_t j, std::size_t atoms) {
    return prepare_singlet_pair(ground_state(static_cast<int>(atoms)), i, j);
}

ConditionalOutcome conditional_prepare(const AtomEnsemble& ensemble, Target target, double epsilon) {
    const std::size_t n = ensemble.size();
    if (!(epsilon >= 0.0)) throw InvalidParameter("conditional_prepare: drive strength must be >= 0");
    if (target == Target::minus && n % 2 != 0) throw InvalidParameter("conditional_prepare: minus target needs even N");

    ConditionalOutcome out;
    out.thin_medium_violated = epsilon >= 0.3;
    out.first_order_probability = epsilon * epsilon;

    const double theta = epsilon / std::sqrt(static_cast<double>(n));
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::VectorXcd beta(static_cast<Eigen::Index>(n));
    cplx photon = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        double phase = ensemble.k0_vec().dot(ensemble.position(j));
        if (target == Target::minus && j >= n / 2) phase += kPi;
        beta(static_cast<Eigen::Index>(j)) = -kI * s * std::polar(1.0, phase) * photon;
        photon *= c;
    }
    out.count_probability = std::norm(photon);
    out.no_count_probability = beta.squaredNorm();
    if (out.no_count_probability > 0.0) {
        ExcitationState st;
        st.amplitudes = beta / std::sqrt(out.no_count_probability);
        st.label = target == Target::plus ? "heralded_plus" : "heralded_minus";
        const ExcitationState ideal = target == Target::plus ? plus_state(ensemble) : minus_state(ensemble, halves(ensemble));
        out.fidelity = fidelity(ideal, st);
        out.state = std::move(st);
    }
    return out;
}

ExcitationState switch_2pi(const ExcitationState& state, std::span<const std::size_t> bin) {
    ExcitationState out = apply_bin_phase(state, bin, kPi);
    out.label = state.label + "+2pi";
    return out;
}

}  // namespace subrad

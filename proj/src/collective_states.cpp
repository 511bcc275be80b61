// collective_states.cpp

#include "subrad/collective_states.hpp"

#include <cmath>

#include "subrad/error.hpp"

namespace subrad {

ExcitationState binned_state(const AtomEnsemble& ensemble, const BinPartition& partition, std::string label) {
    const std::size_t n = ensemble.size();
    const auto owner = partition.membership(n);
    double norm2 = 0.0;
    for (std::size_t b = 0; b < partition.arity(); ++b) {
        norm2 += partition.weights[b] * partition.weights[b] * static_cast<double>(partition.bins[b].size());
    }
    if (!(norm2 > 0.0)) throw InvalidParameter("binned_state: all bin weights vanish");
    const double scale = 1.0 / std::sqrt(norm2);

    ExcitationState out;
    out.label = std::move(label);
    out.amplitudes.resize(static_cast<Eigen::Index>(n));
    const Vec3& k0 = ensemble.k0_vec();
    for (std::size_t j = 0; j < n; ++j) {
        const double phase = k0.dot(ensemble.position(j));
        out.amplitudes(static_cast<Eigen::Index>(j)) = partition.weights[owner[j]] * scale * std::polar(1.0, phase);
    }
    return out;
}

ExcitationState plus_state(const AtomEnsemble& ensemble) {
    return binned_state(ensemble, single_bin(ensemble), "plus");
}

ExcitationState minus_state(const AtomEnsemble& ensemble, const BinPartition& partition) {
    if (partition.arity() != 2) throw InvalidParameter("minus_state: partition must have exactly two bins");
    return binned_state(ensemble, partition, "minus");
}

ExcitationState three_bin_state(const AtomEnsemble& ensemble, const BinPartition& partition) {
    if (partition.arity() != 3) throw InvalidParameter("three_bin_state: partition must have exactly three bins");
    return binned_state(ensemble, partition, "three_bin");
}

ExcitationState basis_state(std::size_t n, std::size_t j) {
    if (j >= n) throw InvalidParameter("basis_state: atom index out of range");
    ExcitationState out;
    out.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
    out.amplitudes(static_cast<Eigen::Index>(j)) = 1.0;
    out.label = "basis:" + std::to_string(j);
    return out;
}

cplx structure_factor(const ExcitationState& state, const AtomEnsemble& ensemble, const Vec3& k) {
    if (state.size() != ensemble.size()) throw InvalidParameter("structure_factor: state/ensemble size mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t j = 0; j < state.size(); ++j) {
        s += state.amplitudes(static_cast<Eigen::Index>(j)) * std::polar(1.0, -k.dot(ensemble.position(j)));
    }
    return s;
}

ExcitationState apply_bin_phase(const ExcitationState& state, std::span<const std::size_t> indices, double phase) {
    ExcitationState out = state;
    const cplx factor = std::polar(1.0, phase);
    for (std::size_t j : indices) {
        if (j >= state.size()) throw InvalidParameter("apply_bin_phase: atom index out of range");
    }
    // Duplicate indices are applied once.
    std::vector<bool> hit(state.size(), false);
    for (std::size_t j : indices) {
        if (hit[j]) continue;
        hit[j] = true;
        out.amplitudes(static_cast<Eigen::Index>(j)) *= factor;
    }
    return out;
}

cplx inner_product(const ExcitationState& a, const ExcitationState& b) {
    if (a.size() != b.size()) throw InvalidParameter("inner_product: dimension mismatch");
    return a.amplitudes.dot(b.amplitudes);  // conjugates the left operand
}

double fidelity(const ExcitationState& a, const ExcitationState& b) {
    return std::norm(inner_product(a, b));
}

nlohmann::json to_json(const ExcitationState& state) {
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index j = 0; j < state.amplitudes.size(); ++j) {
        amps.push_back({state.amplitudes(j).real(), state.amplitudes(j).imag()});
    }
    return {{"label", state.label}, {"amplitudes", amps}};
}

ExcitationState excitation_state_from_json(const nlohmann::json& j) {
    ExcitationState out;
    out.label = j.value("label", "");
    const auto& amps = j.at("amplitudes");
    out.amplitudes.resize(static_cast<Eigen::Index>(amps.size()));
    for (std::size_t i = 0; i < amps.size(); ++i) {
        out.amplitudes(static_cast<Eigen::Index>(i)) = cplx{amps[i].at(0).get<double>(), amps[i].at(1).get<double>()};
    }
    return out;
}

}  // namespace subrad

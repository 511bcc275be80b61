// ensemble.hpp: Atomic ensembles: positions, transition parameters, bin partitions
//
// Lengths are measured in the same unit as the transition wavelength
// lambda0; with the default lambda0 = 1 every position is in units of λ and
// k0·r is dimensionless.  Atom indices are zero-based throughout the library.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace subrad {

using Vec3 = Eigen::Vector3d;

struct EnsembleOptions {
    double lambda0{1.0};
    double gamma{1.0};
    Vec3 k0_direction{0.0, 0.0, 1.0};
    std::optional<double> radius_override;
    std::optional<double> area_override;
};

class AtomEnsemble {
public:
    // Validates every invariant; throws InvalidParameter on violation.
    AtomEnsemble(std::vector<Vec3> positions, const EnsembleOptions& options = {});

    std::size_t size() const noexcept { return positions_.size(); }
    const std::vector<Vec3>& positions() const noexcept { return positions_; }
    const Vec3& position(std::size_t j) const { return positions_.at(j); }

    double lambda0() const noexcept { return lambda0_; }
    double k0() const noexcept { return k0_vec_.norm(); }
    const Vec3& k0_vec() const noexcept { return k0_vec_; }
    double gamma() const noexcept { return gamma_; }
    double radius() const noexcept { return radius_; }
    double area() const noexcept { return area_; }

    // λ²/A, the geometric factor of the large-sample closed forms.
    double lambda_sq_over_area() const noexcept { return lambda0_ * lambda0_ / area_; }

    // True when every atom sits at the same point (k·r_j identical for all j).
    bool is_dicke_limit() const noexcept;

private:
    std::vector<Vec3> positions_;
    double lambda0_;
    Vec3 k0_vec_;
    double gamma_;
    double radius_;
    double area_;
};

// ---------------------------------------------------------------- geometry

// N atoms within a ball of radius spread·λ around the origin; spread = 0
// stacks them exactly at the origin (Dicke limit).
struct PointCluster {
    int n{0};
    double spread{0.0};
    std::uint64_t seed{0};
};

// Atoms at 0, d, 2d, ... along axis.
struct LineGeometry {
    int n{0};
    double spacing{0.0};
    Vec3 axis{0.0, 0.0, 1.0};
};

// Uniform random atoms in a slab: square transverse cross-section of the given
// area, depth measured along k0 starting at 0.  The slab area becomes the
// ensemble's area_A unless overridden.
struct SlabGeometry {
    int n{0};
    double area{0.0};
    double depth{0.0};
    std::uint64_t seed{0};
};

struct ExplicitGeometry {
    std::vector<Vec3> positions;
};

using GeometrySpec = std::variant<PointCluster, LineGeometry, SlabGeometry, ExplicitGeometry>;

// Lengths inside the geometry are in units of λ.
AtomEnsemble make_ensemble(const GeometrySpec& spec, const EnsembleOptions& options = {});

// Smallest enclosing circle of the projection of positions onto the plane
// orthogonal to direction.  Returns the radius.
double transverse_enclosing_radius(std::span<const Vec3> positions, const Vec3& direction);

// Uniform doubles in [0, 1) built from the top 53 bits of std::mt19937_64.
// The engine's output is fixed by the standard, so the same seed yields
// bit-identical sequences on every platform (std::uniform_real_distribution
// gives no such guarantee).
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------- bins

struct BinPartition {
    std::vector<std::vector<std::size_t>> bins;
    std::vector<double> weights;

    std::size_t arity() const noexcept { return bins.size(); }
    // Σ_b weight_b·|bin_b|
    double weighted_count() const;
    // Bin index of every atom; throws unless bins partition {0..n-1}.
    std::vector<std::size_t> membership(std::size_t n) const;
};

// {0..N/2-1} weight +1, {N/2..N-1} weight −1.  Throws on odd N.
BinPartition halves(const AtomEnsemble& ensemble);
// Three equal bins with weights (1, −2, 1).  Throws unless 3 | N.
BinPartition thirds(const AtomEnsemble& ensemble);
// Single bin with weight +1 (the symmetric state).
BinPartition single_bin(const AtomEnsemble& ensemble);

}  // namespace subrad

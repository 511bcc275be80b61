// ensemble.cpp: Geometry realizations and partitions

#include "subrad/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subrad/error.hpp"

namespace subrad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Orthonormal pair spanning the plane orthogonal to unit vector d.
std::pair<Vec3, Vec3> transverse_basis(const Vec3& d) {
    const Vec3 seed = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    Vec3 e1 = (seed - seed.dot(d) * d).normalized();
    Vec3 e2 = d.cross(e1);
    return {e1, e2};
}

struct Circle {
    Eigen::Vector2d c{0.0, 0.0};
    double r{-1.0};
    bool contains(const Eigen::Vector2d& p) const { return (p - c).norm() <= r * (1.0 + 1e-12) + 1e-15; }
};

Circle circle_from(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    Circle out;
    out.c = 0.5 * (a + b);
    out.r = 0.5 * (a - b).norm();
    return out;
}

Circle circle_from(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const Eigen::Vector2d ab = b - a;
    const Eigen::Vector2d ac = c - a;
    const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
    if (std::abs(d) < 1e-300) {
        // Collinear: the widest pair spans the circle.
        Circle best = circle_from(a, b);
        for (const Circle& cand : {circle_from(a, c), circle_from(b, c)}) {
            if (cand.r > best.r) best = cand;
        }
        return best;
    }
    const double ab2 = ab.squaredNorm();
    const double ac2 = ac.squaredNorm();
    Eigen::Vector2d centre{(ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d};
    Circle out;
    out.c = a + centre;
    out.r = centre.norm();
    return out;
}

void check_count(int n) {
    if (n < 1) throw InvalidParameter("ensemble: atom count must be >= 1");
}

}  // namespace

AtomEnsemble::AtomEnsemble(std::vector<Vec3> positions, const EnsembleOptions& options)
    : positions_(std::move(positions)), lambda0_(options.lambda0), gamma_(options.gamma) {
    if (positions_.empty()) throw InvalidParameter("ensemble: atom count must be >= 1");
    if (!(lambda0_ > 0.0) || !std::isfinite(lambda0_)) throw InvalidParameter("ensemble: wavelength must be > 0");
    if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw InvalidParameter("ensemble: gamma must be > 0");
    const double dnorm = options.k0_direction.norm();
    if (!(dnorm > 0.0) || !std::isfinite(dnorm)) throw InvalidParameter("ensemble: k0 direction must be non-zero");
    for (const Vec3& r : positions_) {
        if (!r.allFinite()) throw InvalidParameter("ensemble: non-finite atom position");
    }
    k0_vec_ = (kTwoPi / lambda0_) * options.k0_direction / dnorm;

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& r : positions_) centroid += r;
    centroid /= static_cast<double>(positions_.size());
    double rmax = 0.0;
    for (const Vec3& r : positions_) rmax = std::max(rmax, (r - centroid).norm());
    if (options.radius_override) {
        if (!(*options.radius_override >= rmax * (1.0 - 1e-12))) {
            throw InvalidParameter("ensemble: radius override smaller than the atomic cloud");
        }
        radius_ = *options.radius_override;
    } else {
        radius_ = rmax;
    }

    if (options.area_override) {
        if (!(*options.area_override > 0.0)) throw InvalidParameter("ensemble: area must be > 0");
        area_ = *options.area_override;
    } else {
        const double rc = transverse_enclosing_radius(positions_, k0_vec_ / k0());
        const double a = std::numbers::pi * rc * rc;
        // A point-like transverse profile has no geometric area; fall back to
        // one square wavelength.
        area_ = a > 1e-12 * lambda0_ * lambda0_ ? a : lambda0_ * lambda0_;
    }
}

bool AtomEnsemble::is_dicke_limit() const noexcept {
    const Vec3& first = positions_.front();
    return std::all_of(positions_.begin(), positions_.end(), [&](const Vec3& r) { return r == first; });
}

double transverse_enclosing_radius(std::span<const Vec3> positions, const Vec3& direction) {
    const Vec3 d = direction.normalized();
    const auto [e1, e2] = transverse_basis(d);
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(positions.size());
    for (const Vec3& r : positions) pts.emplace_back(r.dot(e1), r.dot(e2));

    // Incremental Welzl without shuffling: cubic worst case but deterministic,
    // and ensembles here are small.
    Circle c;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (c.r >= 0.0 && c.contains(pts[i])) continue;
        c = Circle{pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (c.contains(pts[j])) continue;
            c = circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (c.contains(pts[k])) continue;
                c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return std::max(c.r, 0.0);
}

AtomEnsemble make_ensemble(const GeometrySpec& spec, const EnsembleOptions& options) {
    if (!(options.lambda0 > 0.0)) throw InvalidParameter("ensemble: wavelength must be > 0");
    const double lam = options.lambda0;
    const Vec3 kdir = options.k0_direction.norm() > 0.0 ? options.k0_direction.normalized() : Vec3::UnitZ();

    return std::visit(
        [&](const auto& g) -> AtomEnsemble {
            using T = std::decay_t<decltype(g)>;
            std::vector<Vec3> pos;
            EnsembleOptions opts = options;
            if constexpr (std::is_same_v<T, PointCluster>) {
                check_count(g.n);
                if (g.spread < 0.0) throw InvalidParameter("point-cluster: spread must be >= 0");
                pos.assign(static_cast<std::size_t>(g.n), Vec3::Zero());
                if (g.spread > 0.0) {
                    UniformSource rng(g.seed);
                    const double rad = g.spread * lam;
                    for (Vec3& r : pos) {
                        Vec3 u;
                        do {
                            u = Vec3(rng.next(-1.0, 1.0), rng.next(-1.0, 1.0), rng.next(-1.0, 1.0));
                        } while (u.squaredNorm() > 1.0);
                        r = rad * u;
                    }
                }
            } else if constexpr (std::is_same_v<T, LineGeometry>) {
                check_count(g.n);
                if (!(g.spacing > 0.0)) throw InvalidParameter("line: spacing must be > 0");
                if (!(g.axis.norm() > 0.0)) throw InvalidParameter("line: axis must be non-zero");
                const Vec3 axis = g.axis.normalized();
                for (int j = 0; j < g.n; ++j) pos.push_back(static_cast<double>(j) * g.spacing * lam * axis);
            } else if constexpr (std::is_same_v<T, SlabGeometry>) {
                check_count(g.n);
                if (!(g.area > 0.0)) throw InvalidParameter("slab: area must be > 0");
                if (!(g.depth >= 0.0)) throw InvalidParameter("slab: depth must be >= 0");
                const auto [e1, e2] = transverse_basis(kdir);
                const double side = std::sqrt(g.area) * lam;
                UniformSource rng(g.seed);
                for (int j = 0; j < g.n; ++j) {
                    const double x = rng.next(-0.5, 0.5) * side;
                    const double y = rng.next(-0.5, 0.5) * side;
                    const double z = rng.next() * g.depth * lam;
                    pos.push_back(x * e1 + y * e2 + z * kdir);
                }
                if (!opts.area_override) opts.area_override = g.area * lam * lam;
            } else {
                if (g.positions.empty()) throw InvalidParameter("explicit geometry: no positions");
                for (const Vec3& r : g.positions) pos.push_back(r * lam);
            }
            return AtomEnsemble(std::move(pos), opts);
        },
        spec);
}

// ---------------------------------------------------------------- bins

double BinPartition::weighted_count() const {
    double s = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) s += weights.at(b) * static_cast<double>(bins[b].size());
    return s;
}

std::vector<std::size_t> BinPartition::membership(std::size_t n) const {
    if (weights.size() != bins.size()) throw InvalidParameter("partition: one weight per bin required");
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(n, unset);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        for (std::size_t j : bins[b]) {
            if (j >= n) throw InvalidParameter("partition: atom index out of range");
            if (owner[j] != unset) throw InvalidParameter("partition: bins overlap");
            owner[j] = b;
        }
    }
    if (std::find(owner.begin(), owner.end(), unset) != owner.end()) {
        throw InvalidParameter("partition: bins do not cover every atom");
    }
    return owner;
}

namespace {

BinPartition equal_bins(std::size_t n, std::vector<double> weights) {
    const std::size_t k = weights.size();
    BinPartition p;
    p.weights = std::move(weights);
    p.bins.resize(k);
    const std::size_t per = n / k;
    for (std::size_t j = 0; j < n; ++j) p.bins[j / per].push_back(j);
    return p;
}

}  // namespace

BinPartition halves(const AtomEnsemble& ensemble) {
    const std::size_t n = ensemble.size();
    if (n % 2 != 0) throw InvalidParameter("halves: atom count must be even");
    return equal_bins(n, {1.0, -1.0});
}

BinPartition thirds(const AtomEnsemble& ensemble) {
    const std::size_t n = ensemble.size();
    if (n % 3 != 0) throw InvalidParameter("thirds: atom count must be divisible by 3");
    return equal_bins(n, {1.0, -2.0, 1.0});
}

BinPartition single_bin(const AtomEnsemble& ensemble) {
    return equal_bins(ensemble.size(), {1.0});
}

}  // namespace subrad

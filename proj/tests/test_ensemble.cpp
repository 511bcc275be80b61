#include <doctest.h>

#include <cmath>
#include <numbers>

#include "subrad/ensemble.hpp"
#include "subrad/error.hpp"

using namespace subrad;

TEST_CASE("point cluster with zero spread sits at the origin") {
    const AtomEnsemble e = make_ensemble(PointCluster{4, 0.0, 0});
    CHECK(e.size() == 4);
    for (const Vec3& r : e.positions()) CHECK(r.norm() == 0.0);
    CHECK(e.radius() == 0.0);
    CHECK(e.is_dicke_limit());
    CHECK(e.area() > 0.0);
}

TEST_CASE("line geometry places atoms at multiples of the spacing") {
    const AtomEnsemble e = make_ensemble(LineGeometry{3, 0.5, {0.0, 0.0, 1.0}});
    CHECK(e.position(0).z() == 0.0);
    CHECK(e.position(1).z() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(e.position(2).z() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.radius() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(e.is_dicke_limit());
}

TEST_CASE("wave number follows the wavelength") {
    EnsembleOptions opt;
    opt.lambda0 = 0.78;
    opt.k0_direction = {1.0, 2.0, 2.0};
    const AtomEnsemble e(std::vector<Vec3>{Vec3::Zero()}, opt);
    CHECK(std::abs(e.k0() - 2.0 * std::numbers::pi / 0.78) / e.k0() < 1e-12);
    CHECK((e.k0_vec().normalized() - Vec3(1.0, 2.0, 2.0) / 3.0).norm() < 1e-14);
}

TEST_CASE("seeded slab realizations are bit-identical") {
    const SlabGeometry spec{100, 25.0, 5.0, 7};
    const AtomEnsemble a = make_ensemble(spec);
    const AtomEnsemble b = make_ensemble(spec);
    REQUIRE(a.size() == 100);
    for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a.position(j) == b.position(j));
        const Vec3& r = a.position(j);
        CHECK(std::abs(r.x()) <= 2.5);
        CHECK(std::abs(r.y()) <= 2.5);
        CHECK(r.z() >= 0.0);
        CHECK(r.z() <= 5.0);
    }
    CHECK(a.area() == 25.0);
    const AtomEnsemble c = make_ensemble(SlabGeometry{100, 25.0, 5.0, 8});
    CHECK(c.position(0) != a.position(0));
}

TEST_CASE("radius bounds every atom and the area comes from the transverse circle") {
    const AtomEnsemble e = make_ensemble(PointCluster{30, 0.8, 3});
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& r : e.positions()) centroid += r;
    centroid /= 30.0;
    for (const Vec3& r : e.positions()) CHECK((r - centroid).norm() <= e.radius() + 1e-12);

    // Three points on a transverse circle of radius 2 plus one inside.
    const std::vector<Vec3> pts{{2, 0, 0}, {-1, std::sqrt(3.0), 5}, {-1, -std::sqrt(3.0), -1}, {0.1, 0.2, 0.3}};
    CHECK(transverse_enclosing_radius(pts, Vec3::UnitZ()) == doctest::Approx(2.0).epsilon(1e-12));
    const AtomEnsemble f(pts);
    CHECK(f.area() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(make_ensemble(PointCluster{0, 0.0, 0}), InvalidParameter);
    CHECK_THROWS_AS(make_ensemble(LineGeometry{3, 0.0, {0, 0, 1}}), InvalidParameter);
    CHECK_THROWS_AS(make_ensemble(LineGeometry{3, -1.0, {0, 0, 1}}), InvalidParameter);
    EnsembleOptions bad;
    bad.lambda0 = 0.0;
    CHECK_THROWS_AS(make_ensemble(PointCluster{2, 0.0, 0}, bad), InvalidParameter);
    bad.lambda0 = 1.0;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(make_ensemble(PointCluster{2, 0.0, 0}, bad), InvalidParameter);
    EnsembleOptions small;
    small.radius_override = 0.1;
    CHECK_THROWS_AS(make_ensemble(LineGeometry{3, 1.0, {0, 0, 1}}, small), InvalidParameter);
}

TEST_CASE("halves and thirds") {
    const AtomEnsemble e4 = make_ensemble(PointCluster{4, 0.0, 0});
    const BinPartition h = halves(e4);
    CHECK(h.bins == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});
    CHECK(h.weights == std::vector<double>{1.0, -1.0});
    CHECK(h.weighted_count() == 0.0);

    const AtomEnsemble e2 = make_ensemble(PointCluster{2, 0.0, 0});
    CHECK(halves(e2).bins == std::vector<std::vector<std::size_t>>{{0}, {1}});
    CHECK_THROWS_AS(halves(make_ensemble(PointCluster{3, 0.0, 0})), InvalidParameter);

    const BinPartition t6 = thirds(make_ensemble(PointCluster{6, 0.0, 0}));
    CHECK(t6.bins == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}, {4, 5}});
    CHECK(t6.weights == std::vector<double>{1.0, -2.0, 1.0});
    CHECK(t6.weighted_count() == 0.0);
    CHECK(thirds(make_ensemble(PointCluster{3, 0.0, 0})).bins.size() == 3);
    CHECK_THROWS_AS(thirds(make_ensemble(PointCluster{4, 0.0, 0})), InvalidParameter);

    CHECK(single_bin(e4).weighted_count() == 4.0);
}

TEST_CASE("membership enforces a partition") {
    BinPartition p{{{0, 1}, {1, 2}}, {1.0, -1.0}};
    CHECK_THROWS_AS(p.membership(3), InvalidParameter);
    p = {{{0}, {2}}, {1.0, -1.0}};
    CHECK_THROWS_AS(p.membership(3), InvalidParameter);
    p = {{{0}, {1, 2}}, {1.0}};
    CHECK_THROWS_AS(p.membership(3), InvalidParameter);
    p = {{{2, 0}, {1}}, {1.0, -2.0}};
    CHECK(p.membership(3) == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("uniform source is reproducible and in range") {
    UniformSource a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double x = a.next();
        CHECK(x == b.next());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

#include "batteries.hpp"
#include "oracles.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"
#include "robstab/polycal.hpp"

#include <gtest/gtest.h>

using namespace robstab;

namespace {

RVector V(std::initializer_list<long> xs) {
    RVector v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

RMatrix M(std::initializer_list<std::initializer_list<long>> rows) {
    std::vector<RVector> rs;
    for (auto& r : rows) rs.push_back(V(r));
    return RMatrix::from_rows(rs, rs.empty() ? 0 : rs.front().size());
}

bool union_members_agree(const std::vector<HCone>& cones, const std::vector<VCone>& expected, oracle::Rng& rng,
                         std::size_t n) {
    for (int i = 0; i < 300; ++i) {
        RVector x = rng.vector(n, 3);
        if (i % 3 == 0 && !expected.empty()) {
            auto& e = expected[static_cast<std::size_t>(rng.integer(0, static_cast<long>(expected.size()) - 1))];
            x = zeros(n);
            for (auto& r : e.rays) x = x + Rational(rng.integer(0, 3)) * r;
            for (auto& l : e.lineality) x = x + Rational(rng.integer(-3, 3)) * l;
        }
        bool want = std::any_of(expected.begin(), expected.end(), [&](const VCone& c) { return c.contains(x); });
        if (union_contains(cones, x) != want) return false;
    }
    return true;
}

// {x1 <= 0} u {x2 <= 0}
PolyUnion two_half_planes() {
    return PolyUnion({Polyhedron(M({{1, 0}}), V({0}), 2), Polyhedron(M({{0, 1}}), V({0}), 2)}, 2);
}

}  // namespace

TEST(Polyhedron, EmptyIsRejected) {
    EXPECT_THROW(Polyhedron(M({{1}, {-1}}), V({-1, -1}), 1), ValidationError);
    EXPECT_NO_THROW(Polyhedron(M({{1}, {-1}}), V({0, 0}), 1));
}

TEST(TangentCone, Examples) {
    auto orth = PolyUnion::nonpositive_orthant(2);
    auto t0 = tangent_cone(orth, V({0, 0}));
    ASSERT_EQ(t0.size(), 1u);
    EXPECT_TRUE(same_cone(t0[0], HCone(RMatrix::identity(2), RMatrix(0, 2), 2)));
    auto t1 = tangent_cone(orth, V({-1, 0}));
    ASSERT_EQ(t1.size(), 1u);
    EXPECT_TRUE(same_cone(t1[0], HCone(M({{0, 1}}), RMatrix(0, 2), 2)));

    auto grn = tangent_cone(PolyUnion::graph_normal_nonpos(), V({0, 0}));
    ASSERT_EQ(grn.size(), 2u);
    EXPECT_TRUE(same_cone(grn[0], HCone(M({{1, 0}}), M({{0, 1}}), 2)));
    EXPECT_TRUE(same_cone(grn[1], HCone(M({{0, -1}}), M({{1, 0}}), 2)));
    EXPECT_THROW(tangent_cone(orth, V({1, 0})), DomainError);
}

TEST(RegularNormalCone, Examples) {
    EXPECT_TRUE(same_cone(regular_normal_cone(PolyUnion::nonpositive_orthant(2), V({0, 0})),
                          HCone(-RMatrix::identity(2), RMatrix(0, 2), 2)));
    auto grn = PolyUnion::graph_normal_nonpos();
    EXPECT_TRUE(same_cone(regular_normal_cone(grn, V({0, 1})), HCone(RMatrix(0, 2), M({{0, 1}}), 2)));
    EXPECT_TRUE(same_cone(regular_normal_cone(grn, V({0, 0})), HCone(M({{-1, 0}, {0, 1}}), RMatrix(0, 2), 2)));
    EXPECT_TRUE(is_zero_cone(regular_normal_cone(two_half_planes(), V({0, 0}))));
}

TEST(LimitingNormalCone, Examples) {
    oracle::Rng rng(11);
    auto orth = limiting_normal_cone(PolyUnion::nonpositive_orthant(2), V({0, 0}));
    ASSERT_EQ(orth.size(), 4u);  // every face of the orthant contributes a distinct value
    EXPECT_TRUE(union_members_agree(orth, {VCone(2, {V({1, 0}), V({0, 1})}, {})}, rng, 2));

    auto grn = limiting_normal_cone(PolyUnion::graph_normal_nonpos(), V({0, 0}));
    EXPECT_EQ(grn.size(), 3u);
    // lambda > 0 > d, or lambda d = 0
    for (int i = 0; i < 400; ++i) {
        RVector x = rng.vector(2, 3);
        if (i % 4 == 0) x[rng.integer(0, 1)] = 0;
        bool want = (x[0] > 0 && x[1] < 0) || x[0] * x[1] == 0;
        EXPECT_EQ(union_contains(grn, x), want) << to_string(x);
    }

    auto halves = limiting_normal_cone(two_half_planes(), V({0, 0}));
    EXPECT_EQ(halves.size(), 3u);
    EXPECT_TRUE(union_members_agree(halves, {VCone(2), VCone(2, {V({1, 0})}, {}), VCone(2, {V({0, 1})}, {})}, rng, 2));
}

TEST(DirectionalNormalCone, Examples) {
    oracle::Rng rng(12);
    auto grn = directional_limiting_normal_cone(PolyUnion::graph_normal_nonpos(), V({0, 0}), V({-1, 0}));
    EXPECT_TRUE(union_members_agree(grn, {VCone(2, {}, {V({0, 1})})}, rng, 2));

    auto orth = PolyUnion::nonpositive_orthant(2);
    EXPECT_TRUE(directional_limiting_normal_cone(orth, V({0, 0}), V({1, 0})).empty());
    auto side = directional_limiting_normal_cone(orth, V({0, 0}), V({-1, 0}));
    EXPECT_TRUE(union_members_agree(side, {VCone(2, {V({0, 1})}, {})}, rng, 2));

    // Zero direction recovers the limiting normal cone.
    auto all = directional_limiting_normal_cone(two_half_planes(), V({0, 0}), V({0, 0}));
    EXPECT_TRUE(union_members_agree(all, {VCone(2), VCone(2, {V({1, 0})}, {}), VCone(2, {V({0, 1})}, {})}, rng, 2));
}

TEST(DirectionalNormalCone, ConvexCaseIsNormalConeCutByDirection) {
    oracle::Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 3));
        std::vector<RVector> rows;
        for (int r = 0; r < 3; ++r) rows.push_back(rng.nonzero_vector(n, 2));
        PolyUnion C(Polyhedron(RMatrix::from_rows(rows, n), zeros(3), n));
        auto z = zeros(n);
        HCone N = regular_normal_cone(C, z);
        for (int q = 0; q < 10; ++q) {
            RVector w = rng.vector(n, 2);
            auto got = directional_limiting_normal_cone(C, z, w);
            if (!C.contains(w)) {
                EXPECT_TRUE(got.empty());
                continue;
            }
            HCone cut = N;
            cut.add_eq(w);
            for (int s = 0; s < 30; ++s) {
                RVector x = rng.vector(n, 3);
                if (s % 2 == 0) {
                    x = zeros(n);
                    for (auto& r : rows)
                        if (dot(r, w) == 0) x = x + Rational(rng.integer(0, 2)) * r;
                }
                EXPECT_EQ(union_contains(got, x), cut.contains(x));
            }
        }
    }
}

TEST(Strata, Examples) {
    PolyUnion line(Polyhedron(M({{1}}), V({0}), 1));
    auto s1 = enumerate_strata(line, V({0}));
    ASSERT_EQ(s1.size(), 2u);
    for (auto& s : s1) {
        if (s.is_origin()) EXPECT_TRUE(same_cone(s.normal_value, HCone(M({{-1}}), RMatrix(0, 1), 1)));
        else EXPECT_TRUE(is_zero_cone(s.normal_value));
    }

    auto grn = enumerate_strata(PolyUnion::graph_normal_nonpos(), V({0, 0}));
    ASSERT_EQ(grn.size(), 3u);
    for (auto& s : grn) {
        const RVector& r = s.representative;
        if (s.is_origin()) EXPECT_TRUE(same_cone(s.normal_value, HCone(M({{-1, 0}, {0, 1}}), RMatrix(0, 2), 2)));
        else if (r[0] < 0) EXPECT_TRUE(same_cone(s.normal_value, HCone(RMatrix(0, 2), M({{1, 0}}), 2)));
        else {
            EXPECT_GT(r[1], 0);
            EXPECT_TRUE(same_cone(s.normal_value, HCone(RMatrix(0, 2), M({{0, 1}}), 2)));
        }
    }

    // Three sign choices on each axis minus the open positive quadrant.
    EXPECT_EQ(enumerate_strata(two_half_planes(), V({0, 0})).size(), 8u);
}

TEST(Strata, CapacityIsEnforced) {
    Capacity saved = capacity();
    Capacity small = saved;
    small.max_strata = 5;
    set_capacity(small);
    EXPECT_THROW(enumerate_strata(two_half_planes(), V({0, 0})), CapacityError);
    set_capacity(saved);
}

TEST(SecondOrderTangentSet, Examples) {
    auto orth = PolyUnion::nonpositive_orthant(2);
    auto a = second_order_tangent_set(orth, V({0, 0}), V({-1, 0}));
    ASSERT_EQ(a.size(), 1u);
    EXPECT_TRUE(same_cone(a[0], HCone(M({{0, 1}}), RMatrix(0, 2), 2)));
    auto b = second_order_tangent_set(orth, V({0, 0}), V({0, 0}));
    ASSERT_EQ(b.size(), 1u);
    EXPECT_TRUE(same_cone(b[0], HCone(RMatrix::identity(2), RMatrix(0, 2), 2)));
    auto c = second_order_tangent_set(PolyUnion::graph_normal_nonpos(), V({0, 0}), V({-1, 0}));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_TRUE(same_cone(c[0], HCone(RMatrix(0, 2), M({{0, 1}}), 2)));
    EXPECT_THROW(second_order_tangent_set(orth, V({0, 0}), V({1, 0})), DomainError);
}

TEST(Projection, Examples) {
    auto orth = PolyUnion::nonpositive_orthant(2);
    auto p = project_point(orth, V({1, 2}));
    EXPECT_EQ(p.point, V({0, 0}));
    EXPECT_EQ(p.squared_distance, 5);
    auto q = project_point(orth, V({-1, -1}));
    EXPECT_EQ(q.point, V({-1, -1}));
    EXPECT_EQ(q.squared_distance, 0);
    auto g = project_point(PolyUnion::graph_normal_nonpos(), V({1, 1}));
    EXPECT_EQ(g.point, V({0, 1}));
    EXPECT_EQ(g.squared_distance, 1);
    auto d = project_point(PolyUnion::graph_normal_nonpos(), std::vector<double>{1.0, 1.0});
    EXPECT_NEAR(d.squared_distance, 1.0, 1e-12);
}

TEST(Projection, NoSampledPointIsCloser) {
    oracle::Rng rng(14);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 2;
        std::vector<Polyhedron> pieces;
        const int np = static_cast<int>(rng.integer(1, 3));
        for (int k = 0; k < np; ++k) {
            std::vector<RVector> rows;
            RVector b;
            RVector c = rng.vector(n, 2);
            for (int r = 0; r < 3; ++r) {
                rows.push_back(rng.nonzero_vector(n, 2));
                b.push_back(dot(rows.back(), c) + Rational(rng.integer(0, 2)));
            }
            pieces.emplace_back(RMatrix::from_rows(rows, n), b, n);
        }
        PolyUnion C(pieces, n);
        RVector y = rng.vector(n, 4, 3);
        auto best = project_point(C, y);
        ASSERT_TRUE(C.contains(best.point));
        EXPECT_EQ(best.squared_distance, squared_norm(best.point - y));
        int sampled = 0;
        while (sampled < 10000) {
            RVector s = rng.vector(n, 6, 4);
            if (!C.contains(s)) continue;
            ++sampled;
            ASSERT_LE(best.squared_distance, squared_norm(s - y));
        }
    }
}

TEST(MultiplierMap, Examples) {
    auto orth2 = PolyUnion::nonpositive_orthant(2);
    auto m = pullback_normals(RMatrix::identity(2), orth2, V({0, 0}));
    auto u = m.bounded(V({1, 1}), Rational(1));
    ASSERT_TRUE(u);
    EXPECT_EQ(*u, V({1, 1}));
    EXPECT_FALSE(m.min_norm(V({-1, 0})));

    auto line = PolyUnion::nonpositive_orthant(1);
    auto s = pullback_normals(M({{1, 0}}), line, V({0}));
    auto su = s.min_norm(V({1, 0}));
    ASSERT_TRUE(su);
    EXPECT_EQ(*su, V({1}));

    // Rows of the decision Jacobian of a three-constraint system at its origin.
    auto orth3 = PolyUnion::nonpositive_orthant(3);
    auto k = pullback_normals(M({{0, -1}, {0, 1}, {1, 0}}), orth3, V({0, 0, 0}));
    auto w = k.kernel_witness();
    ASSERT_TRUE(w);
    EXPECT_EQ(*w, V({1, 1, 0}));
    EXPECT_THROW(pullback_normals(RMatrix::identity(2), orth2, V({1, 0})), DomainError);
}

TEST(Strata, PartitionTangentDirections) {
    oracle::Rng rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 3));
        std::vector<Polyhedron> pieces;
        for (int k = 0, np = static_cast<int>(rng.integer(1, 3)); k < np; ++k) {
            std::vector<RVector> rows;
            for (int r = 0, nr = static_cast<int>(rng.integer(1, 3)); r < nr; ++r) rows.push_back(rng.nonzero_vector(n, 2));
            pieces.emplace_back(RMatrix::from_rows(rows, n), zeros(rows.size()), n);
        }
        PolyUnion C(pieces, n);
        Stratification S(local_tangent(C, zeros(n)));
        for (std::size_t s = 0; s < S.strata().size(); ++s) {
            const auto& st = S.strata()[s];
            EXPECT_TRUE(S.in_stratum(s, st.representative));
            EXPECT_TRUE(C.contains(st.representative));
            EXPECT_TRUE(same_cone(st.normal_value, regular_normal_of_union(S.tangent(), st.representative)));
        }
        for (int q = 0; q < 200; ++q) {
            RVector w = rng.vector(n, 2);
            std::size_t hits = 0;
            for (std::size_t s = 0; s < S.strata().size(); ++s) hits += S.in_stratum(s, w);
            EXPECT_EQ(hits, C.contains(w) ? 1u : 0u) << to_string(w);
        }
    }
}

TEST(Strata, RestrictedEnumerationKeepsStrataThroughDirection) {
    oracle::Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 3));
        const ConeUnion T = local_tangent(battery::random_union(rng, n, zeros(n)), zeros(n));
        const Stratification full(T);
        for (int q = 0; q < 6; ++q) {
            RVector w = q < 3 ? rng.vector(n, 1) : full.strata()[static_cast<std::size_t>(rng.integer(
                                                       0, static_cast<long>(full.strata().size()) - 1))].representative;
            const Stratification part(T, w);
            std::size_t through = 0;
            for (std::size_t s = 0; s < full.strata().size(); ++s) through += full.in_closure(s, w);
            EXPECT_EQ(part.strata().size(), through);
            for (std::size_t s = 0; s < part.strata().size(); ++s) EXPECT_TRUE(part.in_closure(s, w));
            auto a = full.normals_along(w), b = part.normals_along(w);
            ASSERT_EQ(a.size(), b.size());
            for (auto& c : a)
                EXPECT_TRUE(std::any_of(b.begin(), b.end(), [&](const HCone& d) { return same_cone(c, d); }));
        }
    }
}

// Random unions of at most three polyhedra around a base point: the computed
// directional normal cone matches limit sampling of the definition.
TEST(DirectionalNormalCone, AgreesWithLimitSampling) {
    oracle::Rng rng(16);
    int unions = 0;
    while (unions < 60) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 3));
        RVector z = unions % 2 ? rng.vector(n, 2) : zeros(n);
        PolyUnion C = battery::random_union(rng, n, z);
        ++unions;
        Stratification S(local_tangent(C, z));
        std::vector<RVector> gens;
        for (auto& p : C.pieces)
            for (auto i : p.active_rows(z)) gens.push_back(p.A.row(i));
        for (int wq = 0; wq < 4; ++wq) {
            RVector w = zeros(n);
            if (wq == 1) w = rng.vector(n, 2);
            if (wq >= 2) {
                const auto& st = S.strata()[static_cast<std::size_t>(rng.integer(0, static_cast<long>(S.strata().size()) - 1))];
                w = st.representative;
            }
            auto got = directional_limiting_normal_cone(C, z, w);
            auto patterns = oracle::sample_directional_normals(C, z, w, rng);
            for (int q = 0; q < 100; ++q) {
                RVector lam;
                switch (q % 5) {
                    case 0: lam = rng.vector(n, 3); break;
                    case 1: lam = gens.empty() ? zeros(n) : gens[static_cast<std::size_t>(rng.integer(0, static_cast<long>(gens.size()) - 1))]; break;
                    case 2: {
                        lam = zeros(n);
                        for (auto& g : gens) lam = lam + Rational(rng.integer(0, 2)) * g;
                        break;
                    }
                    case 3: lam = gens.empty() ? zeros(n) : -gens[static_cast<std::size_t>(rng.integer(0, static_cast<long>(gens.size()) - 1))]; break;
                    default: lam = zeros(n);
                }
                bool want = std::any_of(patterns.begin(), patterns.end(),
                                        [&](const auto& g) { return oracle::in_all(g, lam); });
                ASSERT_EQ(union_contains(got, lam), want)
                    << "z=" << to_string(z) << " w=" << to_string(w) << " lambda=" << to_string(lam);
            }
        }
    }
}

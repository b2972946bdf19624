#include "oracles.hpp"

#include "robstab/errors.hpp"
#include "robstab/varkkt.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

using namespace robstab;

namespace {

RVector V(std::initializer_list<Rational> xs) { return RVector(xs); }

FuncVec make(const std::vector<std::string>& exprs, std::size_t m, std::size_t n) {
    FuncVec f;
    f.param_dim = m;
    f.decision_dim = n;
    auto t = SymbolTable::standard(m, n);
    for (auto& s : exprs) f.components.push_back(parse_expr(s, t));
    return f;
}

// Stationarity system of 1/2 x1^2 - 1/2 x2^2 - <p, x> under two linear inequalities.
KKTSystem small_nlp(ParamSet P) {
    KKTSystem k;
    k.F = make({"x1 - p1", "-x2 - p2"}, 2, 2);
    k.phi = make({"-1/2*x1 + x2", "-1/2*x1 - x2"}, 2, 2);
    k.P = std::move(P);
    k.p_ref = V({0, 0});
    k.x_ref = V({0, 0});
    k.y_ref = V({0, 0});
    return k;
}

ParamSet half_plane() { return ParamSet::polyhedral(Polyhedron(RMatrix::from_rows({V({1, 0})}, 2), V({0}), 2)); }

// Hand-written residuals of the same system.
std::array<Rational, 6> residual(const RVector& p, const RVector& x, const RVector& y) {
    return {x[0] - p[0] - y[0] / 2 - y[1] / 2,
            -x[1] - p[1] + y[0] - y[1],
            -x[0] / 2 + x[1],
            y[0],
            -x[0] / 2 - x[1],
            y[1]};
}

bool solves(const RVector& p, const RVector& x, const RVector& y) {
    auto r = residual(p, x, y);
    return r[0] == 0 && r[1] == 0 && r[2] <= 0 && r[3] >= 0 && r[2] * r[3] == 0 && r[4] <= 0 && r[5] >= 0 &&
           r[4] * r[5] == 0;
}

std::vector<RVector> integer_grid(std::size_t dim, long range) {
    std::vector<RVector> out{{}};
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<RVector> next;
        for (auto& v : out)
            for (long k = -range; k <= range; ++k) {
                RVector w = v;
                w.emplace_back(k);
                next.push_back(w);
            }
        out = std::move(next);
    }
    return out;
}

bool grid_agrees(const std::vector<HCone>& a, const std::vector<HCone>& b, std::size_t dim) {
    for (const auto& x : integer_grid(dim, dim > 2 ? 1 : 2))
        if (union_contains(a, x) != union_contains(b, x)) return false;
    return true;
}

const std::vector<std::pair<RVector, GrnState>> kStates = {
    {V({-1, 0}), GrnState::phi_neg_y_zero}, {V({0, 2}), GrnState::phi_zero_y_pos}, {V({0, 0}), GrnState::corner}};

}  // namespace

TEST(KktSystem, BuildsInterleavedConstraint) {
    auto sys = build_kkt_system(small_nlp(ParamSet::full()));
    EXPECT_EQ(sys.g.size(), 6u);
    EXPECT_EQ(sys.decision_dim(), 4u);
    EXPECT_EQ(sys.C.dim(), 6u);
    EXPECT_EQ(sys.split_l1, 2u);
    EXPECT_EQ(sys.C.factors[2].kind, SetFactor::Kind::graph_normal);
    EXPECT_EQ(sys.reference_value(), zeros(6));
    oracle::Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        RVector p = rng.vector(2, 3, 4), x = rng.vector(2, 3, 4), y = rng.vector(2, 3, 4);
        RVector got = eval_exact(sys.g, join(p, join(x, y)));
        auto want = residual(p, x, y);
        for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(got[i], want[i]);
    }
}

TEST(KktSystem, ValidatesReference) {
    KKTSystem k;
    k.F = make({"0"}, 0, 1);
    k.phi = make({"x1"}, 0, 1);
    k.p_ref = {};
    k.x_ref = V({-1});
    k.y_ref = V({0});
    EXPECT_NO_THROW(build_kkt_system(k));

    k.x_ref = V({0});
    k.y_ref = V({-1});
    try {
        k.validate();
        FAIL() << "negative multiplier accepted";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("component 1"), std::string::npos);
    }

    auto bad = small_nlp(ParamSet::full());
    bad.x_ref = V({1, 0});
    EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(GraphNormal, Tables) {
    auto dir = grn_directional_normal(GrnState::corner, 0, 1);
    ASSERT_EQ(dir.size(), 1u);
    EXPECT_TRUE(same_cone(dir[0], HCone(RMatrix(0, 2), RMatrix::from_rows({V({0, 1})}, 2), 2)));

    auto full = grn_directional_normal(GrnState::corner, 0, 0);
    EXPECT_TRUE(union_contains(full, V({1, -1})));
    EXPECT_TRUE(union_contains(full, V({0, 5})));
    EXPECT_TRUE(union_contains(full, V({-3, 0})));
    EXPECT_FALSE(union_contains(full, V({1, 1})));
    EXPECT_FALSE(union_contains(full, V({-1, -1})));

    auto reg = grn_regular_normal(GrnState::phi_neg_y_zero);
    EXPECT_TRUE(reg.contains(V({0, 7})));
    EXPECT_FALSE(reg.contains(V({1, 0})));

    EXPECT_TRUE(grn_directional_normal(GrnState::corner, 1, 0).empty());
    EXPECT_TRUE(grn_directional_normal(GrnState::phi_zero_y_pos, 1, 0).empty());
    EXPECT_THROW(grn_state(1, 0), DomainError);
}

TEST(GraphNormal, AgreesWithGenericCalculus) {
    const PolyUnion gr = PolyUnion::graph_normal_nonpos();
    for (const auto& [z, st] : kStates) {
        EXPECT_EQ(grn_state(z[0], z[1]), st);
        EXPECT_TRUE(grid_agrees(grn_tangent(st), tangent_cone(gr, z), 2));
        EXPECT_TRUE(same_cone(grn_regular_normal(st), regular_normal_cone(gr, z)));
        EXPECT_TRUE(grid_agrees(grn_limiting_normal(st), limiting_normal_cone(gr, z), 2));
        for (const auto& w : integer_grid(2, 2)) {
            auto ours = grn_directional_normal(st, w[0], w[1]);
            if (!union_contains(tangent_cone(gr, z), w)) {
                EXPECT_TRUE(ours.empty());
                continue;
            }
            EXPECT_TRUE(grid_agrees(ours, directional_limiting_normal_cone(gr, z, w), 2)) << to_string(w);
        }
    }
}

TEST(GraphNormal, ProductsAgreeWithFlattenedUnion) {
    oracle::Rng rng(8);
    for (std::size_t l = 1; l <= 3; ++l) {
        ProductSet C;
        for (std::size_t i = 0; i < l; ++i) C.factors.push_back(SetFactor::graph_normal());
        const PolyUnion flat = C.flatten();
        for (int trial = 0; trial < 12; ++trial) {
            RVector phi, y, ds, dv, z, w;
            for (std::size_t i = 0; i < l; ++i) {
                const auto& [pt, st] = kStates[static_cast<std::size_t>(rng.integer(0, 2))];
                phi.push_back(pt[0]);
                y.push_back(pt[1]);
                auto tan = grn_tangent(st);
                RVector d{Rational(rng.integer(-1, 1)), Rational(rng.integer(-1, 1))};
                if (rng.integer(0, 3) > 0)
                    while (!union_contains(tan, d)) d = {Rational(rng.integer(-1, 1)), Rational(rng.integer(-1, 1))};
                ds.push_back(d[0]);
                dv.push_back(d[1]);
                z.insert(z.end(), pt.begin(), pt.end());
                w.insert(w.end(), d.begin(), d.end());
            }
            GrnProduct ours = grn_directional_normal(phi, y, ds, dv);
            const bool tangent = union_contains(tangent_cone(flat, z), w);
            EXPECT_EQ(!ours.empty(), tangent);
            if (!tangent) continue;
            auto generic = directional_limiting_normal_cone(flat, z, w);
            for (const auto& x : integer_grid(2 * l, 1)) EXPECT_EQ(ours.contains(x), union_contains(generic, x));
            for (std::size_t k = 0; k < ours.pattern_count(); ++k) {
                const HCone piece = ours.pattern(k);
                EXPECT_TRUE(union_contains(generic, relative_interior_point(piece)));
            }
        }
    }
}

TEST(KktFirstOrder, HalfPlaneOfParametersVerifies) {
    auto v = check_kkt_first_order(small_nlp(half_plane()));
    EXPECT_EQ(v.grade, Grade::verified);
}

TEST(KktFirstOrder, FullParameterSpaceRegression) {
    // Recorded behaviour only; the full-space case is not claimed either way.
    auto v = check_kkt_first_order(small_nlp(ParamSet::full()));
    EXPECT_EQ(v.grade, Grade::refuted);
    const RVector w = *v.find("w");
    const RVector u = *v.find("u");
    const RVector vv = *v.find("v");
    // the direction must solve the linearized Lagrangian equations
    EXPECT_EQ(u[0] - w[0] - vv[0] / 2 - vv[1] / 2, 0);
    EXPECT_EQ(-u[1] - w[1] + vv[0] - vv[1], 0);
    // the excluded directions lie on the rays (1, 1/2) and (1, -1/2)
    EXPECT_GT(w[0], 0);
    EXPECT_EQ(w[0], 2 * (w[1] > 0 ? w[1] : -w[1]));
}

TEST(KktFirstOrder, Unconstrained) {
    KKTSystem k;
    k.F = make({"x1 - p1"}, 1, 1);
    k.phi = make({}, 1, 1);
    k.p_ref = V({0});
    k.x_ref = V({0});
    k.y_ref = {};
    EXPECT_EQ(check_kkt_first_order(k).grade, Grade::verified);

    k.F = make({"x1 + x2 - p1", "x1 + x2 - p1"}, 1, 2);
    k.phi = make({}, 1, 2);
    k.x_ref = V({0, 0});
    auto r = check_kkt_first_order(k);
    ASSERT_TRUE(r.refuted());
    const RVector z = *r.find("z");
    EXPECT_FALSE(is_zero(z));
    EXPECT_EQ(z[0] + z[1], 0);

    k.F = make({"x1 + x2 - p1", "x1 + x2"}, 1, 2);
    auto e = check_kkt_first_order(k);
    ASSERT_TRUE(e.refuted());
    EXPECT_NE(std::find(e.notes.begin(), e.notes.end(), "existence condition fails"), e.notes.end());
}

TEST(KktFirstOrder, StationaryBranchForcesZeroMultipliers) {
    // w = (1, 0) with the response (u, v) = ((1, 0), (0, 0)): both constraint directions are strictly negative
    const RVector u = V({1, 0});
    const RVector s = V({-u[0] / 2 + u[1], -u[0] / 2 - u[1]});
    GrnProduct N = grn_directional_normal(V({0, 0}), V({0, 0}), s, V({0, 0}));
    ASSERT_EQ(N.pattern_count(), 1u);
    LinearSystem sys(6);  // (z1, z2, lambda1, d1, lambda2, d2)
    sys.add_eq(V({1, 0, Rational(-1, 2), 0, Rational(-1, 2), 0}));
    sys.add_eq(V({0, -1, 1, 0, -1, 0}));
    sys.add_eq(V({Rational(-1, 2), 1, 0, 1, 0, 0}));
    sys.add_eq(V({Rational(-1, 2), -1, 0, 0, 0, 1}));
    N.pattern(0).constrain(sys, 2);
    EXPECT_FALSE(find_nonzero(sys, {0, 1, 2, 3, 4, 5}).has_value());
}

TEST(SolutionMap, Examples) {
    const KKTSystem k = small_nlp(ParamSet::full());
    auto at = [&](const RVector& p) {
        auto s = enumerate_solution_map(k, p);
        std::set<std::pair<RVector, RVector>> pts(s.points.begin(), s.points.end());
        EXPECT_EQ(pts.size(), s.points.size());
        return pts;
    };
    using P = std::pair<RVector, RVector>;
    EXPECT_EQ(at(V({0, 0})), (std::set<P>{{V({0, 0}), V({0, 0})}}));
    EXPECT_EQ(at(V({1, 0})), (std::set<P>{{V({Rational(4, 3), Rational(2, 3)}), V({Rational(2, 3), 0})},
                                          {V({1, 0}), V({0, 0})},
                                          {V({Rational(4, 3), Rational(-2, 3)}), V({0, Rational(2, 3)})}}));
    EXPECT_EQ(at(V({-1, 0})), (std::set<P>{{V({0, 0}), V({1, 1})}}));
    EXPECT_EQ(enumerate_solution_map(k, V({1, 0})).branches.size(), 4u);

    KKTSystem q = k;
    q.F = make({"x1^2 - p1", "-x2 - p2"}, 2, 2);
    EXPECT_THROW(enumerate_solution_map(q, V({1, 0})), DomainError);
}

TEST(SolutionMap, MatchesGridSearch) {
    oracle::Rng rng(21);
    const KKTSystem k = small_nlp(ParamSet::full());
    // solutions are multiples of 1/6 for integer parameters in [-2, 2]^2 and stay within [-4, 4]
    std::vector<Rational> axis;
    for (long t = -24; t <= 24; ++t) axis.emplace_back(t, 6);
    for (int trial = 0; trial < 20; ++trial) {
        const RVector p = V({rng.integer(-2, 2), rng.integer(-2, 2)});
        auto s = enumerate_solution_map(k, p);
        std::set<std::pair<RVector, RVector>> got(s.points.begin(), s.points.end());
        for (const auto& [x, y] : got) EXPECT_TRUE(solves(p, x, y));
        std::set<std::pair<RVector, RVector>> brute;
        for (const auto& y1 : axis)
            for (const auto& y2 : axis) {
                if (y1 < 0 || y2 < 0) continue;
                // x is determined by the Lagrangian equations once y is fixed
                RVector y = V({y1, y2});
                RVector x = V({p[0] + y1 / 2 + y2 / 2, -p[1] + y1 - y2});
                bool on_grid = std::find(axis.begin(), axis.end(), x[0]) != axis.end() &&
                               std::find(axis.begin(), axis.end(), x[1]) != axis.end();
                if (on_grid && solves(p, x, y)) brute.insert({x, y});
            }
        EXPECT_EQ(got, brute) << to_string(p);
    }
}

#include "oracles.hpp"

#include "robstab/errors.hpp"
#include "robstab/probe.hpp"

#include <gtest/gtest.h>

#include <cmath>

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

ConstraintSystem system_of(const std::vector<std::string>& exprs, std::size_t m, std::size_t n, ProductSet C,
                           ParamSet P = ParamSet::full()) {
    ConstraintSystem s;
    s.g = make(exprs, m, n);
    s.C = std::move(C);
    s.P = std::move(P);
    s.p_ref = zeros(m);
    s.x_ref = zeros(n);
    s.split_l1 = s.g.size();
    return s;
}

ConstraintSystem three_inequalities() {
    return system_of({"-x2 - 1/2*x1^2 - p1 + p2*x2", "x2 - 1/2*x1^2 - p2 + p1*x1", "x1 + abs(x2)^(3/2) - p3"}, 3, 2,
                     ProductSet::nonpositive(3), ParamSet::smooth(make({"-p1 - p2 + 3/2*p1^2"}, 3, 0)));
}

ParamSet nonnegative_param() {
    return ParamSet::polyhedral(Polyhedron(RMatrix::from_rows({V({-1})}, 1), V({0}), 1));
}

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

SampleSchedule quick(int samples = 100) {
    SampleSchedule s;
    s.samples = samples;
    return s;
}

}  // namespace

TEST(Schedule, Validates) {
    SampleSchedule s;
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.radii().size(), 4u);
    s.factor = 1;
    EXPECT_THROW(s.validate(), ValidationError);
    s.factor = 0.5;
    s.r0 = 0;
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(RsModulus, ClosedForms) {
    auto one = estimate_rs_modulus(system_of({"x1 - p1"}, 1, 1, ProductSet::nonpositive(1)), quick());
    EXPECT_NEAR(one.value, 1.0, 0.05);
    EXPECT_FALSE(one.lower_bound);
    EXPECT_EQ(one.trend, "stable");
    auto half = estimate_rs_modulus(system_of({"2*x1 - p1"}, 1, 1, ProductSet::nonpositive(1)), quick());
    EXPECT_NEAR(half.value, 0.5, 0.025);
}

TEST(RsModulus, DeterministicAndWitnessReproduces) {
    const auto sys = three_inequalities();
    auto a = estimate_rs_modulus(sys, quick(60));
    auto b = estimate_rs_modulus(sys, quick(60));
    EXPECT_EQ(a.sup_per_radius, b.sup_per_radius);
    EXPECT_TRUE(a.lower_bound);
    EXPECT_EQ(a.trend, "stable");
    ASSERT_NE(a.find("p"), nullptr);
    auto again = rs_ratio(sys, *a.find("p"), *a.find("x"));
    EXPECT_NEAR(again.ratio, a.witness_ratio, 1e-9);
    EXPECT_NEAR(a.value, 1.0534773653, 1e-9);  // frozen
}

TEST(RsModulus, AffineDistancesMatchExactProjection) {
    oracle::Rng rng(17);
    const PolyUnion two({Polyhedron(RMatrix::from_rows({V({1, 0})}, 2), V({0}), 2),
                         Polyhedron(RMatrix::from_rows({V({0, 1})}, 2), V({0}), 2)},
                        2);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        ConstraintSystem sys;
        sys.g.param_dim = 1;
        sys.g.decision_dim = 2;
        RMatrix A(2, 2);
        RVector c(2), d(2);
        for (std::size_t i = 0; i < 2; ++i) {
            Expr e = Expr::constant(c[i] = rng.rational(2, 2)) * Expr::variable(VarKind::param, 0);
            for (std::size_t j = 0; j < 2; ++j)
                e = e + Expr::constant(A(i, j) = rng.rational(2, 2)) * Expr::variable(VarKind::decision, j);
            sys.g.components.push_back(e);
        }
        sys.C = trial % 2 ? ProductSet::nonpositive(2) : ProductSet::of(two);
        sys.p_ref = zeros(1);
        sys.x_ref = zeros(2);
        sys.split_l1 = 2;
        const RVector p = rng.vector(1, 1, 4), x = rng.vector(2, 1, 4);
        // exact solution set of p as a union of polyhedra in x
        std::vector<Polyhedron> pieces;
        for (const auto& piece : sys.C.flatten().pieces) {
            const RMatrix M = piece.A * A;
            RVector rhs = piece.b - piece.A * (p[0] * c);
            if (!lp_feasible(RMatrix(0, 2), {}, M, rhs, RMatrix(0, 2), {})) continue;
            pieces.emplace_back(M, rhs, 2);
        }
        auto q = rs_ratio(sys, to_double(p), to_double(x));
        if (pieces.empty()) {
            EXPECT_FALSE(std::isfinite(q.ratio));
            continue;
        }
        const Projection exact = project_point(PolyUnion(pieces, 2), x);
        EXPECT_TRUE(q.exact);
        EXPECT_NEAR(q.solution_distance, std::sqrt(to_double(exact.squared_distance)), 1e-9);
        ++checked;
    }
    EXPECT_GT(checked, 20);
}

TEST(ParametricStability, Examples) {
    EXPECT_EQ(check_parametric_stability(system_of({"x1 - p1"}, 1, 1, ProductSet::nonpositive(1)), quick()).grade,
              Grade::verified_numeric);
    auto r = check_parametric_stability(system_of({"p1"}, 1, 1, ProductSet::nonpositive(1)), quick());
    ASSERT_TRUE(r.refuted());
    EXPECT_GT((*r.find("p"))[0], 0);
    auto kkt = build_kkt_system(small_nlp(ParamSet::full()));
    EXPECT_EQ(check_parametric_stability(kkt, quick(50)).grade, Grade::verified_numeric);
}

TEST(BmpModulus, Examples) {
    auto one = estimate_bmp_modulus(system_of({"x1 - p1"}, 1, 1, ProductSet::nonpositive(1)), quick());
    EXPECT_NEAR(one.value, 1.0, 0.05);
    const auto& lam = *one.find("lambda");
    const auto& v = *one.find("v");
    EXPECT_NEAR(lam[0], v[0], 1e-9);  // grad = 1
    EXPECT_NEAR(one.witness_ratio, one.value, 1e-9);

    auto interior = estimate_bmp_modulus(system_of({"x1 - p1 - 1"}, 1, 1, ProductSet::nonpositive(1)), quick());
    EXPECT_EQ(interior.value, 0.0);
}

TEST(LipschitzModulus, Examples) {
    LipschitzProblem single;
    single.solutions = [](const std::vector<double>& p) { return std::vector<std::vector<double>>{p}; };
    single.p_ref = {0};
    single.x_ref = {0};
    EXPECT_NEAR(estimate_lipschitz_modulus(single, quick()).value, 1.0, 1e-9);

    LipschitzProblem root;
    root.solutions = [](const std::vector<double>& p) {
        if (p[0] < 0) return std::vector<std::vector<double>>{};
        return std::vector<std::vector<double>>{{std::sqrt(p[0])}, {-std::sqrt(p[0])}};
    };
    root.in_P = [](const std::vector<double>& p) { return p[0] >= 0; };
    root.p_ref = {0};
    root.x_ref = {0};
    SampleSchedule six = quick();
    six.count = 6;
    EXPECT_EQ(estimate_lipschitz_modulus(root, six).trend, "growing");

    const KKTSystem k = small_nlp(ParamSet::full());
    LipschitzProblem kkt;
    kkt.solutions = kkt_solution_oracle(k);
    kkt.in_P = [](const std::vector<double>& p) { return p[0] <= 0; };
    kkt.p_ref = {0, 0};
    kkt.x_ref = {0, 0, 0, 0};
    auto est = estimate_lipschitz_modulus(kkt, quick(60));
    EXPECT_EQ(est.trend, "stable");
    EXPECT_TRUE(std::isfinite(est.value));
    EXPECT_FALSE(est.parametric_violation);
}

TEST(Falsify, Examples) {
    FalsifyBudget b;
    b.sched = quick();
    auto sq = falsify_robinson(system_of({"x1^2 - p1"}, 1, 1, ProductSet::zero(1), nonnegative_param()), b);
    ASSERT_TRUE(sq.has_value());
    EXPECT_GT(sq->ratio, sq->kappa);
    EXPECT_NEAR(rs_ratio(system_of({"x1^2 - p1"}, 1, 1, ProductSet::zero(1), nonnegative_param()), sq->p, sq->x).ratio,
                sq->ratio, 1e-9);
    EXPECT_FALSE(falsify_robinson(system_of({"x1 - p1"}, 1, 1, ProductSet::nonpositive(1)), b).has_value());
    b.sched.samples = 60;
    EXPECT_FALSE(falsify_robinson(three_inequalities(), b).has_value());
}

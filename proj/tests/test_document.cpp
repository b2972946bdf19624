#include "oracles.hpp"

#include "robstab/document.hpp"
#include "robstab/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace robstab;

namespace {

const std::string kFixtures = std::string(ROBSTAB_SOURCE_DIR) + "/fixtures";

void expect_same_funcs(const FuncVec& a, const FuncVec& b) {
    EXPECT_EQ(a.param_dim, b.param_dim);
    EXPECT_EQ(a.decision_dim, b.decision_dim);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a.components[i] == b.components[i]) << "component " << i;
}

void expect_same_poly(const Polyhedron& a, const Polyhedron& b) {
    EXPECT_EQ(a.dim, b.dim);
    EXPECT_TRUE(a.A == b.A);
    EXPECT_EQ(a.b, b.b);
}

void expect_same_set(const ProductSet& a, const ProductSet& b) {
    ASSERT_EQ(a.factors.size(), b.factors.size());
    for (std::size_t i = 0; i < a.factors.size(); ++i) {
        EXPECT_EQ(a.factors[i].kind, b.factors[i].kind);
        ASSERT_EQ(a.factors[i].set.pieces.size(), b.factors[i].set.pieces.size());
        for (std::size_t k = 0; k < a.factors[i].set.pieces.size(); ++k)
            expect_same_poly(a.factors[i].set.pieces[k], b.factors[i].set.pieces[k]);
    }
}

void expect_same_params(const ParamSet& a, const ParamSet& b) {
    ASSERT_EQ(a.variant, b.variant);
    if (a.variant == ParamSet::Variant::polyhedron) expect_same_poly(a.poly, b.poly);
    if (a.variant == ParamSet::Variant::smooth_inequalities) expect_same_funcs(a.h, b.h);
}

void expect_same(const SystemDocument& a, const SystemDocument& b) {
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.expect, b.expect);
    expect_same_set(a.system.C, b.system.C);
    if (a.kind == SystemDocument::Kind::set) return;
    expect_same_funcs(a.system.g, b.system.g);
    expect_same_params(a.system.P, b.system.P);
    EXPECT_EQ(a.system.p_ref, b.system.p_ref);
    EXPECT_EQ(a.system.x_ref, b.system.x_ref);
    EXPECT_EQ(a.system.split_l1, b.system.split_l1);
    ASSERT_EQ(a.system.user_direction_cone.has_value(), b.system.user_direction_cone.has_value());
    if (a.system.user_direction_cone) {
        EXPECT_EQ(a.system.user_direction_cone->rays, b.system.user_direction_cone->rays);
        EXPECT_EQ(a.system.user_direction_cone->lineality, b.system.user_direction_cone->lineality);
    }
    ASSERT_EQ(a.kkt.has_value(), b.kkt.has_value());
    if (a.kkt) {
        expect_same_funcs(a.kkt->F, b.kkt->F);
        expect_same_funcs(a.kkt->phi, b.kkt->phi);
        EXPECT_EQ(a.kkt->y_ref, b.kkt->y_ref);
    }
}

int line_of(const std::string& text) {
    try {
        parse_document(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

const char* kSmall = R"(# comment line
kind = constraint
params = 1
decisions = 2   # trailing comment
p_ref = 0
x_ref = 0 0

[g]
x1 - p1
x2^2 - p1*x1

[C]
nonpositive 1
zero 1
)";

}  // namespace

TEST(Document, ParsesConstraintSystem) {
    auto d = parse_document(kSmall);
    EXPECT_EQ(d.kind, SystemDocument::Kind::constraint);
    EXPECT_EQ(d.system.param_dim(), 1u);
    EXPECT_EQ(d.system.decision_dim(), 2u);
    EXPECT_EQ(d.system.image_dim(), 2u);
    EXPECT_EQ(d.system.split_l1, 2u);
    EXPECT_EQ(d.system.P.variant, ParamSet::Variant::full_space);
    EXPECT_EQ(d.system.C.factors[1].kind, SetFactor::Kind::zero);
    EXPECT_EQ(eval_exact(d.system.g, RVector{Rational(1), Rational(2), Rational(3)}),
              (RVector{Rational(1), Rational(7)}));
}

TEST(Document, ThreeQuadraticsFixture) {
    auto d = load_document(kFixtures + "/three-quadratics-split.rsd");
    EXPECT_EQ(d.name, "three-quadratics-split");
    EXPECT_EQ(d.expect, Grade::verified);
    EXPECT_EQ(d.system.split_l1, 1u);
    EXPECT_EQ(d.system.param_dim(), 3u);
    ASSERT_EQ(d.system.P.variant, ParamSet::Variant::smooth_inequalities);
    // h(p) = -p1 - p2 + 3/2 p1^2 at p = (2, 0, 0) is 4
    EXPECT_EQ(eval_exact(d.system.P.h, RVector{Rational(2), Rational(0), Rational(0)})[0], Rational(4));
}

TEST(Document, KKTFixture) {
    auto d = load_document(kFixtures + "/kkt-two-constraints.rsd");
    ASSERT_TRUE(d.kkt.has_value());
    EXPECT_EQ(d.kkt->multiplier_dim(), 2u);
    EXPECT_EQ(d.system.decision_dim(), 4u);  // (x, y)
    EXPECT_EQ(d.system.image_dim(), 6u);
    EXPECT_FALSE(d.kkt->P.contains(RVector{Rational(1), Rational(0)}));
    auto full = load_document(kFixtures + "/kkt-two-constraints-full.rsd");
    EXPECT_EQ(full.kkt->y_ref, (RVector{Rational(0), Rational(0)}));  // defaults to zero
}

TEST(Document, SetFactors) {
    auto d = parse_document("kind = set\ndim = 7\n[C]\ngraph_normal_nonpos^2\nunion 2: 1 0 <= 0 | -1 0 <= -1; 0 1 <= 3/2\npolyhedron 1:\n");
    ASSERT_EQ(d.system.C.factors.size(), 4u);
    EXPECT_EQ(d.system.C.factors[0].kind, SetFactor::Kind::graph_normal);
    EXPECT_EQ(d.system.C.factors[2].set.pieces.size(), 2u);
    EXPECT_EQ(d.system.C.factors[2].set.pieces[1].b, (RVector{Rational(-1), Rational(3, 2)}));
    EXPECT_EQ(d.system.C.factors[3].set.pieces[0].A.rows(), 0u);  // whole line
    EXPECT_TRUE(d.system.C.contains(RVector{-1, 0, 0, 1, 2, 1, 5}));
}

TEST(Document, Diagnostics) {
    std::string floaty = kSmall;
    floaty.replace(floaty.find("p_ref = 0"), 9, "p_ref = 0.5");
    EXPECT_EQ(line_of(floaty), 5);
    try {
        parse_document(floaty);
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("rational"), std::string::npos);
    }
    EXPECT_EQ(line_of(std::string(kSmall) + "[Q]\n"), 15);
    EXPECT_EQ(line_of(std::string(kSmall) + "union 2: 1 0 0 <= 0\n"), 15);
    EXPECT_EQ(line_of(std::string(kSmall) + "[P]\np1 + <= 0\n"), 16);
    EXPECT_EQ(line_of(std::string(kSmall) + "[P]\np1 >= 0\n"), 16);
    std::string bad_expr = kSmall;
    bad_expr.replace(bad_expr.find("x1 - p1"), 7, "x1 - q1");
    EXPECT_EQ(line_of(bad_expr), 9);
    EXPECT_THROW(parse_document("params = 1\n"), ParseError);                              // no kind
    EXPECT_THROW(parse_document("kind = set\ndim = 1\nsplit = 0\n[C]\nzero 1\n"), ParseError);  // stray key
    EXPECT_THROW(parse_document("kind = set\ndim = 2\n[C]\nzero 1\n"), ParseError);              // wrong dim
    EXPECT_THROW(parse_document("kind = set\ndim = 1\n[C]\npolyhedron 1: 1 <= -1; -1 <= -1\n"), ParseError);  // empty
}

TEST(Document, ValidationErrors) {
    // reference value outside C
    std::string outside = kSmall;
    outside.replace(outside.find("x_ref = 0 0"), 11, "x_ref = 1 0");
    EXPECT_THROW(parse_document(outside), ValidationError);
    // reference parameter outside P
    EXPECT_THROW(parse_document(std::string(kSmall) + "[P]\n1 - p1 <= 0\n"), ValidationError);
    // split must fall on a factor boundary
    std::string split = kSmall;
    split.replace(split.find("p_ref"), 0, "split = 3\n");
    EXPECT_THROW(parse_document(split), ValidationError);
    // complementarity violated at the reference multiplier
    EXPECT_THROW(parse_document("kind = kkt\nparams = 0\ndecisions = 1\nx_ref = 0\ny_ref = 1\n[F]\nx1 + 1\n[phi]\nx1 - 1\n"),
                 ValidationError);
}

TEST(Document, FixturesRoundTrip) {
    int count = 0;
    for (auto& e : std::filesystem::directory_iterator(kFixtures)) {
        if (e.path().extension() != ".rsd") continue;
        SCOPED_TRACE(e.path().string());
        auto a = load_document(e.path().string());
        const std::string text = serialize(a);
        auto b = parse_document(text);
        expect_same(a, b);
        EXPECT_EQ(serialize(b), text);
        ++count;
    }
    EXPECT_GE(count, 8);
}

TEST(Document, UserDirectionConeRoundTrip) {
    auto d = parse_document(std::string(kSmall) + "[D]\nray: 1 0\nline: 0 1\n");
    ASSERT_TRUE(d.system.user_direction_cone);
    EXPECT_EQ(d.system.user_direction_cone->rays.size(), 1u);
    expect_same(d, parse_document(serialize(d)));
}

namespace {

Expr random_expr(oracle::Rng& rng, std::size_t m, std::size_t n, int depth) {
    const long pick = depth <= 0 ? rng.integer(0, 1) : rng.integer(0, 6);
    auto sub = [&] { return random_expr(rng, m, n, depth - 1); };
    switch (pick) {
        case 0: return Expr::constant(rng.rational(3, 4));
        case 1: {
            const std::size_t k = static_cast<std::size_t>(rng.integer(0, static_cast<long>(m + n) - 1));
            return k < m ? Expr::variable(VarKind::param, k) : Expr::variable(VarKind::decision, k - m);
        }
        case 2: return Expr::sum({sub(), sub(), sub()});
        case 3: return Expr::product({sub(), sub()});
        case 4: return Expr::power(sub(), Rational(rng.integer(2, 3)));
        case 5: return Expr::negation(sub());
        default: return Expr::abs_pow(sub());
    }
}

// Systems are generated in memory, serialized and parsed; parsing the
// serialization of that parse must reproduce it.
SystemDocument random_document(oracle::Rng& rng) {
    SystemDocument d;
    auto& s = d.system;
    const std::size_t m = rng.integer(1, 3), n = rng.integer(1, 3), l = rng.integer(1, 4);
    s.g.param_dim = m;
    s.g.decision_dim = n;
    s.p_ref = zeros(m);
    s.x_ref = zeros(n);
    for (std::size_t i = 0; i < l; ++i) {
        Expr e;
        // abs(c)^(3/2) of a nonzero constant is irrational at the reference point
        do e = random_expr(rng, m, n, 3);
        while (!eval(FuncVec{{e}, m, n, 0}, zeros(m + n)).exact);
        s.g.components.push_back(e);
    }
    const RVector value = s.reference_value();
    for (std::size_t i = 0; i < l; ++i) {
        if (value[i] <= 0 && rng.integer(0, 1)) {
            s.C.factors.push_back(value[i] == 0 && rng.integer(0, 1) ? SetFactor::zero() : SetFactor::nonpositive());
        } else {
            std::vector<Polyhedron> pieces;
            const long count = rng.integer(1, 3);
            for (long k = 0; k < count; ++k) {
                const Rational a = rng.rational(2, 3);
                pieces.emplace_back(RMatrix::from_rows({{a}}, 1), RVector{a * value[i] + rng.rational(2, 2) + 2}, 1);
            }
            s.C.factors.push_back(SetFactor::general(PolyUnion(pieces, 1)));
        }
    }
    s.split_l1 = static_cast<std::size_t>(rng.integer(0, static_cast<long>(l)));
    switch (rng.integer(0, 2)) {
        case 0: s.P = ParamSet::full(); break;
        case 1: {
            RVector row = rng.vector(m, 3);
            s.P = ParamSet::polyhedral(Polyhedron(RMatrix::from_rows({row}, m), RVector{Rational(1)}, m));
            break;
        }
        default: {
            FuncVec h;
            h.param_dim = m;
            h.components.push_back(Expr::variable(VarKind::param, 0) * Expr::variable(VarKind::param, 0) -
                                   Expr::constant(rng.rational(3, 2)) * Expr::variable(VarKind::param, m - 1) -
                                   Expr::constant(Rational(1)));
            s.P = ParamSet::smooth(h);
        }
    }
    d.name = "random";
    return d;
}

}  // namespace

TEST(DocumentProperty, ParseSerializeParse) {
    oracle::Rng rng(7177);
    for (int t = 0; t < 200; ++t) {
        SCOPED_TRACE(t);
        SystemDocument original = random_document(rng);
        ASSERT_NO_THROW(original.system.validate());
        const std::string text = serialize(original);
        SystemDocument first = parse_document(text);
        SystemDocument second = parse_document(serialize(first));
        expect_same(first, second);
        // the first parse already agrees with the generated system on values
        const RVector pt = rng.vector(first.system.g.arity(), 2, 3);
        auto ea = eval(original.system.g, pt), eb = eval(first.system.g, pt);
        for (std::size_t i = 0; i < ea.approx.size(); ++i) EXPECT_NEAR(ea.approx[i], eb.approx[i], 1e-9);
    }
}

#pragma once

// Random instance generators shared by the property tests and the acceptance run.

#include "oracles.hpp"

#include "robstab/order2.hpp"

namespace battery {

using namespace robstab;

inline RVector ints(std::initializer_list<long> xs) {
    RVector v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

inline FuncVec functions(const std::vector<std::string>& exprs, std::size_t m, std::size_t n) {
    FuncVec f;
    f.param_dim = m;
    f.decision_dim = n;
    auto t = SymbolTable::standard(m, n);
    for (auto& s : exprs) f.components.push_back(parse_expr(s, t));
    return f;
}

// Union of at most three polyhedra, each with some rows active at z.
inline PolyUnion random_union(oracle::Rng& rng, std::size_t n, const RVector& z) {
    std::vector<Polyhedron> pieces;
    for (int k = 0, np = static_cast<int>(rng.integer(1, 3)); k < np; ++k) {
        std::vector<RVector> rows;
        RVector b;
        for (int r = 0, nr = static_cast<int>(rng.integer(1, 3)); r < nr; ++r) {
            rows.push_back(rng.nonzero_vector(n, 2));
            b.push_back(dot(rows.back(), z) + (rng.integer(0, 3) == 0 ? Rational(1) : Rational(0)));
        }
        pieces.emplace_back(RMatrix::from_rows(rows, n), b, n);
    }
    return PolyUnion(pieces, n);
}

inline SetFactor random_factor(oracle::Rng& rng) {
    switch (rng.integer(0, 4)) {
        case 0: return SetFactor::nonpositive();
        case 1: return SetFactor::zero();
        case 2: return SetFactor::general(PolyUnion::whole_space(1));
        case 3:  // R_- u [1, 2]
            return SetFactor::general(PolyUnion({Polyhedron(RMatrix::from_rows({ints({1})}, 1), ints({0}), 1),
                                                 Polyhedron(RMatrix::from_rows({ints({1}), ints({-1})}, 1), ints({2, -1}), 1)},
                                                1));
        default:  // {0} u R_+ written as two pieces
            return SetFactor::general(PolyUnion({Polyhedron(RMatrix::from_rows({ints({1}), ints({-1})}, 1), ints({0, 0}), 1),
                                                 Polyhedron(RMatrix::from_rows({ints({-1})}, 1), ints({0}), 1)},
                                                1));
    }
}

// Small instance with g(0,0) = 0 in C: integer linear data, an optional x1^2
// term, and C built from one-dimensional factors or one two-piece planar factor.
inline ConstraintSystem random_polyhedral_instance(oracle::Rng& rng) {
    const std::size_t m = static_cast<std::size_t>(rng.integer(0, 3));
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 3));
    const std::size_t l = static_cast<std::size_t>(rng.integer(1, 3));
    ConstraintSystem s;
    s.g.param_dim = m;
    s.g.decision_dim = n;
    for (std::size_t i = 0; i < l; ++i) {
        Expr e = Expr::constant(0);
        for (std::size_t j = 0; j < n; ++j) {
            long c = rng.integer(-2, 2);
            if (rng.integer(0, 2) == 0) c = 0;
            e = e + Expr::constant(c) * Expr::variable(VarKind::decision, j);
        }
        for (std::size_t j = 0; j < m; ++j)
            e = e + Expr::constant(rng.integer(-1, 1)) * Expr::variable(VarKind::param, j);
        if (rng.integer(0, 1) == 0) {
            auto x0 = Expr::variable(VarKind::decision, 0);
            e = e + Expr::constant(rng.integer(-1, 1)) * x0 * x0;
        }
        s.g.components.push_back(e);
    }
    if (rng.integer(0, 3) == 0 && l >= 2) {
        PolyUnion L({Polyhedron(RMatrix::from_rows({ints({1, 0})}, 2), ints({0}), 2),
                     Polyhedron(RMatrix::from_rows({ints({0, 1})}, 2), ints({0}), 2)},
                    2);
        s.C.factors.push_back(SetFactor::general(L));
        for (std::size_t i = 2; i < l; ++i) s.C.factors.push_back(random_factor(rng));
    }
    if (s.C.factors.empty())
        for (std::size_t i = 0; i < l; ++i) s.C.factors.push_back(random_factor(rng));
    s.p_ref = zeros(m);
    s.x_ref = zeros(n);
    s.split_l1 = l;
    return s;
}

// Affine g = A x + B p with C a product of R_- and {0} factors.
inline ConstraintSystem random_affine_system(oracle::Rng& rng) {
    const std::size_t m = static_cast<std::size_t>(rng.integer(1, 2));
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 3));
    const std::size_t l = static_cast<std::size_t>(rng.integer(1, 3));
    ConstraintSystem s;
    s.g.param_dim = m;
    s.g.decision_dim = n;
    for (std::size_t i = 0; i < l; ++i) {
        Expr e = Expr::constant(0);
        for (std::size_t j = 0; j < n; ++j)
            e = e + Expr::constant(rng.integer(-2, 2)) * Expr::variable(VarKind::decision, j);
        for (std::size_t j = 0; j < m; ++j)
            e = e + Expr::constant(rng.integer(-1, 1)) * Expr::variable(VarKind::param, j);
        s.g.components.push_back(e);
        s.C.factors.push_back(rng.integer(0, 3) == 0 ? SetFactor::zero() : SetFactor::nonpositive());
    }
    s.p_ref = zeros(m);
    s.x_ref = zeros(n);
    s.split_l1 = l;
    return s;
}

struct CurvatureCase {
    SubamenableRep rep;
    RVector lambda, v;
};

// Quadratic maps into R_-, R_-^2 or a two-piece union of half-planes, with a
// multiplier picked from the directional normal cone along J v.
inline std::vector<CurvatureCase> curvature_battery(std::uint64_t seed, std::size_t count) {
    oracle::Rng rng(seed);
    std::vector<CurvatureCase> out;
    const PolyUnion two_piece({Polyhedron(RMatrix::from_rows({ints({1, 0})}, 2), ints({0}), 2),
                               Polyhedron(RMatrix::from_rows({ints({0, 1})}, 2), ints({0}), 2)},
                              2);
    while (out.size() < count) {
        const std::size_t s = static_cast<std::size_t>(rng.integer(2, 3));
        const int kind = static_cast<int>(out.size() % 3);
        const std::size_t p = kind == 0 ? 1 : 2;
        FuncVec q;
        q.decision_dim = s;
        for (std::size_t i = 0; i < p; ++i) {
            Expr e;
            for (std::size_t j = 0; j < s; ++j) {
                auto xj = Expr::variable(VarKind::decision, j);
                e = e + Expr::constant(rng.integer(-2, 2)) * xj;
                for (std::size_t k = j; k < s; ++k)
                    e = e + Expr::constant(rng.rational(1, 2)) * xj * Expr::variable(VarKind::decision, k);
            }
            q.components.push_back(e);
        }
        const PolyUnion Q = kind == 0 ? PolyUnion::nonpositive_orthant(1)
                                      : (kind == 1 ? PolyUnion::nonpositive_orthant(2) : two_piece);
        SubamenableRep rep{q, Q, zeros(s)};
        const RMatrix J = jacobian(q, rep.zbar, Wrt::decision);
        if (rank(J) < p) continue;
        RVector v = rng.nonzero_vector(s, 2);
        Stratification st(local_tangent(Q, zeros(p)));
        auto normals = st.normals_along(J * v);
        if (normals.empty()) continue;
        const HCone& K = normals[static_cast<std::size_t>(rng.integer(0, static_cast<long>(normals.size()) - 1))];
        VCone g = hcone_to_vcone(K);
        RVector mu = zeros(p);
        for (const auto& r : g.rays) mu = mu + Rational(rng.integer(1, 2)) * r;
        for (const auto& l : g.lineality) mu = mu + Rational(rng.integer(-2, 2)) * l;
        if (is_zero(mu)) continue;
        out.push_back({rep, J.transpose() * mu, v});
    }
    return out;
}

// Candidate normals: random vectors, active rows, their sums and negatives, and zero.
inline std::vector<RVector> probe_normals(oracle::Rng& rng, const PolyUnion& C, const RVector& z, int count) {
    const std::size_t n = z.size();
    std::vector<RVector> gens;
    for (auto& p : C.pieces)
        if (p.contains(z))
            for (auto i : p.active_rows(z)) gens.push_back(p.A.row(i));
    auto pick = [&] { return gens[static_cast<std::size_t>(rng.integer(0, static_cast<long>(gens.size()) - 1))]; };
    std::vector<RVector> out;
    for (int q = 0; q < count; ++q) {
        RVector lam;
        switch (q % 5) {
            case 0: lam = rng.vector(n, 3); break;
            case 1: lam = gens.empty() ? zeros(n) : pick(); break;
            case 2: {
                lam = zeros(n);
                for (auto& g : gens) lam = lam + Rational(rng.integer(0, 2)) * g;
                break;
            }
            case 3: lam = gens.empty() ? zeros(n) : -pick(); break;
            default: lam = zeros(n);
        }
        out.push_back(lam);
    }
    return out;
}

}  // namespace battery

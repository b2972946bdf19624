#include "robstab/varkkt.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <algorithm>
#include <map>

namespace robstab {

namespace {

constexpr std::size_t kMaxComponents = 10;

RVector row2(long a, long b) { return {Rational(a), Rational(b)}; }

HCone plane_cone(std::vector<RVector> ineq, std::vector<RVector> eq) {
    HCone c(2);
    for (auto& r : ineq) c.add_ineq(r);
    for (auto& r : eq) c.add_eq(r);
    return c;
}

// Convex pieces of the normal tables, coded per component.
enum class NormalPiece { lambda_zero, d_zero, sign_pair };

HCone normal_piece(NormalPiece p) {
    switch (p) {
        case NormalPiece::lambda_zero: return plane_cone({}, {row2(1, 0)});
        case NormalPiece::d_zero: return plane_cone({}, {row2(0, 1)});
        case NormalPiece::sign_pair: return plane_cone({row2(-1, 0), row2(0, 1)}, {});
    }
    throw Error("unknown normal piece");
}

std::vector<NormalPiece> limiting_pieces(GrnState s) {
    switch (s) {
        case GrnState::phi_neg_y_zero: return {NormalPiece::lambda_zero};
        case GrnState::phi_zero_y_pos: return {NormalPiece::d_zero};
        case GrnState::corner: return {NormalPiece::sign_pair, NormalPiece::lambda_zero, NormalPiece::d_zero};
    }
    return {};
}

std::vector<HCone> to_cones(const std::vector<NormalPiece>& ps) {
    std::vector<HCone> out;
    for (auto p : ps) out.push_back(normal_piece(p));
    return out;
}

// Direction strata of the tangent cone at a corner: (s<0, v=0), (s=0, v>0), (0,0).
enum class CornerStratum { phi_side, y_side, origin };

struct Jacobians {
    std::size_t m, n, l;
    RMatrix Gp, Gx, Gy, Phip, Phix;
    std::vector<GrnState> states;
};

Jacobians jacobians_of(const KKTSystem& k, const ConstraintSystem& sys) {
    Jacobians J;
    J.m = k.param_dim();
    J.n = k.decision_dim();
    J.l = k.multiplier_dim();
    const RMatrix jp = sys.jac_p(), jx = sys.jac_x();
    J.Gp = jp.block(0, 0, J.n, J.m);
    J.Gx = jx.block(0, 0, J.n, J.n);
    J.Gy = jx.block(0, J.n, J.n, J.l);
    J.Phip = RMatrix(0, J.m);
    J.Phix = RMatrix(0, J.n);
    for (std::size_t i = 0; i < J.l; ++i) {
        J.Phip.append_row(jp.row(J.n + 2 * i));
        J.Phix.append_row(jx.block(J.n + 2 * i, 0, 1, J.n).row(0));
    }
    const RVector gv = sys.reference_value();
    for (std::size_t i = 0; i < J.l; ++i) J.states.push_back(grn_state(gv[J.n + 2 * i], gv[J.n + 2 * i + 1]));
    return J;
}

RVector slice(const RVector& v, std::size_t off, std::size_t len) {
    return RVector(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + len));
}

// Nonzero (z, lambda) for one choice of normal pieces; variables (z, lambda_1, d_1, ...).
std::optional<RVector> multiplier_witness(const Jacobians& J, const std::vector<NormalPiece>& pieces) {
    const std::size_t dim = J.n + 2 * J.l;
    LinearSystem sys(dim);
    // Gx^T z + Phix^T lambda = 0
    for (std::size_t j = 0; j < J.n; ++j) {
        RVector row = zeros(dim);
        for (std::size_t r = 0; r < J.n; ++r) row[r] = J.Gx(r, j);
        for (std::size_t i = 0; i < J.l; ++i) row[J.n + 2 * i] = J.Phix(i, j);
        sys.add_eq(row);
    }
    // Gy^T z + d = 0 (Gy = Phix^T at the reference)
    for (std::size_t i = 0; i < J.l; ++i) {
        RVector row = zeros(dim);
        for (std::size_t r = 0; r < J.n; ++r) row[r] = J.Gy(r, i);
        row[J.n + 2 * i + 1] = 1;
        sys.add_eq(row);
    }
    for (std::size_t i = 0; i < J.l; ++i) normal_piece(pieces[i]).constrain(sys, J.n + 2 * i);
    std::vector<std::size_t> targets;
    for (std::size_t r = 0; r < J.n; ++r) targets.push_back(r);
    for (std::size_t i = 0; i < J.l; ++i) targets.push_back(J.n + 2 * i);
    return find_nonzero(sys, targets);
}

// Nonzero (w, u, v) solving the linearized system inside one direction stratum.
std::optional<RVector> direction_witness(const Jacobians& J, const HCone& TP,
                                         const std::vector<std::optional<CornerStratum>>& strata) {
    const std::size_t dim = J.m + J.n + J.l;
    LinearSystem sys(dim);
    TP.constrain(sys, 0);
    for (std::size_t r = 0; r < J.n; ++r) {
        RVector row = zeros(dim);
        for (std::size_t c = 0; c < J.m; ++c) row[c] = J.Gp(r, c);
        for (std::size_t c = 0; c < J.n; ++c) row[J.m + c] = J.Gx(r, c);
        for (std::size_t i = 0; i < J.l; ++i) row[J.m + J.n + i] = J.Gy(r, i);
        sys.add_eq(row);
    }
    bool strict = false;
    for (std::size_t i = 0; i < J.l; ++i) {
        RVector s = zeros(dim);
        for (std::size_t c = 0; c < J.m; ++c) s[c] = J.Phip(i, c);
        for (std::size_t c = 0; c < J.n; ++c) s[J.m + c] = J.Phix(i, c);
        const RVector v = unit(dim, J.m + J.n + i);
        switch (J.states[i]) {
            case GrnState::phi_neg_y_zero: sys.add_eq(v); break;
            case GrnState::phi_zero_y_pos: sys.add_eq(s); break;
            case GrnState::corner:
                switch (*strata[i]) {
                    case CornerStratum::phi_side:
                        sys.add_strict(s);
                        sys.add_eq(v);
                        strict = true;
                        break;
                    case CornerStratum::y_side:
                        sys.add_eq(s);
                        sys.add_strict(-v);
                        strict = true;
                        break;
                    case CornerStratum::origin:
                        sys.add_eq(s);
                        sys.add_eq(v);
                        break;
                }
                break;
        }
    }
    if (strict) return lp_feasible(sys);
    std::vector<std::size_t> all(dim);
    for (std::size_t i = 0; i < dim; ++i) all[i] = i;
    return find_nonzero(sys, all);
}

std::vector<NormalPiece> pieces_along(GrnState s, const std::optional<CornerStratum>& st) {
    if (s != GrnState::corner) return limiting_pieces(s);
    switch (*st) {
        case CornerStratum::phi_side: return {NormalPiece::lambda_zero};
        case CornerStratum::y_side: return {NormalPiece::d_zero};
        case CornerStratum::origin: return limiting_pieces(GrnState::corner);
    }
    return {};
}

}  // namespace

void KKTSystem::validate() const {
    std::vector<std::string> errs;
    const std::size_t m = param_dim(), n = decision_dim(), l = multiplier_dim();
    if (F.size() != n) errs.push_back("F must have one component per decision variable");
    if (phi.param_dim != m || phi.decision_dim != n) errs.push_back("F and phi must share their variables");
    if (F.multiplier_dim || phi.multiplier_dim) errs.push_back("F and phi take parameters and decisions only");
    if (p_ref.size() != m) errs.push_back("reference parameter has the wrong dimension");
    if (x_ref.size() != n) errs.push_back("reference decision has the wrong dimension");
    if (y_ref.size() != l) errs.push_back("reference multiplier has the wrong dimension");
    if (!errs.empty()) {
        std::string msg;
        for (auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
        throw ValidationError(msg);
    }
    F.validate();
    phi.validate();
    const RVector pv = eval_exact(phi, join(p_ref, x_ref));
    for (std::size_t i = 0; i < l; ++i) {
        if (pv[i] > 0 || y_ref[i] < 0 || pv[i] * y_ref[i] != 0)
            errs.push_back("component " + std::to_string(i + 1) + ": (phi, y) = (" + to_string(pv[i]) + ", " +
                           to_string(y_ref[i]) + ") is not in the graph of the normal cone");
    }
    const RVector gv = eval_exact(lagrangian(), join(p_ref, join(x_ref, y_ref)));
    for (std::size_t j = 0; j < n; ++j)
        if (gv[j] != 0)
            errs.push_back("Lagrangian component " + std::to_string(j + 1) + " is " + to_string(gv[j]) +
                           " at the reference point");
    if (!P.contains(p_ref)) errs.push_back("reference parameter lies outside P");
    if (!errs.empty()) {
        std::string msg;
        for (auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
        throw ValidationError(msg);
    }
}

FuncVec KKTSystem::lagrangian() const {
    const std::size_t n = decision_dim(), l = multiplier_dim();
    FuncVec G;
    G.param_dim = param_dim();
    G.decision_dim = n + l;
    for (std::size_t j = 0; j < n; ++j) {
        Expr e = F.components[j];
        for (std::size_t i = 0; i < l; ++i)
            e = e + Expr::variable(VarKind::decision, n + i) * differentiate(phi.components[i], VarKind::decision, j);
        G.components.push_back(e);
    }
    return G;
}

ConstraintSystem build_kkt_system(const KKTSystem& k) {
    k.validate();
    const std::size_t n = k.decision_dim(), l = k.multiplier_dim();
    ConstraintSystem s;
    s.g = k.lagrangian();
    for (std::size_t i = 0; i < l; ++i) {
        s.g.components.push_back(k.phi.components[i]);
        s.g.components.push_back(Expr::variable(VarKind::decision, n + i));
    }
    s.C = ProductSet::zero(n);
    for (std::size_t i = 0; i < l; ++i) s.C.factors.push_back(SetFactor::graph_normal());
    s.P = k.P;
    s.p_ref = k.p_ref;
    s.x_ref = join(k.x_ref, k.y_ref);
    s.split_l1 = n;
    s.validate();
    return s;
}

std::string to_string(GrnState s) {
    switch (s) {
        case GrnState::phi_neg_y_zero: return "phi<0=y";
        case GrnState::phi_zero_y_pos: return "phi=0<y";
        case GrnState::corner: return "phi=0=y";
    }
    return "?";
}

GrnState grn_state(const Rational& phi, const Rational& y) {
    if (phi < 0 && y == 0) return GrnState::phi_neg_y_zero;
    if (phi == 0 && y > 0) return GrnState::phi_zero_y_pos;
    if (phi == 0 && y == 0) return GrnState::corner;
    throw DomainError("(" + to_string(phi) + ", " + to_string(y) + ") is not in the graph of the normal cone");
}

std::vector<HCone> grn_tangent(GrnState s) {
    switch (s) {
        case GrnState::phi_neg_y_zero: return {plane_cone({}, {row2(0, 1)})};
        case GrnState::phi_zero_y_pos: return {plane_cone({}, {row2(1, 0)})};
        case GrnState::corner:
            return {plane_cone({row2(1, 0)}, {row2(0, 1)}), plane_cone({row2(0, -1)}, {row2(1, 0)})};
    }
    return {};
}

HCone grn_regular_normal(GrnState s) { return normal_piece(limiting_pieces(s).front()); }

std::vector<HCone> grn_limiting_normal(GrnState s) { return to_cones(limiting_pieces(s)); }

std::vector<HCone> grn_directional_normal(GrnState s, const Rational& ds, const Rational& dv) {
    if (!union_contains(grn_tangent(s), {ds, dv})) return {};
    if (s != GrnState::corner) return grn_limiting_normal(s);
    return grn_limiting_normal(grn_state(ds, dv));
}

bool GrnProduct::empty() const {
    for (const auto& c : components)
        if (c.empty()) return true;
    return false;
}

std::size_t GrnProduct::pattern_count() const {
    std::size_t t = 1;
    for (const auto& c : components) t *= c.size();
    return t;
}

bool GrnProduct::contains(const RVector& z) const {
    if (z.size() != 2 * components.size()) throw DimensionError("point does not match the product");
    for (std::size_t i = 0; i < components.size(); ++i)
        if (!union_contains(components[i], {z[2 * i], z[2 * i + 1]})) return false;
    return true;
}

HCone GrnProduct::pattern(std::size_t index) const {
    std::vector<HCone> f;
    for (const auto& c : components) {
        f.push_back(c[index % c.size()]);
        index /= c.size();
    }
    return product(f);
}

GrnProduct grn_directional_normal(const RVector& phi, const RVector& y, const RVector& ds, const RVector& dv) {
    if (phi.size() != y.size() || ds.size() != y.size() || dv.size() != y.size())
        throw DimensionError("graph components have mismatched sizes");
    GrnProduct out;
    for (std::size_t i = 0; i < y.size(); ++i)
        out.components.push_back(grn_directional_normal(grn_state(phi[i], y[i]), ds[i], dv[i]));
    return out;
}

Verdict check_kkt_first_order(const KKTSystem& k) {
    const ConstraintSystem sys = build_kkt_system(k);
    const Jacobians J = jacobians_of(k, sys);
    if (J.l > kMaxComponents) throw CapacityError("too many complementarity components");
    const HCone TP = tangent_cone_P(sys);

    Verdict ex = check_existence_condition(sys, image_derivative_cone(sys));
    if (ex.refuted()) {
        // Recover a parameter direction behind the image witness.
        const RVector v = *ex.find("v");
        LinearSystem ws(J.m);
        TP.constrain(ws, 0);
        const RMatrix jp = sys.jac_p();
        for (std::size_t r = 0; r < jp.rows(); ++r) ws.add_eq(jp.row(r), v[r]);
        if (auto w = lp_feasible(ws)) ex.add("w", *w);
        ex.note("existence condition fails");
        return ex;
    }

    std::vector<std::size_t> corners;
    for (std::size_t i = 0; i < J.l; ++i)
        if (J.states[i] == GrnState::corner) corners.push_back(i);
    std::size_t total = 1;
    for (std::size_t c = 0; c < corners.size(); ++c) total *= 3;

    std::map<std::vector<NormalPiece>, std::optional<RVector>> cache;
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<std::optional<CornerStratum>> strata(J.l);
        std::size_t rest = code;
        for (auto i : corners) {
            strata[i] = static_cast<CornerStratum>(rest % 3);
            rest /= 3;
        }
        std::vector<std::vector<NormalPiece>> options(J.l);
        std::size_t combos = 1;
        for (std::size_t i = 0; i < J.l; ++i) {
            options[i] = pieces_along(J.states[i], strata[i]);
            combos *= options[i].size();
        }
        std::optional<RVector> mult;
        for (std::size_t pc = 0; pc < combos && !mult; ++pc) {
            std::vector<NormalPiece> pick(J.l);
            std::size_t r = pc;
            for (std::size_t i = 0; i < J.l; ++i) {
                pick[i] = options[i][r % options[i].size()];
                r /= options[i].size();
            }
            auto it = cache.find(pick);
            if (it == cache.end()) it = cache.emplace(pick, multiplier_witness(J, pick)).first;
            mult = it->second;
        }
        if (!mult) continue;
        auto dir = direction_witness(J, TP, strata);
        if (!dir) continue;
        Verdict out;
        out.grade = Grade::refuted;
        const RVector d = primitive(*dir);
        out.add("w", slice(d, 0, J.m));
        out.add("u", slice(d, J.m, J.n));
        out.add("v", slice(d, J.m + J.n, J.l));
        RVector lam, dd;
        for (std::size_t i = 0; i < J.l; ++i) {
            lam.push_back((*mult)[J.n + 2 * i]);
            dd.push_back((*mult)[J.n + 2 * i + 1]);
        }
        out.add("z", slice(*mult, 0, J.n));
        out.add("lambda", lam);
        out.add("d", dd);
        out.note("nonzero multiplier along a tangent response");
        return out;
    }
    Verdict out;
    out.grade = ex.grade;
    out.notes = ex.notes;
    if (out.grade == Grade::verified || out.grade == Grade::verified_generators_only)
        out.note("no nonzero multiplier along any tangent response");
    return out;
}

SolutionMap enumerate_solution_map(const KKTSystem& k, const RVector& p) {
    const std::size_t m = k.param_dim(), n = k.decision_dim(), l = k.multiplier_dim();
    if (p.size() != m) throw DimensionError("parameter has the wrong dimension");
    if (l > kMaxComponents) throw CapacityError("too many complementarity components");
    ConstraintSystem sys;
    sys.g = k.lagrangian();
    for (std::size_t i = 0; i < l; ++i) {
        sys.g.components.push_back(k.phi.components[i]);
        sys.g.components.push_back(Expr::variable(VarKind::decision, n + i));
    }
    FuncVec fixed = sys.g;
    for (auto& e : fixed.components) {
        e = substitute(e, [&](VarKind kind, std::size_t i) {
            return kind == VarKind::param ? Expr::constant(p[i]) : Expr::variable(kind, i);
        });
        const int deg = polynomial_degree(e, VarKind::decision);
        if (deg < 0 || deg > 1) throw DomainError("the system is not affine in (x, y) at this parameter");
    }
    const RVector origin = join(p, zeros(n + l));
    const RMatrix A = jacobian(fixed, origin, Wrt::decision);
    const RVector b = eval_exact(fixed, origin);

    SolutionMap out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << l); ++mask) {
        SolutionMap::Branch br;
        std::vector<std::size_t> rows;
        for (std::size_t j = 0; j < n; ++j) rows.push_back(j);
        for (std::size_t i = 0; i < l; ++i) {
            br.active.push_back((mask >> i) & 1);
            rows.push_back(n + 2 * i + (br.active[i] ? 0 : 1));
        }
        const RMatrix M = A.select_rows(rows);
        RVector rhs;
        for (auto r : rows) rhs.push_back(-b[r]);
        if (rank(M) < n + l) {
            br.status = "singular";
            out.branches.push_back(br);
            continue;
        }
        const RVector z = *solve(M, rhs);
        const RVector gz = A * z + b;
        bool ok = true;
        for (std::size_t i = 0; i < l; ++i) ok = ok && gz[n + 2 * i] <= 0 && gz[n + 2 * i + 1] >= 0;
        br.status = ok ? "solution" : "infeasible";
        out.branches.push_back(br);
        if (!ok) continue;
        std::pair<RVector, RVector> pt{slice(z, 0, n), slice(z, n, l)};
        if (std::find(out.points.begin(), out.points.end(), pt) == out.points.end()) out.points.push_back(pt);
    }
    return out;
}

}  // namespace robstab

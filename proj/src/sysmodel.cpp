#include "robstab/sysmodel.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace robstab {

SetFactor SetFactor::nonpositive() { return {Kind::nonpositive, PolyUnion::nonpositive_orthant(1)}; }
SetFactor SetFactor::zero() { return {Kind::zero, PolyUnion::origin(1)}; }
SetFactor SetFactor::graph_normal() { return {Kind::graph_normal, PolyUnion::graph_normal_nonpos()}; }
SetFactor SetFactor::general(PolyUnion u) { return {Kind::general, std::move(u)}; }

std::size_t ProductSet::dim() const {
    std::size_t d = 0;
    for (auto& f : factors) d += f.dim();
    return d;
}

std::vector<std::size_t> ProductSet::offsets() const {
    std::vector<std::size_t> out;
    std::size_t d = 0;
    for (auto& f : factors) {
        out.push_back(d);
        d += f.dim();
    }
    return out;
}

namespace {

RVector slice_vec(const RVector& z, std::size_t off, std::size_t n) {
    return RVector(z.begin() + static_cast<long>(off), z.begin() + static_cast<long>(off + n));
}

}  // namespace

bool ProductSet::contains(const RVector& z) const {
    if (z.size() != dim()) throw DimensionError("ProductSet::contains: dimension mismatch");
    auto off = offsets();
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (!factors[i].set.contains(slice_vec(z, off[i], factors[i].dim()))) return false;
    return true;
}

PolyUnion ProductSet::flatten() const {
    const std::size_t n = dim();
    std::vector<std::pair<RMatrix, RVector>> acc{{RMatrix(0, 0), {}}};
    std::size_t done = 0;
    for (auto& f : factors) {
        std::vector<std::pair<RMatrix, RVector>> next;
        for (auto& [A, b] : acc)
            for (auto& piece : f.set.pieces) {
                RMatrix nb = block_diag(A.rows() || A.cols() ? A : RMatrix(0, done), piece.A);
                RVector bb = b;
                bb.insert(bb.end(), piece.b.begin(), piece.b.end());
                next.emplace_back(nb, bb);
                if (next.size() > capacity().max_patterns) throw CapacityError("product set has too many pieces");
            }
        acc = std::move(next);
        done += f.dim();
    }
    std::vector<Polyhedron> pieces;
    for (auto& [A, b] : acc) pieces.emplace_back(A.cols() == n ? A : RMatrix(0, n), b, n);
    return PolyUnion(pieces, n);
}

Rational ProductSet::squared_distance(const RVector& z) const {
    auto off = offsets();
    Rational d = 0;
    for (std::size_t i = 0; i < factors.size(); ++i)
        d += project_point(factors[i].set, slice_vec(z, off[i], factors[i].dim())).squared_distance;
    return d;
}

double ProductSet::squared_distance(const std::vector<double>& z) const {
    auto off = offsets();
    double d = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        const double* s = z.data() + off[i];
        switch (f.kind) {
            case SetFactor::Kind::nonpositive: d += s[0] > 0 ? s[0] * s[0] : 0; break;
            case SetFactor::Kind::zero: d += s[0] * s[0]; break;
            default: d += project_point(f.set, std::vector<double>(s, s + f.dim())).squared_distance;
        }
    }
    return d;
}

bool ProductSet::splits_at(std::size_t l1) const {
    if (l1 == 0 || l1 == dim()) return true;
    for (auto o : offsets())
        if (o == l1) return true;
    return false;
}

ProductSet ProductSet::slice(std::size_t first, std::size_t last) const {
    if (!splits_at(first) || !splits_at(last)) throw ValidationError("set does not split at the requested index");
    ProductSet out;
    auto off = offsets();
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (off[i] >= first && off[i] + factors[i].dim() <= last) out.factors.push_back(factors[i]);
    return out;
}

bool ProductSet::is_polyhedral_convex() const {
    for (auto& f : factors)
        if (f.set.pieces.size() != 1) return false;
    return true;
}

ProductSet ProductSet::nonpositive(std::size_t n) {
    ProductSet s;
    s.factors.assign(n, SetFactor::nonpositive());
    return s;
}

ProductSet ProductSet::zero(std::size_t n) {
    ProductSet s;
    s.factors.assign(n, SetFactor::zero());
    return s;
}

ProductSet ProductSet::of(const PolyUnion& u) {
    ProductSet s;
    s.factors.push_back(SetFactor::general(u));
    return s;
}

ParamSet ParamSet::full() { return {}; }

ParamSet ParamSet::polyhedral(Polyhedron p) {
    ParamSet s;
    s.variant = Variant::polyhedron;
    s.poly = std::move(p);
    return s;
}

ParamSet ParamSet::smooth(FuncVec h) {
    if (h.decision_dim || h.multiplier_dim) throw ValidationError("parameter constraints may depend on parameters only");
    ParamSet s;
    s.variant = Variant::smooth_inequalities;
    s.h = std::move(h);
    return s;
}

bool ParamSet::contains(const RVector& p) const {
    switch (variant) {
        case Variant::full_space: return true;
        case Variant::polyhedron: return poly.contains(p);
        case Variant::smooth_inequalities: {
            auto r = eval(h, p);
            if (r.exact) return std::all_of(r.value.begin(), r.value.end(), [](const Rational& v) { return v <= 0; });
            return std::all_of(r.approx.begin(), r.approx.end(), [](double v) { return v <= 0; });
        }
    }
    return false;
}

bool ParamSet::contains(const std::vector<double>& p) const {
    switch (variant) {
        case Variant::full_space: return true;
        case Variant::polyhedron:
            for (std::size_t i = 0; i < poly.A.rows(); ++i) {
                double s = 0;
                for (std::size_t j = 0; j < p.size(); ++j) s += to_double(poly.A(i, j)) * p[j];
                if (s > to_double(poly.b[i]) + 1e-12) return false;
            }
            return true;
        case Variant::smooth_inequalities: {
            auto v = eval_double(h, p);
            return std::all_of(v.begin(), v.end(), [](double x) { return x <= 1e-12; });
        }
    }
    return false;
}

void ConstraintSystem::validate() const {
    g.validate();
    if (g.multiplier_dim) throw ValidationError("constraint maps take parameters and decisions only");
    if (p_ref.size() != g.param_dim) throw ValidationError("reference parameter has the wrong dimension");
    if (x_ref.size() != g.decision_dim) throw ValidationError("reference decision has the wrong dimension");
    if (C.dim() != g.size())
        throw ValidationError("set dimension " + std::to_string(C.dim()) + " differs from the number of constraint functions " +
                              std::to_string(g.size()));
    if (split_l1 > g.size()) throw ValidationError("split index exceeds the number of constraint functions");
    if (!C.splits_at(split_l1)) throw ValidationError("set does not decompose as a product at the split index");
    if (P.variant == ParamSet::Variant::polyhedron && P.poly.dim != g.param_dim)
        throw ValidationError("parameter polyhedron has the wrong dimension");
    if (P.variant == ParamSet::Variant::smooth_inequalities && P.h.param_dim != g.param_dim)
        throw ValidationError("parameter constraints have the wrong dimension");
    if (!P.contains(p_ref)) throw ValidationError("reference parameter is not in the parameter set");
    if (user_direction_cone && user_direction_cone->dim != g.size())
        throw ValidationError("direction cone has the wrong dimension");
    auto r = eval(g, reference_point());
    if (!r.exact) throw ValidationError("constraint values at the reference pair are irrational");
    if (!C.contains(r.value)) {
        std::string msg = "reference value " + to_string(r.value) + " is not in the set;";
        auto off = C.offsets();
        for (std::size_t i = 0; i < C.factors.size(); ++i) {
            const auto& f = C.factors[i];
            RVector z = slice_vec(r.value, off[i], f.dim());
            for (std::size_t k = 0; k < f.set.pieces.size(); ++k) {
                auto d = project_point(f.set.pieces[k], z).squared_distance;
                if (d != 0)
                    msg += " factor " + std::to_string(i + 1) + " piece " + std::to_string(k + 1) +
                           " squared distance " + to_string(d) + ";";
            }
        }
        throw ValidationError(msg);
    }
}

RVector ConstraintSystem::reference_value() const { return eval_exact(g, reference_point()); }
RMatrix ConstraintSystem::jac_x() const { return jacobian(g, reference_point(), Wrt::decision); }
RMatrix ConstraintSystem::jac_p() const { return jacobian(g, reference_point(), Wrt::param); }

ConstraintSystem ConstraintSystem::block(std::size_t first, std::size_t last) const {
    ConstraintSystem out = *this;
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < last; ++i) idx.push_back(i);
    out.g = g.select(idx);
    out.C = C.slice(first, last);
    out.split_l1 = 0;
    out.user_direction_cone.reset();
    return out;
}

namespace {

void collect_params(const Expr& e, std::set<std::size_t>& used) {
    if (e.kind() == Expr::Kind::variable && e.var_kind() == VarKind::param) used.insert(e.var_index());
    for (auto& c : e.children()) collect_params(c, used);
}

}  // namespace

ConstraintSystem ConstraintSystem::drop_unused_params(std::vector<std::size_t>* kept_out) const {
    std::set<std::size_t> used;
    for (auto& c : g.components) collect_params(c, used);
    if (P.variant == ParamSet::Variant::smooth_inequalities)
        for (auto& c : P.h.components) collect_params(c, used);
    if (P.variant == ParamSet::Variant::polyhedron)
        for (std::size_t i = 0; i < P.poly.A.rows(); ++i)
            for (std::size_t j = 0; j < P.poly.A.cols(); ++j)
                if (P.poly.A(i, j) != 0) used.insert(j);
    std::vector<std::size_t> kept(used.begin(), used.end());
    if (kept_out) *kept_out = kept;
    std::vector<std::size_t> new_index(g.param_dim, 0);
    for (std::size_t k = 0; k < kept.size(); ++k) new_index[kept[k]] = k;
    auto remap = [&](VarKind kind, std::size_t i) {
        return Expr::variable(kind, kind == VarKind::param ? new_index[i] : i);
    };
    ConstraintSystem out = *this;
    for (auto& c : out.g.components) c = substitute(c, remap);
    out.g.param_dim = kept.size();
    out.p_ref.clear();
    for (auto k : kept) out.p_ref.push_back(p_ref[k]);
    if (P.variant == ParamSet::Variant::smooth_inequalities) {
        for (auto& c : out.P.h.components) c = substitute(c, remap);
        out.P.h.param_dim = kept.size();
    }
    if (P.variant == ParamSet::Variant::polyhedron)
        out.P.poly = Polyhedron(P.poly.A.select_cols(kept), P.poly.b, kept.size());
    out.user_direction_cone.reset();
    return out;
}

HCone tangent_cone_P(const ConstraintSystem& sys) {
    const std::size_t m = sys.param_dim();
    switch (sys.P.variant) {
        case ParamSet::Variant::full_space: return HCone(m);
        case ParamSet::Variant::polyhedron: return sys.P.poly.tangent(sys.p_ref);
        case ParamSet::Variant::smooth_inequalities: {
            RVector hv = eval_exact(sys.P.h, sys.p_ref);
            RMatrix Jh = jacobian(sys.P.h, sys.p_ref, Wrt::param);
            HCone t(m);
            for (std::size_t i = 0; i < hv.size(); ++i) {
                if (hv[i] > 0) throw DomainError("reference parameter violates a parameter constraint");
                if (hv[i] == 0) t.add_ineq(Jh.row(i));
            }
            return t;
        }
    }
    throw Error("unsupported parameter set");
}

DirectionCone image_derivative_cone(const ConstraintSystem& sys) {
    DirectionCone d;
    if (sys.user_direction_cone) {
        d.cone = *sys.user_direction_cone;
        d.provenance = DirectionCone::Provenance::user_supplied;
        return d;
    }
    RMatrix Jp = sys.jac_p();
    d.cone = canonical(image(Jp, hcone_to_vcone(tangent_cone_P(sys))));
    d.may_be_strict_subset = rank(Jp) < sys.param_dim();
    return d;
}

}  // namespace robstab

#include "robstab/order2.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace robstab {

CurvatureValue CurvatureValue::finite(const Rational& v, Method m) {
    CurvatureValue c;
    c.kind = Kind::finite;
    c.value = v;
    c.approx = to_double(v);
    c.method = m;
    return c;
}

CurvatureValue CurvatureValue::infinite(bool positive, Method m) {
    CurvatureValue c;
    c.kind = positive ? Kind::pos_inf : Kind::neg_inf;
    c.approx = positive ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    c.method = m;
    return c;
}

std::string to_string(const CurvatureValue& c) {
    switch (c.kind) {
        case CurvatureValue::Kind::neg_inf: return "-inf";
        case CurvatureValue::Kind::pos_inf: return "+inf";
        case CurvatureValue::Kind::finite: break;
    }
    if (c.method == CurvatureValue::Method::sampled) {
        std::ostringstream os;
        os << c.approx << " +- " << c.tolerance;
        return os.str();
    }
    return to_string(c.value);
}

namespace {

using Method = CurvatureValue::Method;

constexpr double kActiveTol = 1e-15;

// b_i = <Hess q_i v, v>
RVector curvature_terms(const FuncVec& q, const RVector& z, const RVector& v) {
    RVector b(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        RMatrix H = hessian_form(q, unit(q.size(), i), z);
        b[i] = dot(v, H * v);
    }
    return b;
}

struct Range {
    LpStatus lo_status, hi_status;
    Rational lo, hi;
    RVector argmin;
};

// Range of c.mu over {mu in K, J^T mu = lambda}; nullopt when empty.
std::optional<Range> range_over(const HCone& K, const RMatrix& J, const RVector& lambda, const RVector& c) {
    RMatrix E = K.eq;
    RVector e(K.eq.rows(), Rational(0));
    for (std::size_t j = 0; j < J.cols(); ++j) {
        E.append_row(J.col(j));
        e.push_back(lambda[j]);
    }
    RVector b(K.ineq.rows(), Rational(0));
    LpResult hi = lp_maximize(c, K.ineq, b, E, e);
    if (hi.status == LpStatus::infeasible) return std::nullopt;
    LpResult lo = lp_maximize(-c, K.ineq, b, E, e);
    Range r{lo.status, hi.status, 0, 0, lo.x};
    if (lo.status == LpStatus::optimal) r.lo = -lo.value;
    if (hi.status == LpStatus::optimal) r.hi = hi.value;
    return r;
}

std::vector<double> dvec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

bool contains_double(const PolyUnion& Q, const std::vector<double>& y, double tol) {
    for (const auto& p : Q.pieces) {
        bool in = true;
        for (std::size_t r = 0; r < p.A.rows() && in; ++r) {
            double s = -to_double(p.b[r]);
            for (std::size_t j = 0; j < y.size(); ++j) s += to_double(p.A(r, j)) * y[j];
            if (s > tol) in = false;
        }
        if (in) return true;
    }
    return false;
}

// min ||G nu - target|| over nu >= 0 (columns of G are generators)
double cone_distance(const Eigen::MatrixXd& G, const Eigen::VectorXd& target) {
    const auto k = static_cast<std::size_t>(G.cols());
    double best = target.norm();
    if (k == 0) return best;
    for (std::size_t mask = 1; mask < (std::size_t{1} << std::min<std::size_t>(k, 16)); ++mask) {
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < k; ++j)
            if (mask >> j & 1) cols.push_back(static_cast<Eigen::Index>(j));
        Eigen::MatrixXd S(G.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t t = 0; t < cols.size(); ++t) S.col(static_cast<Eigen::Index>(t)) = G.col(cols[t]);
        Eigen::VectorXd nu = S.completeOrthogonalDecomposition().solve(target);
        if (nu.minCoeff() < -1e-12) continue;
        best = std::min(best, (S * nu - target).norm());
    }
    return best;
}

}  // namespace

LowerCurvature lower_curvature_polyhedral(const SubamenableRep& rep, const RVector& lambda, const RVector& v) {
    const RVector qbar = eval_exact(rep.q, rep.zbar);
    if (!rep.Q.contains(qbar)) throw DomainError("reference point is outside the set");
    const RMatrix J = jacobian(rep.q, rep.zbar, Wrt::decision);
    Stratification strat(local_tangent(rep.Q, qbar));
    const auto normals = strat.normals_along(J * v);
    if (normals.empty()) throw DomainError("direction is not tangent");
    const RVector b = curvature_terms(rep.q, rep.zbar, v);
    const RVector c = Rational(-1, 2) * b;
    LowerCurvature out;
    bool have = false;
    auto consider = [&](const CurvatureValue& cv, const RVector& mu) {
        out.candidates.push_back(cv);
        out.multipliers.push_back(mu);
        if (!have) {
            out.value = cv;
            have = true;
            return;
        }
        const bool differs = cv.kind != out.value.kind || (cv.is_finite() && cv.value != out.value.value);
        if (differs) out.ambiguous = true;
        const bool smaller = cv.kind == CurvatureValue::Kind::neg_inf ||
                             (cv.is_finite() && (out.value.kind == CurvatureValue::Kind::pos_inf ||
                                                 (out.value.is_finite() && cv.value < out.value.value)));
        if (smaller) out.value = cv;
    };
    for (const auto& K : normals) {
        auto r = range_over(K, J, lambda, c);
        if (!r) continue;
        if (r->lo_status == LpStatus::unbounded) {
            consider(CurvatureValue::infinite(false, Method::lower_formula), r->argmin);
        } else {
            consider(CurvatureValue::finite(r->lo, Method::lower_formula), r->argmin);
        }
        if (r->hi_status == LpStatus::unbounded) {
            out.ambiguous = true;
        } else if (r->lo_status == LpStatus::optimal && r->hi != r->lo) {
            out.ambiguous = true;
            out.candidates.push_back(CurvatureValue::finite(r->hi, Method::lower_formula));
        }
    }
    if (!have) out.value = CurvatureValue::infinite(true, Method::lower_formula);
    return out;
}

UpperCurvatureBound upper_curvature_bound_convex(const SubamenableRep& rep, const RVector& lambda, const RVector& v) {
    if (rep.Q.pieces.size() != 1) throw DomainError("upper curvature bound needs a convex polyhedron");
    if (dot(lambda, v) != 0) throw DomainError("multiplier is not orthogonal to the direction");
    const RVector qbar = eval_exact(rep.q, rep.zbar);
    const Polyhedron& P = rep.Q.pieces[0];
    if (!P.contains(qbar)) throw DomainError("reference point is outside the set");
    const RMatrix J = jacobian(rep.q, rep.zbar, Wrt::decision);
    const HCone N = polar(P.tangent(qbar));
    UpperCurvatureBound out;
    RVector b = curvature_terms(rep.q, rep.zbar, v);
    RMatrix E = N.eq;
    RVector e(N.eq.rows(), Rational(0));
    for (std::size_t j = 0; j < J.cols(); ++j) {
        E.append_row(J.col(j));
        e.push_back(lambda[j]);
    }
    LpResult r = lp_maximize(b, N.ineq, RVector(N.ineq.rows(), Rational(0)), E, e);
    switch (r.status) {
        case LpStatus::infeasible:
            out.sup = CurvatureValue::infinite(false, Method::upper_bound_formula);
            out.bound = CurvatureValue::infinite(true, Method::upper_bound_formula);
            break;
        case LpStatus::unbounded:
            out.sup = CurvatureValue::infinite(true, Method::upper_bound_formula);
            out.bound = CurvatureValue::infinite(false, Method::upper_bound_formula);
            break;
        case LpStatus::optimal:
            out.sup = CurvatureValue::finite(r.value, Method::upper_bound_formula);
            out.bound = CurvatureValue::finite(Rational(-1, 2) * r.value, Method::upper_bound_formula);
            break;
    }
    return out;
}

CurvatureValue second_order_tangent_sup(const SubamenableRep& rep, const RVector& lambda, const RVector& v) {
    const RVector qbar = eval_exact(rep.q, rep.zbar);
    const RMatrix J = jacobian(rep.q, rep.zbar, Wrt::decision);
    const RVector b = curvature_terms(rep.q, rep.zbar, v);
    const auto pieces = second_order_tangent_set(rep.Q, qbar, J * v);
    std::optional<Rational> best;
    for (const auto& K : pieces) {
        // K (J w + b) rows
        RMatrix A = K.ineq * J, E = K.eq * J;
        RVector ab = -(K.ineq * b), eb = -(K.eq * b);
        LpResult r = lp_maximize(lambda, A, ab, E, eb);
        if (r.status == LpStatus::unbounded) return CurvatureValue::infinite(true, Method::second_order_tangent);
        if (r.status == LpStatus::optimal && (!best || r.value > *best)) best = r.value;
    }
    if (!best) return CurvatureValue::infinite(false, Method::second_order_tangent);
    return CurvatureValue::finite(Rational(1, 2) * *best, Method::second_order_tangent);
}

PreimageSet::PreimageSet(SubamenableRep rep) : rep_(std::move(rep)) {
    const std::size_t s = rep_.q.decision_dim;
    for (std::size_t i = 0; i < rep_.Q.pieces.size(); ++i) {
        const std::size_t m = rep_.Q.pieces[i].A.rows();
        for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
            Face f{i, {}};
            for (std::size_t r = 0; r < m; ++r)
                if (mask >> r & 1) f.rows.push_back(r);
            if (f.rows.size() <= s) faces_.push_back(f);
        }
    }
}

bool PreimageSet::contains(const std::vector<double>& z) const {
    return contains_double(rep_.Q, eval_double(rep_.q, z), 1e-12);
}

std::vector<std::vector<double>> PreimageSet::sample_near(const std::vector<double>& center, double radius, int count,
                                                          std::mt19937_64& rng) const {
    const std::size_t s = dim();
    std::normal_distribution<double> gauss(0, 1);
    std::uniform_real_distribution<double> unif(0, 1);
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(s));
    std::vector<std::vector<double>> out;
    for (int k = 0; k < count; ++k) {
        const Face& face = faces_[static_cast<std::size_t>(k) % faces_.size()];
        Eigen::VectorXd dir(static_cast<Eigen::Index>(s));
        for (auto& d : dir) d = gauss(rng);
        Eigen::VectorXd z = c + dir.normalized() * radius * std::pow(unif(rng), 1.0 / static_cast<double>(s));
        const Polyhedron& P = rep_.Q.pieces[face.piece];
        const auto m = static_cast<Eigen::Index>(face.rows.size());
        auto residual = [&](const Eigen::VectorXd& at, Eigen::MatrixXd* G) {
            auto zv = dvec(at);
            auto qv = eval_double(rep_.q, zv);
            auto Jq = jacobian_double(rep_.q, zv, Wrt::decision);
            Eigen::VectorXd res(m);
            if (G) G->resize(m, static_cast<Eigen::Index>(s));
            for (Eigen::Index a = 0; a < m; ++a) {
                const std::size_t r = face.rows[static_cast<std::size_t>(a)];
                double val = -to_double(P.b[r]);
                for (std::size_t j = 0; j < qv.size(); ++j) val += to_double(P.A(r, j)) * qv[j];
                res[a] = val;
                if (!G) continue;
                for (std::size_t col = 0; col < s; ++col) {
                    double g = 0;
                    for (std::size_t j = 0; j < qv.size(); ++j) g += to_double(P.A(r, j)) * Jq[j][col];
                    (*G)(a, static_cast<Eigen::Index>(col)) = g;
                }
            }
            return res;
        };
        if (m > 0) {
            for (int it = 0; it < 40; ++it) {
                Eigen::MatrixXd G;
                Eigen::VectorXd res = residual(z, &G);
                Eigen::VectorXd step = G.completeOrthogonalDecomposition().solve(res);
                z -= step;
                if (step.norm() <= 1e-14 * radius) break;
            }
            if (residual(z, nullptr).norm() > std::min(1e-9 * radius, 1e-16)) continue;
        }
        if ((z - c).norm() > radius) continue;
        auto zv = dvec(z);
        if (contains(zv)) out.push_back(std::move(zv));
    }
    return out;
}

double PreimageSet::normal_distance(const std::vector<double>& z, const std::vector<double>& lambda) const {
    const auto y = eval_double(rep_.q, z);
    const auto Jq = jacobian_double(rep_.q, z, Wrt::decision);
    const std::size_t s = dim();
    const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(lambda.data(), static_cast<Eigen::Index>(s));
    double worst = -1;
    for (const auto& P : rep_.Q.pieces) {
        std::vector<Eigen::VectorXd> gens;
        bool inside = true;
        for (std::size_t r = 0; r < P.A.rows(); ++r) {
            double val = -to_double(P.b[r]);
            for (std::size_t j = 0; j < y.size(); ++j) val += to_double(P.A(r, j)) * y[j];
            if (val > kActiveTol) inside = false;
            if (std::abs(val) <= kActiveTol) {
                Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s));
                for (std::size_t col = 0; col < s; ++col)
                    for (std::size_t j = 0; j < y.size(); ++j) g[static_cast<Eigen::Index>(col)] += to_double(P.A(r, j)) * Jq[j][col];
                gens.push_back(g);
            }
        }
        if (!inside) continue;
        Eigen::MatrixXd G(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(gens.size()));
        for (std::size_t t = 0; t < gens.size(); ++t) G.col(static_cast<Eigen::Index>(t)) = gens[t];
        worst = std::max(worst, cone_distance(G, target));
    }
    return worst < 0 ? std::numeric_limits<double>::infinity() : worst;
}

SampledCurvature curvature_sampling_oracle(const SampledSet& omega, const std::vector<double>& lambda,
                                           const std::vector<double>& zbar, const std::vector<double>& v,
                                           CurvatureKind kind, const CurvatureSchedule& sched) {
    const std::size_t s = omega.dim();
    std::mt19937_64 rng(sched.seed);
    std::uniform_real_distribution<double> unif(0, 1);
    SampledCurvature out;
    for (double eps : sched.eps) {
        const bool upper = kind == CurvatureKind::upper;
        double best = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        bool any = false;
        for (int t = 0; t < sched.taus; ++t) {
            const double tau = eps * std::pow(10.0, -1.0 - unif(rng));
            std::vector<double> center(s);
            for (std::size_t i = 0; i < s; ++i) center[i] = zbar[i] + tau * v[i];
            for (const auto& z : omega.sample_near(center, 0.999 * tau * eps, sched.samples_per_tau, rng)) {
                double quot = 0;
                for (std::size_t i = 0; i < s; ++i) quot += lambda[i] * ((z[i] - zbar[i]) / tau - v[i]);
                quot /= tau;
                if (!upper && omega.normal_distance(z, lambda) >= eps) continue;
                any = true;
                best = upper ? std::max(best, quot) : std::min(best, quot);
            }
        }
        out.per_eps.push_back(any ? best : std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<double> finite;
    for (double x : out.per_eps)
        if (std::isfinite(x)) finite.push_back(x);
    if (finite.empty()) {
        // no admissible points: sup over nothing / inf over nothing
        out.value = CurvatureValue::infinite(kind == CurvatureKind::lower, Method::sampled);
        return out;
    }
    for (std::size_t i = 1; i < finite.size(); ++i) {
        const bool ok = kind == CurvatureKind::upper ? finite[i] <= finite[i - 1] + 1e-9 : finite[i] >= finite[i - 1] - 1e-9;
        out.monotone = out.monotone && ok;
    }
    out.value.kind = CurvatureValue::Kind::finite;
    out.value.method = Method::sampled;
    out.value.approx = finite.back();
    out.value.tolerance = finite.size() > 1 ? std::abs(finite.back() - finite[finite.size() - 2]) : sched.eps.back();
    out.value.value = rationalize(finite.back());
    return out;
}

std::optional<RVector> nonnegative_direction(const RMatrix& Q) {
    const std::size_t n = Q.rows();
    if (n == 0) return std::nullopt;
    // A = -Q; look for y with y^T A y <= 0 by symmetric elimination
    if (Q(0, 0) >= 0) return unit(n, 0);
    const Rational a00 = -Q(0, 0);
    RMatrix S(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j < n; ++j) S(i - 1, j - 1) = -Q(i, j) - (Q(i, 0) * Q(0, j)) / a00;
    auto y = nonnegative_direction(-S);
    if (!y) return std::nullopt;
    Rational s = 0;
    for (std::size_t i = 1; i < n; ++i) s += -Q(i, 0) * (*y)[i - 1];
    RVector out{-s / a00};
    out.insert(out.end(), y->begin(), y->end());
    return primitive(out);
}

namespace {

struct SecondOrderData {
    std::size_t m = 0, n = 0, l = 0;
    RMatrix Jz, Jp, Jx;
    RVector point;      // (p, x)
    HCone W;            // admissible parameter directions
    FuncVec h;          // active parameter constraints (maybe empty)
    RMatrix Jh;         // rows of active constraints
};

SecondOrderData prepare(const ConstraintSystem& sys, bool require_binding) {
    SecondOrderData d;
    d.m = sys.param_dim();
    d.n = sys.decision_dim();
    d.l = sys.image_dim();
    d.Jp = sys.jac_p();
    d.Jx = sys.jac_x();
    d.Jz = hstack(d.Jp, d.Jx);
    d.point = sys.reference_point();
    d.W = tangent_cone_P(sys);
    d.h.param_dim = d.m;
    d.Jh = RMatrix(0, d.m);
    switch (sys.P.variant) {
        case ParamSet::Variant::full_space: break;
        case ParamSet::Variant::polyhedron: {
            const auto& P = sys.P.poly;
            for (auto r : P.active_rows(sys.p_ref)) {
                Expr e = Expr::constant(-P.b[r]);
                for (std::size_t j = 0; j < d.m; ++j)
                    if (P.A(r, j) != 0) e = e + Expr::constant(P.A(r, j)) * Expr::variable(VarKind::param, j);
                d.h.components.push_back(e);
                d.Jh.append_row(P.A.row(r));
            }
            break;
        }
        case ParamSet::Variant::smooth_inequalities: {
            const RVector hv = eval_exact(sys.P.h, sys.p_ref);
            const RMatrix J = jacobian(sys.P.h, sys.p_ref, Wrt::param);
            std::vector<std::size_t> act;
            for (std::size_t i = 0; i < hv.size(); ++i) {
                if (hv[i] == 0) {
                    act.push_back(i);
                    d.Jh.append_row(J.row(i));
                } else if (require_binding) {
                    throw DomainError("parameter constraint " + std::to_string(i + 1) + " is not binding at the reference");
                }
            }
            d.h = sys.P.h.select(act);
            break;
        }
    }
    return d;
}

enum class Outcome { killed_exact, killed_grid, survives, unknown };

struct Decision {
    Outcome outcome = Outcome::unknown;
    RVector z, mu;
};

// Multipliers for the parameter constraints: mu >= 0 with Jh^T mu = target.
struct MuSet {
    bool empty = true;
    std::optional<RVector> unique;
    std::size_t k = 0;
    RMatrix E;  // Jh^T
    RVector target;
};

MuSet mu_set(const SecondOrderData& d, const RVector& lambda) {
    MuSet s;
    s.k = d.Jh.rows();
    s.target = d.Jp.transpose() * lambda;
    s.E = s.k ? d.Jh.transpose() : RMatrix(d.m, 0);
    if (s.k == 0) {
        s.empty = !is_zero(s.target);
        if (!s.empty) return s;
        s.unique = RVector{};
        return s;
    }
    LinearSystem sys(s.k);
    for (std::size_t i = 0; i < s.k; ++i) sys.add_weak(-unit(s.k, i));
    for (std::size_t r = 0; r < d.m; ++r) sys.add_eq(s.E.row(r), s.target[r]);
    auto x = lp_feasible(sys);
    s.empty = !x;
    if (!x) return s;
    if (rank(s.E) == s.k) s.unique = *x;
    return s;
}

RMatrix embed_params(const RMatrix& H, std::size_t total) {
    RMatrix out(total, total);
    for (std::size_t i = 0; i < H.rows(); ++i)
        for (std::size_t j = 0; j < H.cols(); ++j) out(i, j) = H(i, j);
    return out;
}

struct Evaluator {
    const SecondOrderData& d;
    RMatrix G;  // Hessian of <lambda, g> in (p, x)
    const MuSet& mus;
    std::vector<RMatrix> Hj;  // Hessians of active h rows

    // z^T G z - max over mu of w^T H_mu w; nullopt when the maximum is +inf
    std::optional<Rational> value(const RVector& z) const {
        Rational v = dot(z, G * z);
        if (mus.k == 0) return v;
        RVector w(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d.m));
        RVector c(mus.k);
        for (std::size_t j = 0; j < mus.k; ++j) c[j] = dot(w, Hj[j] * w);
        if (mus.unique) return v - dot(c, *mus.unique);
        RMatrix A(0, mus.k);
        for (std::size_t i = 0; i < mus.k; ++i) A.append_row(-unit(mus.k, i));
        LpResult r = lp_maximize(c, A, zeros(mus.k), mus.E, mus.target);
        if (r.status == LpStatus::unbounded) return std::nullopt;
        return v - r.value;
    }
};

std::vector<RVector> generators(const VCone& v) {
    std::vector<RVector> g = v.rays;
    for (const auto& l : v.lineality) {
        g.push_back(l);
        g.push_back(-l);
    }
    return g;
}

Decision grid_decide(const Evaluator& ev, const std::vector<RVector>& gens, bool& grid_used) {
    grid_used = true;
    Decision dec;
    const std::size_t k = gens.size();
    const std::size_t dim = gens.front().size();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0, 1);
    std::vector<std::vector<double>> coeffs;
    if (k == 1) {
        coeffs.push_back({1.0});
    } else if (k == 2) {
        for (int i = 0; i < 64; ++i) coeffs.push_back({1.0 - i / 63.0, i / 63.0});
    } else {
        std::size_t count = 1;
        for (std::size_t i = 0; i + 1 < k && count < 4096; ++i) count *= 64;
        count = std::min<std::size_t>(count, 4096);
        for (std::size_t t = 0; t < count; ++t) {
            std::vector<double> e(k);
            double sum = 0;
            for (auto& x : e) {
                x = -std::log(std::max(unif(rng), 1e-300));
                sum += x;
            }
            for (auto& x : e) x /= sum;
            coeffs.push_back(e);
        }
    }
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<double> worst_alpha;
    auto evaluate = [&](const std::vector<double>& alpha) -> bool {
        RVector z = zeros(dim);
        for (std::size_t j = 0; j < k; ++j) z = z + rationalize(std::max(alpha[j], 0.0), 4096) * gens[j];
        if (is_zero(z)) return false;
        auto val = ev.value(z);
        if (!val) return false;
        if (*val >= 0) {
            dec.outcome = Outcome::survives;
            dec.z = primitive(z);
            return true;
        }
        const double norm = to_double(squared_norm(z));
        const double ratio = to_double(*val) / norm;
        if (ratio > worst) {
            worst = ratio;
            worst_alpha = alpha;
        }
        return false;
    };
    for (const auto& a : coeffs)
        if (evaluate(a)) return dec;
    for (double scale : {1.0 / 64, 1.0 / 4096}) {
        if (worst_alpha.empty()) break;
        const auto base = worst_alpha;
        for (int t = 0; t < 64; ++t) {
            std::vector<double> a = base;
            for (auto& x : a) x = std::max(0.0, x + scale * (2 * unif(rng) - 1));
            if (evaluate(a)) return dec;
        }
    }
    dec.outcome = Outcome::killed_grid;
    return dec;
}

// Decides whether every z != 0 in Z admits mu making the combined form negative.
Decision decide(const Evaluator& ev, const HCone& Z, bool& grid_used) {
    Decision dec;
    const VCone gens_v = hcone_to_vcone(Z);
    if (gens_v.is_zero()) {
        dec.outcome = Outcome::killed_exact;
        return dec;
    }
    const auto gens = generators(gens_v);
    if (ev.mus.empty) {
        dec.outcome = Outcome::survives;
        dec.z = gens.front();
        return dec;
    }
    std::vector<RVector> span = gens_v.lineality;
    span.insert(span.end(), gens_v.rays.begin(), gens_v.rays.end());
    const auto basis = row_basis(span, Z.dim);
    RMatrix B(Z.dim, basis.size());
    for (std::size_t c = 0; c < basis.size(); ++c)
        for (std::size_t r = 0; r < Z.dim; ++r) B(r, c) = basis[c][r];
    std::vector<RVector> mu_candidates;
    if (ev.mus.unique) {
        mu_candidates.push_back(*ev.mus.unique);
    } else {
        RMatrix A(0, ev.mus.k);
        for (std::size_t i = 0; i < ev.mus.k; ++i) A.append_row(-unit(ev.mus.k, i));
        for (const auto& g : gens) {
            RVector w(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(ev.d.m));
            RVector c(ev.mus.k);
            for (std::size_t j = 0; j < ev.mus.k; ++j) c[j] = dot(w, ev.Hj[j] * w);
            LpResult r = lp_maximize(c, A, zeros(ev.mus.k), ev.mus.E, ev.mus.target);
            if (r.status == LpStatus::optimal &&
                std::find(mu_candidates.begin(), mu_candidates.end(), r.x) == mu_candidates.end())
                mu_candidates.push_back(r.x);
        }
    }
    for (const auto& mu : mu_candidates) {
        RMatrix Hmu(ev.d.m, ev.d.m);
        for (std::size_t j = 0; j < mu.size(); ++j) Hmu = Hmu + ev.Hj[j] * mu[j];
        const RMatrix Q = ev.G - embed_params(Hmu, Z.dim);
        const RMatrix R = B.transpose() * Q * B;
        auto y = nonnegative_direction(R);
        if (!y) {
            dec.outcome = Outcome::killed_exact;
            dec.mu = mu;
            return dec;
        }
        if (ev.mus.unique) {
            RVector z = B * *y;
            for (const RVector& cand : {z, RVector(-z)}) {
                if (Z.contains(cand)) {
                    dec.outcome = Outcome::survives;
                    dec.z = primitive(cand);
                    dec.mu = mu;
                    return dec;
                }
            }
        }
    }
    dec = grid_decide(ev, gens, grid_used);
    if (ev.mus.unique) dec.mu = *ev.mus.unique;
    return dec;
}

Verdict second_order_core(const ConstraintSystem& sys, const SecondOrderData& d, const std::vector<std::size_t>& targets,
                          const std::string& form_note) {
    ProductModel model(sys.C, sys.reference_value());
    std::vector<RMatrix> Hj;
    for (std::size_t j = 0; j < d.h.size(); ++j) Hj.push_back(hessian_form(d.h, unit(d.h.size(), j), sys.p_ref));
    const bool all_targets = targets.size() == d.l;
    std::map<std::size_t, std::vector<RVector>> lambda_cache;
    Verdict out;
    bool grid_used = false, gap = false;
    std::size_t examined = 0;
    model.for_each([&](const ProductModel::Stratum& s) {
        ++examined;
        auto it = lambda_cache.find(s.value_id);
        if (it == lambda_cache.end()) {
            LinearSystem ls(d.l);
            s.value.constrain(ls, 0);
            for (std::size_t j = 0; j < d.n; ++j) ls.add_eq(d.Jx.col(j));
            std::vector<RVector> gens;
            if (find_nonzero(ls, targets)) gens = generators(hcone_to_vcone(HCone(ls.weak, ls.eq, d.l)));
            it = lambda_cache.emplace(s.value_id, std::move(gens)).first;
        }
        if (it->second.empty()) return true;
        // directions (w, u) with w admissible and Jz (w,u) in the stratum closure
        HCone Z(d.m + d.n);
        for (std::size_t r = 0; r < d.W.ineq.rows(); ++r) {
            RVector row = d.W.ineq.row(r);
            row.resize(d.m + d.n, Rational(0));
            Z.add_ineq(row);
        }
        for (std::size_t r = 0; r < d.W.eq.rows(); ++r) {
            RVector row = d.W.eq.row(r);
            row.resize(d.m + d.n, Rational(0));
            Z.add_eq(row);
        }
        const RMatrix ci = s.closure.ineq * d.Jz, ce = s.closure.eq * d.Jz;
        for (std::size_t r = 0; r < ci.rows(); ++r) Z.add_ineq(ci.row(r));
        for (std::size_t r = 0; r < ce.rows(); ++r) Z.add_eq(ce.row(r));
        if (is_zero_cone(Z)) return true;
        for (const auto& lam : it->second) {
            bool target_hit = false;
            for (auto t : targets) target_hit = target_hit || lam[t] != 0;
            const MuSet mus = mu_set(d, lam);
            Evaluator ev{d, hessian_form(sys.g, lam, d.point), mus, Hj};
            Decision dec = decide(ev, Z, grid_used);
            if (dec.outcome == Outcome::survives) {
                if (target_hit) {
                    out.grade = Grade::refuted;
                    out.add("w", RVector(dec.z.begin(), dec.z.begin() + static_cast<std::ptrdiff_t>(d.m)));
                    out.add("u", RVector(dec.z.begin() + static_cast<std::ptrdiff_t>(d.m), dec.z.end()));
                    out.add("lambda", lam);
                    if (!mus.empty && !dec.mu.empty()) out.add("mu", dec.mu);
                    out.note(mus.empty ? "no parameter multiplier matches the multiplier" : "combined form is nonnegative");
                    return false;
                }
                gap = true;
            }
        }
        return true;
    });
    if (out.refuted()) return out;
    out.note("strata examined: " + std::to_string(examined));
    out.note(form_note);
    if (gap && !all_targets) {
        out.grade = Grade::inconclusive;
        out.note("a multiplier generator with vanishing leading block is not excluded");
    } else {
        out.grade = grid_used ? Grade::verified_grid : Grade::verified;
    }
    return out;
}

Verdict existence_for(const ConstraintSystem& sys, const SecondOrderData& d) {
    ProductModel model(sys.C, sys.reference_value());
    const HCone D = vcone_to_hcone(image(d.Jp, hcone_to_vcone(d.W)));
    return check_existence_condition(d.Jx, model, D);
}

Verdict finish(Verdict scan, const Verdict& ex) {
    if (scan.refuted()) return scan;
    if (ex.refuted()) {
        Verdict v = ex;
        v.note("existence condition fails");
        return v;
    }
    if (ex.grade == Grade::verified_generators_only && scan.verified()) {
        scan.grade = Grade::verified_generators_only;
        scan.note("existence condition checked on generators only");
    }
    return scan;
}

std::vector<std::size_t> first_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

Verdict check_second_order_polyhedral(const ConstraintSystem& sys) {
    sys.validate();
    if (sys.P.variant != ParamSet::Variant::smooth_inequalities)
        throw DomainError("parameter set must be given by smooth inequalities");
    const auto d = prepare(sys, true);
    Verdict scan = second_order_core(sys, d, first_n(d.l), "parameter curvature through binding constraints");
    return finish(std::move(scan), existence_for(sys, d));
}

Verdict check_second_order_general(const ConstraintSystem& sys, const std::optional<SubsystemCertificate>& g2) {
    sys.validate();
    const auto d = prepare(sys, false);
    Verdict v = second_order_core(sys, d, first_n(sys.split_l1),
                                  "parameter curvature replaced by its convex upper bound; zero lower curvature of C");
    v = finish(std::move(v), existence_for(sys, d));
    if (sys.split_l1 < d.l) {
        if (g2) {
            v.note("trailing subsystem certified by " + g2->source);
        } else if (v.verified()) {
            v.grade = Grade::inconclusive;
            v.note("missing certificate for the trailing subsystem");
        }
    }
    return v;
}

Verdict check_subregularity_second_order(const FuncVec& f, const ProductSet& C, const RVector& x_ref) {
    if (f.param_dim != 0) throw DimensionError("subregularity check takes decision variables only");
    ConstraintSystem sys;
    sys.g = f;
    sys.C = C;
    sys.x_ref = x_ref;
    sys.split_l1 = f.size();
    sys.validate();
    const auto d = prepare(sys, false);
    Verdict v = second_order_core(sys, d, first_n(d.l), "zero lower curvature of C");
    if (v.refuted()) v.note("the second-order condition fails; subregularity itself is not decided");
    return v;
}

}  // namespace robstab

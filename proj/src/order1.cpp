#include "robstab/order1.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace robstab {

namespace {

RVector slice(const RVector& v, std::size_t off, std::size_t n) {
    return RVector(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + n));
}

// Cartesian product of per-factor cone lists.
std::vector<HCone> product_lists(const std::vector<std::vector<HCone>>& lists) {
    std::size_t total = 1;
    for (const auto& l : lists) {
        if (l.empty()) return {};
        total *= l.size();
        if (total > capacity().max_combos) throw CapacityError("product of cone unions exceeds capacity");
    }
    std::vector<HCone> out;
    std::vector<std::size_t> idx(lists.size(), 0);
    for (std::size_t t = 0; t < total; ++t) {
        std::vector<HCone> parts;
        for (std::size_t f = 0; f < lists.size(); ++f) parts.push_back(lists[f][idx[f]]);
        out.push_back(product(parts));
        for (std::size_t f = 0; f < lists.size(); ++f) {
            if (++idx[f] < lists[f].size()) break;
            idx[f] = 0;
        }
    }
    return out;
}

// {(v,u) : v + J u in K}
void constrain_image(LinearSystem& sys, const HCone& K, const RMatrix& J) {
    const std::size_t l = J.rows(), n = J.cols();
    auto lift = [&](const RVector& a) {
        RVector row = a;
        for (std::size_t j = 0; j < n; ++j) {
            Rational s = 0;
            for (std::size_t i = 0; i < l; ++i) s += a[i] * J(i, j);
            row.push_back(s);
        }
        return row;
    };
    for (std::size_t i = 0; i < K.ineq.rows(); ++i) sys.add_weak(lift(K.ineq.row(i)));
    for (std::size_t i = 0; i < K.eq.rows(); ++i) sys.add_eq(lift(K.eq.row(i)));
}

HCone image_cone(const HCone& K, const RMatrix& J) {
    LinearSystem sys(J.rows() + J.cols());
    constrain_image(sys, K, J);
    return HCone(sys.weak, sys.eq, J.rows() + J.cols());
}

// lambda in K with J^T lambda = 0
LinearSystem kernel_system(const HCone& K, const RMatrix& J) {
    LinearSystem sys(J.rows());
    K.constrain(sys, 0);
    for (std::size_t j = 0; j < J.cols(); ++j) sys.add_eq(J.col(j));
    return sys;
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

void check_polyhedral(const ProductSet& C) {
    for (const auto& f : C.factors)
        if (f.set.pieces.empty()) throw DomainError("set factor has no polyhedral pieces");
}

}  // namespace

ProductModel::ProductModel(const ProductSet& C, const RVector& z) {
    check_polyhedral(C);
    dim_ = C.dim();
    offsets_ = C.offsets();
    if (z.size() != dim_) throw DimensionError("point dimension does not match the set");
    for (std::size_t f = 0; f < C.factors.size(); ++f) {
        const auto& fac = C.factors[f];
        factors_.emplace_back(local_tangent(fac.set, slice(z, offsets_[f], fac.dim())));
        std::vector<HCone> distinct;
        std::vector<std::size_t> ids;
        for (const auto& s : factors_.back().strata()) {
            std::size_t k = 0;
            while (k < distinct.size() && !same_cone(distinct[k], s.normal_value)) ++k;
            if (k == distinct.size()) distinct.push_back(s.normal_value);
            ids.push_back(k);
        }
        values_.push_back(std::move(distinct));
        value_ids_.push_back(std::move(ids));
    }
    if (strata_count() > capacity().max_strata) throw CapacityError("product strata exceed capacity");
}

std::size_t ProductModel::strata_count() const {
    std::size_t total = 1;
    for (const auto& f : factors_) {
        total *= f.strata().size();
        if (total > capacity().max_strata) return total;
    }
    return total;
}

void ProductModel::for_each(const std::function<bool(const Stratum&)>& fn) const {
    const std::size_t k = factors_.size();
    std::vector<std::size_t> idx(k, 0);
    const std::size_t total = strata_count();
    for (std::size_t t = 0; t < total; ++t) {
        Stratum s;
        s.index = idx;
        std::vector<HCone> closures, values;
        std::size_t id = 0;
        s.is_origin = true;
        for (std::size_t f = 0; f < k; ++f) {
            const auto& fs = factors_[f].strata()[idx[f]];
            closures.push_back(fs.direction_cone);
            values.push_back(values_[f][value_ids_[f][idx[f]]]);
            id = id * values_[f].size() + value_ids_[f][idx[f]];
            s.is_origin = s.is_origin && fs.is_origin();
        }
        s.closure = product(closures);
        s.value = product(values);
        s.value_id = id;
        if (!fn(s)) return;
        for (std::size_t f = k; f-- > 0;) {
            if (++idx[f] < factors_[f].strata().size()) break;
            idx[f] = 0;
        }
    }
}

bool ProductModel::tangent_contains(const RVector& d) const {
    for (std::size_t f = 0; f < factors_.size(); ++f)
        if (!factors_[f].tangent().contains(slice(d, offsets_[f], factors_[f].dim()))) return false;
    return true;
}

std::vector<HCone> ProductModel::tangent_pieces() const {
    std::vector<std::vector<HCone>> lists;
    for (const auto& f : factors_) lists.push_back(f.tangent().pieces);
    return product_lists(lists);
}

std::vector<HCone> ProductModel::limiting_normals() const {
    std::vector<std::vector<HCone>> lists;
    for (const auto& f : values_) lists.push_back(f);
    return product_lists(lists);
}

std::vector<HCone> ProductModel::normals_along(const RVector& d) const {
    std::vector<std::vector<HCone>> lists;
    for (std::size_t f = 0; f < factors_.size(); ++f)
        lists.push_back(factors_[f].normals_along(slice(d, offsets_[f], factors_[f].dim())));
    return product_lists(lists);
}

std::optional<RVector> find_nonzero(const LinearSystem& sys, const std::vector<std::size_t>& coords) {
    for (auto i : coords) {
        for (int sg : {1, -1}) {
            LinearSystem s = sys;
            RVector row = zeros(sys.dim);
            row[i] = -sg;
            s.add_strict(row);
            if (auto x = lp_feasible(s)) return primitive(*x);
        }
    }
    return std::nullopt;
}

Verdict check_metric_regularity(const RMatrix& Jx, const ProductSet& C, const RVector& gbar) {
    ProductModel model(C, gbar);
    Verdict v;
    const auto targets = iota(Jx.rows());
    for (const auto& K : model.limiting_normals()) {
        if (auto lam = find_nonzero(kernel_system(K, Jx), targets)) {
            v.grade = Grade::refuted;
            v.add("lambda", *lam);
            v.note("nonzero multiplier in the kernel of the transposed decision Jacobian");
            return v;
        }
    }
    v.grade = Grade::verified;
    return v;
}

Verdict check_metric_regularity(const ConstraintSystem& sys) {
    sys.validate();
    return check_metric_regularity(sys.jac_x(), sys.C, sys.reference_value());
}

Verdict scan_first_order(const RMatrix& Jx, const ProductModel& model, const HCone& D,
                         const std::vector<std::size_t>& targets) {
    const std::size_t l = Jx.rows(), n = Jx.cols();
    std::map<std::size_t, std::optional<RVector>> lambda_cache;
    Verdict out;
    out.grade = Grade::verified;
    std::size_t examined = 0;
    model.for_each([&](const ProductModel::Stratum& s) {
        ++examined;
        auto it = lambda_cache.find(s.value_id);
        if (it == lambda_cache.end())
            it = lambda_cache.emplace(s.value_id, find_nonzero(kernel_system(s.value, Jx), targets)).first;
        if (!it->second) return true;
        LinearSystem dir(l + n);
        D.constrain(dir, 0);
        constrain_image(dir, s.closure, Jx);
        auto vu = find_nonzero(dir, iota(l + n));
        if (!vu) return true;
        RVector v = slice(*vu, 0, l), u = slice(*vu, l, n);
        out.grade = Grade::refuted;
        out.add("v", v);
        out.add("u", u);
        out.add("lambda", *it->second);
        out.add("direction", v + Jx * u);
        return false;
    });
    out.note("strata examined: " + std::to_string(examined));
    return out;
}

namespace {

// Projections of the tangent pieces onto the v coordinates.
std::vector<HCone> reachable_pieces(const RMatrix& Jx, const ProductModel& model) {
    std::vector<HCone> out;
    const auto coords = iota(Jx.rows());
    for (const auto& T : model.tangent_pieces()) out.push_back(project_cone(image_cone(T, Jx), coords));
    return out;
}

bool reachable(const RMatrix& Jx, const std::vector<HCone>& pieces, const RVector& v) {
    for (const auto& T : pieces) {
        LinearSystem sys(Jx.rows() + Jx.cols());
        constrain_image(sys, T, Jx);
        for (std::size_t i = 0; i < v.size(); ++i) sys.add_eq(unit(sys.dim, i), v[i]);
        if (lp_feasible(sys)) return true;
    }
    return false;
}

Verdict existence_by_sampling(const RMatrix& Jx, const ProductModel& model, const HCone& D) {
    Verdict out;
    const auto pieces = model.tangent_pieces();
    const VCone gens = hcone_to_vcone(D);
    std::vector<RVector> checks = gens.rays;
    for (const auto& l : gens.lineality) {
        checks.push_back(l);
        checks.push_back(-l);
    }
    for (const auto& g : checks) {
        if (!reachable(Jx, pieces, g)) {
            out.grade = Grade::refuted;
            out.add("v", primitive(g));
            return out;
        }
    }
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coef(0, 8);
    for (int t = 0; t < 10000 && !checks.empty(); ++t) {
        RVector v = zeros(Jx.rows());
        for (const auto& g : checks) v = v + Rational(coef(rng)) * g;
        if (is_zero(v)) continue;
        if (!reachable(Jx, pieces, v)) {
            out.grade = Grade::refuted;
            out.add("v", primitive(v));
            return out;
        }
    }
    out.grade = Grade::verified_generators_only;
    out.note("generators and random directions checked; decomposition exceeded capacity");
    return out;
}

}  // namespace

Verdict check_existence_condition(const RMatrix& Jx, const ProductModel& model, const HCone& D) {
    const std::size_t l = Jx.rows();
    Verdict out;
    if (is_zero_cone(D)) {
        out.grade = Grade::verified;
        out.note("direction cone is trivial");
        return out;
    }
    std::vector<HCone> proj;
    try {
        proj = reachable_pieces(Jx, model);
    } catch (const CapacityError&) {
        return existence_by_sampling(Jx, model, D);
    }
    for (std::size_t i = 0; i < proj.size(); ++i) {
        if (is_subset(D, proj[i])) {
            out.grade = Grade::verified;
            out.note("direction cone reachable within tangent piece " + std::to_string(i));
            return out;
        }
    }
    // D minus the union: pick one violated row per projection.
    std::size_t nodes = 0;
    std::optional<RVector> witness;
    std::function<bool(std::size_t, const LinearSystem&)> dfs = [&](std::size_t i, const LinearSystem& sys) {
        if (++nodes > capacity().max_combos) throw CapacityError("existence decomposition exceeds capacity");
        if (i == proj.size()) {
            witness = lp_feasible(sys);
            return witness.has_value();
        }
        std::vector<RVector> options;
        for (std::size_t r = 0; r < proj[i].ineq.rows(); ++r) options.push_back(-proj[i].ineq.row(r));
        for (std::size_t r = 0; r < proj[i].eq.rows(); ++r) {
            options.push_back(proj[i].eq.row(r));
            options.push_back(-proj[i].eq.row(r));
        }
        for (const auto& row : options) {
            LinearSystem next = sys;
            next.add_strict(row);
            if (!lp_feasible(next)) continue;
            if (dfs(i + 1, next)) return true;
        }
        return false;
    };
    LinearSystem base(l);
    D.constrain(base, 0);
    try {
        if (dfs(0, base)) {
            out.grade = Grade::refuted;
            out.add("v", primitive(*witness));
            out.note("no u places v + Jx u in any tangent piece");
            return out;
        }
    } catch (const CapacityError&) {
        return existence_by_sampling(Jx, model, D);
    }
    out.grade = Grade::verified;
    out.note("direction cone covered by the union of reachable pieces");
    return out;
}

Verdict check_existence_condition(const ConstraintSystem& sys, const DirectionCone& D) {
    sys.validate();
    ProductModel model(sys.C, sys.reference_value());
    const RMatrix Jx = sys.jac_x();
    Verdict v = check_existence_condition(Jx, model, vcone_to_hcone(D.cone));
    if (v.verified() && D.may_be_strict_subset) {
        Verdict full = check_existence_condition(Jx, model, HCone::full(Jx.rows()));
        if (!full.verified()) {
            v.grade = Grade::inconclusive;
            v.note("verified under computed direction cone");
        }
    }
    return v;
}

namespace {

// Min-norm u with d + J u in T, or with d + J u in lin(T) when along_lineality.
std::optional<RVector> min_norm_completion(const RMatrix& J, const HCone& T, const RVector& d, bool along_lineality) {
    const std::size_t n = J.cols();
    RMatrix A(0, n), E(0, n);
    RVector b, e;
    auto add = [&](const RVector& a, bool eq) {
        RVector row(n);
        for (std::size_t j = 0; j < n; ++j) {
            Rational s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * J(i, j);
            row[j] = s;
        }
        if (eq) {
            E.append_row(row);
            e.push_back(-dot(a, d));
        } else {
            A.append_row(row);
            b.push_back(-dot(a, d));
        }
    };
    for (std::size_t r = 0; r < T.ineq.rows(); ++r) add(T.ineq.row(r), along_lineality);
    for (std::size_t r = 0; r < T.eq.rows(); ++r) add(T.eq.row(r), true);
    auto p = project_onto(A, b, E, e, zeros(n));
    if (!p) return std::nullopt;
    return p->point;
}

}  // namespace

std::optional<RMatrix> linear_selection(const RMatrix& Jx, const ProductModel& model, const VCone& D) {
    const std::size_t l = Jx.rows(), n = Jx.cols();
    std::vector<RVector> basis;
    for (const auto& g : D.lineality) basis.push_back(g);
    for (const auto& g : D.rays) basis.push_back(g);
    if (basis.empty()) return RMatrix(n, l);
    RMatrix B(l, basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k)
        for (std::size_t i = 0; i < l; ++i) B(i, k) = basis[k][i];
    if (rank(B) < basis.size()) return std::nullopt;
    const auto Gi = inverse(B.transpose() * B);
    for (const auto& T : model.tangent_pieces()) {
        RMatrix U(n, basis.size());
        bool ok = true;
        for (std::size_t k = 0; k < basis.size() && ok; ++k) {
            auto u = min_norm_completion(Jx, T, basis[k], k < D.lineality.size());
            if (!u) {
                ok = false;
                break;
            }
            for (std::size_t j = 0; j < n; ++j) U(j, k) = (*u)[j];
        }
        if (!ok) continue;
        RMatrix K = U * (*Gi) * B.transpose();
        if (selection_valid(Jx, model, D, K)) return K;
    }
    return std::nullopt;
}

bool selection_valid(const RMatrix& Jx, const ProductModel& model, const VCone& D, const RMatrix& K) {
    std::vector<RVector> checks = D.rays;
    for (const auto& g : D.lineality) {
        checks.push_back(g);
        checks.push_back(-g);
    }
    for (const auto& T : model.tangent_pieces()) {
        bool all = true;
        for (const auto& g : checks)
            if (!T.contains(g + Jx * (K * g))) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

namespace {

Verdict first_order_core(const ConstraintSystem& sys, std::size_t l1) {
    const RMatrix Jx = sys.jac_x();
    ProductModel model(sys.C, sys.reference_value());
    DirectionCone D = sys.user_direction_cone
                          ? DirectionCone{*sys.user_direction_cone, DirectionCone::Provenance::user_supplied, false}
                          : image_derivative_cone(sys);
    const HCone Dh = vcone_to_hcone(D.cone);
    Verdict ex = check_existence_condition(Jx, model, Dh);
    if (ex.refuted()) {
        ex.note("existence condition fails");
        return ex;
    }
    if (l1 == 0) {
        Verdict v;
        v.grade = Grade::verified;
        v.note("leading block is empty");
        return v;
    }
    Verdict v = scan_first_order(Jx, model, Dh, iota(l1));
    if (ex.grade != Grade::verified && v.verified()) {
        v.grade = ex.grade;
        for (const auto& n : ex.notes) v.note(n);
    }
    if (v.verified() && D.may_be_strict_subset) {
        Verdict full = scan_first_order(Jx, model, HCone::full(Jx.rows()), iota(l1));
        Verdict exf = check_existence_condition(Jx, model, HCone::full(Jx.rows()));
        if (!full.verified() || !exf.verified()) {
            v.grade = Grade::inconclusive;
            v.note("verified under computed direction cone");
        }
    }
    return v;
}

}  // namespace

Verdict check_first_order_splitting(const ConstraintSystem& sys, const std::optional<SubsystemCertificate>& g2) {
    sys.validate();
    Verdict v = first_order_core(sys, sys.split_l1);
    if (sys.split_l1 < sys.image_dim()) {
        if (g2) {
            v.note("trailing subsystem certified by " + g2->source);
        } else if (v.verified()) {
            v.grade = Grade::inconclusive;
            v.note("missing certificate for the trailing subsystem");
        }
    }
    return v;
}

Verdict check_first_order(const ConstraintSystem& sys) {
    sys.validate();
    return first_order_core(sys, sys.image_dim());
}

Verdict check_subregularity_firstorder(const FuncVec& f, const ProductSet& C, const RVector& x_ref) {
    if (f.param_dim != 0) throw DimensionError("subregularity check takes decision variables only");
    const RVector gbar = eval_exact(f, x_ref);
    if (!C.contains(gbar)) throw DomainError("reference value lies outside the set");
    const RMatrix J = jacobian(f, x_ref, Wrt::decision);
    ProductModel model(C, gbar);
    Verdict v = scan_first_order(J, model, HCone::zero(J.rows()), iota(J.rows()));
    if (v.refuted()) {
        // v is zero here; report the decision direction only
        Verdict out;
        out.grade = Grade::refuted;
        out.add("u", *v.find("u"));
        out.add("lambda", *v.find("lambda"));
        out.notes = v.notes;
        return out;
    }
    return v;
}

std::string classify_trend(const std::vector<double>& sups) {
    if (sups.size() < 3) return "insufficient";
    if (sups.back() > 2 * sups.front()) return "growing";
    if (2 * sups.back() < sups.front()) return "shrinking";
    return "stable";
}

BoundEstimate estimate_multiplier_bound(const ConstraintSystem& sys, const RadiusSchedule& sched) {
    sys.validate();
    const FuncVec& f = sys.g;
    const RVector gbar = sys.reference_value();
    const std::size_t m = sys.param_dim(), n = sys.decision_dim(), l = f.size();
    ProductModel model(sys.C, gbar);
    struct Cell {
        DMatrix eq, strict;
        RVector rep;
    };
    std::vector<Cell> cells;
    model.for_each([&](const ProductModel::Stratum& s) {
        Cell c{to_double(s.closure.eq), to_double(s.closure.ineq), relative_interior_point(s.closure)};
        cells.push_back(std::move(c));
        return true;
    });
    const std::vector<double> gb = to_double(gbar), xb = to_double(sys.x_ref), pb = to_double(sys.p_ref);
    std::mt19937_64 rng(sched.seed);
    std::normal_distribution<double> gauss(0, 1);
    std::uniform_real_distribution<double> unif(0, 1);
    BoundEstimate est;
    double r = sched.r0;
    for (int k = 0; k < sched.count; ++k, r *= sched.factor) {
        double sup = 0;
        int accepted = 0;
        for (int s = 0; s < sched.samples; ++s) {
            const Cell& cell = cells[static_cast<std::size_t>(s) % cells.size()];
            std::vector<double> pd = pb;
            for (int tries = 0; m > 0 && tries < 50; ++tries) {
                std::vector<double> q = pb;
                for (auto& c : q) c += r * (2 * unif(rng) - 1);
                if (sys.P.contains(q)) {
                    pd = q;
                    break;
                }
            }
            auto at = [&](const std::vector<double>& xv) {
                std::vector<double> z = pd;
                z.insert(z.end(), xv.begin(), xv.end());
                return z;
            };
            Eigen::VectorXd x(static_cast<Eigen::Index>(n));
            {
                Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
                for (auto& c : xi) c = gauss(rng);
                if (xi.norm() > 0) xi /= xi.norm();
                xi *= r * std::pow(unif(rng), 1.0 / static_cast<double>(std::max<std::size_t>(n, 1)));
                for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = xb[i] + xi[static_cast<Eigen::Index>(i)];
            }
            // Gauss-Newton onto the equality rows of the cell
            const auto m = static_cast<Eigen::Index>(cell.eq.size());
            bool converged = m == 0;
            for (int it = 0; it < 50 && m > 0; ++it) {
                std::vector<double> xv(x.data(), x.data() + x.size());
                auto fx = eval_double(f, at(xv));
                auto Jd = jacobian_double(f, at(xv), Wrt::decision);
                Eigen::VectorXd res(m);
                Eigen::MatrixXd G(m, static_cast<Eigen::Index>(n));
                for (Eigen::Index i = 0; i < m; ++i) {
                    double s2 = 0;
                    for (std::size_t j = 0; j < l; ++j) s2 += cell.eq[static_cast<std::size_t>(i)][j] * (fx[j] - gb[j]);
                    res[i] = s2;
                    for (std::size_t c = 0; c < n; ++c) {
                        double g = 0;
                        for (std::size_t j = 0; j < l; ++j) g += cell.eq[static_cast<std::size_t>(i)][j] * Jd[j][c];
                        G(i, static_cast<Eigen::Index>(c)) = g;
                    }
                }
                if (res.norm() < 1e-13) {
                    converged = true;
                    break;
                }
                x -= G.completeOrthogonalDecomposition().solve(res);
            }
            if (!converged) continue;
            std::vector<double> xv(x.data(), x.data() + x.size());
            if ((x - Eigen::Map<const Eigen::VectorXd>(xb.data(), static_cast<Eigen::Index>(n))).norm() > 2 * r) continue;
            auto fx = eval_double(f, at(xv));
            bool inside = true;
            for (const auto& row : cell.strict) {
                double s2 = 0;
                for (std::size_t j = 0; j < l; ++j) s2 += row[j] * (fx[j] - gb[j]);
                if (s2 >= -1e-12) inside = false;
            }
            if (!inside) continue;
            ++accepted;
            auto Jd = jacobian_double(f, at(xv), Wrt::decision);
            Eigen::MatrixXd Jm(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < n; ++j) Jm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Jd[i][j];
            const auto normals = model.normals_along(cell.rep);
            std::vector<Eigen::VectorXd> cand;
            for (const auto& K : normals) {
                VCone g = hcone_to_vcone(K);
                std::vector<RVector> gens = g.rays;
                for (const auto& lv : g.lineality) {
                    gens.push_back(lv);
                    gens.push_back(-lv);
                }
                std::vector<Eigen::VectorXd> imgs;
                for (const auto& gv : gens) {
                    auto d = to_double(gv);
                    Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(l));
                    imgs.push_back(Jm.transpose() * lam);
                }
                for (const auto& im : imgs) cand.push_back(im);
                for (int t = 0; t < 4 && !imgs.empty(); ++t) {
                    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
                    for (const auto& im : imgs) c += unif(rng) * im;
                    cand.push_back(c);
                }
            }
            for (auto v : cand) {
                if (v.norm() < 1e-12) continue;
                v /= v.norm();
                double best = std::numeric_limits<double>::infinity();
                std::vector<double> best_lambda;
                for (const auto& K : normals) {
                    DMatrix A = to_double(K.ineq), E = to_double(K.eq);
                    std::vector<double> e(E.size(), 0.0);
                    for (std::size_t c = 0; c < n; ++c) {
                        std::vector<double> row(l);
                        for (std::size_t i = 0; i < l; ++i) row[i] = Jd[i][c];
                        E.push_back(row);
                        e.push_back(v[static_cast<Eigen::Index>(c)]);
                    }
                    auto p = project_onto(A, std::vector<double>(A.size(), 0.0), E, e, std::vector<double>(l, 0.0));
                    if (p && std::sqrt(p->squared_distance) < best) {
                        best = std::sqrt(p->squared_distance);
                        best_lambda = p->point;
                    }
                }
                if (std::isfinite(best) && best > sup) {
                    sup = best;
                    est.witness_p = pd;
                    est.witness_x = xv;
                    est.witness_v.assign(v.data(), v.data() + v.size());
                    est.witness_lambda = best_lambda;
                }
            }
        }
        if (accepted == 0) throw Error("sampling budget exhausted at radius " + std::to_string(r));
        est.sup_per_radius.push_back(sup);
    }
    est.value = est.sup_per_radius.empty() ? 0 : est.sup_per_radius.back();
    est.trend = classify_trend(est.sup_per_radius);
    return est;
}

BoundEstimate estimate_exact_bound(const FuncVec& f, const ProductSet& C, const RVector& x_ref,
                                   const RadiusSchedule& sched) {
    if (f.param_dim != 0) throw DimensionError("bound estimate takes decision variables only");
    ConstraintSystem sys;
    sys.g = f;
    sys.C = C;
    sys.x_ref = x_ref;
    sys.split_l1 = f.size();
    if (!C.contains(eval_exact(f, x_ref))) throw DomainError("reference value lies outside the set");
    return estimate_multiplier_bound(sys, sched);
}

Verdict check_crcq(const ConstraintSystem& sys, int samples, double radius, std::uint64_t seed) {
    sys.validate();
    std::vector<std::size_t> idx;
    const RVector gbar = sys.reference_value();
    const auto offs = sys.C.offsets();
    for (std::size_t f = 0; f < sys.C.factors.size(); ++f) {
        const auto kind = sys.C.factors[f].kind;
        if (kind == SetFactor::Kind::zero) {
            idx.push_back(offs[f]);
        } else if (kind == SetFactor::Kind::nonpositive) {
            if (gbar[offs[f]] == 0) idx.push_back(offs[f]);
        } else {
            throw DomainError("constant rank check needs equality and inequality factors only");
        }
    }
    if (idx.size() > 20 || (std::size_t{1} << idx.size()) > capacity().max_subsets)
        throw CapacityError("too many active index subsets");
    const RMatrix J0 = sys.jac_x();
    const std::size_t m = sys.param_dim(), n = sys.decision_dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-radius, radius);
    std::vector<std::vector<double>> pts;
    for (int s = 0; s < samples; ++s) {
        std::vector<double> z;
        for (std::size_t i = 0; i < m; ++i) z.push_back(to_double(sys.p_ref[i]) + unif(rng));
        for (std::size_t i = 0; i < n; ++i) z.push_back(to_double(sys.x_ref[i]) + unif(rng));
        pts.push_back(std::move(z));
    }
    std::vector<std::vector<std::vector<double>>> jacs;
    for (const auto& z : pts) jacs.push_back(jacobian_double(sys.g, z, Wrt::decision));
    Verdict out;
    for (std::size_t mask = 1; mask < (std::size_t{1} << idx.size()); ++mask) {
        std::vector<std::size_t> J;
        for (std::size_t b = 0; b < idx.size(); ++b)
            if (mask >> b & 1) J.push_back(idx[b]);
        const std::size_t r0 = rank(J0.select_rows(J));
        for (std::size_t s = 0; s < pts.size(); ++s) {
            Eigen::MatrixXd M(static_cast<Eigen::Index>(J.size()), static_cast<Eigen::Index>(n));
            for (std::size_t a = 0; a < J.size(); ++a)
                for (std::size_t c = 0; c < n; ++c) M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = jacs[s][J[a]][c];
            Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
            lu.setThreshold(1e-9);
            if (static_cast<std::size_t>(lu.rank()) != r0) {
                out.grade = Grade::refuted;
                RVector subset, p, x;
                for (auto j : J) subset.push_back(Rational(static_cast<long>(j)));
                for (std::size_t i = 0; i < m; ++i) p.push_back(rationalize(pts[s][i]));
                for (std::size_t i = 0; i < n; ++i) x.push_back(rationalize(pts[s][m + i]));
                out.add("subset", subset);
                out.add("p", p);
                out.add("x", x);
                out.note("rank " + std::to_string(r0) + " at the reference, " + std::to_string(lu.rank()) +
                         " at the sample");
                return out;
            }
        }
    }
    out.grade = Grade::verified_numeric;
    out.note(std::to_string(samples) + " samples within radius " + std::to_string(radius));
    return out;
}

}  // namespace robstab

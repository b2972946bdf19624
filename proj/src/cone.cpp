#include "robstab/cone.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <sstream>

namespace robstab {

HCone::HCone(std::size_t n) : dim(n), ineq(0, n), eq(0, n) {}

HCone::HCone(RMatrix A, RMatrix E, std::size_t n) : dim(n), ineq(std::move(A)), eq(std::move(E)) {
    if (ineq.rows() == 0) ineq = RMatrix(0, n);
    if (eq.rows() == 0) eq = RMatrix(0, n);
    if (ineq.cols() != n || eq.cols() != n) throw DimensionError("HCone: column count differs from dimension");
}

HCone HCone::zero(std::size_t n) {
    HCone c(n);
    for (std::size_t i = 0; i < n; ++i) c.add_eq(unit(n, i));
    return c;
}

void HCone::add_ineq(const RVector& row) {
    if (row.size() != dim) throw DimensionError("HCone: row length mismatch");
    ineq.append_row(row);
}

void HCone::add_eq(const RVector& row) {
    if (row.size() != dim) throw DimensionError("HCone: row length mismatch");
    eq.append_row(row);
}

bool HCone::contains(const RVector& x) const {
    if (x.size() != dim) throw DimensionError("HCone::contains: dimension mismatch");
    for (std::size_t i = 0; i < ineq.rows(); ++i)
        if (dot(ineq.row(i), x) > 0) return false;
    for (std::size_t i = 0; i < eq.rows(); ++i)
        if (dot(eq.row(i), x) != 0) return false;
    return true;
}

void HCone::constrain(LinearSystem& sys, std::size_t offset) const {
    if (offset + dim > sys.dim) throw DimensionError("HCone::constrain: offset out of range");
    for (std::size_t i = 0; i < ineq.rows(); ++i) {
        RVector r = zeros(sys.dim);
        for (std::size_t j = 0; j < dim; ++j) r[offset + j] = ineq(i, j);
        sys.add_weak(r);
    }
    for (std::size_t i = 0; i < eq.rows(); ++i) {
        RVector r = zeros(sys.dim);
        for (std::size_t j = 0; j < dim; ++j) r[offset + j] = eq(i, j);
        sys.add_eq(r);
    }
}

bool VCone::contains(const RVector& x) const {
    if (x.size() != dim) throw DimensionError("VCone::contains: dimension mismatch");
    const std::size_t nr = rays.size(), nl = lineality.size();
    if (nr + nl == 0) return robstab::is_zero(x);
    LinearSystem sys(nr + nl);
    for (std::size_t i = 0; i < dim; ++i) {
        RVector row = zeros(nr + nl);
        for (std::size_t k = 0; k < nr; ++k) row[k] = rays[k][i];
        for (std::size_t k = 0; k < nl; ++k) row[nr + k] = lineality[k][i];
        sys.add_eq(row, x[i]);
    }
    for (std::size_t k = 0; k < nr; ++k) sys.add_weak(-unit(nr + nl, k));
    return lp_feasible(sys).has_value();
}

namespace {

using Bits = boost::dynamic_bitset<>;

void check_capacity(std::size_t dim, std::size_t rows) {
    const Capacity& cap = capacity();
    if (dim > cap.max_dim)
        throw CapacityError("cone dimension " + std::to_string(dim) + " exceeds capacity " +
                            std::to_string(cap.max_dim));
    if (rows > cap.max_rows)
        throw CapacityError("cone row count " + std::to_string(rows) + " exceeds capacity " +
                            std::to_string(cap.max_rows));
}

// Extreme rays of the pointed cone {y : M y <= 0} where M has full column rank.
std::vector<RVector> double_description(const RMatrix& M) {
    const std::size_t k = M.cols(), m = M.rows();
    std::vector<std::size_t> init;
    {
        RMatrix acc(0, k);
        std::size_t r = 0;
        for (std::size_t i = 0; i < m && init.size() < k; ++i) {
            RMatrix trial = acc;
            trial.append_row(M.row(i));
            std::size_t tr = rank(trial);
            if (tr > r) {
                acc = trial;
                r = tr;
                init.push_back(i);
            }
        }
    }
    if (init.size() < k) throw Error("double description: input cone is not pointed");
    auto binv = inverse(M.select_rows(init));
    struct Ray {
        RVector y;
        Bits zero;
    };
    std::vector<Ray> rays;
    Bits processed(m);
    for (auto i : init) processed.set(i);
    for (std::size_t j = 0; j < k; ++j) {
        Ray r{primitive(-binv->col(j)), Bits(m)};
        for (std::size_t t = 0; t < k; ++t)
            if (t != j) r.zero.set(init[t]);
        rays.push_back(std::move(r));
    }
    const std::size_t need = k >= 2 ? k - 2 : 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (processed.test(i)) continue;
        RVector a = M.row(i);
        std::vector<Rational> s(rays.size());
        std::vector<std::size_t> pos, neg;
        for (std::size_t t = 0; t < rays.size(); ++t) {
            s[t] = dot(a, rays[t].y);
            if (s[t] > 0) pos.push_back(t);
            else if (s[t] < 0) neg.push_back(t);
        }
        std::vector<Ray> next;
        for (std::size_t t = 0; t < rays.size(); ++t) {
            if (s[t] > 0) continue;
            Ray r = rays[t];
            if (s[t] == 0) r.zero.set(i);
            next.push_back(std::move(r));
        }
        for (auto p : pos) {
            for (auto q : neg) {
                Bits common = rays[p].zero & rays[q].zero;
                if (common.count() < need) continue;
                bool adjacent = true;
                for (std::size_t t = 0; t < rays.size() && adjacent; ++t) {
                    if (t == p || t == q) continue;
                    if (common.is_subset_of(rays[t].zero)) adjacent = false;
                }
                if (!adjacent) continue;
                Ray r{primitive(s[p] * rays[q].y - s[q] * rays[p].y), common};
                r.zero.set(i);
                next.push_back(std::move(r));
            }
        }
        rays = std::move(next);
        processed.set(i);
    }
    std::vector<RVector> out;
    out.reserve(rays.size());
    for (auto& r : rays) out.push_back(std::move(r.y));
    return out;
}

std::vector<RVector> canonical_lineality(const std::vector<RVector>& lin, std::size_t dim) {
    std::vector<RVector> out;
    for (auto& r : row_basis(lin, dim)) out.push_back(primitive_line(r));
    return out;
}

}  // namespace

VCone hcone_to_vcone(const HCone& c) {
    const std::size_t n = c.dim;
    check_capacity(n, c.ineq.rows() + c.eq.rows());
    RMatrix all = vstack(c.ineq, c.eq);
    if (all.cols() != n) all = RMatrix(0, n);
    VCone out(n);
    out.lineality = canonical_lineality(nullspace(all), n);
    RMatrix restrict_rows = c.eq;
    for (auto& l : out.lineality) restrict_rows.append_row(l);
    if (restrict_rows.cols() != n) restrict_rows = RMatrix(0, n);
    std::vector<RVector> basis = nullspace(restrict_rows);
    const std::size_t k = basis.size();
    if (k == 0) return out;
    RMatrix B(n, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) B(i, j) = basis[j][i];
    RMatrix M = c.ineq * B;
    for (auto& y : double_description(M)) {
        RVector x = primitive(B * y);
        if (!is_zero(x)) out.rays.push_back(std::move(x));
    }
    std::sort(out.rays.begin(), out.rays.end());
    out.rays.erase(std::unique(out.rays.begin(), out.rays.end()), out.rays.end());
    return out;
}

HCone polar(const VCone& v) {
    HCone out(v.dim);
    for (auto& r : v.rays) out.add_ineq(r);
    for (auto& l : v.lineality) out.add_eq(l);
    return out;
}

HCone vcone_to_hcone(const VCone& v) {
    VCone g = hcone_to_vcone(polar(v));
    HCone out(v.dim);
    for (auto& r : g.rays) out.add_ineq(r);
    for (auto& l : g.lineality) out.add_eq(l);
    return out;
}

HCone polar(const HCone& c) { return vcone_to_hcone(VCone(c.dim, c.ineq.row_list(), c.eq.row_list())); }

namespace {

void prune_rows(std::vector<RVector>& ineq, const std::vector<RVector>& eq, std::size_t n) {
    for (auto& r : ineq) r = primitive(r);
    ineq.erase(std::remove_if(ineq.begin(), ineq.end(), [](const RVector& r) { return is_zero(r); }),
               ineq.end());
    std::sort(ineq.begin(), ineq.end());
    ineq.erase(std::unique(ineq.begin(), ineq.end()), ineq.end());
    if (ineq.size() <= 1) return;
    for (std::size_t i = 0; i < ineq.size();) {
        LinearSystem sys(n);
        for (std::size_t j = 0; j < ineq.size(); ++j)
            if (j != i) sys.add_weak(ineq[j]);
        for (auto& e : eq) sys.add_eq(e);
        sys.add_strict(-ineq[i]);
        if (!lp_feasible(sys)) {
            ineq.erase(ineq.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
}

}  // namespace

HCone project_cone(const HCone& c, const std::vector<std::size_t>& coords) {
    const std::size_t n = c.dim;
    std::vector<bool> keep(n, false);
    for (auto j : coords) {
        if (j >= n) throw DimensionError("project_cone: coordinate out of range");
        keep[j] = true;
    }
    std::vector<RVector> ineq = c.ineq.row_list();
    std::vector<RVector> eq = c.eq.row_list();
    std::vector<std::size_t> elim;
    for (std::size_t j = 0; j < n; ++j)
        if (!keep[j]) elim.push_back(j);
    // Equalities first.
    for (auto j : elim) {
        auto it = std::find_if(eq.begin(), eq.end(), [j](const RVector& r) { return r[j] != 0; });
        if (it == eq.end()) continue;
        RVector e = *it;
        eq.erase(it);
        auto substitute = [&](RVector& r) {
            if (r[j] == 0) return;
            Rational f = r[j] / e[j];
            r = r - f * e;
        };
        for (auto& r : eq) substitute(r);
        for (auto& r : ineq) substitute(r);
    }
    eq.erase(std::remove_if(eq.begin(), eq.end(), [](const RVector& r) { return is_zero(r); }), eq.end());
    eq = row_basis(eq, n);
    prune_rows(ineq, eq, n);
    const std::size_t combo_cap = capacity().max_combos;
    std::vector<bool> done(n, false);
    for (std::size_t step = 0; step < elim.size(); ++step) {
        // Pick the variable with the smallest Fourier-Motzkin growth.
        std::size_t best = n;
        long best_cost = 0;
        for (auto j : elim) {
            if (done[j]) continue;
            long p = 0, q = 0;
            for (auto& r : ineq) {
                if (r[j] > 0) ++p;
                else if (r[j] < 0) ++q;
            }
            long cost = p * q - p - q;
            if (best == n || cost < best_cost) {
                best = j;
                best_cost = cost;
            }
        }
        std::size_t j = best;
        done[j] = true;
        std::vector<RVector> pos, negs, next;
        for (auto& r : ineq) {
            if (r[j] > 0) pos.push_back(r);
            else if (r[j] < 0) negs.push_back(r);
            else next.push_back(r);
        }
        if (pos.size() * negs.size() > combo_cap)
            throw CapacityError("Fourier-Motzkin step exceeds combination capacity");
        for (auto& p : pos)
            for (auto& q : negs) next.push_back((-q[j]) * p + p[j] * q);
        ineq = std::move(next);
        prune_rows(ineq, eq, n);
    }
    HCone out(coords.size());
    auto restrict_row = [&](const RVector& r) {
        RVector s(coords.size());
        for (std::size_t k = 0; k < coords.size(); ++k) s[k] = r[coords[k]];
        return s;
    };
    for (auto& r : ineq) {
        RVector s = restrict_row(r);
        if (!is_zero(s)) out.add_ineq(s);
    }
    for (auto& r : eq) {
        RVector s = restrict_row(r);
        if (!is_zero(s)) out.add_eq(s);
    }
    return out;
}

HCone intersect(const HCone& a, const HCone& b) {
    if (a.dim != b.dim) throw DimensionError("intersect: dimension mismatch");
    return HCone(vstack(a.ineq, b.ineq), vstack(a.eq, b.eq), a.dim);
}

HCone product(const HCone& a, const HCone& b) {
    const std::size_t n = a.dim + b.dim;
    HCone out(n);
    for (std::size_t i = 0; i < a.ineq.rows(); ++i) {
        RVector r = a.ineq.row(i);
        r.resize(n, Rational(0));
        out.add_ineq(r);
    }
    for (std::size_t i = 0; i < a.eq.rows(); ++i) {
        RVector r = a.eq.row(i);
        r.resize(n, Rational(0));
        out.add_eq(r);
    }
    for (std::size_t i = 0; i < b.ineq.rows(); ++i) {
        RVector r = zeros(a.dim), s = b.ineq.row(i);
        r.insert(r.end(), s.begin(), s.end());
        out.add_ineq(r);
    }
    for (std::size_t i = 0; i < b.eq.rows(); ++i) {
        RVector r = zeros(a.dim), s = b.eq.row(i);
        r.insert(r.end(), s.begin(), s.end());
        out.add_eq(r);
    }
    return out;
}

HCone product(const std::vector<HCone>& factors) {
    HCone out(0);
    for (auto& f : factors) out = product(out, f);
    return out;
}

HCone preimage(const RMatrix& M, const HCone& c) {
    if (M.rows() != c.dim) throw DimensionError("preimage: dimension mismatch");
    return HCone(c.ineq * M, c.eq * M, M.cols());
}

VCone image(const RMatrix& M, const VCone& v) {
    if (M.cols() != v.dim) throw DimensionError("image: dimension mismatch");
    VCone out(M.rows());
    for (auto& r : v.rays) {
        RVector x = M * r;
        if (!is_zero(x)) out.rays.push_back(primitive(x));
    }
    for (auto& l : v.lineality) {
        RVector x = M * l;
        if (!is_zero(x)) out.lineality.push_back(primitive(x));
    }
    return out;
}

bool is_subset(const HCone& a, const HCone& b) {
    if (a.dim != b.dim) throw DimensionError("is_subset: dimension mismatch");
    VCone g = hcone_to_vcone(a);
    for (auto& r : g.rays)
        if (!b.contains(r)) return false;
    for (auto& l : g.lineality)
        if (!b.contains(l) || !b.contains(-l)) return false;
    return true;
}

bool same_cone(const HCone& a, const HCone& b) { return is_subset(a, b) && is_subset(b, a); }

bool is_zero_cone(const HCone& c) { return hcone_to_vcone(c).is_zero(); }

bool is_subspace(const HCone& c) { return hcone_to_vcone(c).rays.empty(); }

RVector relative_interior_point(const HCone& c) {
    VCone g = hcone_to_vcone(c);
    RVector x = zeros(c.dim);
    for (auto& r : g.rays) x = x + r;
    return x;
}

VCone canonical(const HCone& c) { return hcone_to_vcone(c); }

VCone canonical(const VCone& v) { return hcone_to_vcone(vcone_to_hcone(v)); }

HCone minimal(const HCone& c) { return vcone_to_hcone(hcone_to_vcone(c)); }

namespace {

std::string linear_form(const RVector& r) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (r[j] == 0) continue;
        Rational a = r[j];
        if (!first) os << (a < 0 ? " - " : " + ");
        else if (a < 0) os << "-";
        Rational m = a < 0 ? Rational(-a) : a;
        if (m != 1) os << m.str() << "*";
        os << "x" << (j + 1);
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

}  // namespace

std::string describe(const HCone& c) {
    std::ostringstream os;
    os << "{x in R^" << c.dim << " :";
    bool any = false;
    for (std::size_t i = 0; i < c.ineq.rows(); ++i) {
        os << (any ? ", " : " ") << linear_form(c.ineq.row(i)) << " <= 0";
        any = true;
    }
    for (std::size_t i = 0; i < c.eq.rows(); ++i) {
        os << (any ? ", " : " ") << linear_form(c.eq.row(i)) << " = 0";
        any = true;
    }
    if (!any) os << " all";
    os << "}";
    return os.str();
}

std::string describe(const VCone& v) {
    std::ostringstream os;
    os << "cone{";
    for (std::size_t i = 0; i < v.rays.size(); ++i) os << (i ? ", " : "") << to_string(v.rays[i]);
    os << "} + span{";
    for (std::size_t i = 0; i < v.lineality.size(); ++i) os << (i ? ", " : "") << to_string(v.lineality[i]);
    os << "}";
    return os.str();
}

}  // namespace robstab

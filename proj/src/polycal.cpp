#include "robstab/polycal.hpp"

#include "robstab/capacity.hpp"
#include "robstab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <limits>
#include <map>

namespace robstab {

Polyhedron::Polyhedron(RMatrix A_, RVector b_, std::size_t n) : dim(n), A(std::move(A_)), b(std::move(b_)) {
    if (A.rows() == 0) A = RMatrix(0, n);
    if (A.cols() != n || b.size() != A.rows()) throw DimensionError("Polyhedron: inconsistent dimensions");
    if (A.rows() > capacity().max_rows) throw CapacityError("Polyhedron: too many rows");
    LinearSystem sys(n);
    for (std::size_t i = 0; i < A.rows(); ++i) sys.add_weak(A.row(i), b[i]);
    if (!lp_feasible(sys)) throw ValidationError("Polyhedron is empty");
}

bool Polyhedron::contains(const RVector& z) const {
    if (z.size() != dim) throw DimensionError("Polyhedron::contains: dimension mismatch");
    for (std::size_t i = 0; i < A.rows(); ++i)
        if (dot(A.row(i), z) > b[i]) return false;
    return true;
}

std::vector<std::size_t> Polyhedron::active_rows(const RVector& z) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < A.rows(); ++i)
        if (dot(A.row(i), z) == b[i]) out.push_back(i);
    return out;
}

HCone Polyhedron::tangent(const RVector& z) const {
    if (!contains(z)) throw DomainError("Polyhedron::tangent: point outside the polyhedron");
    HCone t(dim);
    for (auto i : active_rows(z)) t.add_ineq(A.row(i));
    return t;
}

PolyUnion::PolyUnion(std::vector<Polyhedron> ps, std::size_t n) : dim(n), pieces(std::move(ps)) {
    if (pieces.empty()) throw ValidationError("PolyUnion needs at least one piece");
    for (auto& p : pieces)
        if (p.dim != n) throw DimensionError("PolyUnion: piece dimension mismatch");
}

PolyUnion::PolyUnion(Polyhedron p) : dim(p.dim) { pieces.push_back(std::move(p)); }

bool PolyUnion::contains(const RVector& z) const {
    for (auto& p : pieces)
        if (p.contains(z)) return true;
    return false;
}

std::vector<std::size_t> PolyUnion::containing(const RVector& z) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pieces.size(); ++i)
        if (pieces[i].contains(z)) out.push_back(i);
    return out;
}

PolyUnion PolyUnion::nonpositive_orthant(std::size_t n) {
    return PolyUnion(Polyhedron(RMatrix::identity(n), zeros(n), n));
}

PolyUnion PolyUnion::origin(std::size_t n) {
    RMatrix A = vstack(RMatrix::identity(n), -RMatrix::identity(n));
    return PolyUnion(Polyhedron(A, zeros(2 * n), n));
}

PolyUnion PolyUnion::whole_space(std::size_t n) { return PolyUnion(Polyhedron(RMatrix(0, n), {}, n)); }

PolyUnion PolyUnion::graph_normal_nonpos() {
    // phi <= 0, y <= 0, -y <= 0   and   phi <= 0, -phi <= 0, -y <= 0
    RMatrix a(3, 2), b(3, 2);
    a(0, 0) = 1;
    a(1, 1) = 1;
    a(2, 1) = -1;
    b(0, 0) = 1;
    b(1, 0) = -1;
    b(2, 1) = -1;
    return PolyUnion({Polyhedron(a, zeros(3), 2), Polyhedron(b, zeros(3), 2)}, 2);
}

bool ConeUnion::contains(const RVector& w) const {
    for (auto& p : pieces)
        if (p.contains(w)) return true;
    return false;
}

ConeUnion local_tangent(const PolyUnion& C, const RVector& z) {
    if (z.size() != C.dim) throw DimensionError("local_tangent: dimension mismatch");
    ConeUnion T{C.dim, {}};
    for (auto& p : C.pieces)
        if (p.contains(z)) T.pieces.push_back(p.tangent(z));
    if (T.pieces.empty()) throw DomainError("point " + to_string(z) + " is not in the set");
    return T;
}

bool Stratum::is_origin() const {
    return std::all_of(signs.begin(), signs.end(), [](int s) { return s == 0; });
}

namespace {

struct RowRef {
    std::size_t piece;
    std::size_t row;  // ineq rows first, then eq rows
    bool is_eq;
    std::size_t hyper;
    int orient;
};

HCone piece_value(const HCone& piece, const std::vector<std::size_t>& active) {
    VCone g(piece.dim);
    for (auto r : active) {
        if (r < piece.ineq.rows()) g.rays.push_back(piece.ineq.row(r));
        else g.lineality.push_back(piece.eq.row(r - piece.ineq.rows()));
    }
    return vcone_to_hcone(g);
}

}  // namespace

Stratification::Stratification(const ConeUnion& T) : Stratification(T, zeros(T.dim)) {}

Stratification::Stratification(const ConeUnion& T, const RVector& through) : tangent_(T) {
    const std::size_t n = T.dim;
    if (through.size() != n) throw DimensionError("stratification: direction dimension mismatch");
    std::vector<RowRef> refs;
    auto hyper_of = [&](const RVector& row, std::size_t& idx, int& orient) {
        RVector h = primitive_line(row);
        auto it = std::find(hyperplanes_.begin(), hyperplanes_.end(), h);
        idx = static_cast<std::size_t>(it - hyperplanes_.begin());
        if (it == hyperplanes_.end()) hyperplanes_.push_back(h);
        // orientation: row is a positive multiple of h or of -h
        orient = 1;
        for (std::size_t j = 0; j < row.size(); ++j)
            if (row[j] != 0) {
                orient = (row[j] > 0) == (h[j] > 0) ? 1 : -1;
                break;
            }
    };
    for (std::size_t i = 0; i < T.pieces.size(); ++i) {
        const HCone& p = T.pieces[i];
        for (std::size_t r = 0; r < p.ineq.rows(); ++r) {
            RVector row = p.ineq.row(r);
            if (is_zero(row)) continue;
            RowRef ref{i, r, false, 0, 1};
            hyper_of(row, ref.hyper, ref.orient);
            refs.push_back(ref);
        }
        for (std::size_t r = 0; r < p.eq.rows(); ++r) {
            RVector row = p.eq.row(r);
            if (is_zero(row)) continue;
            RowRef ref{i, p.ineq.rows() + r, true, 0, 1};
            hyper_of(row, ref.hyper, ref.orient);
            refs.push_back(ref);
        }
    }
    const std::size_t H = hyperplanes_.size();
    std::vector<std::vector<const RowRef*>> by_hyper(H);
    for (auto& r : refs) by_hyper[r.hyper].push_back(&r);
    const std::size_t cap = capacity().max_strata;
    std::map<std::vector<std::vector<std::size_t>>, HCone> value_cache;
    std::vector<int> signs(H, 0);
    std::function<void(std::size_t, LinearSystem&, std::vector<bool>&, const RVector&)> dfs =
        [&](std::size_t k, LinearSystem& sys, std::vector<bool>& live, const RVector& witness) {
            if (k == H) {
                Stratum s;
                s.signs = signs;
                s.representative = witness;
                s.direction_cone = HCone(n);
                for (std::size_t h = 0; h < H; ++h) {
                    if (signs[h] < 0) s.direction_cone.add_ineq(hyperplanes_[h]);
                    else if (signs[h] > 0) s.direction_cone.add_ineq(-hyperplanes_[h]);
                    else s.direction_cone.add_eq(hyperplanes_[h]);
                }
                for (std::size_t i = 0; i < T.pieces.size(); ++i) {
                    if (!live[i]) continue;
                    s.piece_pattern.push_back(i);
                    std::vector<std::size_t> act;
                    for (auto& r : refs)
                        if (r.piece == i && (r.is_eq || signs[r.hyper] == 0)) act.push_back(r.row);
                    std::sort(act.begin(), act.end());
                    s.active_pattern.push_back(std::move(act));
                }
                std::vector<std::vector<std::size_t>> key = s.active_pattern;
                for (std::size_t t = 0; t < s.piece_pattern.size(); ++t)
                    key[t].insert(key[t].begin(), s.piece_pattern[t] + 1000000);
                auto it = value_cache.find(key);
                if (it == value_cache.end()) {
                    HCone v(n);
                    for (std::size_t t = 0; t < s.piece_pattern.size(); ++t)
                        v = intersect(v, piece_value(T.pieces[s.piece_pattern[t]], s.active_pattern[t]));
                    it = value_cache.emplace(key, minimal(v)).first;
                }
                s.normal_value = it->second;
                strata_.push_back(std::move(s));
                if (strata_.size() > cap) throw CapacityError("stratum count exceeds capacity");
                return;
            }
            // the closure contains `through` only with the sign it has on this hyperplane, or any sign when it is 0
            const int forced = sign(dot(hyperplanes_[k], through));
            for (int sg : {-1, 0, 1}) {
                if (forced != 0 && sg != forced) continue;
                std::vector<bool> nl = live;
                bool any = false;
                for (auto* r : by_hyper[k]) {
                    int rs = sg * r->orient;
                    if (r->is_eq ? rs != 0 : rs > 0) nl[r->piece] = false;
                }
                for (bool b : nl) any = any || b;
                if (!any) continue;
                LinearSystem next = sys;
                if (sg < 0) next.add_strict(hyperplanes_[k]);
                else if (sg > 0) next.add_strict(-hyperplanes_[k]);
                else next.add_eq(hyperplanes_[k]);
                auto w = lp_feasible(next);
                if (!w) continue;
                signs[k] = sg;
                dfs(k + 1, next, nl, *w);
                signs[k] = 0;
            }
        };
    LinearSystem root(n);
    std::vector<bool> live(T.pieces.size(), true);
    dfs(0, root, live, zeros(n));
}

bool Stratification::in_stratum(std::size_t s, const RVector& w) const {
    const auto& sg = strata_.at(s).signs;
    for (std::size_t h = 0; h < hyperplanes_.size(); ++h)
        if (sign(dot(hyperplanes_[h], w)) != sg[h]) return false;
    return true;
}

bool Stratification::in_closure(std::size_t s, const RVector& w) const {
    const auto& sg = strata_.at(s).signs;
    for (std::size_t h = 0; h < hyperplanes_.size(); ++h) {
        int v = sign(dot(hyperplanes_[h], w));
        if (sg[h] == 0 ? v != 0 : v == -sg[h]) return false;
    }
    return true;
}

std::optional<std::size_t> Stratification::locate(const RVector& w) const {
    for (std::size_t s = 0; s < strata_.size(); ++s)
        if (in_stratum(s, w)) return s;
    return std::nullopt;
}

LinearSystem Stratification::open_system(std::size_t s) const {
    LinearSystem sys(dim());
    const auto& sg = strata_.at(s).signs;
    for (std::size_t h = 0; h < hyperplanes_.size(); ++h) {
        if (sg[h] < 0) sys.add_strict(hyperplanes_[h]);
        else if (sg[h] > 0) sys.add_strict(-hyperplanes_[h]);
        else sys.add_eq(hyperplanes_[h]);
    }
    return sys;
}

std::vector<HCone> Stratification::normals_along(const RVector& w) const {
    if (!tangent_.contains(w)) return {};
    std::vector<HCone> vals;
    for (std::size_t s = 0; s < strata_.size(); ++s)
        if (in_closure(s, w)) vals.push_back(strata_[s].normal_value);
    return distinct_cones(vals);
}

std::vector<HCone> Stratification::limiting_normals() const {
    std::vector<HCone> vals;
    for (auto& s : strata_) vals.push_back(s.normal_value);
    return distinct_cones(vals);
}

std::vector<HCone> distinct_cones(const std::vector<HCone>& cones) {
    std::vector<HCone> out;
    std::vector<VCone> seen;
    for (auto& c : cones) {
        VCone k = canonical(c);
        bool dup = std::any_of(seen.begin(), seen.end(), [&](const VCone& s) {
            return s.rays == k.rays && s.lineality == k.lineality;
        });
        if (!dup) {
            seen.push_back(k);
            out.push_back(c);
        }
    }
    return out;
}

bool union_contains(const std::vector<HCone>& cones, const RVector& x) {
    for (auto& c : cones)
        if (c.contains(x)) return true;
    return false;
}

HCone regular_normal_of_union(const ConeUnion& T, const RVector& w) {
    HCone v(T.dim);
    bool any = false;
    for (auto& p : T.pieces) {
        if (!p.contains(w)) continue;
        any = true;
        std::vector<std::size_t> act;
        for (std::size_t r = 0; r < p.ineq.rows(); ++r)
            if (dot(p.ineq.row(r), w) == 0) act.push_back(r);
        for (std::size_t r = 0; r < p.eq.rows(); ++r) act.push_back(p.ineq.rows() + r);
        v = intersect(v, piece_value(p, act));
    }
    if (!any) throw DomainError("direction is not in the cone union");
    return minimal(v);
}

std::vector<HCone> tangent_cone(const PolyUnion& C, const RVector& z) { return local_tangent(C, z).pieces; }

HCone regular_normal_cone(const PolyUnion& C, const RVector& z) {
    return regular_normal_of_union(local_tangent(C, z), zeros(C.dim));
}

std::vector<HCone> limiting_normal_cone(const PolyUnion& C, const RVector& z) {
    return Stratification(local_tangent(C, z)).limiting_normals();
}

std::vector<HCone> directional_limiting_normal_cone(const PolyUnion& C, const RVector& z, const RVector& w) {
    if (w.size() != C.dim) throw DimensionError("directional normal cone: direction dimension mismatch");
    ConeUnion T = local_tangent(C, z);
    if (!T.contains(w)) return {};
    return Stratification(T, w).normals_along(w);
}

std::vector<Stratum> enumerate_strata(const PolyUnion& C, const RVector& z) {
    return Stratification(local_tangent(C, z)).strata();
}

std::vector<HCone> second_order_tangent_set(const PolyUnion& C, const RVector& z, const RVector& v) {
    ConeUnion T = local_tangent(C, z);
    if (!T.contains(v)) throw DomainError("direction is not tangent");
    std::vector<HCone> out;
    for (auto& p : T.pieces) {
        if (!p.contains(v)) continue;
        HCone t(C.dim);
        for (std::size_t r = 0; r < p.ineq.rows(); ++r)
            if (dot(p.ineq.row(r), v) == 0) t.add_ineq(p.ineq.row(r));
        for (std::size_t r = 0; r < p.eq.rows(); ++r) t.add_eq(p.eq.row(r));
        out.push_back(t);
    }
    return distinct_cones(out);
}

namespace {

// Calls f on every subset of {0..m-1} of size <= kmax, by increasing size,
// until f returns true.
bool for_subsets(std::size_t m, std::size_t kmax, const std::function<bool(const std::vector<std::size_t>&)>& f) {
    std::size_t count = 0;
    const std::size_t cap = capacity().max_subsets;
    for (std::size_t k = 0; k <= std::min(m, kmax); ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        for (;;) {
            if (++count > cap) throw CapacityError("active-set enumeration exceeds capacity");
            if (f(idx)) return true;
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return false;
}

}  // namespace

std::optional<Projection> project_onto(const RMatrix& A, const RVector& b, const RMatrix& E, const RVector& e,
                                       const RVector& y) {
    const std::size_t n = y.size();
    LinearSystem sys(n);
    for (std::size_t i = 0; i < A.rows(); ++i) sys.add_weak(A.row(i), b[i]);
    for (std::size_t i = 0; i < E.rows(); ++i) sys.add_eq(E.row(i), e[i]);
    if (!lp_feasible(sys)) return std::nullopt;
    // Reduce the equalities to an independent set.
    std::vector<RVector> erows;
    RVector erhs;
    {
        RMatrix aug(E.rows(), n + 1);
        for (std::size_t i = 0; i < E.rows(); ++i) {
            for (std::size_t j = 0; j < n; ++j) aug(i, j) = E(i, j);
            aug(i, n) = e[i];
        }
        Rref r = rref(aug);
        for (std::size_t k = 0; k < r.pivots.size(); ++k) {
            RVector row = r.reduced.row(k);
            erhs.push_back(row.back());
            row.pop_back();
            erows.push_back(row);
        }
    }
    const std::size_t re = erows.size();
    std::optional<Projection> best;
    for_subsets(A.rows(), n - std::min(n, re), [&](const std::vector<std::size_t>& J) {
        std::vector<RVector> rows = erows;
        RVector rhs = erhs;
        for (auto j : J) {
            rows.push_back(A.row(j));
            rhs.push_back(b[j]);
        }
        RMatrix M = rows.empty() ? RMatrix(0, n) : RMatrix::from_rows(rows, n);
        if (rank(M) < rows.size()) return false;
        RVector x = y;
        RVector nu;
        if (!rows.empty()) {
            RMatrix G = M * M.transpose();
            RVector r = M * y - rhs;
            auto sol = solve(G, r);
            if (!sol) return false;
            nu = *sol;
            x = y - M.transpose() * nu;
        }
        for (std::size_t t = 0; t < J.size(); ++t)
            if (nu[re + t] < 0) return false;
        for (std::size_t i = 0; i < A.rows(); ++i)
            if (dot(A.row(i), x) > b[i]) return false;
        best = Projection{x, squared_norm(x - y)};
        return true;
    });
    if (!best) throw Error("projection: no optimal face found");
    return best;
}

Projection project_point(const Polyhedron& P, const RVector& y) {
    auto p = project_onto(P.A, P.b, RMatrix(0, P.dim), {}, y);
    return *p;
}

Projection project_point(const PolyUnion& C, const RVector& y) {
    if (y.size() != C.dim) throw DimensionError("project_point: dimension mismatch");
    std::optional<Projection> best;
    for (auto& p : C.pieces) {
        Projection q = project_point(p, y);
        if (!best || q.squared_distance < best->squared_distance) best = q;
    }
    return *best;
}

ProjectionD project_point(const PolyUnion& C, const std::vector<double>& y) {
    const std::size_t n = C.dim;
    if (y.size() != n) throw DimensionError("project_point: dimension mismatch");
    Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) yv[static_cast<Eigen::Index>(i)] = y[i];
    ProjectionD best;
    best.squared_distance = std::numeric_limits<double>::infinity();
    for (auto& piece : C.pieces) {
        const std::size_t m = piece.A.rows();
        Eigen::MatrixXd A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        Eigen::VectorXd b(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(piece.A(i, j));
            b[static_cast<Eigen::Index>(i)] = to_double(piece.b[i]);
        }
        const double tol = 1e-10;
        Eigen::VectorXd found;
        bool ok = for_subsets(m, n, [&](const std::vector<std::size_t>& J) {
            Eigen::VectorXd x = yv;
            if (!J.empty()) {
                Eigen::MatrixXd M(static_cast<Eigen::Index>(J.size()), static_cast<Eigen::Index>(n));
                Eigen::VectorXd rhs(static_cast<Eigen::Index>(J.size()));
                for (std::size_t t = 0; t < J.size(); ++t) {
                    M.row(static_cast<Eigen::Index>(t)) = A.row(static_cast<Eigen::Index>(J[t]));
                    rhs[static_cast<Eigen::Index>(t)] = b[static_cast<Eigen::Index>(J[t])];
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(M * M.transpose());
                if (lu.rank() < static_cast<Eigen::Index>(J.size())) return false;
                Eigen::VectorXd nu = lu.solve(M * yv - rhs);
                if (nu.minCoeff() < -tol) return false;
                x = yv - M.transpose() * nu;
            }
            if (m > 0 && ((A * x) - b).maxCoeff() > 1e-9) return false;
            found = x;
            return true;
        });
        if (!ok) continue;
        double d = (found - yv).squaredNorm();
        if (d < best.squared_distance) {
            best.squared_distance = d;
            best.point.assign(found.data(), found.data() + found.size());
        }
    }
    if (best.point.empty()) throw Error("projection: no optimal face found");
    return best;
}

MultiplierMap::MultiplierMap(RMatrix J, const PolyUnion& C, const RVector& fz)
    : J_(std::move(J)), components_(limiting_normal_cone(C, fz)) {
    if (J_.rows() != C.dim) throw DimensionError("pullback_normals: Jacobian row count differs from set dimension");
}

MultiplierMap::MultiplierMap(RMatrix J, std::vector<HCone> normal_components)
    : J_(std::move(J)), components_(std::move(normal_components)) {}

std::optional<RVector> MultiplierMap::min_norm(const RVector& v) const {
    if (v.size() != J_.cols()) throw DimensionError("min_norm: vector dimension mismatch");
    const std::size_t d = J_.rows();
    std::optional<Projection> best;
    RMatrix Jt = J_.transpose();
    for (auto& K : components_) {
        RMatrix E = vstack(K.eq, Jt);
        RVector e = zeros(K.eq.rows());
        e.insert(e.end(), v.begin(), v.end());
        auto p = project_onto(K.ineq, zeros(K.ineq.rows()), E, e, zeros(d));
        if (p && (!best || p->squared_distance < best->squared_distance)) best = p;
    }
    if (!best) return std::nullopt;
    return best->point;
}

std::optional<RVector> MultiplierMap::bounded(const RVector& v, const Rational& kappa) const {
    auto u = min_norm(v);
    if (!u) return std::nullopt;
    if (squared_norm(*u) > kappa * kappa * squared_norm(v)) return std::nullopt;
    return u;
}

std::optional<RVector> MultiplierMap::kernel_witness() const {
    const std::size_t d = J_.rows();
    RMatrix Jt = J_.transpose();
    for (auto& K : components_) {
        for (std::size_t i = 0; i < d; ++i) {
            for (int sg : {1, -1}) {
                LinearSystem sys(d);
                K.constrain(sys, 0);
                for (std::size_t r = 0; r < Jt.rows(); ++r) sys.add_eq(Jt.row(r));
                sys.add_strict(Rational(-sg) * unit(d, i));
                if (auto u = lp_feasible(sys)) return primitive(*u);
            }
        }
    }
    return std::nullopt;
}

MultiplierMap pullback_normals(const RMatrix& J, const PolyUnion& C, const RVector& fz) {
    if (!C.contains(fz)) throw DomainError("pullback_normals: base point is not in the set");
    return MultiplierMap(J, C, fz);
}

}  // namespace robstab

namespace robstab {

DMatrix to_double(const RMatrix& m) {
    DMatrix out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = to_double(m(i, j));
    return out;
}

std::optional<ProjectionD> project_onto(const DMatrix& A, const std::vector<double>& b, const DMatrix& E,
                                        const std::vector<double>& e, const std::vector<double>& y) {
    using Eigen::Index;
    const std::size_t n = y.size(), m = A.size(), k = E.size();
    const double tol = 1e-9;
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Index>(n));
    Eigen::MatrixXd Em(static_cast<Index>(k), static_cast<Index>(n));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) Em(static_cast<Index>(i), static_cast<Index>(j)) = E[i][j];
    const Index rank_e = k ? Eigen::FullPivLU<Eigen::MatrixXd>(Em).setThreshold(1e-10).rank() : 0;
    std::optional<ProjectionD> best;
    for_subsets(m, n - std::min<std::size_t>(n, static_cast<std::size_t>(rank_e)), [&](const std::vector<std::size_t>& J) {
        const Index rows = static_cast<Index>(k + J.size());
        Eigen::MatrixXd M(rows, static_cast<Index>(n));
        Eigen::VectorXd rhs(rows);
        for (std::size_t i = 0; i < k; ++i) {
            M.row(static_cast<Index>(i)) = Em.row(static_cast<Index>(i));
            rhs[static_cast<Index>(i)] = e[i];
        }
        for (std::size_t t = 0; t < J.size(); ++t) {
            for (std::size_t j = 0; j < n; ++j) M(static_cast<Index>(k + t), static_cast<Index>(j)) = A[J[t]][j];
            rhs[static_cast<Index>(k + t)] = b[J[t]];
        }
        Eigen::VectorXd x = yv;
        if (rows > 0) {
            if (Eigen::FullPivLU<Eigen::MatrixXd>(M).setThreshold(1e-10).rank() != rank_e + static_cast<Index>(J.size()))
                return false;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M * M.transpose());
            Eigen::VectorXd nu = cod.solve(M * yv - rhs);
            x = yv - M.transpose() * nu;
            if ((M * x - rhs).cwiseAbs().maxCoeff() > tol * (1 + rhs.cwiseAbs().maxCoeff())) return false;
            for (std::size_t t = 0; t < J.size(); ++t)
                if (nu[static_cast<Index>(k + t)] < -tol) return false;
        }
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += A[i][j] * x[static_cast<Index>(j)];
            if (s > b[i] + tol) return false;
        }
        best = ProjectionD{std::vector<double>(x.data(), x.data() + x.size()), (x - yv).squaredNorm()};
        return true;
    });
    return best;
}

}  // namespace robstab

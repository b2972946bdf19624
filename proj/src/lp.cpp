#include "robstab/lp.hpp"

#include "robstab/errors.hpp"

namespace robstab {
namespace {

struct Tableau {
    std::vector<RVector> rows;  // each: ncols coefficients followed by rhs
    RVector obj;                // reduced costs (negated objective form), last entry = objective value
    std::vector<std::size_t> basis;
    std::size_t ncols = 0;

    void pivot(std::size_t r, std::size_t c) {
        RVector& pr = rows[r];
        Rational inv = 1 / pr[c];
        for (auto& x : pr)
            if (x != 0) x *= inv;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || rows[i][c] == 0) continue;
            Rational f = rows[i][c];
            for (std::size_t j = 0; j <= ncols; ++j)
                if (pr[j] != 0) rows[i][j] -= f * pr[j];
        }
        if (obj[c] != 0) {
            Rational f = obj[c];
            for (std::size_t j = 0; j <= ncols; ++j)
                if (pr[j] != 0) obj[j] -= f * pr[j];
        }
        basis[r] = c;
    }

    // Returns false when unbounded.
    bool optimize(const std::vector<bool>& allowed) {
        for (;;) {
            std::size_t enter = ncols;
            for (std::size_t j = 0; j < ncols; ++j)
                if (allowed[j] && obj[j] < 0) {
                    enter = j;
                    break;
                }
            if (enter == ncols) return true;
            std::size_t leave = rows.size();
            Rational best;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i][enter] <= 0) continue;
                Rational ratio = rows[i][ncols] / rows[i][enter];
                if (leave == rows.size() || ratio < best ||
                    (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == rows.size()) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

LpResult lp_maximize(const RVector& c, const RMatrix& A, const RVector& b, const RMatrix& E,
                     const RVector& e) {
    const std::size_t n = c.size();
    if ((A.rows() > 0 && A.cols() != n) || (E.rows() > 0 && E.cols() != n) || b.size() != A.rows() ||
        e.size() != E.rows())
        throw DimensionError("lp_maximize: inconsistent dimensions");
    const std::size_t mi = A.rows(), me = E.rows(), m = mi + me;
    // Columns: x+ (n), x- (n), slacks (mi), artificials (m).
    const std::size_t nstruct = 2 * n + mi;
    Tableau t;
    t.ncols = nstruct + m;
    t.rows.assign(m, RVector(t.ncols + 1, Rational(0)));
    t.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        RVector& r = t.rows[i];
        bool ineq = i < mi;
        for (std::size_t j = 0; j < n; ++j) {
            Rational a = ineq ? A(i, j) : E(i - mi, j);
            r[j] = a;
            r[n + j] = -a;
        }
        if (ineq) r[2 * n + i] = 1;
        r[t.ncols] = ineq ? b[i] : e[i - mi];
        if (r[t.ncols] < 0)
            for (std::size_t j = 0; j < nstruct; ++j) r[j] = -r[j];
        if (r[t.ncols] < 0) r[t.ncols] = -r[t.ncols];
        r[nstruct + i] = 1;
        t.basis[i] = nstruct + i;
    }
    // Phase 1: maximize -sum(artificials).
    t.obj.assign(t.ncols + 1, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nstruct; ++j)
            if (t.rows[i][j] != 0) t.obj[j] -= t.rows[i][j];
    for (std::size_t i = 0; i < m; ++i) t.obj[t.ncols] -= t.rows[i][t.ncols];
    std::vector<bool> allowed(t.ncols, true);
    t.optimize(allowed);
    LpResult res;
    if (t.obj[t.ncols] != 0) {
        res.status = LpStatus::infeasible;
        return res;
    }
    // Drive artificials out of the basis; drop redundant rows.
    for (std::size_t i = 0; i < t.rows.size();) {
        if (t.basis[i] < nstruct) {
            ++i;
            continue;
        }
        std::size_t col = nstruct;
        for (std::size_t j = 0; j < nstruct; ++j)
            if (t.rows[i][j] != 0) {
                col = j;
                break;
            }
        if (col == nstruct) {
            t.rows.erase(t.rows.begin() + static_cast<long>(i));
            t.basis.erase(t.basis.begin() + static_cast<long>(i));
            continue;
        }
        t.pivot(i, col);
        ++i;
    }
    for (std::size_t j = nstruct; j < t.ncols; ++j) allowed[j] = false;
    // Phase 2.
    t.obj.assign(t.ncols + 1, Rational(0));
    for (std::size_t j = 0; j < n; ++j) {
        t.obj[j] = -c[j];
        t.obj[n + j] = c[j];
    }
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        Rational f = t.obj[t.basis[i]];
        if (f == 0) continue;
        for (std::size_t j = 0; j <= t.ncols; ++j)
            if (t.rows[i][j] != 0) t.obj[j] -= f * t.rows[i][j];
    }
    bool bounded = t.optimize(allowed);
    RVector y(t.ncols, Rational(0));
    for (std::size_t i = 0; i < t.rows.size(); ++i) y[t.basis[i]] = t.rows[i][t.ncols];
    res.x.assign(n, Rational(0));
    for (std::size_t j = 0; j < n; ++j) res.x[j] = y[j] - y[n + j];
    if (!bounded) {
        res.status = LpStatus::unbounded;
        return res;
    }
    res.status = LpStatus::optimal;
    res.value = t.obj[t.ncols];
    return res;
}

LinearSystem::LinearSystem(std::size_t n)
    : dim(n), strict(0, n), weak(0, n), eq(0, n) {}

void LinearSystem::add_strict(const RVector& row, const Rational& rhs) {
    if (row.size() != dim) throw DimensionError("LinearSystem: row length mismatch");
    strict.append_row(row);
    strict_rhs.push_back(rhs);
}

void LinearSystem::add_weak(const RVector& row, const Rational& rhs) {
    if (row.size() != dim) throw DimensionError("LinearSystem: row length mismatch");
    weak.append_row(row);
    weak_rhs.push_back(rhs);
}

void LinearSystem::add_eq(const RVector& row, const Rational& rhs) {
    if (row.size() != dim) throw DimensionError("LinearSystem: row length mismatch");
    eq.append_row(row);
    eq_rhs.push_back(rhs);
}

void LinearSystem::append(const LinearSystem& other) {
    if (other.dim != dim) throw DimensionError("LinearSystem: dimension mismatch");
    for (std::size_t i = 0; i < other.strict.rows(); ++i) add_strict(other.strict.row(i), other.strict_rhs[i]);
    for (std::size_t i = 0; i < other.weak.rows(); ++i) add_weak(other.weak.row(i), other.weak_rhs[i]);
    for (std::size_t i = 0; i < other.eq.rows(); ++i) add_eq(other.eq.row(i), other.eq_rhs[i]);
}

bool LinearSystem::satisfied_by(const RVector& x) const {
    if (x.size() != dim) return false;
    for (std::size_t i = 0; i < strict.rows(); ++i)
        if (!(dot(strict.row(i), x) < strict_rhs[i])) return false;
    for (std::size_t i = 0; i < weak.rows(); ++i)
        if (dot(weak.row(i), x) > weak_rhs[i]) return false;
    for (std::size_t i = 0; i < eq.rows(); ++i)
        if (dot(eq.row(i), x) != eq_rhs[i]) return false;
    return true;
}

std::optional<RVector> lp_feasible(const LinearSystem& sys) {
    const std::size_t n = sys.dim;
    if (sys.strict.rows() == 0) {
        LpResult r = lp_maximize(zeros(n), sys.weak, sys.weak_rhs, sys.eq, sys.eq_rhs);
        if (r.status == LpStatus::infeasible) return std::nullopt;
        return r.x;
    }
    // Variables (x, delta): maximize delta.
    RMatrix A(0, n + 1);
    RVector b;
    for (std::size_t i = 0; i < sys.weak.rows(); ++i) {
        RVector r = sys.weak.row(i);
        r.push_back(0);
        A.append_row(r);
        b.push_back(sys.weak_rhs[i]);
    }
    for (std::size_t i = 0; i < sys.strict.rows(); ++i) {
        RVector r = sys.strict.row(i);
        r.push_back(1);
        A.append_row(r);
        b.push_back(sys.strict_rhs[i]);
    }
    A.append_row(unit(n + 1, n));
    b.push_back(1);
    RMatrix E(0, n + 1);
    RVector e;
    for (std::size_t i = 0; i < sys.eq.rows(); ++i) {
        RVector r = sys.eq.row(i);
        r.push_back(0);
        E.append_row(r);
        e.push_back(sys.eq_rhs[i]);
    }
    LpResult r = lp_maximize(unit(n + 1, n), A, b, E, e);
    if (r.status != LpStatus::optimal || r.value <= 0) return std::nullopt;
    r.x.pop_back();
    return r.x;
}

std::optional<RVector> lp_feasible(const RMatrix& strict, const RVector& strict_rhs, const RMatrix& weak,
                                   const RVector& weak_rhs, const RMatrix& eq, const RVector& eq_rhs) {
    std::size_t n = std::max({strict.cols(), weak.cols(), eq.cols()});
    auto check = [n](const RMatrix& m, const RVector& rhs) {
        if (m.rows() > 0 && m.cols() != n) throw DimensionError("lp_feasible: column count mismatch");
        if (m.rows() != rhs.size()) throw DimensionError("lp_feasible: rhs length mismatch");
    };
    check(strict, strict_rhs);
    check(weak, weak_rhs);
    check(eq, eq_rhs);
    LinearSystem sys(n);
    for (std::size_t i = 0; i < strict.rows(); ++i) sys.add_strict(strict.row(i), strict_rhs[i]);
    for (std::size_t i = 0; i < weak.rows(); ++i) sys.add_weak(weak.row(i), weak_rhs[i]);
    for (std::size_t i = 0; i < eq.rows(); ++i) sys.add_eq(eq.row(i), eq_rhs[i]);
    return lp_feasible(sys);
}

}  // namespace robstab

#pragma once

#include "robstab/matrix.hpp"

#include <optional>

namespace robstab {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    RVector x;        // primal point (optimal, or feasible when unbounded)
    Rational value;   // objective value when optimal
};

// maximize c.x subject to A x <= b, E x = e, x free.
// Dense two-phase simplex over rationals with Bland's rule.
LpResult lp_maximize(const RVector& c, const RMatrix& A, const RVector& b, const RMatrix& E,
                     const RVector& e);

// A system of strict, weak and equality rows over a fixed dimension.
struct LinearSystem {
    std::size_t dim = 0;
    RMatrix strict;
    RVector strict_rhs;
    RMatrix weak;
    RVector weak_rhs;
    RMatrix eq;
    RVector eq_rhs;

    LinearSystem() = default;
    explicit LinearSystem(std::size_t n);

    void add_strict(const RVector& row, const Rational& rhs = 0);  // row.x < rhs
    void add_weak(const RVector& row, const Rational& rhs = 0);    // row.x <= rhs
    void add_eq(const RVector& row, const Rational& rhs = 0);      // row.x = rhs
    void append(const LinearSystem& other);

    bool satisfied_by(const RVector& x) const;
};

// Witness satisfying every row, or nullopt when the system is infeasible.
// Strict rows are handled by maximizing a common slack delta <= 1.
std::optional<RVector> lp_feasible(const LinearSystem& sys);

std::optional<RVector> lp_feasible(const RMatrix& strict, const RVector& strict_rhs, const RMatrix& weak,
                                   const RVector& weak_rhs, const RMatrix& eq, const RVector& eq_rhs);

}  // namespace robstab

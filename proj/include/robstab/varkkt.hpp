#pragma once

#include "robstab/order1.hpp"

namespace robstab {

// 0 = F(p,x) + grad_x phi(p,x)^T y,  (phi(p,x), y) in gph N of the nonpositive orthant.
// F and phi take parameters and decisions; y is the multiplier of phi <= 0.
struct KKTSystem {
    FuncVec F;
    FuncVec phi;
    ParamSet P;
    RVector p_ref;
    RVector x_ref;
    RVector y_ref;

    std::size_t param_dim() const { return F.param_dim; }
    std::size_t decision_dim() const { return F.decision_dim; }
    std::size_t multiplier_dim() const { return phi.size(); }
    // Throws ValidationError listing every offending component.
    void validate() const;
    // F + grad_x phi^T y with y read as decisions n, ..., n + l - 1.
    FuncVec lagrangian() const;
};

// Decisions (x, y); image (G, phi_1, y_1, ..., phi_l, y_l); C = {0}^n x (gph N)^l; split after G.
ConstraintSystem build_kkt_system(const KKTSystem& k);

// Position of a point of gph N_{R_-} = (R_- x {0}) u ({0} x R_+).
enum class GrnState { phi_neg_y_zero, phi_zero_y_pos, corner };

std::string to_string(GrnState s);
// DomainError when (phi, y) is not in the graph.
GrnState grn_state(const Rational& phi, const Rational& y);

// Cones in the (phi, y) plane, resp. the (lambda, d) plane. Unions are lists of convex pieces.
std::vector<HCone> grn_tangent(GrnState s);
HCone grn_regular_normal(GrnState s);
std::vector<HCone> grn_limiting_normal(GrnState s);
// Empty when (ds, dv) is not tangent.
std::vector<HCone> grn_directional_normal(GrnState s, const Rational& ds, const Rational& dv);

// Componentwise product, kept as one list of pieces per component.
struct GrnProduct {
    std::vector<std::vector<HCone>> components;

    bool empty() const;
    std::size_t pattern_count() const;
    bool contains(const RVector& interleaved) const;
    // The convex cone picked by choosing one piece per component (mixed radix index).
    HCone pattern(std::size_t index) const;
};

GrnProduct grn_directional_normal(const RVector& phi, const RVector& y, const RVector& ds, const RVector& dv);

// Existence of tangent responses (u, v) for every w in T_P and exclusion of
// nonzero (z, lambda) along every nonzero tangent response.
Verdict check_kkt_first_order(const KKTSystem& k);

struct SolutionMap {
    struct Branch {
        std::vector<bool> active;  // phi_i = 0 on active components, y_i = 0 otherwise
        std::string status;        // "solution", "infeasible" or "singular"
    };
    std::vector<std::pair<RVector, RVector>> points;  // distinct (x, y)
    std::vector<Branch> branches;
};

// Requires G and phi affine in (x, y) at the given parameter.
SolutionMap enumerate_solution_map(const KKTSystem& k, const RVector& p);

}  // namespace robstab

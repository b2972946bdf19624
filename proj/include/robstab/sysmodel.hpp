#pragma once

#include "robstab/funcexpr.hpp"
#include "robstab/polycal.hpp"

#include <optional>
#include <string>
#include <vector>

namespace robstab {

// One factor of the product set C.
struct SetFactor {
    enum class Kind { nonpositive, zero, graph_normal, general };
    Kind kind = Kind::general;
    PolyUnion set;

    static SetFactor nonpositive();
    static SetFactor zero();
    static SetFactor graph_normal();
    static SetFactor general(PolyUnion u);
    std::size_t dim() const { return set.dim; }
};

// C as an ordered product of factors.
struct ProductSet {
    std::vector<SetFactor> factors;

    std::size_t dim() const;
    // Coordinate offset of each factor.
    std::vector<std::size_t> offsets() const;
    bool contains(const RVector& z) const;
    // Explicit union of polyhedra (exponential in the number of nonconvex factors).
    PolyUnion flatten() const;
    // Sum of squared factor distances, exact.
    Rational squared_distance(const RVector& z) const;
    double squared_distance(const std::vector<double>& z) const;
    // True when factor boundaries include this coordinate index.
    bool splits_at(std::size_t l1) const;
    ProductSet slice(std::size_t first_coord, std::size_t last_coord) const;
    bool is_polyhedral_convex() const;

    static ProductSet nonpositive(std::size_t n);
    static ProductSet zero(std::size_t n);
    static ProductSet of(const PolyUnion& u);
};

struct ParamSet {
    enum class Variant { full_space, polyhedron, smooth_inequalities };
    Variant variant = Variant::full_space;
    Polyhedron poly;  // polyhedron variant
    FuncVec h;        // smooth variant: h(p) <= 0, functions of the parameters only

    static ParamSet full();
    static ParamSet polyhedral(Polyhedron p);
    static ParamSet smooth(FuncVec h);
    bool contains(const RVector& p) const;
    bool contains(const std::vector<double>& p) const;
};

struct DirectionCone {
    enum class Provenance { computed_from_P, user_supplied };
    VCone cone;
    Provenance provenance = Provenance::computed_from_P;
    // The parameter Jacobian is not injective, so the computed cone may be
    // strictly smaller than the true image derivative.
    bool may_be_strict_subset = false;
};

class ConstraintSystem {
public:
    FuncVec g;
    ProductSet C;
    ParamSet P;
    RVector p_ref;
    RVector x_ref;
    std::size_t split_l1 = 0;
    std::optional<VCone> user_direction_cone;

    // Throws ValidationError with diagnostics when the data are inconsistent.
    void validate() const;

    std::size_t param_dim() const { return g.param_dim; }
    std::size_t decision_dim() const { return g.decision_dim; }
    std::size_t image_dim() const { return g.size(); }
    RVector reference_point() const { return join(p_ref, x_ref); }
    RVector reference_value() const;
    RMatrix jac_x() const;
    RMatrix jac_p() const;

    // Subsystem made of components [first, last) with the matching factors of C.
    ConstraintSystem block(std::size_t first, std::size_t last) const;
    // Removes parameters that appear neither in g nor in the description of P.
    ConstraintSystem drop_unused_params(std::vector<std::size_t>* kept = nullptr) const;
};

HCone tangent_cone_P(const ConstraintSystem& sys);
DirectionCone image_derivative_cone(const ConstraintSystem& sys);

}  // namespace robstab

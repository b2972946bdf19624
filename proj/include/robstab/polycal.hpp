#pragma once

#include "robstab/cone.hpp"

#include <optional>
#include <vector>

namespace robstab {

// {z : A z <= b}
struct Polyhedron {
    std::size_t dim = 0;
    RMatrix A;
    RVector b;

    Polyhedron() = default;
    // Throws ValidationError when empty.
    Polyhedron(RMatrix A_, RVector b_, std::size_t n);

    bool contains(const RVector& z) const;
    std::vector<std::size_t> active_rows(const RVector& z) const;
    // Tangent cone at z (z must belong to the polyhedron).
    HCone tangent(const RVector& z) const;
};

struct PolyUnion {
    std::size_t dim = 0;
    std::vector<Polyhedron> pieces;

    PolyUnion() = default;
    PolyUnion(std::vector<Polyhedron> ps, std::size_t n);
    explicit PolyUnion(Polyhedron p);

    bool contains(const RVector& z) const;
    std::vector<std::size_t> containing(const RVector& z) const;

    static PolyUnion nonpositive_orthant(std::size_t n);
    static PolyUnion origin(std::size_t n);
    static PolyUnion whole_space(std::size_t n);
    // (R_- x {0}) u ({0} x R_+) in the (phi, y) plane.
    static PolyUnion graph_normal_nonpos();
};

// Union of convex cones: the local model of a PolyUnion at a point.
struct ConeUnion {
    std::size_t dim = 0;
    std::vector<HCone> pieces;

    bool contains(const RVector& w) const;
};

ConeUnion local_tangent(const PolyUnion& C, const RVector& z);

// A relatively open cone of directions on which the local piece/active pattern
// is constant, together with the regular normal value it carries.
struct Stratum {
    std::vector<int> signs;  // sign of each arrangement hyperplane on the stratum
    std::vector<std::size_t> piece_pattern;
    std::vector<std::vector<std::size_t>> active_pattern;  // per entry of piece_pattern
    HCone direction_cone;                                  // closure of the stratum
    RVector representative;
    HCone normal_value;

    bool is_origin() const;
};

class Stratification {
public:
    Stratification() = default;
    explicit Stratification(const ConeUnion& T);
    // Only the strata whose closure contains w.
    Stratification(const ConeUnion& T, const RVector& w);

    std::size_t dim() const { return tangent_.dim; }
    const ConeUnion& tangent() const { return tangent_; }
    const std::vector<RVector>& hyperplanes() const { return hyperplanes_; }
    const std::vector<Stratum>& strata() const { return strata_; }

    bool in_stratum(std::size_t s, const RVector& w) const;
    bool in_closure(std::size_t s, const RVector& w) const;
    // Index of the stratum whose relatively open cone contains w; nullopt if w is not tangent.
    std::optional<std::size_t> locate(const RVector& w) const;
    // Strict and equality rows describing stratum s (strict rows read h.w < 0).
    LinearSystem open_system(std::size_t s) const;
    // Distinct normal values of all strata whose closure contains w; empty when w is not tangent.
    std::vector<HCone> normals_along(const RVector& w) const;
    std::vector<HCone> limiting_normals() const;

private:
    ConeUnion tangent_;
    std::vector<RVector> hyperplanes_;
    std::vector<Stratum> strata_;
};

std::vector<HCone> tangent_cone(const PolyUnion& C, const RVector& z);
HCone regular_normal_cone(const PolyUnion& C, const RVector& z);
std::vector<HCone> limiting_normal_cone(const PolyUnion& C, const RVector& z);
std::vector<HCone> directional_limiting_normal_cone(const PolyUnion& C, const RVector& z, const RVector& w);
std::vector<Stratum> enumerate_strata(const PolyUnion& C, const RVector& z);
// T_{T_C(z)}(v) piecewise; throws DomainError when v is not tangent.
std::vector<HCone> second_order_tangent_set(const PolyUnion& C, const RVector& z, const RVector& v);

// Regular normal cone of a union of cones at a direction w in it.
HCone regular_normal_of_union(const ConeUnion& T, const RVector& w);

// Distinct cones (canonical comparison), order preserved.
std::vector<HCone> distinct_cones(const std::vector<HCone>& cones);
bool union_contains(const std::vector<HCone>& cones, const RVector& x);

struct Projection {
    RVector point;
    Rational squared_distance;
};

// Euclidean projection of y onto {x : A x <= b, E x = e}; nullopt if empty.
std::optional<Projection> project_onto(const RMatrix& A, const RVector& b, const RMatrix& E, const RVector& e,
                                       const RVector& y);
Projection project_point(const Polyhedron& P, const RVector& y);
Projection project_point(const PolyUnion& C, const RVector& y);

struct ProjectionD {
    std::vector<double> point;
    double squared_distance = 0;
};
ProjectionD project_point(const PolyUnion& C, const std::vector<double>& y);
// Floating-point projection onto {x : A x <= b, E x = e}; nullopt if no
// feasible active face is found.
using DMatrix = std::vector<std::vector<double>>;
std::optional<ProjectionD> project_onto(const DMatrix& A, const std::vector<double>& b, const DMatrix& E,
                                        const std::vector<double>& e, const std::vector<double>& y);
DMatrix to_double(const RMatrix& m);

// Multipliers u in N_C(fz) with J^T u = v.
class MultiplierMap {
public:
    MultiplierMap(RMatrix J, const PolyUnion& C, const RVector& fz);
    MultiplierMap(RMatrix J, std::vector<HCone> normal_components);

    std::optional<RVector> min_norm(const RVector& v) const;
    std::optional<RVector> bounded(const RVector& v, const Rational& kappa) const;
    std::optional<RVector> kernel_witness() const;
    const std::vector<HCone>& normal_components() const { return components_; }

private:
    RMatrix J_;
    std::vector<HCone> components_;
};

MultiplierMap pullback_normals(const RMatrix& J, const PolyUnion& C, const RVector& fz);

}  // namespace robstab

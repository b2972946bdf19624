#pragma once

#include "robstab/lp.hpp"
#include "robstab/matrix.hpp"

#include <string>
#include <vector>

namespace robstab {

// {x : ineq x <= 0, eq x = 0}
struct HCone {
    std::size_t dim = 0;
    RMatrix ineq;
    RMatrix eq;

    HCone() = default;
    explicit HCone(std::size_t n);
    HCone(RMatrix A, RMatrix E, std::size_t n);

    static HCone full(std::size_t n) { return HCone(n); }
    static HCone zero(std::size_t n);

    void add_ineq(const RVector& row);
    void add_eq(const RVector& row);
    bool contains(const RVector& x) const;
    // Adds the rows of this cone to a linear system over a larger space,
    // reading the cone coordinates at [offset, offset + dim).
    void constrain(LinearSystem& sys, std::size_t offset) const;
};

// cone(rays) + span(lineality)
struct VCone {
    std::size_t dim = 0;
    std::vector<RVector> rays;
    std::vector<RVector> lineality;

    VCone() = default;
    explicit VCone(std::size_t n) : dim(n) {}
    VCone(std::size_t n, std::vector<RVector> r, std::vector<RVector> l)
        : dim(n), rays(std::move(r)), lineality(std::move(l)) {}

    bool contains(const RVector& x) const;
    bool is_zero() const { return rays.empty() && lineality.empty(); }
};

// Double description: extreme rays of the pointed part plus a lineality basis.
VCone hcone_to_vcone(const HCone& c);
HCone vcone_to_hcone(const VCone& v);

HCone polar(const HCone& c);
HCone polar(const VCone& v);

// Coordinate projection by Fourier-Motzkin elimination; the result lives in
// R^{coords.size()} with coordinates in the given order.
HCone project_cone(const HCone& c, const std::vector<std::size_t>& coords);

HCone intersect(const HCone& a, const HCone& b);
HCone product(const HCone& a, const HCone& b);
HCone product(const std::vector<HCone>& factors);
// {x : M x in c}
HCone preimage(const RMatrix& M, const HCone& c);
VCone image(const RMatrix& M, const VCone& v);

bool is_subset(const HCone& a, const HCone& b);
bool same_cone(const HCone& a, const HCone& b);
bool is_zero_cone(const HCone& c);
bool is_subspace(const HCone& c);
// Some point of the relative interior (sum of generators).
RVector relative_interior_point(const HCone& c);

// Unique generator form: RREF lineality basis and sorted primitive rays.
VCone canonical(const VCone& v);
VCone canonical(const HCone& c);
// Irredundant H-representation obtained from the canonical generators.
HCone minimal(const HCone& c);

std::string describe(const HCone& c);
std::string describe(const VCone& v);

}  // namespace robstab

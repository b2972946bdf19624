#pragma once

#include "robstab/sysmodel.hpp"
#include "robstab/verdict.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace robstab {

// Local model of a product set at a point: one stratification per factor.
// Product strata are indexed by tuples of factor strata.
class ProductModel {
public:
    struct Stratum {
        std::vector<std::size_t> index;  // per factor
        HCone closure;                   // closure of the relatively open direction cone
        HCone value;                     // regular normal value carried by the stratum
        std::size_t value_id = 0;        // equal ids <=> equal values
        bool is_origin = false;
    };

    ProductModel() = default;
    ProductModel(const ProductSet& C, const RVector& z);

    std::size_t dim() const { return dim_; }
    std::size_t strata_count() const;
    // Calls f on every product stratum until it returns false.
    void for_each(const std::function<bool(const Stratum&)>& f) const;
    bool tangent_contains(const RVector& d) const;
    std::vector<HCone> tangent_pieces() const;
    std::vector<HCone> limiting_normals() const;
    std::vector<HCone> normals_along(const RVector& d) const;
    const std::vector<Stratification>& factors() const { return factors_; }
    const std::vector<std::size_t>& offsets() const { return offsets_; }

private:
    std::size_t dim_ = 0;
    std::vector<Stratification> factors_;
    std::vector<std::size_t> offsets_;
    std::vector<std::vector<std::size_t>> value_ids_;  // factor -> stratum -> distinct value index
    std::vector<std::vector<HCone>> values_;           // factor -> distinct values
};

// Some x in the cone of sys with x_i != 0 for some i in coords (coordinate
// sweeps, both signs).
std::optional<RVector> find_nonzero(const LinearSystem& sys, const std::vector<std::size_t>& coords);

Verdict check_metric_regularity(const ConstraintSystem& sys);
Verdict check_metric_regularity(const RMatrix& Jx, const ProductSet& C, const RVector& gbar);

// f takes decisions only.
Verdict check_subregularity_firstorder(const FuncVec& f, const ProductSet& C, const RVector& x_ref);

// Every v in D admits u with v + Jx u tangent to C at gbar.
Verdict check_existence_condition(const ConstraintSystem& sys, const DirectionCone& D);
Verdict check_existence_condition(const RMatrix& Jx, const ProductModel& model, const HCone& D);

// Linear u = K v valid on all of D for one convex tangent piece, if one exists.
std::optional<RMatrix> linear_selection(const RMatrix& Jx, const ProductModel& model, const VCone& D);
bool selection_valid(const RMatrix& Jx, const ProductModel& model, const VCone& D, const RMatrix& K);

// Evidence that the trailing subsystem is Robinson stable.
struct SubsystemCertificate {
    std::string source;
};

Verdict check_first_order_splitting(const ConstraintSystem& sys, const std::optional<SubsystemCertificate>& g2);
Verdict check_first_order(const ConstraintSystem& sys);

// Direction-strata scan shared by the first-order checks: looks for a stratum
// whose closure meets {(v,u) != 0 : v in D, v + Jx u in closure} while its
// value holds lambda with Jx^T lambda = 0 and lambda_i != 0 for some target i.
Verdict scan_first_order(const RMatrix& Jx, const ProductModel& model, const HCone& D,
                         const std::vector<std::size_t>& targets);

struct RadiusSchedule {
    double r0 = 0.1;
    double factor = 0.5;
    int count = 4;
    int samples = 200;
    std::uint64_t seed = 1;
};

struct BoundEstimate {
    std::vector<double> sup_per_radius;
    double value = 0;
    std::string trend;
    // Point, unit normal and min-norm multiplier attaining the value.
    std::vector<double> witness_p, witness_x, witness_v, witness_lambda;
};

// Sup over sampled (p, x) near the reference of the least multiplier norm
// needed for unit normals of the solution set.
BoundEstimate estimate_multiplier_bound(const ConstraintSystem& sys, const RadiusSchedule& sched);

BoundEstimate estimate_exact_bound(const FuncVec& f, const ProductSet& C, const RVector& x_ref,
                                   const RadiusSchedule& sched);

Verdict check_crcq(const ConstraintSystem& sys, int samples, double radius, std::uint64_t seed = 1);

std::string classify_trend(const std::vector<double>& sups);

}  // namespace robstab

#pragma once

#include "robstab/order1.hpp"

#include <functional>
#include <random>

namespace robstab {

// Extended rational: -inf, finite or +inf.
struct CurvatureValue {
    enum class Kind { neg_inf, finite, pos_inf };
    enum class Method { upper_bound_formula, lower_formula, second_order_tangent, sampled };
    Kind kind = Kind::finite;
    Rational value = 0;     // finite exact values
    double approx = 0;      // sampled values and a double view of exact ones
    double tolerance = 0;   // sampled only
    Method method = Method::lower_formula;

    static CurvatureValue finite(const Rational& v, Method m);
    static CurvatureValue infinite(bool positive, Method m);
    bool is_finite() const { return kind == Kind::finite; }
};

std::string to_string(const CurvatureValue& c);

// Omega = {z : q(z) in Q} around zbar; q depends on decision variables only.
struct SubamenableRep {
    FuncVec q;
    PolyUnion Q;
    RVector zbar;
};

struct LowerCurvature {
    CurvatureValue value;                 // minimum over the candidates
    std::vector<RVector> multipliers;     // one representative per candidate
    std::vector<CurvatureValue> candidates;
    bool ambiguous = false;
};

// Lower curvature through the polyhedral formula: -1/2 <Hess<mu,q> v, v> over
// mu in the directional normal cone of Q with lambda = grad q^T mu. +inf when no
// such mu exists. DomainError when v is not tangent.
LowerCurvature lower_curvature_polyhedral(const SubamenableRep& rep, const RVector& lambda, const RVector& v);

struct UpperCurvatureBound {
    CurvatureValue sup;    // sup of <Hess<mu,q> v, v> over the multiplier polyhedron
    CurvatureValue bound;  // -1/2 sup
};

// Q must be a single convex polyhedron.
UpperCurvatureBound upper_curvature_bound_convex(const SubamenableRep& rep, const RVector& lambda, const RVector& v);

// 1/2 sup <lambda, w> over the second-order tangent set of Omega at zbar along v.
CurvatureValue second_order_tangent_sup(const SubamenableRep& rep, const RVector& lambda, const RVector& v);

// Set access for the sampling estimators.
class SampledSet {
public:
    virtual ~SampledSet() = default;
    virtual std::size_t dim() const = 0;
    virtual bool contains(const std::vector<double>& z) const = 0;
    // Points of the set near center, including points on lower-dimensional faces.
    virtual std::vector<std::vector<double>> sample_near(const std::vector<double>& center, double radius, int count,
                                                         std::mt19937_64& rng) const = 0;
    // Distance from lambda to the limiting normal cone at z.
    virtual double normal_distance(const std::vector<double>& z, const std::vector<double>& lambda) const = 0;
};

class PreimageSet : public SampledSet {
public:
    explicit PreimageSet(SubamenableRep rep);
    std::size_t dim() const override { return rep_.q.decision_dim; }
    bool contains(const std::vector<double>& z) const override;
    std::vector<std::vector<double>> sample_near(const std::vector<double>& center, double radius, int count,
                                                 std::mt19937_64& rng) const override;
    double normal_distance(const std::vector<double>& z, const std::vector<double>& lambda) const override;

private:
    SubamenableRep rep_;
    struct Face {
        std::size_t piece;
        std::vector<std::size_t> rows;
    };
    std::vector<Face> faces_;
};

struct CurvatureSchedule {
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    int taus = 24;
    int samples_per_tau = 24;
    std::uint64_t seed = 3;
};

struct SampledCurvature {
    std::vector<double> per_eps;  // nan when no admissible sample was found
    CurvatureValue value;         // last finite entry
    bool monotone = true;
};

enum class CurvatureKind { upper, lower };

SampledCurvature curvature_sampling_oracle(const SampledSet& omega, const std::vector<double>& lambda,
                                           const std::vector<double>& zbar, const std::vector<double>& v,
                                           CurvatureKind kind, const CurvatureSchedule& sched);

// Some y != 0 with y^T Q y >= 0, or nullopt when Q is negative definite.
std::optional<RVector> nonnegative_direction(const RMatrix& Q);

// Second-order conditions with P given by smooth inequalities active at the
// reference parameter; every nonzero multiplier must be excluded.
Verdict check_second_order_polyhedral(const ConstraintSystem& sys);
// Splitting version with the curvature of P replaced by its convex upper bound
// and zero lower curvature of the polyhedral C.
Verdict check_second_order_general(const ConstraintSystem& sys, const std::optional<SubsystemCertificate>& g2);
Verdict check_subregularity_second_order(const FuncVec& f, const ProductSet& C, const RVector& x_ref);

}  // namespace robstab

#pragma once

#include "robstab/varkkt.hpp"

#include <functional>
#include <optional>

namespace robstab {

// Shrinking neighborhoods: radii r0, r0*factor, ..., samples per radius.
struct SampleSchedule {
    double r0 = 0.1;
    double factor = 0.5;
    int count = 4;
    int samples = 200;
    std::uint64_t seed = 1;

    // Throws ValidationError unless r0 > 0, 0 < factor < 1, count > 0, samples > 0.
    void validate() const;
    std::vector<double> radii() const;
};

struct ModulusEstimate {
    std::vector<double> sup_per_radius;  // +inf marks an empty solution set
    std::string trend;                   // insufficient, stable, growing or shrinking
    double value = 0;                    // finest radius
    double witness_ratio = 0;
    std::vector<std::pair<std::string, std::vector<double>>> witness;
    // Distances to solution sets came from local descent, so ratios bound the modulus from below.
    bool lower_bound = false;
    bool parametric_violation = false;

    const std::vector<double>* find(const std::string& name) const;
};

struct DistanceRatio {
    double ratio = 0;            // dist(x, solutions(p)) / dist(g(p,x), C); +inf when no solution is found
    double solution_distance = 0;
    double value_distance = 0;
    std::vector<double> nearest;  // empty when no solution is found
    bool exact = true;            // per-piece projection (g affine in x)
};

// Deterministic in (p, x).
DistanceRatio rs_ratio(const ConstraintSystem& sys, const std::vector<double>& p, const std::vector<double>& x);

ModulusEstimate estimate_rs_modulus(const ConstraintSystem& sys, const SampleSchedule& sched);
// Numeric grade; parameters are drawn from a ball ten times smaller than the decision ball.
Verdict check_parametric_stability(const ConstraintSystem& sys, const SampleSchedule& sched);
ModulusEstimate estimate_bmp_modulus(const ConstraintSystem& sys, const SampleSchedule& sched);

// Solution points of p, each a flat vector.
using SolutionOracle = std::function<std::vector<std::vector<double>>(const std::vector<double>& p)>;

struct LipschitzProblem {
    SolutionOracle solutions;
    std::function<bool(const std::vector<double>&)> in_P;  // all parameters when empty
    std::vector<double> p_ref;
    std::vector<double> x_ref;
    double neighborhood = 1;  // fixed radius of the ball around x_ref
};

// Parameters are drawn from the shell between consecutive radii.
ModulusEstimate estimate_lipschitz_modulus(const LipschitzProblem& prob, const SampleSchedule& sched);
// Solution oracle of a system affine in (x, y), through branch enumeration.
SolutionOracle kkt_solution_oracle(const KKTSystem& k);

struct FalsifyBudget {
    SampleSchedule sched;
    double kappa0 = 10;  // ladder kappa0 * (1 + k) at the k-th radius
};

struct Counterexample {
    std::vector<double> p, x;
    double ratio = 0;
    double kappa = 0;
    double radius = 0;
};

// A pair at the finest radius when every radius beats its ladder value.
std::optional<Counterexample> falsify_robinson(const ConstraintSystem& sys, const FalsifyBudget& budget);

}  // namespace robstab

#include "robstab/probe.hpp"

#include "robstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace robstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-10;
constexpr int kStarts = 8;
constexpr double kPenalty = 10;
constexpr double kParamShrink = 0.1;

double norm2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> z = a;
    z.insert(z.end(), b.begin(), b.end());
    return z;
}

bool affine_in_decisions(const FuncVec& g) {
    for (const auto& e : g.components) {
        const int d = polynomial_degree(e, VarKind::decision);
        if (d < 0 || d > 1) return false;
    }
    return true;
}

// Nearest points of the solution set of p, per polyhedral piece of C.
class SolutionDistance {
public:
    explicit SolutionDistance(const ConstraintSystem& sys)
        : sys_(sys), affine_(affine_in_decisions(sys.g)), xbar_(to_double(sys.x_ref)), pbar_(to_double(sys.p_ref)) {
        for (const auto& piece : sys.C.flatten().pieces) {
            A_.push_back(to_double(piece.A));
            b_.push_back(to_double(piece.b));
        }
    }

    bool affine() const { return affine_; }

    double value_distance(const std::vector<double>& p, const std::vector<double>& x) const {
        return std::sqrt(sys_.C.squared_distance(eval_double(sys_.g, concat(p, x))));
    }

    std::optional<std::vector<double>> nearest(const std::vector<double>& p, const std::vector<double>& x) const {
        std::optional<std::vector<double>> best;
        double bd = kInf;
        auto offer = [&](const std::vector<double>& y) {
            const double d = norm2(y, x);
            if (d < bd) {
                bd = d;
                best = y;
            }
        };
        if (affine_) {
            for (std::size_t k = 0; k < A_.size(); ++k)
                if (auto y = project_linearized(k, p, x, x)) offer(*y);
            return best;
        }
        std::mt19937_64 rng(0x5eed);
        std::normal_distribution<double> gauss(0, 1);
        const double spread = std::max(1e-3, norm2(x, xbar_) + norm2(p, pbar_));
        for (int s = 0; s < kStarts; ++s) {
            std::vector<double> start = x;
            if (s > 0)
                for (auto& c : start) c += spread * gauss(rng);
            for (std::size_t k = 0; k < A_.size(); ++k)
                if (auto y = descend(k, p, x, start)) offer(*y);
        }
        return best;
    }

private:
    // Projection of x onto the piece-k constraints linearized at xi.
    std::optional<std::vector<double>> project_linearized(std::size_t k, const std::vector<double>& p,
                                                          const std::vector<double>& x,
                                                          const std::vector<double>& xi) const {
        const auto z = concat(p, xi);
        const auto gv = eval_double(sys_.g, z);
        const auto J = jacobian_double(sys_.g, z, Wrt::decision);
        const std::size_t n = x.size(), l = gv.size();
        DMatrix M;
        std::vector<double> rhs;
        for (std::size_t r = 0; r < A_[k].size(); ++r) {
            std::vector<double> row(n, 0.0);
            double c = b_[k][r];
            for (std::size_t i = 0; i < l; ++i) {
                const double a = A_[k][r][i];
                c -= a * gv[i];
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] += a * J[i][j];
                    c += a * J[i][j] * xi[j];
                }
            }
            M.push_back(std::move(row));
            rhs.push_back(c);
        }
        auto pr = project_onto(M, rhs, {}, {}, x);
        if (!pr) return std::nullopt;
        return pr->point;
    }

    std::optional<std::vector<double>> descend(std::size_t k, const std::vector<double>& p, const std::vector<double>& x,
                                               std::vector<double> xi) const {
        auto merit = [&](const std::vector<double>& y) { return norm2(y, x) + kPenalty * violation(k, p, y); };
        for (int it = 0; it < 60; ++it) {
            auto next = project_linearized(k, p, x, xi);
            if (!next) break;
            const double m0 = merit(xi);
            bool moved = false;
            for (double t = 1; t > 1e-6; t /= 2) {
                std::vector<double> y = xi;
                for (std::size_t j = 0; j < y.size(); ++j) y[j] += t * ((*next)[j] - xi[j]);
                if (merit(y) < m0) {
                    moved = norm2(y, xi) > 1e-14 * (1 + norm2(xi, std::vector<double>(xi.size(), 0.0)));
                    xi = std::move(y);
                    break;
                }
            }
            if (!moved) break;
        }
        // feasibility refinement: min-norm corrections from xi itself
        for (int it = 0; it < 30; ++it) {
            if (violation(k, p, xi) <= kFeasTol) return xi;
            auto next = project_linearized(k, p, xi, xi);
            if (!next) return std::nullopt;
            xi = std::move(*next);
        }
        return std::nullopt;
    }

    double violation(std::size_t k, const std::vector<double>& p, const std::vector<double>& xi) const {
        const auto gv = eval_double(sys_.g, concat(p, xi));
        double worst = 0;
        for (std::size_t r = 0; r < A_[k].size(); ++r) {
            double s = -b_[k][r];
            for (std::size_t i = 0; i < gv.size(); ++i) s += A_[k][r][i] * gv[i];
            worst = std::max(worst, s);
        }
        return worst;
    }

    const ConstraintSystem& sys_;
    bool affine_;
    std::vector<double> xbar_, pbar_;
    std::vector<DMatrix> A_;
    std::vector<std::vector<double>> b_;
};

DistanceRatio ratio_at(const SolutionDistance& D, const std::vector<double>& p, const std::vector<double>& x) {
    DistanceRatio out;
    out.exact = D.affine();
    out.value_distance = D.value_distance(p, x);
    auto y = D.nearest(p, x);
    if (!y) {
        out.solution_distance = kInf;
        out.ratio = kInf;
        return out;
    }
    out.nearest = *y;
    out.solution_distance = norm2(*y, x);
    out.ratio = out.value_distance > 0 ? out.solution_distance / out.value_distance : 0;
    return out;
}

class Sampler {
public:
    Sampler(const ConstraintSystem& sys, std::uint64_t seed)
        : sys_(sys), pbar_(to_double(sys.p_ref)), xbar_(to_double(sys.x_ref)), rng_(seed) {}

    // Uniform in the box of radius r intersected with P; the reference when rejection fails.
    std::vector<double> param(double r) {
        if (pbar_.empty()) return pbar_;
        for (int t = 0; t < 50; ++t) {
            std::vector<double> q = pbar_;
            for (auto& c : q) c += r * (2 * unif_(rng_) - 1);
            if (sys_.P.contains(q)) return q;
        }
        return pbar_;
    }
    std::vector<double> decision(double r) {
        std::vector<double> x = xbar_;
        for (auto& c : x) c += r * (2 * unif_(rng_) - 1);
        return x;
    }
    std::vector<double> jitter(std::vector<double> x, double size) {
        std::vector<double> d(x.size());
        double s = 0;
        for (auto& c : d) {
            c = gauss_(rng_);
            s += c * c;
        }
        s = std::sqrt(s);
        const double len = size * unif_(rng_);
        for (std::size_t i = 0; i < x.size() && s > 0; ++i) x[i] += len * d[i] / s;
        return x;
    }

private:
    const ConstraintSystem& sys_;
    std::vector<double> pbar_, xbar_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unif_{0, 1};
    std::normal_distribution<double> gauss_{0, 1};
};

struct RadiusSup {
    double sup = 0;
    std::vector<double> p, x;
    bool empty_solution_set = false;
};

// Even samples uniform, odd samples pushed next to a nearest solution.
RadiusSup sample_ratios(const SolutionDistance& D, Sampler& S, double r, int samples) {
    RadiusSup out;
    for (int s = 0; s < samples; ++s) {
        const auto p = S.param(r);
        auto x = S.decision(r);
        if (s % 2 == 1) {
            if (auto y = D.nearest(p, x)) x = S.jitter(*y, 0.1 * r);
        }
        auto q = ratio_at(D, p, x);
        if (q.value_distance <= kFeasTol) continue;
        if (!std::isfinite(q.ratio)) out.empty_solution_set = true;
        if (out.p.empty() || q.ratio > out.sup) {
            out.sup = q.ratio;
            out.p = p;
            out.x = x;
        }
    }
    return out;
}

}  // namespace

void SampleSchedule::validate() const {
    if (!(r0 > 0)) throw ValidationError("schedule radius must be positive");
    if (!(factor > 0 && factor < 1)) throw ValidationError("schedule factor must lie in (0, 1)");
    if (count <= 0 || samples <= 0) throw ValidationError("schedule counts must be positive");
}

std::vector<double> SampleSchedule::radii() const {
    std::vector<double> out;
    double r = r0;
    for (int k = 0; k < count; ++k, r *= factor) out.push_back(r);
    return out;
}

const std::vector<double>* ModulusEstimate::find(const std::string& name) const {
    for (const auto& [k, v] : witness)
        if (k == name) return &v;
    return nullptr;
}

DistanceRatio rs_ratio(const ConstraintSystem& sys, const std::vector<double>& p, const std::vector<double>& x) {
    SolutionDistance D(sys);
    return ratio_at(D, p, x);
}

ModulusEstimate estimate_rs_modulus(const ConstraintSystem& sys, const SampleSchedule& sched) {
    sched.validate();
    sys.validate();
    SolutionDistance D(sys);
    Sampler S(sys, sched.seed);
    ModulusEstimate est;
    est.lower_bound = !D.affine();
    RadiusSup last;
    for (double r : sched.radii()) {
        last = sample_ratios(D, S, r, sched.samples);
        est.sup_per_radius.push_back(last.sup);
        est.parametric_violation = est.parametric_violation || last.empty_solution_set;
    }
    est.value = est.sup_per_radius.back();
    est.trend = classify_trend(est.sup_per_radius);
    est.witness_ratio = last.sup;
    if (!last.p.empty() || !last.x.empty()) {
        est.witness.emplace_back("p", last.p);
        est.witness.emplace_back("x", last.x);
    }
    return est;
}

Verdict check_parametric_stability(const ConstraintSystem& sys, const SampleSchedule& sched) {
    sched.validate();
    sys.validate();
    SolutionDistance D(sys);
    Sampler S(sys, sched.seed);
    const auto xbar = to_double(sys.x_ref);
    Verdict out;
    for (double r : sched.radii()) {
        for (int s = 0; s < sched.samples; ++s) {
            const auto p = s == 0 ? to_double(sys.p_ref) : S.param(kParamShrink * r);
            auto y = D.nearest(p, xbar);
            if (y && norm2(*y, xbar) <= r) continue;
            RVector pq;
            for (double c : p) pq.push_back(rationalize(c));
            out.add("p", pq);
            if (!D.affine()) {
                out.grade = Grade::inconclusive;
                out.note("feasibility search budget exhausted");
                return out;
            }
            out.grade = Grade::refuted;
            out.note(y ? "nearest solution lies outside the decision ball" : "no solution for this parameter");
            return out;
        }
    }
    out.grade = Grade::verified_numeric;
    out.note("every sampled parameter admits a nearby solution");
    return out;
}

ModulusEstimate estimate_bmp_modulus(const ConstraintSystem& sys, const SampleSchedule& sched) {
    sched.validate();
    RadiusSchedule rs{sched.r0, sched.factor, sched.count, sched.samples, sched.seed};
    BoundEstimate b = estimate_multiplier_bound(sys, rs);
    ModulusEstimate est;
    est.sup_per_radius = b.sup_per_radius;
    est.trend = b.trend;
    est.value = b.value;
    if (!b.witness_v.empty()) {
        est.witness.emplace_back("p", b.witness_p);
        est.witness.emplace_back("x", b.witness_x);
        est.witness.emplace_back("v", b.witness_v);
        est.witness.emplace_back("lambda", b.witness_lambda);
        est.witness_ratio = norm2(b.witness_lambda, std::vector<double>(b.witness_lambda.size(), 0.0));
    }
    return est;
}

ModulusEstimate estimate_lipschitz_modulus(const LipschitzProblem& prob, const SampleSchedule& sched) {
    sched.validate();
    std::mt19937_64 rng(sched.seed);
    std::uniform_real_distribution<double> unif(0, 1);
    // Shell between consecutive radii in the max norm.
    auto param = [&](double r) {
        for (int t = 0; t < 50; ++t) {
            std::vector<double> d(prob.p_ref.size());
            double top = 0;
            for (auto& c : d) {
                c = 2 * unif(rng) - 1;
                top = std::max(top, std::abs(c));
            }
            if (top == 0) continue;
            const double len = r * (sched.factor + (1 - sched.factor) * unif(rng)) / top;
            std::vector<double> q = prob.p_ref;
            for (std::size_t i = 0; i < q.size(); ++i) q[i] += len * d[i];
            if (!prob.in_P || prob.in_P(q)) return q;
        }
        return prob.p_ref;
    };
    ModulusEstimate est;
    std::vector<double> wp, wq, wx;
    for (double r : sched.radii()) {
        double sup = 0;
        for (int s = 0; s < sched.samples; ++s) {
            const auto p = param(r);
            std::vector<double> q;
            if (s % 2 == 0) {
                q = param(r);
            } else {
                // close pairs
                const double scale = r * std::pow(10.0, -3 * unif(rng));
                for (int t = 0; t < 50 && q.empty(); ++t) {
                    std::vector<double> c = p;
                    for (auto& v : c) v += scale * (2 * unif(rng) - 1);
                    if (!prob.in_P || prob.in_P(c)) q = c;
                }
                if (q.empty()) continue;
            }
            const double rho = norm2(p, q);
            if (rho < 1e-14) continue;
            const auto from = prob.solutions(p);
            const auto to = prob.solutions(q);
            for (const auto& x : from) {
                if (norm2(x, prob.x_ref) > prob.neighborhood) continue;
                double d = kInf;
                for (const auto& y : to) d = std::min(d, norm2(x, y));
                if (!std::isfinite(d)) est.parametric_violation = true;
                const double ratio = d / rho;
                if (wp.empty() || ratio > sup) {
                    sup = ratio;
                    wp = p;
                    wq = q;
                    wx = x;
                }
            }
        }
        est.sup_per_radius.push_back(sup);
        est.witness_ratio = sup;
    }
    est.value = est.sup_per_radius.back();
    est.trend = classify_trend(est.sup_per_radius);
    if (!wp.empty()) {
        est.witness.emplace_back("p", wp);
        est.witness.emplace_back("q", wq);
        est.witness.emplace_back("x", wx);
    }
    return est;
}

SolutionOracle kkt_solution_oracle(const KKTSystem& k) {
    return [k](const std::vector<double>& p) {
        RVector pq;
        for (double c : p) pq.push_back(rationalize(c));
        std::vector<std::vector<double>> out;
        for (const auto& [x, y] : enumerate_solution_map(k, pq).points) out.push_back(concat(to_double(x), to_double(y)));
        return out;
    };
}

std::optional<Counterexample> falsify_robinson(const ConstraintSystem& sys, const FalsifyBudget& budget) {
    budget.sched.validate();
    sys.validate();
    SolutionDistance D(sys);
    Sampler S(sys, budget.sched.seed);
    const auto radii = budget.sched.radii();
    RadiusSup last;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        last = sample_ratios(D, S, radii[k], budget.sched.samples);
        if (!(last.sup > budget.kappa0 * static_cast<double>(k + 1))) return std::nullopt;
    }
    Counterexample c;
    c.p = last.p;
    c.x = last.x;
    c.ratio = last.sup;
    c.kappa = budget.kappa0 * static_cast<double>(radii.size());
    c.radius = radii.back();
    return c;
}

}  // namespace robstab

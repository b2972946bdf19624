#include "robstab/commands.hpp"

#include "robstab/errors.hpp"
#include "robstab/order2.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

namespace robstab {

VerifyOptions::Mode parse_mode(const std::string& s) {
    using M = VerifyOptions::Mode;
    if (s == "auto") return M::automatic;
    if (s == "first-order") return M::first_order;
    if (s == "second-order") return M::second_order;
    if (s == "kkt") return M::kkt;
    throw ParseError("mode must be auto, first-order, second-order or kkt");
}

std::string to_string(VerifyOptions::Mode m) {
    switch (m) {
        case VerifyOptions::Mode::automatic: return "auto";
        case VerifyOptions::Mode::first_order: return "first-order";
        case VerifyOptions::Mode::second_order: return "second-order";
        case VerifyOptions::Mode::kkt: return "kkt";
    }
    return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Json rationals(const RVector& v) {
    Json a = Json::array();
    for (auto& q : v) a.push_back(to_string(q));
    return a;
}

// JSON has no infinities; those become strings.
Json number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

Json numbers(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

Json document_json(const SystemDocument& d) {
    Json j;
    j["name"] = d.name;
    j["kind"] = to_string(d.kind);
    if (d.kind != SystemDocument::Kind::set) {
        j["params"] = d.system.param_dim();
        j["decisions"] = d.system.decision_dim();
        j["image_dim"] = d.system.image_dim();
        j["split"] = d.system.split_l1;
    } else {
        j["dim"] = d.system.C.dim();
    }
    return j;
}

Json schedule_json(const SampleSchedule& s) {
    return {{"r0", s.r0}, {"factor", s.factor}, {"count", s.count}, {"samples", s.samples}, {"seed", s.seed}};
}

Json base_report(const std::string& command, const SystemDocument& d) {
    Json r;
    r["schema_version"] = kReportSchemaVersion;
    r["command"] = command;
    r["status"] = "ok";
    r["document"] = document_json(d);
    r["warnings"] = Json::array();
    return r;
}

// Runs one check, turning capacity and applicability failures into inconclusive entries.
class CheckLog {
public:
    explicit CheckLog(Json& checks) : checks_(checks) {}

    Verdict run(const std::string& name, const std::function<Verdict()>& f) {
        auto t0 = Clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const CapacityError& e) {
            v = Verdict{};
            v.note(std::string("capacity exceeded: ") + e.what());
        } catch (const DomainError& e) {
            v = Verdict{};
            v.note(std::string("not applicable: ") + e.what());
        } catch (const SecondOrderUnavailable& e) {
            v = Verdict{};
            v.note(std::string("not applicable: ") + e.what());
        } catch (const NotDifferentiable& e) {
            v = Verdict{};
            v.note(std::string("not applicable: ") + e.what());
        }
        checks_.push_back(verdict_json(name, v, seconds_since(t0)));
        return v;
    }

private:
    Json& checks_;
};

struct Certificate {
    SubsystemCertificate cert;
    std::string step;
};

// Tries increasingly expensive checks on the trailing block g2.
std::optional<Certificate> certify_trailing(const ConstraintSystem& sys, CheckLog& log) {
    ConstraintSystem sub = sys.block(sys.split_l1, sys.image_dim()).drop_unused_params();
    sub.split_l1 = sub.image_dim();
    const std::vector<std::pair<std::string, std::function<Verdict()>>> steps{
        {"trailing block: metric regularity", [&] { return check_metric_regularity(sub); }},
        {"trailing block: first-order", [&] { return check_first_order(sub); }},
        {"trailing block: second-order",
         [&] {
             try {
                 return check_second_order_polyhedral(sub);
             } catch (const DomainError&) {
                 return check_second_order_general(sub, std::nullopt);
             }
         }},
    };
    for (auto& [name, f] : steps)
        if (log.run(name, f).verified()) return Certificate{{name}, name};
    return std::nullopt;
}

void add_warning(Json& r, const std::string& w) { r["warnings"].push_back(w); }

void direction_cone_warning(Json& r, const ConstraintSystem& sys) {
    try {
        if (!sys.user_direction_cone && sys.param_dim() > 0 && image_derivative_cone(sys).may_be_strict_subset)
            add_warning(r, "parameter Jacobian is not injective; the computed direction cone may miss directions");
    } catch (const Error&) {
    }
}

Json counterexample_json(const Counterexample& c) {
    return {{"p", numbers(c.p)}, {"x", numbers(c.x)}, {"ratio", number(c.ratio)}, {"kappa", c.kappa}, {"radius", c.radius}};
}

void finish(Json& r, Grade g, const std::vector<std::string>& route, Clock::time_point t0, bool warn_downgrades = true) {
    r["grade"] = to_string(g);
    r["grade_note"] = grade_note(g);
    r["route"] = route;
    for (auto& c : r["checks"]) {
        const std::string name = c["name"];
        const bool on_route = std::find(route.begin(), route.end(), name) != route.end();
        const std::string g = c["grade"];
        if (warn_downgrades && on_route && g != "verified" && g.rfind("verified", 0) == 0)
            add_warning(r, "route step '" + name + "' is downgraded to " + c["grade"].get<std::string>() + ": " +
                               c["grade_note"].get<std::string>());
    }
    r["timings"] = {{"total_seconds", seconds_since(t0)}};
}

ConstraintSystem with_split(const SystemDocument& doc, const VerifyOptions& opts) {
    ConstraintSystem sys = doc.system;
    if (opts.split) {
        sys.split_l1 = *opts.split;
        sys.validate();
    }
    return sys;
}

}  // namespace

Json verdict_json(const std::string& name, const Verdict& v, double seconds) {
    Json j;
    j["name"] = name;
    j["grade"] = to_string(v.grade);
    j["grade_note"] = grade_note(v.grade);
    Json w = Json::object();
    for (auto& [n, vec] : v.witness) w[n] = rationals(vec);
    j["witness"] = w;
    j["notes"] = v.notes;
    j["seconds"] = seconds;
    return j;
}

Json modulus_json(const std::string& name, const ModulusEstimate& m) {
    Json j;
    j["name"] = name;
    j["value"] = number(m.value);
    j["trend"] = m.trend;
    j["sup_per_radius"] = numbers(m.sup_per_radius);
    j["witness_ratio"] = number(m.witness_ratio);
    Json w = Json::object();
    for (auto& [n, vec] : m.witness) w[n] = numbers(vec);
    j["witness"] = w;
    j["lower_bound"] = m.lower_bound;
    j["parametric_violation"] = m.parametric_violation;
    return j;
}

Json cmd_verify(const SystemDocument& doc, const VerifyOptions& opts) {
    using M = VerifyOptions::Mode;
    const auto t0 = Clock::now();
    if (doc.kind == SystemDocument::Kind::set) throw ValidationError("verify needs a constraint or kkt document");
    if (opts.mode == M::kkt && !doc.kkt) throw ValidationError("kkt mode needs a kkt document");

    Json r = base_report("verify", doc);
    r["options"] = {{"mode", to_string(opts.mode)}, {"schedule", schedule_json(opts.sched)}};
    if (opts.split) r["options"]["split"] = *opts.split;
    r["checks"] = Json::array();
    CheckLog log(r["checks"]);

    const ConstraintSystem sys = with_split(doc, opts);
    direction_cone_warning(r, sys);
    const bool split = sys.split_l1 < sys.image_dim();

    auto splitting = [&](const std::string& name, const std::function<Verdict(const SubsystemCertificate&)>& f,
                         std::vector<std::string>& route) -> std::optional<Verdict> {
        auto cert = certify_trailing(sys, log);
        if (!cert) return std::nullopt;
        Verdict v = log.run(name, [&] { return f(cert->cert); });
        if (v.verified()) route = {cert->step, name};
        return v;
    };
    auto first_order_split = [&](const SubsystemCertificate& c) { return check_first_order_splitting(sys, c); };
    auto second_order_split = [&](const SubsystemCertificate& c) { return check_second_order_general(sys, c); };

    std::vector<std::string> route;
    if (opts.mode != M::automatic) {
        Grade g = Grade::inconclusive;
        if (opts.mode == M::kkt) {
            g = log.run("kkt first-order", [&] { return check_kkt_first_order(*doc.kkt); }).grade;
            if (is_verified(g)) route = {"kkt first-order"};
        } else if (opts.mode == M::first_order && !split) {
            g = log.run("first-order", [&] { return check_first_order(sys); }).grade;
            if (is_verified(g)) route = {"first-order"};
        } else if (opts.mode == M::second_order && !split) {
            g = log.run("second-order", [&] { return check_second_order_general(sys, std::nullopt); }).grade;
            if (is_verified(g)) route = {"second-order"};
        } else {
            const bool first = opts.mode == M::first_order;
            auto v = first ? splitting("first-order splitting", first_order_split, route)
                           : splitting("second-order splitting", second_order_split, route);
            if (v) g = v->grade;
            else r["warnings"].push_back("the trailing block could not be certified");
        }
        finish(r, g, route, t0);
        return r;
    }

    Grade decided = Grade::inconclusive;
    auto attempt = [&](const std::string& name, const std::function<Verdict()>& f) {
        if (!route.empty()) return;
        Verdict v = log.run(name, f);
        if (v.verified()) {
            route = {name};
            decided = v.grade;
        }
    };
    if (doc.kkt) {
        attempt("kkt first-order", [&] { return check_kkt_first_order(*doc.kkt); });
    } else {
        attempt("metric regularity", [&] { return check_metric_regularity(sys); });
        attempt("first-order", [&] { return check_first_order(sys); });
        if (route.empty() && split) {
            auto v = splitting("first-order splitting", first_order_split, route);
            if (v && !v->verified()) v = splitting("second-order splitting", second_order_split, route);
            if (v && v->verified()) decided = v->grade;
        } else if (route.empty()) {
            attempt("second-order", [&] { return check_second_order_general(sys, std::nullopt); });
        }
    }
    if (!route.empty()) {
        finish(r, decided, route, t0);
        return r;
    }

    // Sampling fallback.
    Verdict ps = log.run("parametric stability (sampled)", [&] { return check_parametric_stability(sys, opts.sched); });
    std::optional<Counterexample> ce;
    try {
        ce = falsify_robinson(sys, FalsifyBudget{opts.sched});
    } catch (const Error& e) {
        add_warning(r, std::string("falsification skipped: ") + e.what());
    }
    Grade g = Grade::inconclusive;
    if (ps.refuted()) {
        g = Grade::refuted;
        route = {"parametric stability (sampled)"};
    } else if (ce) {
        r["counterexample"] = counterexample_json(*ce);
        add_warning(r, "sampled error-bound ratios grow past every tested modulus; the system is likely not Robinson stable");
    } else if (ps.verified()) {
        g = Grade::verified_numeric;
        route = {"parametric stability (sampled)", "error-bound falsification (sampled)"};
    }
    finish(r, g, route, t0);
    return r;
}

namespace {

Json bound_json(const std::string& name, const BoundEstimate& b) {
    ModulusEstimate m;
    m.sup_per_radius = b.sup_per_radius;
    m.trend = b.trend;
    m.value = b.value;
    if (!b.witness_v.empty()) {
        m.witness = {{"x", b.witness_x}, {"v", b.witness_v}, {"lambda", b.witness_lambda}};
        m.witness_ratio = b.value;
    }
    return modulus_json(name, m);
}

// g(p_ref, .) as a function of the decisions only.
FuncVec freeze_params(const FuncVec& g, const RVector& p) {
    FuncVec f;
    f.decision_dim = g.decision_dim;
    for (auto& e : g.components)
        f.components.push_back(substitute(e, [&](VarKind k, std::size_t i) {
            return k == VarKind::param ? Expr::constant(p[i]) : Expr::variable(k, i);
        }));
    return f;
}

Json cone_json(const HCone& c) {
    Json j;
    j["h"] = describe(c);
    const VCone v = canonical(c);
    j["v"] = describe(v);
    Json ineq = Json::array(), eq = Json::array(), rays = Json::array(), lines = Json::array();
    for (auto& row : c.ineq.row_list()) ineq.push_back(rationals(row));
    for (auto& row : c.eq.row_list()) eq.push_back(rationals(row));
    for (auto& ray : v.rays) rays.push_back(rationals(ray));
    for (auto& l : v.lineality) lines.push_back(rationals(l));
    j["ineq"] = ineq;
    j["eq"] = eq;
    j["rays"] = rays;
    j["lines"] = lines;
    return j;
}

// Pieces contained in another piece add nothing to the union.
Json cone_list(const std::vector<HCone>& cs) {
    const auto d = distinct_cones(cs);
    Json a = Json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool covered = false;
        for (std::size_t j = 0; j < d.size() && !covered; ++j) covered = j != i && is_subset(d[i], d[j]);
        if (!covered) a.push_back(cone_json(d[i]));
    }
    return a;
}

}  // namespace

Json cmd_estimate(const SystemDocument& doc, const SampleSchedule& sched) {
    const auto t0 = Clock::now();
    if (doc.kind == SystemDocument::Kind::set) throw ValidationError("estimate needs a constraint or kkt document");
    sched.validate();
    const ConstraintSystem& sys = doc.system;
    Json r = base_report("estimate", doc);
    r["options"] = {{"schedule", schedule_json(sched)}};
    r["checks"] = Json::array();
    r["estimates"] = Json::array();
    direction_cone_warning(r, sys);

    auto guarded = [&](const std::string& name, const std::function<Json()>& f) {
        try {
            r["estimates"].push_back(f());
        } catch (const Error& e) {
            add_warning(r, name + " unavailable: " + e.what());
        }
    };
    guarded("rs_modulus", [&] { return modulus_json("rs_modulus", estimate_rs_modulus(sys, sched)); });
    guarded("bmp_modulus", [&] { return modulus_json("bmp_modulus", estimate_bmp_modulus(sys, sched)); });
    guarded("exact_bound", [&] {
        RadiusSchedule rs{sched.r0, sched.factor, sched.count, sched.samples, sched.seed};
        return bound_json("exact_bound", estimate_exact_bound(freeze_params(sys.g, sys.p_ref), sys.C, sys.x_ref, rs));
    });
    if (doc.kkt) {
        guarded("lipschitz_modulus", [&] {
            const KKTSystem& k = *doc.kkt;
            LipschitzProblem prob;
            prob.solutions = kkt_solution_oracle(k);
            prob.in_P = [&k](const std::vector<double>& p) { return k.P.contains(p); };
            prob.p_ref = to_double(k.p_ref);
            prob.x_ref = to_double(join(k.x_ref, k.y_ref));
            return modulus_json("lipschitz_modulus", estimate_lipschitz_modulus(prob, sched));
        });
    }
    for (auto& e : r["estimates"])
        if (e["lower_bound"].get<bool>())
            add_warning(r, e["name"].get<std::string>() +
                               " uses local descent for distances to solution sets; its values are lower bounds");

    CheckLog log(r["checks"]);
    Verdict ps = log.run("parametric stability (sampled)", [&] { return check_parametric_stability(sys, sched); });
    std::vector<std::string> route;
    if (ps.verified() || ps.refuted()) route = {"parametric stability (sampled)"};
    finish(r, ps.grade, route, t0, false);
    return r;
}

Json cmd_cones(const SystemDocument& doc, const RVector& point, const std::optional<RVector>& direction) {
    const auto t0 = Clock::now();
    const ProductSet& C = doc.system.C;
    if (point.size() != C.dim())
        throw DimensionError("point has " + std::to_string(point.size()) + " entries, the set lives in R^" +
                             std::to_string(C.dim()));
    if (direction && direction->size() != C.dim()) throw DimensionError("direction has the wrong dimension");
    if (!C.contains(point)) throw DomainError("point " + to_string(point) + " is not in the set");
    const PolyUnion U = C.flatten();

    Json r = base_report("cones", doc);
    r["point"] = rationals(point);
    if (direction) r["direction"] = rationals(*direction);
    Json cones;
    cones["tangent"] = cone_list(tangent_cone(U, point));
    cones["regular_normal"] = cone_list({regular_normal_cone(U, point)});
    cones["limiting_normal"] = cone_list(limiting_normal_cone(U, point));
    if (direction) {
        auto d = directional_limiting_normal_cone(U, point, *direction);
        if (d.empty()) add_warning(r, "direction is not tangent; the directional normal cone is empty");
        cones["directional_normal"] = cone_list(d);
    }
    r["cones"] = cones;
    r["timings"] = {{"total_seconds", seconds_since(t0)}};
    return r;
}

Json error_report(const std::string& command, const std::string& message) {
    Json r;
    r["schema_version"] = kReportSchemaVersion;
    r["command"] = command;
    r["status"] = "error";
    r["error"] = message;
    r["warnings"] = Json::array();
    return r;
}

int exit_code(const Json& report) {
    if (report.value("status", "error") != "ok") return 1;
    if (!report.contains("grade")) return 0;
    const std::string g = report["grade"];
    if (g == "refuted") return 2;
    if (g == "inconclusive") return 3;
    return 0;
}

namespace {

std::string text_of(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    std::ostringstream os;
    if (v.is_number_float()) os << std::setprecision(6) << v.get<double>();
    else os << v.dump();
    return os.str();
}

std::string tuple_of(const Json& a) {
    std::string s = "(";
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + text_of(a[i]);
    return s + ")";
}

}  // namespace

std::string render_text(const Json& r) {
    std::ostringstream os;
    const std::string cmd = r.value("command", "");
    if (r.value("status", "") != "ok") {
        os << cmd << ": error: " << r.value("error", "") << "\n";
        return os.str();
    }
    const Json& d = r["document"];
    const std::string name = d.value("name", "");
    os << cmd << (name.empty() ? "" : " " + name);
    if (r.contains("grade")) os << ": " << r["grade"].get<std::string>() << " (" << r["grade_note"].get<std::string>() << ")";
    os << "\n";
    if (r.contains("route") && !r["route"].empty()) {
        os << "  route:";
        for (std::size_t i = 0; i < r["route"].size(); ++i) os << (i ? " -> " : " ") << r["route"][i].get<std::string>();
        os << "\n";
    }
    if (r.contains("checks"))
        for (auto& c : r["checks"]) {
            os << "  [" << c["grade"].get<std::string>() << "] " << c["name"].get<std::string>() << "  ("
               << std::setprecision(3) << c["seconds"].get<double>() << " s)\n";
            for (auto& [k, v] : c["witness"].items()) os << "      " << k << " = " << tuple_of(v) << "\n";
            for (auto& n : c["notes"]) os << "      note: " << n.get<std::string>() << "\n";
        }
    if (r.contains("estimates"))
        for (auto& e : r["estimates"]) {
            os << "  " << e["name"].get<std::string>() << " = " << text_of(e["value"]) << "  trend "
               << e["trend"].get<std::string>() << ", sup per radius " << tuple_of(e["sup_per_radius"]) << "\n";
            for (auto& [k, v] : e["witness"].items()) os << "      " << k << " = " << tuple_of(v) << "\n";
        }
    if (r.contains("counterexample")) {
        const Json& c = r["counterexample"];
        os << "  counterexample: p = " << tuple_of(c["p"]) << ", x = " << tuple_of(c["x"]) << ", ratio "
           << text_of(c["ratio"]) << " > " << text_of(c["kappa"]) << "\n";
    }
    if (r.contains("cones")) {
        os << "  point " << tuple_of(r["point"]);
        if (r.contains("direction")) os << ", direction " << tuple_of(r["direction"]);
        os << "\n";
        for (auto& [kind, list] : r["cones"].items()) {
            os << "  " << kind << ": " << list.size() << " convex piece" << (list.size() == 1 ? "" : "s") << "\n";
            for (auto& c : list) os << "      " << c["h"].get<std::string>() << "\n        = " << c["v"].get<std::string>() << "\n";
        }
    }
    for (auto& w : r["warnings"]) os << "  warning: " << w.get<std::string>() << "\n";
    return os.str();
}

SampleSchedule parse_schedule(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 4) throw ParseError("schedule reads r0,factor,count,samples");
    SampleSchedule s;
    try {
        std::size_t used = 0;
        auto whole = [&](const std::string& t) {
            if (used != t.size()) throw ParseError("malformed schedule entry '" + t + "'");
        };
        s.r0 = std::stod(parts[0], &used);
        whole(parts[0]);
        s.factor = std::stod(parts[1], &used);
        whole(parts[1]);
        s.count = std::stoi(parts[2], &used);
        whole(parts[2]);
        s.samples = std::stoi(parts[3], &used);
        whole(parts[3]);
    } catch (const std::logic_error&) {
        throw ParseError("malformed schedule '" + text + "'");
    }
    s.validate();
    return s;
}

}  // namespace robstab

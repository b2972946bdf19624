#pragma once

#include "robstab/document.hpp"
#include "robstab/probe.hpp"

#include "json.hpp"

#include <optional>

namespace robstab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchemaVersion = "1.0";

struct VerifyOptions {
    enum class Mode { automatic, first_order, second_order, kkt };
    Mode mode = Mode::automatic;
    std::optional<std::size_t> split;  // overrides the document split index
    SampleSchedule sched;              // probe fallback
};

VerifyOptions::Mode parse_mode(const std::string& s);
std::string to_string(VerifyOptions::Mode m);

// Each command returns a report following docs/report.schema.json.
Json cmd_verify(const SystemDocument& doc, const VerifyOptions& opts);
Json cmd_estimate(const SystemDocument& doc, const SampleSchedule& sched);
Json cmd_cones(const SystemDocument& doc, const RVector& point, const std::optional<RVector>& direction);

// Report for a failure before any check ran.
Json error_report(const std::string& command, const std::string& message);

Json verdict_json(const std::string& name, const Verdict& v, double seconds);
Json modulus_json(const std::string& name, const ModulusEstimate& m);

// 0 verified, 2 refuted, 3 inconclusive, 1 error.
int exit_code(const Json& report);
// Human readable summary.
std::string render_text(const Json& report);

// "r0,factor,count,n"
SampleSchedule parse_schedule(const std::string& text);

}  // namespace robstab

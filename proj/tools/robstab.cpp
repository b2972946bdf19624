#include "robstab/commands.hpp"
#include "robstab/errors.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace robstab;

namespace {

// Write to a sibling file first so readers never see a partial report.
void write_atomically(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + tmp);
        out << text << "\n";
    }
    fs::rename(tmp, path);
}

std::vector<fs::path> documents_in(const fs::path& p) {
    if (!fs::is_directory(p)) return {p};
    std::vector<fs::path> out;
    for (auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".rsd") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

Json run_fixtures(const fs::path& where, const VerifyOptions& opts) {
    Json r;
    r["schema_version"] = kReportSchemaVersion;
    r["command"] = "fixtures";
    r["status"] = "ok";
    r["warnings"] = Json::array();
    r["results"] = Json::array();
    bool all = true;
    for (auto& path : documents_in(where)) {
        Json entry{{"file", path.string()}};
        try {
            SystemDocument doc = load_document(path.string());
            if (doc.kind == SystemDocument::Kind::set) {
                entry["skipped"] = "set documents are for the cones command";
                entry["match"] = true;
                r["results"].push_back(entry);
                continue;
            }
            Json rep = cmd_verify(doc, opts);
            entry["name"] = doc.name;
            entry["grade"] = rep["grade"];
            entry["route"] = rep["route"];
            entry["seconds"] = rep["timings"]["total_seconds"];
            if (doc.expect) {
                entry["expect"] = to_string(*doc.expect);
                entry["match"] = rep["grade"] == entry["expect"];
            } else {
                entry["match"] = true;
            }
        } catch (const std::exception& e) {
            entry["error"] = e.what();
            entry["match"] = false;
        }
        all = all && entry["match"].get<bool>();
        r["results"].push_back(entry);
    }
    if (r["results"].empty()) {
        r["status"] = "error";
        r["error"] = "no .rsd documents under " + where.string();
    } else if (!all) {
        r["status"] = "error";
        r["error"] = "some fixtures do not match their expected grade";
    }
    return r;
}

std::string fixtures_text(const Json& r) {
    std::ostringstream os;
    for (auto& e : r["results"]) {
        os << (e["match"].get<bool>() ? "ok       " : "MISMATCH ") << e["file"].get<std::string>();
        if (e.contains("grade")) os << "  " << e["grade"].get<std::string>();
        if (e.contains("expect")) os << " (expected " << e["expect"].get<std::string>() << ")";
        if (e.contains("skipped")) os << "  skipped: " << e["skipped"].get<std::string>();
        if (e.contains("error")) os << "  error: " << e["error"].get<std::string>();
        os << "\n";
    }
    if (r.contains("error")) os << "fixtures: " << r["error"].get<std::string>() << "\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robinson stability checks for parametric constraint systems"};
    app.require_subcommand(1);

    std::string doc_path, json_out, mode = "auto", schedule, point, direction;
    std::optional<std::size_t> split;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("doc", doc_path, "system document (.rsd) or, for fixtures, a directory")->required();
        sub->add_option("--json", json_out, "also write the JSON report to this file");
    };
    auto add_sampling = [&](CLI::App* sub) {
        sub->add_option("--schedule", schedule, "sampling schedule r0,factor,count,samples");
        sub->add_option("--seed", seed, "sampling seed");
    };

    auto* verify = app.add_subcommand("verify", "verify Robinson stability");
    add_common(verify);
    add_sampling(verify);
    verify->add_option("--mode", mode, "auto, first-order, second-order or kkt")
        ->check(CLI::IsMember({"auto", "first-order", "second-order", "kkt"}));
    verify->add_option("--split", split, "number of leading components in the first block");

    auto* estimate = app.add_subcommand("estimate", "sample moduli and the multiplier bound");
    add_common(estimate);
    add_sampling(estimate);

    auto* cones = app.add_subcommand("cones", "tangent and normal cones of the set C at a point");
    add_common(cones);
    cones->add_option("--point", point, "point of C as rational literals, e.g. \"0 1/2\"")->required();
    cones->add_option("--direction", direction, "direction for the directional normal cone");

    auto* fixtures = app.add_subcommand("fixtures", "verify every document and compare with its expected grade");
    add_common(fixtures);
    add_sampling(fixtures);

    CLI11_PARSE(app, argc, argv);

    Json report;
    std::string command = app.get_subcommands().front()->get_name();
    try {
        SampleSchedule sched = schedule.empty() ? SampleSchedule{} : parse_schedule(schedule);
        if (seed) sched.seed = *seed;
        VerifyOptions opts;
        opts.mode = parse_mode(mode);
        opts.split = split;
        opts.sched = sched;
        if (command == "fixtures") {
            report = run_fixtures(doc_path, opts);
        } else {
            SystemDocument doc = load_document(doc_path);
            if (command == "verify") report = cmd_verify(doc, opts);
            else if (command == "estimate") report = cmd_estimate(doc, sched);
            else
                report = cmd_cones(doc, parse_rational_list(point),
                                   direction.empty() ? std::nullopt : std::optional<RVector>(parse_rational_list(direction)));
        }
    } catch (const std::exception& e) {
        report = error_report(command, e.what());
    }

    std::cout << (command == "fixtures" && report.contains("results") ? fixtures_text(report) : render_text(report));
    if (!json_out.empty()) {
        try {
            write_atomically(json_out, report.dump(2));
        } catch (const std::exception& e) {
            std::cerr << "robstab: " << e.what() << "\n";
            return 1;
        }
    }
    return exit_code(report);
}

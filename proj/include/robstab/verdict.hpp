#pragma once

#include "robstab/rational.hpp"

#include <string>
#include <utility>
#include <vector>

namespace robstab {

enum class Grade { verified, verified_grid, verified_generators_only, verified_numeric, inconclusive, refuted };

std::string to_string(Grade g);
// Defining note attached to each grade in reports.
std::string grade_note(Grade g);
bool is_verified(Grade g);

struct Verdict {
    Grade grade = Grade::inconclusive;
    std::vector<std::pair<std::string, RVector>> witness;
    std::vector<std::string> notes;

    bool verified() const { return is_verified(grade); }
    bool refuted() const { return grade == Grade::refuted; }
    const RVector* find(const std::string& name) const;
    void add(const std::string& name, const RVector& v) { witness.emplace_back(name, v); }
    void note(const std::string& n) { notes.push_back(n); }
};

}  // namespace robstab

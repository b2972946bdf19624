#include "robstab/verdict.hpp"

namespace robstab {

std::string to_string(Grade g) {
    switch (g) {
        case Grade::verified: return "verified";
        case Grade::verified_grid: return "verified_grid";
        case Grade::verified_generators_only: return "verified_generators_only";
        case Grade::verified_numeric: return "verified_numeric";
        case Grade::inconclusive: return "inconclusive";
        case Grade::refuted: return "refuted";
    }
    return "unknown";
}

std::string grade_note(Grade g) {
    switch (g) {
        case Grade::verified: return "condition established in exact rational arithmetic";
        case Grade::verified_grid:
            return "quadratic condition checked on a finite direction grid only; exact arguments cover the rest";
        case Grade::verified_generators_only:
            return "direction cone covered at its generators and random samples, not proved for every direction";
        case Grade::verified_numeric: return "floating-point sampling found no violation; not a proof";
        case Grade::inconclusive: return "the sufficient condition could not be established";
        case Grade::refuted: return "the sufficient condition fails; the witness violates it";
    }
    return "";
}

bool is_verified(Grade g) {
    return g == Grade::verified || g == Grade::verified_grid || g == Grade::verified_generators_only ||
           g == Grade::verified_numeric;
}

const RVector* Verdict::find(const std::string& name) const {
    for (auto& [n, v] : witness)
        if (n == name) return &v;
    return nullptr;
}

}  // namespace robstab

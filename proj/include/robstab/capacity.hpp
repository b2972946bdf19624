#pragma once

#include <cstddef>

namespace robstab {

// Enumeration bounds. Defaults can be overridden through the
// ROBSTAB_CAPACITY environment variable, e.g. "dim=14,rows=80,strata=50000".
struct Capacity {
    std::size_t max_dim = 12;
    std::size_t max_rows = 64;
    std::size_t max_strata = 20000;
    std::size_t max_subsets = 200000;
    std::size_t max_patterns = 1024;  // 2^10 branch patterns
    std::size_t max_combos = 100000;
};

const Capacity& capacity();
void set_capacity(const Capacity& c);

}  // namespace robstab

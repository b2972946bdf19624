#include "robstab/capacity.hpp"

#include <cstdlib>
#include <sstream>
#include <string>

namespace robstab {
namespace {

Capacity from_environment() {
    Capacity c;
    const char* env = std::getenv("ROBSTAB_CAPACITY");
    if (env == nullptr) return c;
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        std::string key = item.substr(0, eq);
        std::size_t value = 0;
        try {
            value = std::stoul(item.substr(eq + 1));
        } catch (...) {
            continue;
        }
        if (key == "dim") c.max_dim = value;
        else if (key == "rows") c.max_rows = value;
        else if (key == "strata") c.max_strata = value;
        else if (key == "subsets") c.max_subsets = value;
        else if (key == "patterns") c.max_patterns = value;
        else if (key == "combos") c.max_combos = value;
    }
    return c;
}

Capacity& storage() {
    static Capacity c = from_environment();
    return c;
}

}  // namespace

const Capacity& capacity() { return storage(); }
void set_capacity(const Capacity& c) { storage() = c; }

}  // namespace robstab

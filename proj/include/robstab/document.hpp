#pragma once

#include "robstab/varkkt.hpp"

#include <optional>
#include <string>

namespace robstab {

// Parsed input document. The grammar is in docs/document-format.md.
struct SystemDocument {
    enum class Kind { constraint, kkt, set };
    Kind kind = Kind::constraint;
    std::string name;
    std::optional<Grade> expect;  // outcome the fixtures command compares against
    // constraint: the system itself; kkt: the generalized equation built from kkt;
    // set: only C is filled.
    ConstraintSystem system;
    std::optional<KKTSystem> kkt;
};

std::string to_string(SystemDocument::Kind k);

// Throws ParseError (with line numbers) or ValidationError.
SystemDocument parse_document(const std::string& text);
SystemDocument load_document(const std::string& path);
// Canonical text; parse_document(serialize(d)) reproduces d.
std::string serialize(const SystemDocument& d);

// Whitespace separated rational literals.
RVector parse_rational_list(const std::string& text, int line = 0);

}  // namespace robstab

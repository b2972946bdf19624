#include "robstab/document.hpp"

#include "robstab/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace robstab {

std::string to_string(SystemDocument::Kind k) {
    switch (k) {
        case SystemDocument::Kind::constraint: return "constraint";
        case SystemDocument::Kind::kkt: return "kkt";
        case SystemDocument::Kind::set: return "set";
    }
    return "unknown";
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct Line {
    int number;
    std::string text;
};

std::size_t parse_count(const std::string& s, int line, const std::string& what) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError(what + " must be a nonnegative integer, got '" + s + "'", line);
    return std::stoul(s);
}

Rational parse_number(const std::string& s, int line) {
    try {
        return parse_rational(s);
    } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (numbers are rational literals such as 3/2)", line);
    }
}

// "a1 ... an <= b" rows separated by ';'. An empty text is the whole space.
Polyhedron parse_polyhedron(const std::string& text, std::size_t dim, int line) {
    std::vector<RVector> rows;
    RVector b;
    if (!trim(text).empty()) {
        for (auto& row : split_on(text, ';')) {
            if (row.empty()) continue;
            auto le = row.find("<=");
            if (le == std::string::npos) throw ParseError("row '" + row + "' needs the form 'a1 ... an <= b'", line);
            RVector a = parse_rational_list(row.substr(0, le), line);
            if (a.size() != dim)
                throw ParseError("row '" + row + "' has " + std::to_string(a.size()) + " coefficients, expected " +
                                     std::to_string(dim),
                                 line);
            rows.push_back(a);
            b.push_back(parse_number(trim(row.substr(le + 2)), line));
        }
    }
    try {
        return Polyhedron(RMatrix::from_rows(rows, dim), b, dim);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
}

// Splits "head: rest" and returns the trimmed pair.
std::pair<std::string, std::string> head_rest(const std::string& s, int line) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw ParseError("expected ':' in '" + s + "'", line);
    return {trim(s.substr(0, colon)), s.substr(colon + 1)};
}

ProductSet parse_set(const std::vector<Line>& lines) {
    ProductSet C;
    for (auto& [ln, text] : lines) {
        std::istringstream is(text);
        std::string word;
        is >> word;
        if (word == "nonpositive" || word == "zero") {
            std::string k;
            is >> k;
            std::size_t count = parse_count(k, ln, word + " count");
            for (std::size_t i = 0; i < count; ++i)
                C.factors.push_back(word == "zero" ? SetFactor::zero() : SetFactor::nonpositive());
        } else if (word.rfind("graph_normal_nonpos", 0) == 0) {
            std::size_t count = 1;
            if (word.size() > 19) {
                if (word[19] != '^') throw ParseError("expected graph_normal_nonpos^k", ln);
                count = parse_count(word.substr(20), ln, "graph_normal_nonpos power");
            }
            for (std::size_t i = 0; i < count; ++i) C.factors.push_back(SetFactor::graph_normal());
        } else if (word.rfind("polyhedron", 0) == 0 || word.rfind("union", 0) == 0) {
            auto [head, rest] = head_rest(text, ln);
            std::istringstream hs(head);
            std::string kw, d;
            hs >> kw >> d;
            std::size_t dim = parse_count(d, ln, "set dimension");
            if (dim == 0) throw ParseError("set dimension must be positive", ln);
            std::vector<Polyhedron> pieces;
            if (kw == "polyhedron") pieces.push_back(parse_polyhedron(rest, dim, ln));
            else if (kw == "union")
                for (auto& piece : split_on(rest, '|')) pieces.push_back(parse_polyhedron(piece, dim, ln));
            else throw ParseError("unknown set '" + kw + "'", ln);
            C.factors.push_back(SetFactor::general(PolyUnion(pieces, dim)));
        } else {
            throw ParseError("unknown set factor '" + word + "'", ln);
        }
    }
    return C;
}

FuncVec parse_functions(const std::vector<Line>& lines, std::size_t m, std::size_t n) {
    FuncVec f;
    f.param_dim = m;
    f.decision_dim = n;
    auto symbols = SymbolTable::standard(m, n);
    for (auto& [ln, text] : lines) f.components.push_back(parse_expr(text, symbols, ln));
    return f;
}

ParamSet parse_param_set(const std::vector<Line>& lines, std::size_t m) {
    if (lines.empty()) return ParamSet::full();
    std::vector<Line> smooth;
    std::optional<ParamSet> fixed;
    for (auto& l : lines) {
        if (l.text == "full") {
            fixed = ParamSet::full();
        } else if (l.text.rfind("polyhedron", 0) == 0) {
            auto [head, rest] = head_rest(l.text, l.number);
            if (head != "polyhedron") throw ParseError("parameter polyhedron takes no dimension; write 'polyhedron: rows'", l.number);
            fixed = ParamSet::polyhedral(parse_polyhedron(rest, m, l.number));
        } else {
            auto le = l.text.rfind("<=");
            if (le == std::string::npos || trim(l.text.substr(le + 2)) != "0")
                throw ParseError("parameter constraints read 'h(p) <= 0'", l.number);
            smooth.push_back({l.number, l.text.substr(0, le)});
        }
        if (fixed && (lines.size() > 1))
            throw ParseError("'full' and 'polyhedron' must be the only line of [P]", l.number);
    }
    if (fixed) return *fixed;
    return ParamSet::smooth(parse_functions(smooth, m, 0));
}

VCone parse_direction_cone(const std::vector<Line>& lines, std::size_t dim) {
    VCone v;
    v.dim = dim;
    for (auto& l : lines) {
        auto [head, rest] = head_rest(l.text, l.number);
        RVector r = parse_rational_list(rest, l.number);
        if (r.size() != dim) throw ParseError("direction generator must have " + std::to_string(dim) + " entries", l.number);
        if (head == "ray") v.rays.push_back(r);
        else if (head == "line") v.lineality.push_back(r);
        else throw ParseError("direction cone lines start with 'ray:' or 'line:'", l.number);
    }
    return v;
}

Grade parse_grade(const std::string& s, int line) {
    for (Grade g : {Grade::verified, Grade::verified_grid, Grade::verified_generators_only, Grade::verified_numeric,
                    Grade::inconclusive, Grade::refuted})
        if (to_string(g) == s) return g;
    throw ParseError("unknown grade '" + s + "'", line);
}

}  // namespace

RVector parse_rational_list(const std::string& text, int line) {
    std::istringstream is(text);
    RVector out;
    std::string tok;
    while (is >> tok) out.push_back(parse_number(tok, line));
    return out;
}

SystemDocument parse_document(const std::string& text) {
    std::map<std::string, Line> keys;
    std::map<std::string, std::vector<Line>> sections;
    std::map<std::string, int> section_line;
    std::string current;
    std::istringstream is(text);
    std::string raw;
    int ln = 0;
    while (std::getline(is, raw)) {
        ++ln;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError("unterminated section header", ln);
            current = trim(s.substr(1, s.size() - 2));
            static const std::vector<std::string> known{"g", "F", "phi", "C", "P", "D"};
            if (std::find(known.begin(), known.end(), current) == known.end())
                throw ParseError("unknown section [" + current + "]", ln);
            if (section_line.count(current)) throw ParseError("section [" + current + "] appears twice", ln);
            section_line[current] = ln;
            sections[current];
            continue;
        }
        if (current.empty()) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", ln);
            std::string key = trim(s.substr(0, eq));
            if (keys.count(key)) throw ParseError("key '" + key + "' appears twice", ln);
            keys[key] = {ln, trim(s.substr(eq + 1))};
        } else {
            sections[current].push_back({ln, s});
        }
    }

    auto key = [&](const std::string& k) -> const Line* {
        auto it = keys.find(k);
        return it == keys.end() ? nullptr : &it->second;
    };
    auto require = [&](const std::string& k) -> const Line& {
        if (auto* l = key(k)) return *l;
        throw ParseError("missing key '" + k + "'");
    };
    auto count_key = [&](const std::string& k) {
        auto& l = require(k);
        return parse_count(l.text, l.number, k);
    };
    auto vec_key = [&](const std::string& k, std::size_t dim) {
        auto* l = key(k);
        if (!l) return zeros(dim);
        RVector v = parse_rational_list(l->text, l->number);
        if (v.size() != dim)
            throw ParseError(k + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(dim),
                             l->number);
        return v;
    };
    auto allow_only = [&](std::vector<std::string> ks, std::vector<std::string> secs) {
        ks.insert(ks.end(), {"kind", "name", "expect"});
        for (auto& [k, l] : keys)
            if (std::find(ks.begin(), ks.end(), k) == ks.end()) throw ParseError("key '" + k + "' is not used here", l.number);
        for (auto& [s, l] : section_line)
            if (std::find(secs.begin(), secs.end(), s) == secs.end())
                throw ParseError("section [" + s + "] is not used here", l);
    };
    auto section = [&](const std::string& s) -> const std::vector<Line>& {
        static const std::vector<Line> none;
        auto it = sections.find(s);
        return it == sections.end() ? none : it->second;
    };
    auto require_section = [&](const std::string& s) -> const std::vector<Line>& {
        if (!sections.count(s)) throw ParseError("missing section [" + s + "]");
        return sections[s];
    };

    SystemDocument d;
    const Line& kind = require("kind");
    if (kind.text == "constraint") d.kind = SystemDocument::Kind::constraint;
    else if (kind.text == "kkt") d.kind = SystemDocument::Kind::kkt;
    else if (kind.text == "set") d.kind = SystemDocument::Kind::set;
    else throw ParseError("kind must be constraint, kkt or set", kind.number);
    if (auto* l = key("name")) d.name = l->text;
    if (auto* l = key("expect")) d.expect = parse_grade(l->text, l->number);

    switch (d.kind) {
        case SystemDocument::Kind::set: {
            allow_only({"dim"}, {"C"});
            d.system.C = parse_set(require_section("C"));
            const std::size_t dim = count_key("dim");
            if (d.system.C.dim() != dim)
                throw ParseError("[C] has dimension " + std::to_string(d.system.C.dim()) + ", expected " +
                                     std::to_string(dim),
                                 section_line["C"]);
            break;
        }
        case SystemDocument::Kind::constraint: {
            allow_only({"params", "decisions", "split", "p_ref", "x_ref"}, {"g", "C", "P", "D"});
            const std::size_t m = count_key("params"), n = count_key("decisions");
            auto& s = d.system;
            s.g = parse_functions(require_section("g"), m, n);
            s.C = parse_set(require_section("C"));
            s.P = parse_param_set(section("P"), m);
            s.p_ref = vec_key("p_ref", m);
            s.x_ref = vec_key("x_ref", n);
            s.split_l1 = s.g.size();
            if (auto* l = key("split")) s.split_l1 = parse_count(l->text, l->number, "split");
            if (sections.count("D")) s.user_direction_cone = parse_direction_cone(sections["D"], s.g.size());
            s.validate();
            break;
        }
        case SystemDocument::Kind::kkt: {
            allow_only({"params", "decisions", "p_ref", "x_ref", "y_ref"}, {"F", "phi", "P"});
            const std::size_t m = count_key("params"), n = count_key("decisions");
            KKTSystem k;
            k.F = parse_functions(require_section("F"), m, n);
            k.phi = parse_functions(section("phi"), m, n);
            k.P = parse_param_set(section("P"), m);
            k.p_ref = vec_key("p_ref", m);
            k.x_ref = vec_key("x_ref", n);
            k.y_ref = vec_key("y_ref", k.phi.size());
            k.validate();
            d.system = build_kkt_system(k);
            d.kkt = std::move(k);
            break;
        }
    }
    return d;
}

SystemDocument load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_document(ss.str());
}

namespace {

std::string list(const RVector& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + to_string(v[i]);
    return s;
}

std::string rows(const Polyhedron& P) {
    std::string s;
    for (std::size_t i = 0; i < P.A.rows(); ++i) s += (i ? "; " : " ") + list(P.A.row(i)) + " <= " + to_string(P.b[i]);
    return s;
}

void write_functions(std::ostream& os, const char* header, const FuncVec& f) {
    os << "\n[" << header << "]\n";
    auto symbols = SymbolTable::standard(f.param_dim, f.decision_dim);
    for (auto& e : f.components) os << to_string(e, symbols) << "\n";
}

void write_set(std::ostream& os, const ProductSet& C) {
    os << "\n[C]\n";
    const auto& fs = C.factors;
    for (std::size_t i = 0; i < fs.size();) {
        std::size_t j = i;
        while (j < fs.size() && fs[j].kind == fs[i].kind && fs[i].kind != SetFactor::Kind::general) ++j;
        const std::size_t run = j - i;
        switch (fs[i].kind) {
            case SetFactor::Kind::nonpositive: os << "nonpositive " << run << "\n"; break;
            case SetFactor::Kind::zero: os << "zero " << run << "\n"; break;
            case SetFactor::Kind::graph_normal: os << "graph_normal_nonpos^" << run << "\n"; break;
            case SetFactor::Kind::general: {
                const auto& u = fs[i].set;
                if (u.pieces.size() == 1) {
                    os << "polyhedron " << u.dim << ":" << rows(u.pieces[0]) << "\n";
                } else {
                    os << "union " << u.dim << ":";
                    for (std::size_t k = 0; k < u.pieces.size(); ++k) os << (k ? " |" : "") << rows(u.pieces[k]);
                    os << "\n";
                }
                j = i + 1;
                break;
            }
        }
        i = j;
    }
}

void write_param_set(std::ostream& os, const ParamSet& P) {
    os << "\n[P]\n";
    switch (P.variant) {
        case ParamSet::Variant::full_space: os << "full\n"; break;
        case ParamSet::Variant::polyhedron: os << "polyhedron:" << rows(P.poly) << "\n"; break;
        case ParamSet::Variant::smooth_inequalities: {
            auto symbols = SymbolTable::standard(P.h.param_dim, 0);
            for (auto& e : P.h.components) os << to_string(e, symbols) << " <= 0\n";
            break;
        }
    }
}

}  // namespace

std::string serialize(const SystemDocument& d) {
    std::ostringstream os;
    if (!d.name.empty()) os << "name = " << d.name << "\n";
    os << "kind = " << to_string(d.kind) << "\n";
    if (d.expect) os << "expect = " << to_string(*d.expect) << "\n";
    switch (d.kind) {
        case SystemDocument::Kind::set:
            os << "dim = " << d.system.C.dim() << "\n";
            write_set(os, d.system.C);
            break;
        case SystemDocument::Kind::constraint: {
            const auto& s = d.system;
            os << "params = " << s.param_dim() << "\ndecisions = " << s.decision_dim() << "\nsplit = " << s.split_l1
               << "\np_ref = " << list(s.p_ref) << "\nx_ref = " << list(s.x_ref) << "\n";
            write_functions(os, "g", s.g);
            write_set(os, s.C);
            write_param_set(os, s.P);
            if (s.user_direction_cone) {
                os << "\n[D]\n";
                for (auto& r : s.user_direction_cone->rays) os << "ray: " << list(r) << "\n";
                for (auto& r : s.user_direction_cone->lineality) os << "line: " << list(r) << "\n";
            }
            break;
        }
        case SystemDocument::Kind::kkt: {
            const auto& k = *d.kkt;
            os << "params = " << k.param_dim() << "\ndecisions = " << k.decision_dim() << "\np_ref = " << list(k.p_ref)
               << "\nx_ref = " << list(k.x_ref) << "\ny_ref = " << list(k.y_ref) << "\n";
            write_functions(os, "F", k.F);
            write_functions(os, "phi", k.phi);
            write_param_set(os, k.P);
            break;
        }
    }
    return os.str();
}

}  // namespace robstab

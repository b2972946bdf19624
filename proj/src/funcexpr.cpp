#include "robstab/funcexpr.hpp"

#include "robstab/errors.hpp"

#include <array>
#include <cctype>
#include <cmath>

namespace robstab {

struct Expr::Node {
    Kind kind = Kind::constant;
    Rational value;
    VarKind vkind = VarKind::param;
    std::size_t index = 0;
    Rational exponent;
    std::vector<Expr> kids;
};

Expr::Expr() : node_(std::make_shared<Node>()) {}

Expr Expr::constant(const Rational& c) {
    auto n = std::make_shared<Node>();
    n->value = c;
    return Expr(n);
}

Expr Expr::variable(VarKind kind, std::size_t index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->vkind = kind;
    n->index = index;
    return Expr(n);
}

Expr Expr::sum(std::vector<Expr> terms) {
    if (terms.empty()) return constant(0);
    if (terms.size() == 1) return terms.front();
    auto n = std::make_shared<Node>();
    n->kind = Kind::sum;
    n->kids = std::move(terms);
    return Expr(n);
}

Expr Expr::product(std::vector<Expr> factors) {
    if (factors.empty()) return constant(1);
    if (factors.size() == 1) return factors.front();
    auto n = std::make_shared<Node>();
    n->kind = Kind::product;
    n->kids = std::move(factors);
    return Expr(n);
}

Expr Expr::power(const Expr& base, const Rational& exponent) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::power;
    n->exponent = exponent;
    n->kids = {base};
    return Expr(n);
}

Expr Expr::abs_pow(const Expr& base) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::abs_pow;
    n->kids = {base};
    return Expr(n);
}

Expr Expr::negation(const Expr& e) {
    if (e.is_constant()) return constant(-e.value());
    auto n = std::make_shared<Node>();
    n->kind = Kind::negation;
    n->kids = {e};
    return Expr(n);
}

Expr::Kind Expr::kind() const { return node_->kind; }
const Rational& Expr::value() const { return node_->value; }
VarKind Expr::var_kind() const { return node_->vkind; }
std::size_t Expr::var_index() const { return node_->index; }
const Rational& Expr::exponent() const { return node_->exponent; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }

bool Expr::operator==(const Expr& o) const {
    if (node_ == o.node_) return true;
    if (kind() != o.kind()) return false;
    switch (kind()) {
        case Kind::constant: return value() == o.value();
        case Kind::variable: return var_kind() == o.var_kind() && var_index() == o.var_index();
        case Kind::power:
            if (exponent() != o.exponent()) return false;
            break;
        default: break;
    }
    return children() == o.children();
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
    if (a.is_constant() && a.value() == 0) return b;
    if (b.is_constant() && b.value() == 0) return a;
    std::vector<Expr> terms;
    for (const Expr* e : {&a, &b}) {
        if (e->kind() == Expr::Kind::sum) terms.insert(terms.end(), e->children().begin(), e->children().end());
        else terms.push_back(*e);
    }
    return Expr::sum(std::move(terms));
}

Expr operator-(const Expr& a) {
    if (a.kind() == Expr::Kind::negation) return a.children().front();
    return Expr::negation(a);
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
    for (const Expr* e : {&a, &b})
        if (e->is_constant() && e->value() == 0) return Expr::constant(0);
    if (a.is_constant() && a.value() == 1) return b;
    if (b.is_constant() && b.value() == 1) return a;
    if (a.is_constant() && a.value() == -1) return -b;
    if (b.is_constant() && b.value() == -1) return -a;
    std::vector<Expr> factors;
    for (const Expr* e : {&a, &b}) {
        if (e->kind() == Expr::Kind::product)
            factors.insert(factors.end(), e->children().begin(), e->children().end());
        else factors.push_back(*e);
    }
    return Expr::product(std::move(factors));
}

namespace {

struct Inexact {};

template <class T>
struct Jet {
    T v{};
    std::vector<T> g;
    std::vector<T> H;
};

template <class T>
struct Evaluator {
    const std::vector<T>& point;
    std::size_t m, n, k;  // dims of p, x, y
    int order;

    std::size_t N() const { return point.size(); }

    Jet<T> make(const T& v) const {
        Jet<T> j;
        j.v = v;
        if (order >= 1) j.g.assign(N(), T(0));
        if (order >= 2) j.H.assign(N() * N(), T(0));
        return j;
    }

    void chain(Jet<T>& a, const std::array<T, 3>& f) const {
        a.v = f[0];
        if (order >= 2) {
            for (std::size_t i = 0; i < N(); ++i)
                for (std::size_t j = 0; j < N(); ++j) a.H[i * N() + j] = f[1] * a.H[i * N() + j] + f[2] * a.g[i] * a.g[j];
        }
        if (order >= 1)
            for (auto& x : a.g) x = f[1] * x;
    }

    Jet<T> run(const Expr& e) const {
        using K = Expr::Kind;
        switch (e.kind()) {
            case K::constant: return make(convert(e.value()));
            case K::variable: {
                std::size_t off = e.var_kind() == VarKind::param ? 0 : e.var_kind() == VarKind::decision ? m : m + n;
                std::size_t idx = off + e.var_index();
                Jet<T> j = make(point.at(idx));
                if (order >= 1) j.g[idx] = T(1);
                return j;
            }
            case K::sum: {
                Jet<T> acc = make(T(0));
                for (auto& c : e.children()) {
                    Jet<T> t = run(c);
                    acc.v += t.v;
                    for (std::size_t i = 0; i < acc.g.size(); ++i) acc.g[i] += t.g[i];
                    for (std::size_t i = 0; i < acc.H.size(); ++i) acc.H[i] += t.H[i];
                }
                return acc;
            }
            case K::product: {
                Jet<T> acc = run(e.children().front());
                for (std::size_t c = 1; c < e.children().size(); ++c) {
                    Jet<T> b = run(e.children()[c]);
                    Jet<T> r = make(acc.v * b.v);
                    if (order >= 2)
                        for (std::size_t i = 0; i < N(); ++i)
                            for (std::size_t j = 0; j < N(); ++j) {
                                std::size_t ij = i * N() + j;
                                r.H[ij] = acc.v * b.H[ij] + b.v * acc.H[ij] + acc.g[i] * b.g[j] + b.g[i] * acc.g[j];
                            }
                    if (order >= 1)
                        for (std::size_t i = 0; i < N(); ++i) r.g[i] = acc.v * b.g[i] + b.v * acc.g[i];
                    acc = std::move(r);
                }
                return acc;
            }
            case K::negation: {
                Jet<T> a = run(e.children().front());
                a.v = -a.v;
                for (auto& x : a.g) x = -x;
                for (auto& x : a.H) x = -x;
                return a;
            }
            case K::power: {
                Jet<T> a = run(e.children().front());
                chain(a, power_derivs(a.v, e.exponent()));
                return a;
            }
            case K::abs_pow: {
                Jet<T> a = run(e.children().front());
                chain(a, abs_derivs(a.v));
                return a;
            }
        }
        throw Error("unknown expression node");
    }

    static T convert(const Rational& q) {
        if constexpr (std::is_same_v<T, Rational>) return q;
        else return to_double(q);
    }

    static T ipow(const T& x, long k) {
        T r(1);
        T b = k < 0 ? T(1) / x : x;
        for (long i = 0; i < std::labs(k); ++i) r *= b;
        return r;
    }

    std::array<T, 3> power_derivs(const T& x, const Rational& r) const {
        const bool integral = denominator(r) == 1;
        if (x == 0 && r < 0) throw DomainError("zero raised to a negative power");
        if (x < 0 && !integral) throw DomainError("negative base with a fractional exponent");
        std::array<T, 3> f{T(0), T(0), T(0)};
        if (integral) {
            long k = numerator(r).convert_to<long>();
            f[0] = ipow(x, k);
            if (order >= 1 && k != 0) f[1] = T(k) * ipow(x, k - 1);
            if (order >= 2 && k != 0 && k != 1) f[2] = T(k * (k - 1)) * ipow(x, k - 2);
            return f;
        }
        if (x == 0) {
            if (order >= 1 && r < 1) throw NotDifferentiable("fractional power is not differentiable at 0");
            if (order >= 2 && r < 2) throw SecondOrderUnavailable("fractional power has no second derivative at 0");
            return f;
        }
        if constexpr (std::is_same_v<T, Rational>) {
            unsigned q = numerator(Rational(denominator(r))).convert_to<unsigned>();
            long a = numerator(r).convert_to<long>();
            auto root = exact_root(ipow(x, a), q);
            if (!root) throw Inexact{};
            f[0] = *root;
        } else {
            f[0] = std::pow(x, to_double(r));
        }
        if (order >= 1) f[1] = convert(r) * f[0] / x;
        if (order >= 2) f[2] = convert(r * (r - 1)) * f[0] / (x * x);
        return f;
    }

    std::array<T, 3> abs_derivs(const T& x) const {
        T a = x < 0 ? -x : x;
        T s;
        if constexpr (std::is_same_v<T, Rational>) {
            auto root = exact_root(a, 2);
            if (!root) throw Inexact{};
            s = *root;
        } else {
            s = std::sqrt(a);
        }
        std::array<T, 3> f{a * s, T(0), T(0)};
        if (order >= 1) f[1] = T(3) / T(2) * s * T(x < 0 ? -1 : x > 0 ? 1 : 0);
        if (order >= 2) {
            if (s == 0) throw SecondOrderUnavailable("abs(.)^(3/2) has no second derivative where its argument vanishes");
            f[2] = T(3) / (T(4) * s);
        }
        return f;
    }
};

void check_point(const FuncVec& f, std::size_t size) {
    if (size != f.arity())
        throw DimensionError("point has " + std::to_string(size) + " coordinates, expected " + std::to_string(f.arity()));
}

std::vector<std::size_t> wrt_columns(const FuncVec& f, Wrt wrt) {
    std::size_t lo = 0, hi = f.arity();
    if (wrt == Wrt::param) hi = f.param_dim;
    if (wrt == Wrt::decision) lo = f.param_dim, hi = f.param_dim + f.decision_dim;
    if (wrt == Wrt::multiplier) lo = f.param_dim + f.decision_dim;
    std::vector<std::size_t> cols;
    for (std::size_t i = lo; i < hi; ++i) cols.push_back(i);
    return cols;
}

void validate_expr(const Expr& e, const FuncVec& f) {
    if (e.kind() == Expr::Kind::variable) {
        std::size_t lim = e.var_kind() == VarKind::param ? f.param_dim
                          : e.var_kind() == VarKind::decision ? f.decision_dim
                                                               : f.multiplier_dim;
        if (e.var_index() >= lim) throw ValidationError("variable index out of range");
    }
    for (auto& c : e.children()) validate_expr(c, f);
}

}  // namespace

void FuncVec::validate() const {
    for (auto& c : components) validate_expr(c, *this);
}

FuncVec FuncVec::select(const std::vector<std::size_t>& idx) const {
    FuncVec out = *this;
    out.components.clear();
    for (auto i : idx) out.components.push_back(components.at(i));
    return out;
}

std::size_t joint_index(const FuncVec& f, VarKind kind, std::size_t index) {
    switch (kind) {
        case VarKind::param: return index;
        case VarKind::decision: return f.param_dim + index;
        case VarKind::multiplier: return f.param_dim + f.decision_dim + index;
    }
    return index;
}

RVector join(const RVector& p, const RVector& x, const RVector& y) {
    RVector out = p;
    out.insert(out.end(), x.begin(), x.end());
    out.insert(out.end(), y.begin(), y.end());
    return out;
}

EvalResult eval(const FuncVec& f, const RVector& point) {
    check_point(f, point.size());
    EvalResult r;
    try {
        Evaluator<Rational> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 0};
        for (auto& c : f.components) r.value.push_back(ev.run(c).v);
        r.approx = to_double(r.value);
    } catch (const Inexact&) {
        r.exact = false;
        r.value.clear();
        r.approx = eval_double(f, to_double(point));
    }
    return r;
}

RVector eval_exact(const FuncVec& f, const RVector& point) {
    EvalResult r = eval(f, point);
    if (!r.exact) throw DomainError("value is not rational at " + to_string(point));
    return r.value;
}

std::vector<double> eval_double(const FuncVec& f, const std::vector<double>& point) {
    check_point(f, point.size());
    Evaluator<double> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 0};
    std::vector<double> out;
    for (auto& c : f.components) out.push_back(ev.run(c).v);
    return out;
}

RMatrix jacobian(const FuncVec& f, const RVector& point, Wrt wrt) {
    check_point(f, point.size());
    auto cols = wrt_columns(f, wrt);
    RMatrix J(f.size(), cols.size());
    Evaluator<Rational> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 1};
    try {
        for (std::size_t i = 0; i < f.size(); ++i) {
            auto jet = ev.run(f.components[i]);
            for (std::size_t j = 0; j < cols.size(); ++j) J(i, j) = jet.g[cols[j]];
        }
    } catch (const Inexact&) {
        throw DomainError("Jacobian is not rational at " + to_string(point));
    }
    return J;
}

std::vector<std::vector<double>> jacobian_double(const FuncVec& f, const std::vector<double>& point, Wrt wrt) {
    check_point(f, point.size());
    auto cols = wrt_columns(f, wrt);
    Evaluator<double> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 1};
    std::vector<std::vector<double>> J;
    for (auto& c : f.components) {
        auto jet = ev.run(c);
        std::vector<double> row;
        for (auto j : cols) row.push_back(jet.g[j]);
        J.push_back(std::move(row));
    }
    return J;
}

RMatrix hessian_form(const FuncVec& f, const RVector& lambda, const RVector& point) {
    check_point(f, point.size());
    if (lambda.size() != f.size()) throw DimensionError("hessian_form: weight vector has the wrong length");
    const std::size_t N = f.arity();
    RMatrix H(N, N);
    Evaluator<Rational> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 2};
    try {
        for (std::size_t c = 0; c < f.size(); ++c) {
            if (lambda[c] == 0) continue;
            auto jet = ev.run(f.components[c]);
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) H(i, j) += lambda[c] * jet.H[i * N + j];
        }
    } catch (const Inexact&) {
        throw DomainError("Hessian is not rational at " + to_string(point));
    }
    return H;
}

std::vector<std::vector<double>> hessian_form_double(const FuncVec& f, const std::vector<double>& lambda,
                                                     const std::vector<double>& point) {
    check_point(f, point.size());
    const std::size_t N = f.arity();
    std::vector<std::vector<double>> H(N, std::vector<double>(N, 0.0));
    Evaluator<double> ev{point, f.param_dim, f.decision_dim, f.multiplier_dim, 2};
    for (std::size_t c = 0; c < f.size(); ++c) {
        if (lambda.at(c) == 0) continue;
        auto jet = ev.run(f.components[c]);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) H[i][j] += lambda[c] * jet.H[i * N + j];
    }
    return H;
}

Expr differentiate(const Expr& e, VarKind kind, std::size_t index) {
    using K = Expr::Kind;
    switch (e.kind()) {
        case K::constant: return Expr::constant(0);
        case K::variable:
            return Expr::constant(e.var_kind() == kind && e.var_index() == index ? 1 : 0);
        case K::sum: {
            Expr acc = Expr::constant(0);
            for (auto& c : e.children()) acc = acc + differentiate(c, kind, index);
            return acc;
        }
        case K::product: {
            Expr acc = Expr::constant(0);
            const auto& fs = e.children();
            for (std::size_t i = 0; i < fs.size(); ++i) {
                Expr term = differentiate(fs[i], kind, index);
                for (std::size_t j = 0; j < fs.size(); ++j)
                    if (j != i) term = term * fs[j];
                acc = acc + term;
            }
            return acc;
        }
        case K::negation: return -differentiate(e.children().front(), kind, index);
        case K::power: {
            const Expr& b = e.children().front();
            Expr db = differentiate(b, kind, index);
            if (db.is_constant() && db.value() == 0) return db;
            const Rational r = e.exponent();
            Expr outer = r - 1 == 0 ? Expr::constant(1) : r - 1 == 1 ? b : Expr::power(b, r - 1);
            return Expr::constant(r) * outer * db;
        }
        case K::abs_pow: {
            Expr db = differentiate(e.children().front(), kind, index);
            if (db.is_constant() && db.value() == 0) return db;
            throw NotDifferentiable("symbolic derivative of abs(.)^(3/2) is not representable");
        }
    }
    throw Error("unknown expression node");
}

Expr substitute(const Expr& e, const std::function<Expr(VarKind, std::size_t)>& f) {
    using K = Expr::Kind;
    std::vector<Expr> kids;
    for (auto& c : e.children()) kids.push_back(substitute(c, f));
    switch (e.kind()) {
        case K::constant: return e;
        case K::variable: return f(e.var_kind(), e.var_index());
        case K::sum: return Expr::sum(kids);
        case K::product: return Expr::product(kids);
        case K::negation: return Expr::negation(kids.front());
        case K::power: return Expr::power(kids.front(), e.exponent());
        case K::abs_pow: return Expr::abs_pow(kids.front());
    }
    return e;
}

int polynomial_degree(const Expr& e, VarKind kind) {
    using K = Expr::Kind;
    switch (e.kind()) {
        case K::constant: return 0;
        case K::variable: return e.var_kind() == kind ? 1 : 0;
        case K::sum: {
            int d = 0;
            for (auto& c : e.children()) {
                int k = polynomial_degree(c, kind);
                if (k < 0) return -1;
                d = std::max(d, k);
            }
            return d;
        }
        case K::product: {
            int d = 0;
            for (auto& c : e.children()) {
                int k = polynomial_degree(c, kind);
                if (k < 0) return -1;
                d += k;
            }
            return d;
        }
        case K::negation: return polynomial_degree(e.children().front(), kind);
        case K::power: {
            int k = polynomial_degree(e.children().front(), kind);
            if (k == 0) return 0;
            if (k < 0 || denominator(e.exponent()) != 1 || e.exponent() < 0) return -1;
            return k * numerator(e.exponent()).convert_to<int>();
        }
        case K::abs_pow: return depends_on(e.children().front(), kind) ? -1 : 0;
    }
    return -1;
}

bool depends_on(const Expr& e, VarKind kind) {
    if (e.kind() == Expr::Kind::variable) return e.var_kind() == kind;
    for (auto& c : e.children())
        if (depends_on(c, kind)) return true;
    return false;
}

SymbolTable SymbolTable::standard(std::size_t params, std::size_t decisions, std::size_t multipliers) {
    SymbolTable t;
    for (std::size_t i = 0; i < params; ++i) t.names["p" + std::to_string(i + 1)] = {VarKind::param, i};
    for (std::size_t i = 0; i < decisions; ++i) t.names["x" + std::to_string(i + 1)] = {VarKind::decision, i};
    for (std::size_t i = 0; i < multipliers; ++i) t.names["y" + std::to_string(i + 1)] = {VarKind::multiplier, i};
    return t;
}

std::string SymbolTable::name_of(VarKind kind, std::size_t index) const {
    for (auto& [name, ref] : names)
        if (ref.first == kind && ref.second == index) return name;
    const char* prefix = kind == VarKind::param ? "p" : kind == VarKind::decision ? "x" : "y";
    return prefix + std::to_string(index + 1);
}

namespace {

class Parser {
public:
    Parser(const std::string& s, const SymbolTable& t, int line) : s_(s), t_(t), line_(line) {}

    Expr parse() {
        Expr e = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    const std::string& s_;
    const SymbolTable& t_;
    int line_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at column " + std::to_string(pos_ + 1) + " in '" + s_ + "'", line_);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    bool peek_digit() {
        skip();
        return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
    }

    // Digits, optionally followed immediately by /digits.
    Rational number() {
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected a number");
        if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
            fail("decimal literals are not accepted; write rationals as a/b");
        if (pos_ + 1 < s_.size() && s_[pos_] == '/' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        try {
            return parse_rational(s_.substr(start, pos_ - start));
        } catch (const ParseError&) {
            fail("invalid rational literal");
        }
    }

    Rational exponent() {
        if (accept('(')) {
            bool neg = accept('-');
            Rational r = number();
            expect(')');
            return neg ? -r : r;
        }
        bool neg = accept('-');
        Rational r = number();
        return neg ? -r : r;
    }

    Expr sum() {
        std::vector<Expr> terms{term()};
        for (;;) {
            if (accept('+')) terms.push_back(term());
            else if (accept('-')) terms.push_back(Expr::negation(term()));
            else break;
        }
        return Expr::sum(std::move(terms));
    }

    Expr term() {
        std::vector<Expr> factors{unary()};
        for (;;) {
            if (accept('*')) factors.push_back(unary());
            else if (accept('/')) {
                Expr d = unary();
                if (d.is_constant()) {
                    if (d.value() == 0) fail("division by zero");
                    factors.push_back(Expr::constant(1 / d.value()));
                } else {
                    factors.push_back(Expr::power(d, -1));
                }
            } else break;
        }
        return Expr::product(std::move(factors));
    }

    Expr unary() {
        if (accept('-')) return Expr::negation(unary());
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) return Expr::power(base, exponent());
        return base;
    }

    Expr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        if (peek_digit()) return Expr::constant(number());
        if (accept('(')) {
            Expr e = sum();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            if (id == "abs") {
                expect('(');
                Expr inner = sum();
                expect(')');
                if (!accept('^')) fail("abs(...) must be raised to the power 3/2");
                if (exponent() != Rational(3, 2)) fail("abs(...) supports only the exponent 3/2");
                return Expr::abs_pow(inner);
            }
            auto it = t_.names.find(id);
            if (it == t_.names.end()) {
                pos_ = start;
                fail("unknown variable '" + id + "'");
            }
            return Expr::variable(it->second.first, it->second.second);
        }
        fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    }
};

int precedence(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind()) {
        case K::sum: return 1;
        case K::product:
        case K::negation: return 2;
        case K::power: return 3;
        case K::constant: return e.value() < 0 ? 1 : denominator(e.value()) != 1 ? 2 : 4;
        default: return 4;
    }
}

std::string print(const Expr& e, const SymbolTable& t, int min_prec);

std::string wrap(const Expr& e, const SymbolTable& t, int min_prec) {
    std::string s = print(e, t, 0);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
}

std::string print(const Expr& e, const SymbolTable& t, int) {
    using K = Expr::Kind;
    switch (e.kind()) {
        case K::constant: return to_string(e.value());
        case K::variable: return t.name_of(e.var_kind(), e.var_index());
        case K::sum: {
            std::string s;
            for (std::size_t i = 0; i < e.children().size(); ++i) {
                const Expr& c = e.children()[i];
                if (i == 0) s = c.kind() == K::sum ? "(" + print(c, t, 0) + ")" : print(c, t, 0);
                else if (c.kind() == K::negation) s += " - " + wrap(c.children().front(), t, 2);
                else if (c.is_constant() && c.value() < 0) s += " - " + to_string(Rational(-c.value()));
                else s += " + " + wrap(c, t, 2);
            }
            return s;
        }
        case K::product: {
            std::string s;
            for (std::size_t i = 0; i < e.children().size(); ++i) {
                const Expr& c = e.children()[i];
                if (i) s += "*";
                bool paren = c.kind() == K::sum || c.kind() == K::product || c.kind() == K::negation ||
                             (c.is_constant() && c.value() < 0);
                s += paren ? "(" + print(c, t, 0) + ")" : print(c, t, 0);
            }
            return s;
        }
        case K::negation: {
            const Expr& c = e.children().front();
            return "-" + (precedence(c) >= 3 ? print(c, t, 0) : "(" + print(c, t, 0) + ")");
        }
        case K::power: {
            const Expr& b = e.children().front();
            std::string base = precedence(b) >= 4 ? print(b, t, 0) : "(" + print(b, t, 0) + ")";
            const Rational& r = e.exponent();
            std::string ex = r >= 0 && denominator(r) == 1 ? to_string(r) : "(" + to_string(r) + ")";
            return base + "^" + ex;
        }
        case K::abs_pow: return "abs(" + print(e.children().front(), t, 0) + ")^(3/2)";
    }
    return "?";
}

}  // namespace

Expr parse_expr(const std::string& text, const SymbolTable& symbols, int line) {
    return Parser(text, symbols, line).parse();
}

std::string to_string(const Expr& e, const SymbolTable& symbols) { return print(e, symbols, 0); }

}  // namespace robstab

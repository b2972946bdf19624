#pragma once

#include "robstab/matrix.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace robstab {

enum class VarKind { param, decision, multiplier };
enum class Wrt { param, decision, multiplier, all };

// Immutable expression tree. abs_pow is |e|^(3/2), the only nonsmooth node.
class Expr {
public:
    enum class Kind { constant, variable, sum, product, power, abs_pow, negation };

    Expr();  // constant 0
    static Expr constant(const Rational& c);
    static Expr variable(VarKind kind, std::size_t index);
    static Expr sum(std::vector<Expr> terms);
    static Expr product(std::vector<Expr> factors);
    static Expr power(const Expr& base, const Rational& exponent);
    static Expr abs_pow(const Expr& base);
    static Expr negation(const Expr& e);

    Kind kind() const;
    const Rational& value() const;     // constant
    VarKind var_kind() const;          // variable
    std::size_t var_index() const;     // variable
    const Rational& exponent() const;  // power
    const std::vector<Expr>& children() const;

    bool is_constant() const { return kind() == Kind::constant; }
    bool operator==(const Expr& other) const;
    bool operator!=(const Expr& other) const { return !(*this == other); }

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Light constant folding, used when building expressions programmatically.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

// Vector of scalar functions of (p, x, y) with p in R^param_dim,
// x in R^decision_dim and y in R^multiplier_dim, in that joint order.
struct FuncVec {
    std::vector<Expr> components;
    std::size_t param_dim = 0;
    std::size_t decision_dim = 0;
    std::size_t multiplier_dim = 0;

    std::size_t size() const { return components.size(); }
    std::size_t arity() const { return param_dim + decision_dim + multiplier_dim; }
    // Throws ValidationError when a variable index is out of range.
    void validate() const;
    FuncVec select(const std::vector<std::size_t>& idx) const;
};

std::size_t joint_index(const FuncVec& f, VarKind kind, std::size_t index);
RVector join(const RVector& p, const RVector& x, const RVector& y = {});

struct EvalResult {
    bool exact = true;
    RVector value;               // valid when exact
    std::vector<double> approx;  // always filled
};

EvalResult eval(const FuncVec& f, const RVector& point);
// Throws DomainError when some value is irrational.
RVector eval_exact(const FuncVec& f, const RVector& point);
std::vector<double> eval_double(const FuncVec& f, const std::vector<double>& point);

RMatrix jacobian(const FuncVec& f, const RVector& point, Wrt wrt);
// Row-major Jacobian in floating point (rows = components).
std::vector<std::vector<double>> jacobian_double(const FuncVec& f, const std::vector<double>& point, Wrt wrt);
// Hessian of <lambda, f> in the joint variables. Components with zero weight
// are skipped; SecondOrderUnavailable when a weighted component is not C^2.
RMatrix hessian_form(const FuncVec& f, const RVector& lambda, const RVector& point);
std::vector<std::vector<double>> hessian_form_double(const FuncVec& f, const std::vector<double>& lambda,
                                                     const std::vector<double>& point);

Expr differentiate(const Expr& e, VarKind kind, std::size_t index);
// Replaces every variable by the given expression.
Expr substitute(const Expr& e, const std::function<Expr(VarKind, std::size_t)>& f);
// Highest total polynomial degree; -1 when not polynomial.
int polynomial_degree(const Expr& e, VarKind kind);
bool depends_on(const Expr& e, VarKind kind);

struct SymbolTable {
    std::map<std::string, std::pair<VarKind, std::size_t>> names;
    static SymbolTable standard(std::size_t params, std::size_t decisions, std::size_t multipliers = 0);
    std::string name_of(VarKind kind, std::size_t index) const;
};

Expr parse_expr(const std::string& text, const SymbolTable& symbols, int line = 0);
std::string to_string(const Expr& e, const SymbolTable& symbols);

}  // namespace robstab

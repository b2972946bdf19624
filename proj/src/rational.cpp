#include "robstab/rational.hpp"

#include "robstab/errors.hpp"

#include <cmath>
#include <sstream>

namespace robstab {

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty rational literal");
    auto valid_int = [](const std::string& t) {
        std::size_t i = (t.size() > 0 && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
        if (i >= t.size()) return false;
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
        return true;
    };
    auto slash = s.find('/');
    std::string num = slash == std::string::npos ? s : s.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    if (!valid_int(num) || !valid_int(den) || den[0] == '-' || den[0] == '+')
        throw ParseError("not a rational literal: '" + text + "'");
    if (num[0] == '+') num = num.substr(1);
    Integer n(num), d(den);
    if (d == 0) throw ParseError("zero denominator in '" + text + "'");
    return Rational(n, d);
}

std::string to_string(const Rational& q) { return q.str(); }

double to_double(const Rational& q) { return q.convert_to<double>(); }

std::vector<double> to_double(const RVector& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(to_double(x));
    return out;
}

Rational rationalize(double x, long max_den) {
    if (!std::isfinite(x)) throw DomainError("cannot rationalize a non-finite value");
    bool neg = x < 0;
    double a = std::fabs(x);
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = a;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(r);
        if (fl > 9e15) break;
        long long ai = static_cast<long long>(fl);
        long long p2 = ai * p1 + p0;
        long long q2 = ai * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = r - fl;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    if (q1 == 0) return Rational(0);
    Rational out{Integer(p1), Integer(q1)};
    return neg ? Rational(-out) : out;
}

namespace {

std::optional<Integer> integer_root(const Integer& x, unsigned q) {
    if (x < 0) return std::nullopt;
    Integer r;
    mpz_root(r.backend().data(), x.backend().data(), q);
    Integer check = 1;
    for (unsigned i = 0; i < q; ++i) check *= r;
    if (check == x) return r;
    return std::nullopt;
}

}  // namespace

std::optional<Rational> exact_root(const Rational& x, unsigned q) {
    if (q == 0) throw DomainError("zeroth root");
    if (q == 1) return x;
    bool neg = x < 0;
    if (neg && q % 2 == 0) return std::nullopt;
    Rational a = neg ? Rational(-x) : x;
    auto n = integer_root(numerator(a), q);
    auto d = integer_root(denominator(a), q);
    if (!n || !d) return std::nullopt;
    Rational r(*n, *d);
    return neg ? Rational(-r) : r;
}

int sign(const Rational& q) { return q > 0 ? 1 : (q < 0 ? -1 : 0); }

Rational dot(const RVector& a, const RVector& b) {
    if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
    return s;
}

Rational squared_norm(const RVector& v) { return dot(v, v); }

RVector operator+(const RVector& a, const RVector& b) {
    if (a.size() != b.size()) throw DimensionError("vector sum: size mismatch");
    RVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

RVector operator-(const RVector& a, const RVector& b) {
    if (a.size() != b.size()) throw DimensionError("vector difference: size mismatch");
    RVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

RVector operator-(const RVector& a) {
    RVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
    return out;
}

RVector operator*(const Rational& s, const RVector& v) {
    RVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
    return out;
}

bool is_zero(const RVector& v) {
    for (const auto& x : v)
        if (x != 0) return false;
    return true;
}

RVector zeros(std::size_t n) { return RVector(n, Rational(0)); }

RVector unit(std::size_t n, std::size_t i) {
    RVector e = zeros(n);
    e.at(i) = 1;
    return e;
}

RVector primitive(const RVector& v) {
    if (is_zero(v)) return v;
    Integer l = 1;
    for (const auto& x : v)
        if (x != 0) l = boost::multiprecision::lcm(l, Integer(denominator(x)));
    std::vector<Integer> ints;
    ints.reserve(v.size());
    Integer g = 0;
    for (const auto& x : v) {
        Integer k = numerator(x) * (l / denominator(x));
        ints.push_back(k);
        if (k != 0) g = g == 0 ? Integer(abs(k)) : boost::multiprecision::gcd(g, Integer(abs(k)));
    }
    RVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = Rational(ints[i] / g);
    return out;
}

RVector primitive_line(const RVector& v) {
    RVector p = primitive(v);
    for (const auto& x : p) {
        if (x != 0) {
            if (x < 0) return -p;
            break;
        }
    }
    return p;
}

std::string to_string(const RVector& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        os << v[i].str();
    }
    os << ')';
    return os.str();
}

}  // namespace robstab

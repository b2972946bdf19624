#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <optional>
#include <string>
#include <vector>

namespace robstab {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int, boost::multiprecision::et_off>;
using RVector = std::vector<Rational>;

Rational parse_rational(const std::string& text);
std::string to_string(const Rational& q);
double to_double(const Rational& q);
std::vector<double> to_double(const RVector& v);

// Closest rational with denominator at most max_den (continued fractions).
Rational rationalize(double x, long max_den = 1000000);

// Exact q-th root when it exists.
std::optional<Rational> exact_root(const Rational& x, unsigned q);

int sign(const Rational& q);

Rational dot(const RVector& a, const RVector& b);
Rational squared_norm(const RVector& v);
RVector operator+(const RVector& a, const RVector& b);
RVector operator-(const RVector& a, const RVector& b);
RVector operator-(const RVector& a);
RVector operator*(const Rational& s, const RVector& v);
bool is_zero(const RVector& v);
RVector zeros(std::size_t n);
RVector unit(std::size_t n, std::size_t i);

// Positive multiple with coprime integer entries; zero vector unchanged.
RVector primitive(const RVector& v);
// Like primitive, but the first nonzero entry is made positive.
RVector primitive_line(const RVector& v);

std::string to_string(const RVector& v);

}  // namespace robstab

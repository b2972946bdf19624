#pragma once

#include "robstab/rational.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace robstab {

class RMatrix {
public:
    RMatrix() = default;
    RMatrix(std::size_t rows, std::size_t cols);

    static RMatrix identity(std::size_t n);
    static RMatrix from_rows(const std::vector<RVector>& rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    RVector row(std::size_t i) const;
    RVector col(std::size_t j) const;
    std::vector<RVector> row_list() const;
    void append_row(const RVector& r);

    RMatrix transpose() const;
    RMatrix operator*(const RMatrix& other) const;
    RVector operator*(const RVector& v) const;
    RMatrix operator*(const Rational& s) const;
    RMatrix operator+(const RMatrix& other) const;
    RMatrix operator-(const RMatrix& other) const;
    RMatrix operator-() const;

    RMatrix select_rows(const std::vector<std::size_t>& idx) const;
    RMatrix select_cols(const std::vector<std::size_t>& idx) const;
    RMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;

    bool operator==(const RMatrix& other) const;
    bool operator!=(const RMatrix& other) const { return !(*this == other); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

RMatrix vstack(const RMatrix& a, const RMatrix& b);
RMatrix hstack(const RMatrix& a, const RMatrix& b);
RMatrix block_diag(const RMatrix& a, const RMatrix& b);

struct Rref {
    RMatrix reduced;
    std::vector<std::size_t> pivots;
};

Rref rref(const RMatrix& m);
std::size_t rank(const RMatrix& m);
// Basis of {x : m x = 0}, one vector per free column, made primitive.
std::vector<RVector> nullspace(const RMatrix& m);
// Some solution of m x = b, or nullopt when inconsistent.
std::optional<RVector> solve(const RMatrix& m, const RVector& b);
std::optional<RMatrix> inverse(const RMatrix& m);
Rational determinant(const RMatrix& m);
// Basis of the row space (RREF rows).
std::vector<RVector> row_basis(const std::vector<RVector>& vs, std::size_t dim);

std::string to_string(const RMatrix& m);

}  // namespace robstab

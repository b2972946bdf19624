#include "robstab/matrix.hpp"

#include "robstab/errors.hpp"

#include <sstream>

namespace robstab {

RMatrix::RMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

RMatrix RMatrix::identity(std::size_t n) {
    RMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

RMatrix RMatrix::from_rows(const std::vector<RVector>& rows, std::size_t cols) {
    RMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw DimensionError("from_rows: row length mismatch");
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

RVector RMatrix::row(std::size_t i) const {
    if (i >= rows_) throw DimensionError("row index out of range");
    return RVector(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
}

RVector RMatrix::col(std::size_t j) const {
    if (j >= cols_) throw DimensionError("column index out of range");
    RVector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

std::vector<RVector> RMatrix::row_list() const {
    std::vector<RVector> out;
    out.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out.push_back(row(i));
    return out;
}

void RMatrix::append_row(const RVector& r) {
    if (rows_ == 0 && cols_ == 0) cols_ = r.size();
    if (r.size() != cols_) throw DimensionError("append_row: length mismatch");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
}

RMatrix RMatrix::transpose() const {
    RMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

RMatrix RMatrix::operator*(const RMatrix& other) const {
    if (cols_ != other.rows_) throw DimensionError("matrix product: inner size mismatch");
    RMatrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const Rational& a = (*this)(i, k);
            if (a == 0) continue;
            for (std::size_t j = 0; j < other.cols_; ++j)
                if (other(k, j) != 0) out(i, j) += a * other(k, j);
        }
    return out;
}

RVector RMatrix::operator*(const RVector& v) const {
    if (v.size() != cols_) throw DimensionError("matrix-vector product: size mismatch");
    RVector out(rows_, Rational(0));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if ((*this)(i, j) != 0 && v[j] != 0) out[i] += (*this)(i, j) * v[j];
    return out;
}

RMatrix RMatrix::operator*(const Rational& s) const {
    RMatrix out(*this);
    for (auto& x : out.data_) x *= s;
    return out;
}

RMatrix RMatrix::operator+(const RMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("matrix sum: shape mismatch");
    RMatrix out(*this);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += other.data_[i];
    return out;
}

RMatrix RMatrix::operator-(const RMatrix& other) const { return *this + (-other); }

RMatrix RMatrix::operator-() const {
    RMatrix out(*this);
    for (auto& x : out.data_) x = -x;
    return out;
}

RMatrix RMatrix::select_rows(const std::vector<std::size_t>& idx) const {
    RMatrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(idx[i], j);
    return out;
}

RMatrix RMatrix::select_cols(const std::vector<std::size_t>& idx) const {
    RMatrix out(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = (*this)(i, idx[j]);
    return out;
}

RMatrix RMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("block out of range");
    RMatrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
    return out;
}

bool RMatrix::operator==(const RMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

RMatrix vstack(const RMatrix& a, const RMatrix& b) {
    if (a.rows() == 0) return b.rows() == 0 && b.cols() == 0 ? a : b;
    if (b.rows() == 0) return a;
    if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
    RMatrix out(a.rows() + b.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, j) = b(i, j);
    return out;
}

RMatrix hstack(const RMatrix& a, const RMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
    RMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
    }
    return out;
}

RMatrix block_diag(const RMatrix& a, const RMatrix& b) {
    RMatrix out(a.rows() + b.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, a.cols() + j) = b(i, j);
    return out;
}

Rref rref(const RMatrix& m) {
    Rref r{m, {}};
    RMatrix& a = r.reduced;
    std::size_t lead = 0;
    for (std::size_t c = 0; c < a.cols() && lead < a.rows(); ++c) {
        std::size_t p = lead;
        while (p < a.rows() && a(p, c) == 0) ++p;
        if (p == a.rows()) continue;
        if (p != lead)
            for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(lead, j));
        Rational inv = 1 / a(lead, c);
        for (std::size_t j = c; j < a.cols(); ++j) a(lead, j) *= inv;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == lead || a(i, c) == 0) continue;
            Rational f = a(i, c);
            for (std::size_t j = c; j < a.cols(); ++j)
                if (a(lead, j) != 0) a(i, j) -= f * a(lead, j);
        }
        r.pivots.push_back(c);
        ++lead;
    }
    return r;
}

std::size_t rank(const RMatrix& m) { return rref(m).pivots.size(); }

std::vector<RVector> nullspace(const RMatrix& m) {
    Rref r = rref(m);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : r.pivots) is_pivot[p] = true;
    std::vector<RVector> basis;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_pivot[f]) continue;
        RVector v = zeros(m.cols());
        v[f] = 1;
        for (std::size_t k = 0; k < r.pivots.size(); ++k) v[r.pivots[k]] = -r.reduced(k, f);
        basis.push_back(primitive(v));
    }
    return basis;
}

std::optional<RVector> solve(const RMatrix& m, const RVector& b) {
    if (b.size() != m.rows()) throw DimensionError("solve: rhs size mismatch");
    RMatrix aug(m.rows(), m.cols() + 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) aug(i, j) = m(i, j);
        aug(i, m.cols()) = b[i];
    }
    Rref r = rref(aug);
    if (!r.pivots.empty() && r.pivots.back() == m.cols()) return std::nullopt;
    RVector x = zeros(m.cols());
    for (std::size_t k = 0; k < r.pivots.size(); ++k) x[r.pivots[k]] = r.reduced(k, m.cols());
    return x;
}

std::optional<RMatrix> inverse(const RMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("inverse: matrix not square");
    std::size_t n = m.rows();
    Rref r = rref(hstack(m, RMatrix::identity(n)));
    if (r.pivots.size() < n || r.pivots[n - 1] != n - 1) return std::nullopt;
    return r.reduced.block(0, n, n, n);
}

Rational determinant(const RMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("determinant: matrix not square");
    RMatrix a = m;
    std::size_t n = a.rows();
    Rational det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a(p, c) == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            if (a(i, c) == 0) continue;
            Rational f = a(i, c) / a(c, c);
            for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
        }
    }
    return det;
}

std::vector<RVector> row_basis(const std::vector<RVector>& vs, std::size_t dim) {
    if (vs.empty()) return {};
    Rref r = rref(RMatrix::from_rows(vs, dim));
    std::vector<RVector> out;
    for (std::size_t k = 0; k < r.pivots.size(); ++k) out.push_back(r.reduced.row(k));
    return out;
}

std::string to_string(const RMatrix& m) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i) os << "; ";
        os << to_string(m.row(i));
    }
    os << ']';
    return os.str();
}

}  // namespace robstab

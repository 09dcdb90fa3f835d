#include "pencil/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pencil/errors.hpp"

namespace pencil {

namespace {

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

}  // namespace

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) {
      throw Error(ErrorCode::BadShape, "ragged matrix initializer");
    }
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

CMatrix CMatrix::identity(std::size_t n) { return scalar(n, 1.0); }

CMatrix CMatrix::scalar(std::size_t n, cplx value) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = value;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> entries) {
  CMatrix m(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
  return m;
}

CMatrix& CMatrix::operator+=(const CMatrix& other) {
  require_same_shape(*this, other, "matrix sum");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
  require_same_shape(*this, other, "matrix difference");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

CMatrix& CMatrix::add_scaled(cplx s, const CMatrix& other) {
  require_same_shape(*this, other, "scaled sum");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

CMatrix CMatrix::transpose() const {
  CMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

CMatrix CMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw Error(ErrorCode::BadShape, "block out of range");
  }
  CMatrix b(nr, nc);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
  return b;
}

void CMatrix::set_block(std::size_t r0, std::size_t c0, const CMatrix& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
    throw Error(ErrorCode::BadShape, "block out of range");
  }
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) (*this)(r0 + r, c0 + c) = b(r, c);
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator-(CMatrix a) { return a *= -1.0; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(CMatrix a, cplx s) { return a *= s; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix product: inner dimensions " +
                                                  std::to_string(a.cols()) + " vs " +
                                                  std::to_string(b.rows()));
  }
  CMatrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t nc = b.cols();
  auto od = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < inner; ++k) {
      const cplx aik = ad[i * inner + k];
      if (aik == cplx{}) continue;
      const cplx* brow = bd.data() + k * nc;
      cplx* orow = od.data() + i * nc;
      for (std::size_t j = 0; j < nc; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

double frobenius_norm(const CMatrix& m) {
  double s = 0.0;
  for (const auto& v : m.data()) s += std::norm(v);
  return std::sqrt(s);
}

double max_abs(const CMatrix& m) {
  double s = 0.0;
  for (const auto& v : m.data()) s = std::max(s, std::abs(v));
  return s;
}

cplx trace(const CMatrix& m) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "trace of non-square matrix");
  cplx t{};
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

bool all_finite(const CMatrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix power(const CMatrix& m, int p) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "power of non-square matrix");
  if (p < 0) return power(inverse(m), -p);
  CMatrix result = CMatrix::identity(m.rows());
  CMatrix base = m;
  while (p > 0) {
    if (p & 1) result = result * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return result;
}

CMatrix inverse(const CMatrix& m) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "inverse of non-square matrix");
  const std::size_t n = m.rows();
  const double tol = 1e-12 * frobenius_norm(m);
  CMatrix lu = m;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(lu(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > tol)) {
      throw Error(ErrorCode::SingularMatrix,
                  "pivot " + std::to_string(best) + " below tolerance in column " +
                      std::to_string(col));
    }
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(piv, c), lu(col, c));
      std::swap(perm[piv], perm[col]);
    }
    const cplx d = lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = lu(r, col) / d;
      lu(r, col) = f;
      if (f == cplx{}) continue;
      for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= f * lu(col, c);
    }
  }

  // Solve LU X = P I column by column.
  CMatrix inv(n, n);
  std::vector<cplx> y(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      cplx s = perm[r] == c ? cplx{1.0} : cplx{};
      for (std::size_t k = 0; k < r; ++k) s -= lu(r, k) * y[k];
      y[r] = s;
    }
    for (std::size_t r = n; r-- > 0;) {
      cplx s = y[r];
      for (std::size_t k = r + 1; k < n; ++k) s -= lu(r, k) * inv(k, c);
      inv(r, c) = s / lu(r, r);
    }
  }
  if (!all_finite(inv)) throw Error(ErrorCode::NonFinite, "inverse produced non-finite entries");
  return inv;
}

double pivot_ratio(const CMatrix& m) {
  if (!m.square()) throw Error(ErrorCode::DimensionMismatch, "pivot_ratio of non-square matrix");
  const std::size_t n = m.rows();
  const double scale = frobenius_norm(m);
  if (scale == 0.0) return 0.0;
  CMatrix lu = m;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > best) {
        best = std::abs(lu(r, col));
        piv = r;
      }
    }
    smallest = std::min(smallest, best);
    if (best == 0.0) return 0.0;
    if (piv != col)
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(piv, c), lu(col, c));
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = lu(r, col) / lu(col, col);
      for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= f * lu(col, c);
    }
  }
  return smallest / scale;
}

CMatrix resolvent(const CMatrix& m, cplx z) {
  CMatrix shifted = m;
  for (std::size_t i = 0; i < m.rows(); ++i) shifted(i, i) -= z;
  return inverse(shifted);
}

std::vector<cplx> trace_powers(const CMatrix& m, int jmax) {
  if (jmax < 1) throw Error(ErrorCode::BadShape, "trace_powers needs jmax >= 1");
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(jmax));
  CMatrix p = m;
  out.push_back(trace(p));
  for (int j = 2; j <= jmax; ++j) {
    p = p * m;
    out.push_back(trace(p));
  }
  for (const auto& v : out) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorCode::NonFinite, "trace power overflow");
    }
  }
  return out;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

CMatrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  CMatrix m(rows, cols);
  for (auto& v : m.data()) {
    const double re = rng.uniform(-1.0, 1.0);
    const double im = rng.uniform(-1.0, 1.0);
    v = cplx{re, im};
  }
  return m;
}

CMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return random_matrix(n, n, rng);
}

}  // namespace pencil

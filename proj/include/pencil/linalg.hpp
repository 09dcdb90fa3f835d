#pragma once

// Dense complex matrices for the small (n <= 12) systems handled here.
//
// Storage is row-major. All operations are value-semantic; nothing here
// allocates behind shared ownership, so values can be shared freely
// across threads once built.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace pencil {

using cplx = std::complex<double>;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  /// Row-major nested initializer, mostly for tests.
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix zeros(std::size_t n) { return CMatrix(n, n); }
  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(std::span<const cplx> entries);
  static CMatrix scalar(std::size_t n, cplx value);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  CMatrix& operator+=(const CMatrix& other);
  CMatrix& operator-=(const CMatrix& other);
  CMatrix& operator*=(cplx s);

  /// this += s * other, without a temporary.
  CMatrix& add_scaled(cplx s, const CMatrix& other);

  CMatrix transpose() const;
  CMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const CMatrix& b);

  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(CMatrix a, cplx s);

double frobenius_norm(const CMatrix& m);
double max_abs(const CMatrix& m);
cplx trace(const CMatrix& m);
bool all_finite(const CMatrix& m);

/// [a, b] = ab - ba
CMatrix commutator(const CMatrix& a, const CMatrix& b);

/// M^p for p >= 0 by repeated squaring; negative p inverts first.
CMatrix power(const CMatrix& m, int p);

/// LU with partial pivoting. Throws Error{SingularMatrix} when a pivot falls
/// below 1e-12 * ||M||_F, which for the structure constructors means the
/// chosen lambda sits on the singular locus and should be resampled.
CMatrix inverse(const CMatrix& m);

/// Smallest |pivot| / ||M||_F of the partially pivoted LU factorisation;
/// 0 for exactly singular input. Used for genericity checks.
double pivot_ratio(const CMatrix& m);

/// (M - z I)^{-1}
CMatrix resolvent(const CMatrix& m, cplx z);

/// [tr(M), tr(M^2), ..., tr(M^jmax)] by repeated multiplication.
std::vector<cplx> trace_powers(const CMatrix& m, int jmax);

/// splitmix64: state += 0x9E3779B97F4A7C15; z = state;
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
/// return z ^ (z >> 31). Doubles take the top 53 bits.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Entries with real and imaginary parts uniform in [-1, 1], drawn in
/// row-major order (real part first) from SplitMix64(seed).
CMatrix random_matrix(std::size_t n, std::uint64_t seed);
CMatrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng);

}  // namespace pencil

#pragma once

// Algebraic data of the compatible-product families and the products
// they induce.
//
//   A1  : x o y = x c y,                       R(x) = c x
//   A3  : A^2 = B^2 = 1,                       R(x) = A x B + B A x
//   Ak  : A^k = B^k = 1 plus the B^i A^j relations,
//         R(x) = sum_{i=1}^{k-1} A^{k-i} x B^i / (eps^i - 1) + C x
//   PM  : B^k = 1, B T = eps T B, poles lambda_a with weights t_a, acting on
//         m-tuples of matrices.
//
// In every case the product is x o y = R(x) y + x R(y) - R(x y), and
// x . y = x y + lambda x o y is associative for every lambda.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pencil/linalg.hpp"
#include "pencil/operators.hpp"

namespace pencil {

/// exp(2 pi i / k)
cplx root_of_unity(int k);

struct A1Structure {
  CMatrix c;
};

struct A3Structure {
  CMatrix a;
  CMatrix b;
};

struct AkStructure {
  int k = 2;
  CMatrix a;
  CMatrix b;
  CMatrix c;
  /// Clock matrix with A T = eps T A. Recovered as T = 1 + (C - 1)^{-1}
  /// when the structure was assembled from (A, B, C) alone.
  CMatrix t;
};

struct PMStructure {
  int k = 1;
  CMatrix b;
  CMatrix t;
  std::vector<cplx> lambdas;
  std::vector<cplx> weights;

  std::size_t m() const noexcept { return lambdas.size(); }
  std::size_t n() const noexcept { return t.rows(); }
};

using Structure = std::variant<A1Structure, A3Structure, AkStructure, PMStructure>;

enum class Family { A1, A3, Ak, PM };

Family family(const Structure& s);
std::string_view family_name(Family f);
/// Matrix size n.
std::size_t matrix_size(const Structure& s);
/// Number of matrix components m (1 for single-component families).
std::size_t components(const Structure& s);

// ---------------------------------------------------------------------------
// Constructors

struct ClockShiftPair {
  CMatrix a;
  CMatrix t;
};

/// A = block-cyclic shift of k blocks of size d, T = diag(D, eps D, ..., eps^{k-1} D).
/// Then A^k = 1 exactly and A T = eps T A. `shifts` lists the values s for
/// which D^k - s^k must be invertible (defaults to {1}); violations throw
/// SingularConstructionInput.
ClockShiftPair clock_shift_pair(int k, const CMatrix& d, std::span<const cplx> shifts = {});

struct BCPair {
  CMatrix b;
  CMatrix c;
};

/// B = (eps T - 1)(T - 1)^{-1} A,  C = T (T - 1)^{-1}.
BCPair derive_bc(const CMatrix& t, const CMatrix& a, int k);

/// clock_shift_pair + derive_bc.
AkStructure make_ak(int k, const CMatrix& d);
/// Seeded convenience: D = 2 + 0.5 * random(d, seed).
AkStructure make_ak(int k, std::size_t d, std::uint64_t seed);

struct ResidualEntry {
  std::string name;
  double residual = 0.0;
};

struct RelationReport {
  std::vector<ResidualEntry> entries;
  double max_residual = 0.0;

  void add(std::string name, double residual);
};

/// Frobenius residuals of A^k = B^k = 1, the B^i A^j expansion for
/// i + j != 0 mod k, and B^i A^{k-i} = 1 + (eps^i - 1) C.
RelationReport verify_relations(const CMatrix& a, const CMatrix& b, const CMatrix& c, int k);

/// A = [[1_p, T], [0, -1_{n-p}]] with T_{ij} = delta_{ij} alpha_i; A^2 = 1.
CMatrix involution_canonical(std::size_t n, std::size_t p, std::span<const cplx> alphas);

struct InvolutionPair {
  CMatrix a;
  CMatrix b;
};

/// A = diag(1, -1), B = [[P, 1 + P], [1 - P, -P]] in d x d blocks.
InvolutionPair a3_block_pair(const CMatrix& p);

/// Random involutions A = S diag(+-1) S^{-1} with seeded S.
InvolutionPair a3_random_pair(std::size_t n, std::uint64_t seed);

struct SkewAkResult {
  CMatrix a;
  std::vector<cplx> z;           // z_1 .. z_k
  double constraint_residual;    // (A^tA - eps^{-1}) A (A^tA - 1) - eps (A^tA - 1) A (A^tA - eps^{-1})
  double closure_residual;       // |f^k(z_1) - z_1|
  double inverse_residual;       // ||A^t B - 1|| for B = (A^t)^{-1}
};

/// A = sqrt(z_1) e_{k,1} + sum_{i=2}^k sqrt(z_i) e_{i-1,i}, z_{j+1} = 1/(1 + eps - eps z_j),
/// principal square roots. Throws DegenerateParameter at a pole of the recursion.
SkewAkResult skew_ak(int k, cplx z1);

/// Block-diagonal assembly of square blocks (e.g. several skew_ak outputs).
CMatrix block_diagonal(std::span<const CMatrix> blocks);

/// Skew-symmetric reduction data: B = A^T.
A3Structure a3_skew_structure(const CMatrix& a);
/// Skew-symmetric reduction data: B = (A^t)^{-1}, C = eps/(1 - eps) (A^t A - 1).
AkStructure ak_skew_structure(int k, const CMatrix& a);

/// PM data from a clock/shift pair with seed block D; B is the shift.
PMStructure make_pm(int k, const CMatrix& d, std::vector<cplx> lambdas, std::vector<cplx> weights);
/// Seeded convenience: D = 0.3 + 0.5 * random(d, seed).
PMStructure make_pm(int k, std::size_t d, std::uint64_t seed, std::vector<cplx> lambdas,
                    std::vector<cplx> weights);

/// The single-pole PM structure equivalent to an Ak structure:
/// B_pm = B, same T, lambda_1 = 1, t_1 = 1. Its product differs from the
/// Ak product by ((k + 1)/2) x y.
PMStructure pm_from_ak(const AkStructure& ak);

/// Throws when the PM genericity preconditions fail (B^k = 1, BT = eps TB,
/// T^k - lambda_a^k invertible, lambda_a^k pairwise distinct).
void require_generic(const PMStructure& pm);

/// Defining-relation residuals of any family (empty report for A1).
RelationReport structure_residuals(const Structure& s);

// ---------------------------------------------------------------------------
// Operators and products

/// R in multiplier form (1 x 1 block operator for single-component families).
BlockOperator build_R(const Structure& s);

FlowState circ_product(const BlockOperator& r, const FlowState& x, const FlowState& y);
FlowState circ_product(const Structure& s, const FlowState& x, const FlowState& y);

/// Direct evaluation of the PM product formula, independent of build_R.
FlowState pm_closed_form_product(const PMStructure& pm, const FlowState& x, const FlowState& y);

/// max over lambda samples and random triples of ||(X.Y).Z - X.(Y.Z)||_F,
/// with X.Y = XY + lambda X o Y.
double pencil_associativity_check(const Structure& s, std::span<const cplx> lambdas,
                                  int n_triples, std::uint64_t seed);

}  // namespace pencil

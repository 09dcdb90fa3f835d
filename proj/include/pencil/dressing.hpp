#pragma once

// Dressing operators S_lambda with S(X) S(Y) = S(XY + lambda X o Y), their
// inverses and the Lax operators L = (S^{-1})^*(x), A = S(x)/lambda, evaluated
// at a fixed complex lambda.

#include <cstdint>
#include <vector>

#include "pencil/operators.hpp"
#include "pencil/structures.hpp"

namespace pencil {

struct DressingOptions {
  /// |lambda| must lie in [inner, outer] for the Ak and PM families.
  double inner = 0.05;
  double outer = 0.4;
};

struct DressingEvaluation {
  cplx lambda;
  BlockOperator s;
  BlockOperator s_inv;
  BlockOperator l_op;
  /// x -> S(x)/lambda. Empty (m = 0) at lambda = 0.
  BlockOperator a_op;
  /// mu for Ak, mu_1..mu_m for PM, empty otherwise.
  std::vector<cplx> mu;
};

DressingEvaluation dressing_a1(const CMatrix& c, cplx lambda);
DressingEvaluation dressing_a3(const CMatrix& a, const CMatrix& b, cplx lambda);
DressingEvaluation dressing_ak(const AkStructure& s, cplx lambda, const DressingOptions& opt = {});

/// mu^k = (2 + (k+1) lambda)/(2 - (k-1) lambda) on the branch with mu(0) = 1,
/// followed along the segment [0, lambda].
cplx ak_mu(int k, cplx lambda);

/// Second-order Taylor value of mu_alpha around lambda = 0.
cplx pm_mu_taylor(const PMStructure& pm, std::size_t alpha, cplx lambda);

/// Normalised defining-condition residual |k lambda sum_g t_g l_g^{k-1}/(l_g^k - mu^k) - 1|.
double pm_mu_condition(const PMStructure& pm, cplx lambda, cplx mu);

struct MuSolveInfo {
  std::vector<cplx> mu;
  std::vector<double> residual;
  int continuation_steps = 0;  // 0 when plain Newton from the Taylor seed converged
};

/// Roots mu_alpha of the PM condition on the branches through lambda_alpha.
/// Newton (tol 1e-13, <= 50 iterations) from the Taylor seed, falling back to
/// continuation in lambda with step halving.
MuSolveInfo mu_solver_pm(const PMStructure& pm, cplx lambda, const DressingOptions& opt = {});

DressingEvaluation dressing_pm(const PMStructure& pm, cplx lambda, const DressingOptions& opt = {});

/// The multi-pole Lax operator with input and output indices untransposed and sign -1.
/// Kept for diagnostics; it is not the adjoint of S^{-1} once m >= 2.
BlockOperator pm_lax_operator_untransposed(const PMStructure& pm, cplx lambda, const std::vector<cplx>& mu);

/// Closed-form O(lambda) coefficient of S.
BlockOperator pm_first_order_coefficient(const PMStructure& pm);

/// Dispatch on the family.
DressingEvaluation dress(const Structure& s, cplx lambda, const DressingOptions& opt = {});

/// x -> T S(x) T^{-1} and its inverse, for single-component evaluations.
DressingEvaluation conjugate_dressing(const DressingEvaluation& ev, const CMatrix& t);

/// max over random pairs of ||S(X) S(Y) - S(XY + lambda X o Y)||_F.
double verify_homomorphism(const DressingEvaluation& ev, const BlockOperator& r, int n_pairs,
                           std::uint64_t seed);
double verify_homomorphism(const DressingEvaluation& ev, const Structure& s, int n_pairs,
                           std::uint64_t seed);

/// op_residual(S^{-1} o S, 1).
double inverse_residual(const DressingEvaluation& ev, int n_samples, std::uint64_t seed);

/// op_residual(L, (S^{-1})^*).
double lax_adjoint_residual(const DressingEvaluation& ev, int n_samples, std::uint64_t seed);

/// PM(m=1) built from an Ak structure: S_ak(lambda) = (1 + c lambda) S_pm(lambda')
/// with c = (k+1)/2, lambda' = lambda/(1 + c lambda). Returns the op_residual.
double ak_pm_degeneration_residual(const AkStructure& ak, cplx lambda, const DressingOptions& opt = {});

}  // namespace pencil

#pragma once

// Matrix ODEs x_t = sign [R(x) + R*(x), x], their integration and the
// quantities they conserve.
//
// sign = +1 is the orientation for which dL/dt = [A, L] with L = (S^{-1})^*(x),
// A = S(x)/lambda. sign = -1 is the time-reversed flow x_t = [x, grad H],
// which is how the single-matrix examples are usually written.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pencil/dressing.hpp"
#include "pencil/operators.hpp"
#include "pencil/structures.hpp"

namespace pencil {

struct IntegratorConfig {
  double dt = 1e-3;
  int steps = 1000;
  int sign = +1;
  int record_every = 1;
  /// Abort when ||x||_F exceeds this.
  double blowup = 1e8;
};

void validate(const IntegratorConfig& cfg);

/// R(x) + R*(x), the gradient of H = sum_a tr(x_a R_a(x)).
FlowState gradient(const BlockOperator& r, const FlowState& x);

FlowState rhs(const BlockOperator& r, const FlowState& x, int sign);
FlowState rhs(const Structure& s, const FlowState& x, int sign);

/// The m-component PM system written out term by term (index-corrected
/// second sum); equals rhs(pm, x, +1).
FlowState rhs_pm_explicit(const PMStructure& pm, const FlowState& x);
/// Same, with M_{a b i} instead of M_{b a i} in the second sum (not the gradient flow).
FlowState rhs_pm_explicit_unswapped(const PMStructure& pm, const FlowState& x);

/// x^2 c - c x^2 for A1, [x, BxA + AxB + xBA + BAx] for A3. Throws WrongFamily otherwise.
FlowState rhs_commutator_form(const Structure& s, const FlowState& x);

using RhsFn = std::function<FlowState(const FlowState&)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<FlowState> states;
  bool aborted = false;
  std::string message;

  const FlowState& back() const { return states.back(); }
};

/// Classical fixed-step RK4. Records x0 and every record_every-th step plus
/// the final one. Stops early (aborted = true) on blow-up or non-finite state.
Trajectory rk4_integrate(const RhsFn& f, const FlowState& x0, const IntegratorConfig& cfg);
Trajectory rk4_integrate(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg);

/// ||x_h(T) - x_{h/4}(T)|| / ||x_{h/2}(T) - x_{h/4}(T)||; about 17 for a 4th-order scheme.
double richardson_ratio(const RhsFn& f, const FlowState& x0, double t_end, double h);

cplx hamiltonian(const BlockOperator& r, const FlowState& x);
cplx hamiltonian(const Structure& s, const FlowState& x);

/// max |central difference of H along e_ij - grad_ji| / max(1, max|grad|)
/// over n_entries sampled entries, step h.
double grad_check(const Structure& s, const FlowState& x, int n_entries = 20, std::uint64_t seed = 0,
                  double h = 1e-6);

struct Labelled {
  std::string label;
  cplx value;
};

/// Closed-form integrals for A1 and A3. Throws WrongFamily for Ak and PM.
std::vector<Labelled> named_integrals(const Structure& s, const FlowState& x);

/// tr(L(lambda)^j) summed over components, for precomputed lambda samples.
class SpectralProbe {
 public:
  SpectralProbe(const Structure& s, std::vector<cplx> lambdas, int jmax, const DressingOptions& opt = {});

  std::vector<Labelled> operator()(const FlowState& x) const;
  const std::vector<DressingEvaluation>& evaluations() const { return evs_; }

 private:
  std::vector<DressingEvaluation> evs_;
  int jmax_;
};

std::vector<Labelled> spectral_invariants(const Structure& s, const FlowState& x,
                                          const std::vector<cplx>& lambdas, int jmax,
                                          const DressingOptions& opt = {});

/// ||L(rhs(x, +1)) - [A(x), L(x)]|| / max(1, ||x||)^2 at one lambda.
double lax_residual(const Structure& s, const DressingEvaluation& ev, const FlowState& x, int sign = +1);
double lax_residual(const Structure& s, const FlowState& x, cplx lambda, const DressingOptions& opt = {});

struct ConservationReport {
  std::vector<std::string> labels;
  std::vector<double> times;
  /// values[i][step] for labels[i]
  std::vector<std::vector<cplx>> values;
  /// max |v(t) - v(0)| / max(1, |v(0)|)
  std::vector<double> drift;

  double max_drift() const;
  std::string to_csv() const;
  /// {"label": drift, ...}
  std::string drift_json() const;
};

using ProbeFn = std::function<std::vector<Labelled>(const FlowState&)>;
ConservationReport conservation_report(const Trajectory& traj, const std::vector<ProbeFn>& probes);

/// H, the named integrals where available and tr(L^j) at the given lambdas.
ConservationReport standard_report(const Structure& s, const Trajectory& traj,
                                   const std::vector<cplx>& lambdas, int jmax,
                                   const DressingOptions& opt = {});

/// x(T) under sign = +1, then back over the same time with sign = -1;
/// returns ||x_back - x0|| / max(1, ||x0||).
double reversal_residual(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg);

// ---------------------------------------------------------------------------
// Cyclic block (Volterra) reduction of the A1 flow

struct VolterraEmbedding {
  CMatrix x;
  CMatrix c;
};

/// x has u_k in block (k, k+1), c has J_k in block (k+1, k), indices mod N.
VolterraEmbedding volterra_embed(const std::vector<CMatrix>& u, const std::vector<CMatrix>& j);
std::vector<CMatrix> volterra_extract(const CMatrix& x, std::size_t n_blocks);
/// Largest entry of x outside the u-block pattern.
double volterra_off_pattern(const CMatrix& x, std::size_t n_blocks);

/// sign = -1: du_k = u_k u_{k+1} J_{k+1} - J_{k-1} u_{k-1} u_k; sign = +1 is the negative.
std::vector<CMatrix> volterra_chain(const std::vector<CMatrix>& u, const std::vector<CMatrix>& j,
                                    int sign);

struct VolterraReport {
  double max_deviation = 0.0;
  double max_off_pattern = 0.0;
  /// per recorded step
  std::vector<double> times;
  std::vector<double> deviation;
  std::vector<double> off_pattern;
};

VolterraReport volterra_equivalence(const std::vector<CMatrix>& u0, const std::vector<CMatrix>& j,
                                    const IntegratorConfig& cfg);

// ---------------------------------------------------------------------------
// Skew-symmetric reductions

/// Residual of the reduction constraints: A3 needs B = A^T; Ak needs
/// B = (A^t)^{-1}, C = eps/(1-eps)(A^t A - 1) and the relations.
double skew_constraint_residual(const Structure& s);

/// max ||x + x^T|| over the trajectory from a skew x0. Throws ReductionViolated
/// when the structure or x0 is not in the reduction.
double skew_preservation(const Structure& s, const FlowState& x0, const IntegratorConfig& cfg);

}  // namespace pencil

#pragma once

// The two-field hyperbolic system u_t = [u, T2(v)], v_tau = [v, T1(u)]
// attached to a two-pole structure, its characteristic-grid integrator and
// zero-curvature / line-invariant diagnostics.

#include <cstdint>
#include <string>
#include <vector>

#include "pencil/dressing.hpp"
#include "pencil/operators.hpp"
#include "pencil/structures.hpp"

namespace pencil {

struct ChiralOperators {
  MultiplierOperator t1;
  MultiplierOperator t2;
};

/// T1(x) = sum_i t1 (T - l2) / ((eps^i l1 - l2)(eps^-i T - l1)) B^-i x B^i,
/// T2 with the roles of the two poles exchanged. Needs m = 2.
ChiralOperators build_T1_T2(const PMStructure& pm);

/// T1 = T2 = identity: the undeformed principal chiral model.
ChiralOperators identity_operators(std::size_t n);

/// Compares T1(u) with the O(lambda) part of the second component of
/// S_lambda(u, 0), and T2(v) with the first component of S_lambda(0, v),
/// by central differences in lambda at +-h. Returns the larger relative error
/// over n_samples random inputs.
double decomposition_residual(const PMStructure& pm, const ChiralOperators& ops, int n_samples,
                              std::uint64_t seed, double h = 1e-4);

struct ChiralGrid {
  std::size_t nt = 0;
  std::size_t ntau = 0;
  double ht = 0.01;
  double htau = 0.01;
};

/// u and v on the nodes (i, j) <-> (t, tau) = (i ht, j htau), stored i-major.
struct ChiralField {
  ChiralGrid grid;
  std::vector<CMatrix> u;
  std::vector<CMatrix> v;

  std::size_t index(std::size_t i, std::size_t j) const { return i * grid.ntau + j; }
  const CMatrix& u_at(std::size_t i, std::size_t j) const { return u[index(i, j)]; }
  const CMatrix& v_at(std::size_t i, std::size_t j) const { return v[index(i, j)]; }
  std::size_t n() const { return u.empty() ? 0 : u.front().rows(); }
};

/// A smooth matrix function of one coordinate, 1 + a (X0 + sin(s) X1 + sin(2s)^2 X2)
/// with seeded random X_i of unit Frobenius norm.
class NearIdentityProfile {
 public:
  NearIdentityProfile(std::size_t n, std::uint64_t seed, double amplitude);
  CMatrix operator()(double s) const;
  /// Samples at s = 0, h, ..., (count - 1) h.
  std::vector<CMatrix> sample(std::size_t count, double h) const;

 private:
  std::size_t n_;
  double amplitude_;
  CMatrix x0_, x1_, x2_;
};

/// Goursat data: u0[j] = u(0, tau_j), v0[i] = v(t_i, 0), so u0.size() = ntau and
/// v0.size() = nt. Each node (i+1, j+1) is obtained from (i, j+1) and (i+1, j)
/// by a Heun predictor-corrector step that couples the u update along t with
/// the v update along tau. Throws NonFinite when a field exceeds `blowup`.
/// With freeze_v the v field keeps its tau = 0 values (a decoupled control run).
ChiralField chiral_integrate(const ChiralOperators& ops, const std::vector<CMatrix>& u0,
                             const std::vector<CMatrix>& v0, double ht, double htau,
                             double blowup = 1e6, bool freeze_v = false);

struct LineDrift {
  /// max over tau-lines of the relative drift of tr(u^j) along t, j <= jmax
  double u = 0.0;
  /// same for tr(v^j) along tau
  double v = 0.0;
  double max() const { return u > v ? u : v; }
};

LineDrift line_invariant_drift(const ChiralField& field, int jmax);

/// Grid-max Frobenius norm of d_tau M - d_t L + [L, M] with L = S(u, 0)/lambda,
/// M = S(0, v)/lambda, central differences on interior nodes.
double curvature_residual(const ChiralField& field, const PMStructure& pm, cplx lambda,
                          const DressingOptions& opt = {});

struct RefinementRow {
  std::size_t nodes = 0;
  double h = 0.0;
  double drift = 0.0;
  /// 0 when the study skips the curvature check
  double curvature = 0.0;
  /// ||u_h - u_{h/2}|| at the far corner; 0 on the finest level
  double endpoint_change = 0.0;
};

struct RefinementStudy {
  std::vector<RefinementRow> rows;
  /// log2 ratios between the two finest levels
  double drift_order = 0.0;
  double curvature_order = 0.0;
  /// ||u_h - u_{h/2}|| / ||u_{h/2} - u_{h/4}|| over the three finest levels; about 4
  double endpoint_ratio = 0.0;
};

struct RefinementSetup {
  double length = 0.5;
  /// nodes per line on the coarsest level; level l uses (nodes - 1) 2^l + 1
  std::size_t nodes = 26;
  int levels = 3;
  int jmax = 3;
  bool curvature = true;
  cplx lambda = 0.2;
};

/// Runs the same Goursat data on nested square grids of halving step.
RefinementStudy refinement_study(const PMStructure& pm, const ChiralOperators& ops,
                                 const NearIdentityProfile& u_profile, const NearIdentityProfile& v_profile,
                                 const RefinementSetup& setup, const DressingOptions& opt = {});

/// Header of three uint64 (n, nt, ntau), then all u then all v matrices as
/// row-major (re, im) double pairs in node order.
void write_binary(const ChiralField& field, const std::string& path);
ChiralField read_binary(const std::string& path);

}  // namespace pencil

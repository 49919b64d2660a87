#pragma once

#include "mdforms/differential_ops.hpp"

namespace mdforms {

struct BettiNumbers {
  std::vector<int> unreduced;  // dimensions of the cohomology spaces, degree 0..n
  std::vector<int> reduced;    // with the constant inclusion (natural) or the
                               // top-degree integral (essential) factored out
};

/// Cohomology dimensions by exact integer rank of the unweighted derivative
/// matrices of the chosen variant.
BettiNumbers betti_numbers(const ForestGeometry& g, BcVariant bc);
BettiNumbers betti_numbers(const ForestComplex& complex);

/// M-orthonormal basis of the discrete harmonic space at degree k: the kernel
/// of D_k^T M_{k+1} D_k + M_k D_{k-1} M_{k-1}^{-1} D_{k-1}^T M_k. The kernel
/// dimension is cross-checked against the integer-rank cohomology dimension.
std::vector<MixedForm> harmonic_basis(const ForestGeometry& g, int k, BcVariant bc,
                                      WeightMode weights = WeightMode::Measure);

struct HodgeDecomposition {
  int k = -1;
  BcVariant bc_variant = BcVariant::Natural;
  MixedForm a_d;       // exact part, in the range of D_{k-1}
  MixedForm a_dstar;   // coexact part
  MixedForm a_0;       // harmonic part
  MixedForm b_d;       // potential at degree k-1
  MixedForm b_dstar;   // potential at degree k+1
};

HodgeDecomposition hodge_decompose(const ForestGeometry& g, const MixedForm& a, BcVariant bc,
                                   WeightMode weights = WeightMode::Measure);

/// Reusable factorizations for decomposing many forms at one degree.
class HodgeProjector {
 public:
  HodgeProjector(const ForestComplex& complex, int k);
  HodgeDecomposition decompose(const MixedForm& a) const;
  const std::vector<Vec>& harmonic_reduced() const { return harmonics_; }
  int harmonic_dimension() const { return static_cast<int>(harmonics_.size()); }

 private:
  const ForestComplex* c_;
  int k_;
  std::vector<Vec> harmonics_;  // reduced, M-orthonormal
  Eigen::CompleteOrthogonalDecomposition<Mat> exact_;    // M^(1/2) D_{k-1}
  Eigen::CompleteOrthogonalDecomposition<Mat> coexact_;  // M^(-1/2) D_k^T M_{k+1}
  bool has_exact_ = false, has_coexact_ = false;
};

/// Discrete Hodge Laplacian at degree k on the reduced DOF space.
Mat hodge_laplacian_dense(const ForestComplex& complex, int k);

/// Smallest nonzero generalized eigenvalue lambda of L_k v = lambda M_k v
/// gives the constant C = lambda^{-1/2} bounding ||a|| by C(||da|| + ||d*a||)
/// plus the harmonic norm.
double poincare_constant(const ForestGeometry& g, int k, BcVariant bc,
                         WeightMode weights = WeightMode::Measure);
double poincare_constant(const ForestComplex& complex, int k);

}  // namespace mdforms

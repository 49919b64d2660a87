#pragma once

#include "mdforms/cochain_spaces.hpp"

namespace mdforms {

/// Kept (unconstrained) DOF indices of one degree. The essential variant
/// removes every DOF contained in the Dirichlet closure of its root mesh.
std::vector<int> kept_dofs(const ForestGeometry& g, const DegreeLayout& layout, BcVariant bc);

/// Jump block: for each root i the row block is (-1)^(n-k) times the sum of
/// signed restrictions from the one-dimension-higher neighbor trees. Assembled
/// over the full (unconstrained) DOF spaces of degrees k and k+1.
SpMatI jump_operator(const ForestGeometry& g, const DegreeLayout& layout_k,
                     const DegreeLayout& layout_kp1);

/// Block-diagonal simplicial coboundary over the roots, full DOF spaces.
SpMatI local_derivative_blocks(const ForestGeometry& g, const DegreeLayout& layout_k,
                               const DegreeLayout& layout_kp1);

/// Assembled operators for one degree. Matrices live on the kept DOF spaces
/// of the chosen variant; kept index lists translate to full coordinates.
struct OperatorBundle {
  int k = -1;
  WeightMode weights = WeightMode::Measure;
  BcVariant bc = BcVariant::Natural;
  DegreeLayout layout_k, layout_kp1;
  std::vector<int> kept_k, kept_kp1;
  SpMatI d_local;  // reduced
  SpMatI jump;     // reduced
  SpMatI d_int;    // d_local + jump, exact integers
  SpMat d;         // double copy of d_int
  Vec mass_k, mass_kp1;  // reduced diagonals

  Vec restrict_k(const Vec& full) const;
  Vec restrict_kp1(const Vec& full) const;
  Vec embed_k(const Vec& reduced) const;
  Vec embed_kp1(const Vec& reduced) const;
};

OperatorBundle mixed_derivative(const ForestGeometry& g, int k,
                                WeightMode weights = WeightMode::Measure,
                                BcVariant bc = BcVariant::Natural);

/// Codifferential action M_k^{-1} D^T M_{k+1} b for a degree-(k+1) form,
/// returned over the full DOF space with constrained entries zero.
MixedForm codifferential_apply(const OperatorBundle& bundle, const MixedForm& b);

/// Discrete Stokes identity at degree n-1: the oriented integral of the
/// derivative against the signed Dirichlet boundary values.
std::pair<double, double> stokes_check(const ForestGeometry& g, const MixedForm& a);

/// Whole cochain complex for one weighting/variant choice.
struct ForestComplex {
  const ForestGeometry* geometry = nullptr;
  WeightMode weights = WeightMode::Measure;
  BcVariant bc = BcVariant::Natural;
  std::vector<DegreeLayout> layouts;   // degree 0..n
  std::vector<std::vector<int>> kept;  // degree 0..n
  std::vector<Vec> mass;               // reduced diagonals, degree 0..n
  std::vector<SpMatI> d_int;           // degree 0..n-1, reduced
  std::vector<SpMat> d;                // double copies
  std::vector<SpMatI> d_local_int;
  std::vector<SpMatI> jump_int;

  int n() const { return geometry->n; }
  int dof_count(int k) const { return static_cast<int>(kept[k].size()); }
  Vec restrict_vec(int k, const Vec& full) const;
  Vec embed(int k, const Vec& reduced) const;
  /// Codifferential of a reduced degree-k vector, reduced degree k-1 result.
  Vec codifferential(int k, const Vec& reduced) const;
  OperatorBundle bundle(int k) const;
};

ForestComplex build_complex(const ForestGeometry& g, WeightMode weights, BcVariant bc);

}  // namespace mdforms

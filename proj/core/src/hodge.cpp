#include "mdforms/hodge.hpp"

#include "mdforms/int_rank.hpp"

#include <algorithm>
#include <cmath>

namespace mdforms {

namespace {

Mat dense(const SpMat& m) { return Mat(m); }

Mat dense_int(const SpMatI& m) {
  Mat out = Mat::Zero(m.rows(), m.cols());
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMatI::InnerIterator it(m, c); it; ++it)
      out(it.row(), it.col()) = static_cast<double>(it.value());
  return out;
}

}  // namespace

BettiNumbers betti_numbers(const ForestComplex& complex) {
  const int n = complex.n();
  std::vector<int> rank(n, 0);
  for (int k = 0; k < n; ++k) rank[k] = integer_rank(complex.d_int[k]);

  BettiNumbers out;
  out.unreduced.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const int dofs = complex.dof_count(k);
    const int kernel = dofs - (k < n ? rank[k] : 0);
    const int image = k > 0 ? rank[k - 1] : 0;
    out.unreduced[k] = kernel - image;
  }
  out.reduced = out.unreduced;
  if (complex.bc == BcVariant::Natural) {
    if (complex.dof_count(0) > 0 && out.reduced[0] > 0) out.reduced[0] -= 1;
  } else {
    if (complex.dof_count(n) > 0 && out.reduced[n] > 0) out.reduced[n] -= 1;
  }
  return out;
}

BettiNumbers betti_numbers(const ForestGeometry& g, BcVariant bc) {
  return betti_numbers(build_complex(g, WeightMode::Unit, bc));
}

Mat hodge_laplacian_dense(const ForestComplex& complex, int k) {
  const int m = complex.dof_count(k);
  Mat L = Mat::Zero(m, m);
  if (k < complex.n()) {
    const Mat D = dense(complex.d[k]);
    L += D.transpose() * complex.mass[k + 1].asDiagonal() * D;
  }
  if (k > 0) {
    const Mat A = complex.mass[k].asDiagonal() * dense(complex.d[k - 1]);
    L += A * complex.mass[k - 1].cwiseInverse().asDiagonal() * A.transpose();
  }
  return L;
}

namespace {

// Solves the generalized symmetric eigenproblem L v = lambda M v and returns
// eigenvalues ascending with M-orthonormal eigenvectors.
std::pair<Vec, Mat> generalized_eig(const Mat& L, const Vec& mass) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver;
  Mat M = mass.asDiagonal();
  solver.compute(L, M);
  if (solver.info() != Eigen::Success) throw MdError("generalized eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

std::vector<Vec> harmonic_reduced(const ForestComplex& complex, int k, int expected_dim) {
  const int m = complex.dof_count(k);
  if (m == 0) {
    if (expected_dim != 0) throw MdError("harmonic dimension mismatch on an empty space");
    return {};
  }
  const Mat L = hodge_laplacian_dense(complex, k);
  auto [evals, evecs] = generalized_eig(L, complex.mass[k]);
  const double scale = std::max(1.0, std::abs(evals(evals.size() - 1)));
  if (expected_dim > m) throw MdError("harmonic dimension exceeds the space dimension");
  for (int i = 0; i < expected_dim; ++i)
    if (std::abs(evals(i)) > 1e-8 * scale)
      throw MdError("harmonic space smaller than the cohomology dimension");
  if (expected_dim < m && std::abs(evals(expected_dim)) < 1e-12 * scale)
    throw MdError("harmonic space larger than the cohomology dimension");
  std::vector<Vec> basis;
  basis.reserve(expected_dim);
  for (int i = 0; i < expected_dim; ++i) basis.push_back(evecs.col(i));
  return basis;
}

}  // namespace

std::vector<MixedForm> harmonic_basis(const ForestGeometry& g, int k, BcVariant bc,
                                      WeightMode weights) {
  const ForestComplex complex = build_complex(g, weights, bc);
  const BettiNumbers betti = betti_numbers(complex);
  const auto reduced = harmonic_reduced(complex, k, betti.unreduced[k]);
  std::vector<MixedForm> out;
  out.reserve(reduced.size());
  for (const auto& v : reduced) out.push_back(MixedForm{k, complex.embed(k, v)});
  return out;
}

HodgeProjector::HodgeProjector(const ForestComplex& complex, int k) : c_(&complex), k_(k) {
  const BettiNumbers betti = betti_numbers(complex);
  harmonics_ = harmonic_reduced(complex, k, betti.unreduced[k]);
  const Vec sqrt_m = c_->mass[k].cwiseSqrt();
  if (k > 0 && c_->dof_count(k - 1) > 0 && c_->dof_count(k) > 0) {
    Mat A = sqrt_m.asDiagonal() * dense(c_->d[k - 1]);
    exact_.compute(A);
    has_exact_ = true;
  }
  if (k < c_->n() && c_->dof_count(k + 1) > 0 && c_->dof_count(k) > 0) {
    Mat A = sqrt_m.cwiseInverse().asDiagonal() * dense(c_->d[k]).transpose() *
            Mat(c_->mass[k + 1].asDiagonal());
    coexact_.compute(A);
    has_coexact_ = true;
  }
}

HodgeDecomposition HodgeProjector::decompose(const MixedForm& a) const {
  if (a.k != k_) throw MdError("degree mismatch in decomposition");
  const ForestComplex& c = *c_;
  const int n = c.n();
  HodgeDecomposition out;
  out.k = k_;
  out.bc_variant = c.bc;

  const Vec ar = c.restrict_vec(k_, a.coefficients);
  const Vec sqrt_m = c.mass[k_].cwiseSqrt();

  Vec bd = Vec::Zero(k_ > 0 ? c.dof_count(k_ - 1) : 0);
  Vec ad = Vec::Zero(ar.size());
  if (has_exact_) {
    bd = exact_.solve((sqrt_m.cwiseProduct(ar)).eval());
    ad = c.d[k_ - 1] * bd;
  }

  Vec a0 = Vec::Zero(ar.size());
  for (const auto& h : harmonics_) a0 += h.dot(c.mass[k_].cwiseProduct(ar)) * h;

  const Vec adstar_r = ar - ad - a0;
  Vec bdstar = Vec::Zero(k_ < n ? c.dof_count(k_ + 1) : 0);
  if (has_coexact_) bdstar = coexact_.solve((sqrt_m.cwiseProduct(adstar_r)).eval());

  out.a_d = MixedForm{k_, c.embed(k_, ad)};
  out.a_0 = MixedForm{k_, c.embed(k_, a0)};
  out.a_dstar = MixedForm{k_, a.coefficients - out.a_d.coefficients - out.a_0.coefficients};
  out.b_d = MixedForm{k_ - 1, k_ > 0 ? c.embed(k_ - 1, bd) : Vec::Zero(0)};
  out.b_dstar = MixedForm{k_ + 1, k_ < n ? c.embed(k_ + 1, bdstar) : Vec::Zero(0)};
  return out;
}

HodgeDecomposition hodge_decompose(const ForestGeometry& g, const MixedForm& a, BcVariant bc,
                                   WeightMode weights) {
  const ForestComplex complex = build_complex(g, weights, bc);
  return HodgeProjector(complex, a.k).decompose(a);
}

double poincare_constant(const ForestComplex& complex, int k) {
  const int m = complex.dof_count(k);
  if (m == 0) throw MdError("no DOFs at degree " + std::to_string(k));
  const BettiNumbers betti = betti_numbers(complex);
  const int harmonic_dim = betti.unreduced[k];
  if (harmonic_dim >= m) throw MdError("no nonzero spectrum at degree " + std::to_string(k));
  const Mat L = hodge_laplacian_dense(complex, k);
  auto [evals, evecs] = generalized_eig(L, complex.mass[k]);
  const double lambda = evals(harmonic_dim);
  if (!(lambda > 0.0)) throw MdError("nonpositive spectral gap in the Hodge Laplacian");
  return 1.0 / std::sqrt(lambda);
}

double poincare_constant(const ForestGeometry& g, int k, BcVariant bc, WeightMode weights) {
  return poincare_constant(build_complex(g, weights, bc), k);
}

}  // namespace mdforms

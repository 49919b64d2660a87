#include "mdforms/differential_ops.hpp"

#include <algorithm>

namespace mdforms {

namespace {

SpMatI reduce_matrix(const SpMatI& full, const std::vector<int>& kept_rows,
                     const std::vector<int>& kept_cols) {
  std::vector<int> row_of(full.rows(), -1), col_of(full.cols(), -1);
  for (int i = 0; i < static_cast<int>(kept_rows.size()); ++i) row_of[kept_rows[i]] = i;
  for (int i = 0; i < static_cast<int>(kept_cols.size()); ++i) col_of[kept_cols[i]] = i;
  std::vector<Eigen::Triplet<std::int64_t>> entries;
  entries.reserve(full.nonZeros());
  for (int c = 0; c < full.outerSize(); ++c)
    for (SpMatI::InnerIterator it(full, c); it; ++it)
      if (row_of[it.row()] >= 0 && col_of[it.col()] >= 0)
        entries.emplace_back(row_of[it.row()], col_of[it.col()], it.value());
  SpMatI out(static_cast<int>(kept_rows.size()), static_cast<int>(kept_cols.size()));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Vec gather(const Vec& full, const std::vector<int>& kept) {
  Vec out(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(kept[i]);
  return out;
}

Vec scatter(const Vec& reduced, const std::vector<int>& kept, int full_size) {
  Vec out = Vec::Zero(full_size);
  for (std::size_t i = 0; i < kept.size(); ++i) out(kept[i]) = reduced(static_cast<Eigen::Index>(i));
  return out;
}

SpMat to_double(const SpMatI& m) {
  SpMat out(m.rows(), m.cols());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(m.nonZeros());
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMatI::InnerIterator it(m, c); it; ++it)
      entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           static_cast<double>(it.value()));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

}  // namespace

std::vector<int> kept_dofs(const ForestGeometry& g, const DegreeLayout& layout, BcVariant bc) {
  std::vector<int> kept;
  kept.reserve(layout.total);
  if (bc == BcVariant::Natural) {
    for (int i = 0; i < layout.total; ++i) kept.push_back(i);
    return kept;
  }
  for (std::size_t ri = 0; ri < layout.roots.size(); ++ri) {
    if (layout.counts[ri] == 0) continue;
    const int p = layout.local_degree[ri];
    const MeshCache& cache = g.root_cache(layout.roots[ri]);
    for (int si = 0; si < layout.counts[ri]; ++si) {
      const bool constrained = p < static_cast<int>(cache.dirichlet_closure.size()) &&
                               cache.dirichlet_closure[p][si] != 0;
      if (!constrained) kept.push_back(layout.offsets[ri] + si);
    }
  }
  return kept;
}

SpMatI local_derivative_blocks(const ForestGeometry& g, const DegreeLayout& layout_k,
                               const DegreeLayout& layout_kp1) {
  std::vector<Eigen::Triplet<std::int64_t>> entries;
  for (std::size_t ri = 0; ri < layout_k.roots.size(); ++ri) {
    const NodeId i = layout_k.roots[ri];
    const int p = layout_k.local_degree[ri];
    const SimplicialMesh& mesh = g.root_mesh(i);
    if (p < 0 || p >= mesh.dim) continue;
    const SpMatI d = local_exterior_derivative(mesh, g.root_cache(i), p);
    const int row0 = layout_kp1.offsets[ri];
    const int col0 = layout_k.offsets[ri];
    for (int c = 0; c < d.outerSize(); ++c)
      for (SpMatI::InnerIterator it(d, c); it; ++it)
        entries.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                             it.value());
  }
  SpMatI out(layout_kp1.total, layout_k.total);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SpMatI jump_operator(const ForestGeometry& g, const DegreeLayout& layout_k,
                     const DegreeLayout& layout_kp1) {
  if (layout_kp1.k != layout_k.k + 1) throw MdError("jump operator needs consecutive degrees");
  const std::int64_t prefactor = ((g.n - layout_k.k) % 2 == 0) ? 1 : -1;
  std::vector<Eigen::Triplet<std::int64_t>> entries;
  for (std::size_t ri = 0; ri < layout_kp1.roots.size(); ++ri) {
    const NodeId i = layout_kp1.roots[ri];
    const int p = layout_kp1.local_degree[ri];
    if (layout_kp1.counts[ri] == 0) continue;
    auto git = g.gamma_inverse.find(i);
    if (git == g.gamma_inverse.end()) continue;
    const MeshCache& icache = g.root_cache(i);
    const SimplicialMesh& imesh = g.root_mesh(i);
    for (const auto& hop : git->second) {
      const NodeId source_root = g.node(hop.node).tree_root;
      const int rs = layout_k.root_position(source_root);
      if (layout_k.counts[rs] == 0) continue;
      if (layout_k.local_degree[rs] != p)
        throw MdError("degree bookkeeping mismatch in jump assembly");
      const auto& comp = g.composite_map.at(hop.node);
      const MeshCache& scache = g.root_cache(source_root);
      for (int si = 0; si < imesh.count(p); ++si) {
        const auto& s = imesh.simplices[p][si];
        std::vector<int> img(s.size());
        for (std::size_t q = 0; q < s.size(); ++q) img[q] = comp[s[q]];
        const int parity = permutation_parity(img);
        std::sort(img.begin(), img.end());
        const int ti = scache.find(p, img);
        if (ti < 0)
          throw MdError("branch " + std::to_string(hop.node) + ": identification is not simplicial");
        entries.emplace_back(layout_kp1.offsets[ri] + si, layout_k.offsets[rs] + ti,
                             prefactor * hop.sign * parity);
      }
    }
  }
  SpMatI out(layout_kp1.total, layout_k.total);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Vec OperatorBundle::restrict_k(const Vec& full) const { return gather(full, kept_k); }
Vec OperatorBundle::restrict_kp1(const Vec& full) const { return gather(full, kept_kp1); }
Vec OperatorBundle::embed_k(const Vec& reduced) const { return scatter(reduced, kept_k, layout_k.total); }
Vec OperatorBundle::embed_kp1(const Vec& reduced) const { return scatter(reduced, kept_kp1, layout_kp1.total); }

OperatorBundle mixed_derivative(const ForestGeometry& g, int k, WeightMode weights, BcVariant bc) {
  if (k < 0 || k >= g.n)
    throw MdError("mixed derivative degree " + std::to_string(k) + " out of range [0," +
                  std::to_string(g.n - 1) + ")");
  OperatorBundle b;
  b.k = k;
  b.weights = weights;
  b.bc = bc;
  b.layout_k = degree_layout(g, k);
  b.layout_kp1 = degree_layout(g, k + 1);
  b.kept_k = kept_dofs(g, b.layout_k, bc);
  b.kept_kp1 = kept_dofs(g, b.layout_kp1, bc);
  const SpMatI d_local_full = local_derivative_blocks(g, b.layout_k, b.layout_kp1);
  const SpMatI jump_full = jump_operator(g, b.layout_k, b.layout_kp1);
  b.d_local = reduce_matrix(d_local_full, b.kept_kp1, b.kept_k);
  b.jump = reduce_matrix(jump_full, b.kept_kp1, b.kept_k);
  b.d_int = b.d_local + b.jump;
  b.d_int.prune([](int, int, std::int64_t v) { return v != 0; });
  b.d = to_double(b.d_int);
  b.mass_k = gather(mass_matrix_diagonal(g, b.layout_k, weights), b.kept_k);
  b.mass_kp1 = gather(mass_matrix_diagonal(g, b.layout_kp1, weights), b.kept_kp1);
  return b;
}

MixedForm codifferential_apply(const OperatorBundle& bundle, const MixedForm& b) {
  if (b.k != bundle.k + 1) throw MdError("codifferential expects a degree-(k+1) form");
  if (b.coefficients.size() != bundle.layout_kp1.total)
    throw MdError("coefficient length mismatch in codifferential");
  const Vec br = bundle.restrict_kp1(b.coefficients);
  const Vec weighted = bundle.mass_kp1.cwiseProduct(br);
  const Vec res = (bundle.d.transpose() * weighted).cwiseQuotient(bundle.mass_k);
  return MixedForm{bundle.k, bundle.embed_k(res)};
}

std::pair<double, double> stokes_check(const ForestGeometry& g, const MixedForm& a) {
  if (a.k != g.n - 1) throw MdError("Stokes check expects a degree-(n-1) form");
  const DegreeLayout lk = degree_layout(g, g.n - 1);
  const DegreeLayout ln = degree_layout(g, g.n);
  if (a.coefficients.size() != lk.total) throw MdError("coefficient length mismatch");
  const SpMatI d_full = local_derivative_blocks(g, lk, ln);
  const SpMatI j_full = jump_operator(g, lk, ln);
  Vec da(ln.total);
  {
    Vec tmp = Vec::Zero(ln.total);
    for (int c = 0; c < d_full.outerSize(); ++c)
      for (SpMatI::InnerIterator it(d_full, c); it; ++it)
        tmp(it.row()) += static_cast<double>(it.value()) * a.coefficients(it.col());
    for (int c = 0; c < j_full.outerSize(); ++c)
      for (SpMatI::InnerIterator it(j_full, c); it; ++it)
        tmp(it.row()) += static_cast<double>(it.value()) * a.coefficients(it.col());
    da = tmp;
  }

  double lhs = 0.0;
  for (std::size_t ri = 0; ri < ln.roots.size(); ++ri) {
    const MeshCache& cache = g.root_cache(ln.roots[ri]);
    for (int t = 0; t < ln.counts[ri]; ++t)
      lhs += cache.top_orientation[t] * da(ln.offsets[ri] + t);
  }

  double rhs = 0.0;
  for (std::size_t ri = 0; ri < lk.roots.size(); ++ri) {
    if (lk.counts[ri] == 0) continue;
    const SimplicialMesh& mesh = g.root_mesh(lk.roots[ri]);
    if (lk.local_degree[ri] != mesh.dim - 1) continue;
    const MeshCache& cache = g.root_cache(lk.roots[ri]);
    for (const auto& b : cache.boundary)
      if (b.label.dirichlet) rhs += b.induced_sign * a.coefficients(lk.offsets[ri] + b.facet);
  }
  return {lhs, rhs};
}

Vec ForestComplex::restrict_vec(int k, const Vec& full) const { return gather(full, kept[k]); }

Vec ForestComplex::embed(int k, const Vec& reduced) const {
  return scatter(reduced, kept[k], layouts[k].total);
}

Vec ForestComplex::codifferential(int k, const Vec& reduced) const {
  if (k <= 0) return Vec::Zero(0);
  return (d[k - 1].transpose() * mass[k].cwiseProduct(reduced)).cwiseQuotient(mass[k - 1]);
}

OperatorBundle ForestComplex::bundle(int k) const {
  OperatorBundle b;
  b.k = k;
  b.weights = weights;
  b.bc = bc;
  b.layout_k = layouts[k];
  b.layout_kp1 = layouts[k + 1];
  b.kept_k = kept[k];
  b.kept_kp1 = kept[k + 1];
  b.d_local = d_local_int[k];
  b.jump = jump_int[k];
  b.d_int = d_int[k];
  b.d = d[k];
  b.mass_k = mass[k];
  b.mass_kp1 = mass[k + 1];
  return b;
}

ForestComplex build_complex(const ForestGeometry& g, WeightMode weights, BcVariant bc) {
  ForestComplex c;
  c.geometry = &g;
  c.weights = weights;
  c.bc = bc;
  const int n = g.n;
  c.layouts.reserve(n + 1);
  for (int k = 0; k <= n; ++k) c.layouts.push_back(degree_layout(g, k));
  for (int k = 0; k <= n; ++k) c.kept.push_back(kept_dofs(g, c.layouts[k], bc));
  for (int k = 0; k <= n; ++k)
    c.mass.push_back(gather(mass_matrix_diagonal(g, c.layouts[k], weights), c.kept[k]));
  for (int k = 0; k < n; ++k) {
    const SpMatI dl = local_derivative_blocks(g, c.layouts[k], c.layouts[k + 1]);
    const SpMatI jp = jump_operator(g, c.layouts[k], c.layouts[k + 1]);
    c.d_local_int.push_back(reduce_matrix(dl, c.kept[k + 1], c.kept[k]));
    c.jump_int.push_back(reduce_matrix(jp, c.kept[k + 1], c.kept[k]));
    SpMatI sum = c.d_local_int.back() + c.jump_int.back();
    sum.prune([](int, int, std::int64_t v) { return v != 0; });
    c.d_int.push_back(sum);
    c.d.push_back(to_double(sum));
  }
  return c;
}

}  // namespace mdforms

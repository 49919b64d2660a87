#include "mdforms/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace mdforms {

int permutation_parity(const std::vector<int>& values) {
  int inversions = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] > values[j]) ++inversions;
  return (inversions % 2 == 0) ? 1 : -1;
}

double simplex_measure(const SimplicialMesh& mesh, const std::vector<int>& simplex) {
  const int p = static_cast<int>(simplex.size()) - 1;
  if (p == 0) return 1.0;
  const int d = mesh.dim;
  Mat edges(d, p);
  const auto& v0 = mesh.vertices[simplex[0]];
  for (int c = 0; c < p; ++c) {
    const auto& vc = mesh.vertices[simplex[c + 1]];
    for (int r = 0; r < d; ++r) edges(r, c) = vc[r] - v0[r];
  }
  double gram = (edges.transpose() * edges).determinant();
  if (gram < 0.0) gram = 0.0;
  double vol = std::sqrt(gram);
  for (int f = 2; f <= p; ++f) vol /= f;
  return vol;
}

namespace {

int top_orientation_sign(const SimplicialMesh& mesh, const std::vector<int>& top) {
  const int d = mesh.dim;
  if (d == 0) return 1;
  Mat frame(d, d);
  const auto& v0 = mesh.vertices[top[0]];
  for (int c = 0; c < d; ++c) {
    const auto& vc = mesh.vertices[top[c + 1]];
    for (int r = 0; r < d; ++r) frame(r, c) = vc[r] - v0[r];
  }
  const double det = frame.determinant();
  if (det > 0.0) return 1;
  if (det < 0.0) return -1;
  return 0;
}

}  // namespace

MeshCache build_mesh_cache(const SimplicialMesh& mesh) {
  MeshCache cache;
  cache.mesh = &mesh;
  const int d = mesh.dim;
  if (static_cast<int>(mesh.simplices.size()) != d + 1)
    throw ParseError("mesh has " + std::to_string(mesh.simplices.size()) +
                     " simplex degree lists, expected " + std::to_string(d + 1));

  cache.index.resize(d + 1);
  cache.measure.resize(d + 1);
  for (int p = 0; p <= d; ++p) {
    const auto& list = mesh.simplices[p];
    cache.measure[p].resize(static_cast<Eigen::Index>(list.size()));
    for (int i = 0; i < static_cast<int>(list.size()); ++i) {
      const auto& s = list[i];
      if (static_cast<int>(s.size()) != p + 1)
        throw ParseError("non-simplicial cell: degree-" + std::to_string(p) +
                         " entry with " + std::to_string(s.size()) + " vertices");
      for (int v : s)
        if (v < 0 || v >= mesh.num_vertices())
          throw ParseError("simplex references unknown vertex " + std::to_string(v));
      cache.index[p].emplace(s, i);
      cache.measure[p](i) = simplex_measure(mesh, s);
    }
  }

  cache.top_orientation.resize(mesh.count(d));
  for (int i = 0; i < mesh.count(d); ++i)
    cache.top_orientation[i] = top_orientation_sign(mesh, mesh.simplices[d][i]);

  // Facet -> incident top simplices. A facet on the boundary has exactly one.
  if (d >= 1) {
    const auto& facets = mesh.simplices[d - 1];
    std::vector<std::vector<std::pair<int, int>>> facet_tops(facets.size());
    for (int t = 0; t < mesh.count(d); ++t) {
      const auto& top = mesh.simplices[d][t];
      std::vector<int> face(top.size() - 1);
      for (int r = 0; r <= d; ++r) {
        int idx = 0;
        for (int j = 0; j <= d; ++j)
          if (j != r) face[idx++] = top[j];
        const int f = cache.find(d - 1, face);
        if (f >= 0) facet_tops[f].emplace_back(t, (r % 2 == 0) ? 1 : -1);
      }
    }

    std::unordered_map<std::vector<int>, FacetLabel, TupleHash> labels;
    for (const auto& [facet, label] : mesh.boundary_labels) labels.emplace(facet, label);

    cache.boundary_of_facet.assign(facets.size(), -1);
    for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
      if (facet_tops[f].size() != 1) continue;
      MeshCache::BoundaryFacet b;
      b.facet = f;
      b.top = facet_tops[f][0].first;
      b.induced_sign = facet_tops[f][0].second * cache.top_orientation[b.top];
      auto it = labels.find(facets[f]);
      if (it != labels.end()) b.label = it->second;
      cache.boundary_of_facet[f] = static_cast<int>(cache.boundary.size());
      cache.boundary.push_back(b);
    }
  }

  // Closure masks: a p-simplex is in the closure of a facet when its vertex
  // set is a subset of the facet's.
  cache.dirichlet_closure.resize(d + 1);
  cache.boundary_closure.resize(d + 1);
  for (int p = 0; p <= d; ++p) {
    cache.dirichlet_closure[p].assign(mesh.count(p), 0);
    cache.boundary_closure[p].assign(mesh.count(p), 0);
  }
  if (d >= 1) {
    for (const auto& b : cache.boundary) {
      const auto& fvtx = mesh.simplices[d - 1][b.facet];
      const int fp = d - 1;
      // enumerate all sub-tuples of the facet
      const int m = fp + 1;
      for (int mask = 1; mask < (1 << m); ++mask) {
        std::vector<int> sub;
        for (int j = 0; j < m; ++j)
          if (mask & (1 << j)) sub.push_back(fvtx[j]);
        const int p = static_cast<int>(sub.size()) - 1;
        const int idx = cache.find(p, sub);
        if (idx < 0) continue;
        cache.boundary_closure[p][idx] = 1;
        if (b.label.dirichlet) cache.dirichlet_closure[p][idx] = 1;
      }
    }
  }
  return cache;
}

SpMatI local_exterior_derivative(const SimplicialMesh& mesh, const MeshCache& cache, int p) {
  if (p < 0 || p >= mesh.dim)
    throw MdError("exterior derivative degree " + std::to_string(p) +
                  " out of range for mesh of dimension " + std::to_string(mesh.dim));
  const auto& rows = mesh.simplices[p + 1];
  SpMatI d(static_cast<int>(rows.size()), mesh.count(p));
  std::vector<Eigen::Triplet<std::int64_t>> entries;
  entries.reserve(rows.size() * (p + 2));
  std::vector<int> face(p + 1);
  for (int t = 0; t < static_cast<int>(rows.size()); ++t) {
    const auto& tau = rows[t];
    for (int r = 0; r <= p + 1; ++r) {
      int idx = 0;
      for (int j = 0; j <= p + 1; ++j)
        if (j != r) face[idx++] = tau[j];
      const int s = cache.find(p, face);
      if (s < 0)
        throw MdError("mesh is not closed under faces at degree " + std::to_string(p));
      entries.emplace_back(t, s, (r % 2 == 0) ? 1 : -1);
    }
  }
  d.setFromTriplets(entries.begin(), entries.end());
  return d;
}

}  // namespace mdforms

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mdforms {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatI = Eigen::SparseMatrix<std::int64_t>;
using NodeId = int;

struct MdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : MdError {
  using MdError::MdError;
};

/// Boundary facet label: either part of the fixed (Dirichlet) boundary or
/// identified with a branch node.
struct FacetLabel {
  bool dirichlet = false;
  NodeId branch = -1;
};

/// Simplicial mesh in reference coordinates. Simplices are stored per degree
/// as sorted vertex tuples; list order fixes the DOF order.
struct SimplicialMesh {
  int dim = 0;
  std::vector<std::vector<double>> vertices;
  // simplices[p] is the list of p-simplices, each a sorted vertex tuple.
  std::vector<std::vector<std::vector<int>>> simplices;
  std::vector<std::pair<std::vector<int>, FacetLabel>> boundary_labels;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int count(int p) const {
    if (p < 0 || p > dim) return 0;
    return static_cast<int>(simplices[p].size());
  }
};

struct TupleHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

/// Derived lookup tables for one mesh: simplex indices, measures, orientation
/// signs of top simplices relative to the reference coordinates, boundary
/// facet incidence, and Dirichlet closure masks.
struct MeshCache {
  const SimplicialMesh* mesh = nullptr;

  // key -> index, one map per degree
  std::vector<std::unordered_map<std::vector<int>, int, TupleHash>> index;
  // Euclidean p-simplex measures (measure of a vertex is 1)
  std::vector<Vec> measure;
  // sign of det(frame) per top simplex; +1 for dim 0
  std::vector<int> top_orientation;

  struct BoundaryFacet {
    int facet = -1;          // index into simplices[dim-1]
    int top = -1;            // the unique incident top simplex
    int induced_sign = 0;    // orientation induced on the facet by the top
    FacetLabel label;
  };
  std::vector<BoundaryFacet> boundary;          // one entry per boundary facet
  std::vector<int> boundary_of_facet;           // facet idx -> boundary idx or -1
  // dirichlet_closure[p][i]: p-simplex i is contained in a Dirichlet facet
  std::vector<std::vector<char>> dirichlet_closure;
  // boundary_closure[p][i]: p-simplex i is contained in some boundary facet
  std::vector<std::vector<char>> boundary_closure;

  int find(int p, const std::vector<int>& key) const {
    if (p < 0 || p >= static_cast<int>(index.size())) return -1;
    auto it = index[p].find(key);
    return it == index[p].end() ? -1 : it->second;
  }
};

/// Builds the cache; throws ParseError on structurally unusable input
/// (non-simplicial tuples, out-of-range vertices). Softer defects are left to
/// validate_conforming.
MeshCache build_mesh_cache(const SimplicialMesh& mesh);

/// Euclidean measure of the p-simplex with the given vertex indices.
double simplex_measure(const SimplicialMesh& mesh, const std::vector<int>& simplex);

/// Signed incidence (coboundary) matrix mapping p-cochains to (p+1)-cochains.
/// Entry (tau, sigma) = (-1)^r when sigma equals tau with its r-th vertex
/// removed, under the sorted-vertex orientation convention.
SpMatI local_exterior_derivative(const SimplicialMesh& mesh, const MeshCache& cache, int p);

/// Sign of the permutation sorting `values` (distinct entries assumed).
int permutation_parity(const std::vector<int>& values);

}  // namespace mdforms

#include "mdforms/cochain_spaces.hpp"

#include "mdforms/json_canonical.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mdforms {

int DegreeLayout::root_position(NodeId root) const {
  auto it = std::lower_bound(roots.begin(), roots.end(), root);
  if (it == roots.end() || *it != root)
    throw MdError("node " + std::to_string(root) + " is not a root of this layout");
  return static_cast<int>(it - roots.begin());
}

DegreeLayout degree_layout(const ForestGeometry& g, int k) {
  if (k < 0 || k > g.n)
    throw MdError("degree " + std::to_string(k) + " out of range [0," + std::to_string(g.n) + "]");
  DegreeLayout layout;
  layout.k = k;
  layout.n = g.n;
  layout.roots = g.roots;
  layout.local_degree.reserve(g.roots.size());
  layout.counts.reserve(g.roots.size());
  layout.offsets.reserve(g.roots.size());
  for (NodeId i : g.roots) {
    const int d = g.node(i).dim;
    const int p = k - (g.n - d);
    const SimplicialMesh& mesh = g.root_mesh(i);
    const int count = (p >= 0 && p <= d) ? mesh.count(p) : 0;
    layout.local_degree.push_back(p);
    layout.offsets.push_back(layout.total);
    layout.counts.push_back(count);
    layout.total += count;
  }
  return layout;
}

SpMatI restriction_operator(const ForestGeometry& g, const DegreeLayout& layout, NodeId j) {
  const NodeRecord& rec = g.node(j);
  if (rec.is_root) {
    const int c = layout.count_of(j);
    SpMatI r(c, c);
    r.setIdentity();
    return r;
  }
  const NodeId tree = rec.tree_root;
  const int p = layout.local_degree_of(tree);
  const SimplicialMesh& source = g.mesh_of(j);
  const SimplicialMesh& target = g.root_mesh(tree);
  const MeshCache& tcache = g.root_cache(tree);
  const int cols = (p >= 0 && p <= target.dim) ? target.count(p) : 0;
  if (p < 0 || p > source.dim) return SpMatI(0, cols);

  auto cit = g.composite_map.find(j);
  if (cit == g.composite_map.end() || cit->second.empty())
    throw MdError("branch " + std::to_string(j) + " has no usable identification");
  const auto& comp = cit->second;

  SpMatI r(source.count(p), cols);
  std::vector<Eigen::Triplet<std::int64_t>> entries;
  entries.reserve(source.count(p));
  for (int si = 0; si < source.count(p); ++si) {
    const auto& s = source.simplices[p][si];
    std::vector<int> img(s.size());
    for (std::size_t q = 0; q < s.size(); ++q) img[q] = comp[s[q]];
    const int parity = permutation_parity(img);
    std::sort(img.begin(), img.end());
    const int ti = tcache.find(p, img);
    if (ti < 0)
      throw MdError("branch " + std::to_string(j) + ": identification is not simplicial at degree " +
                    std::to_string(p));
    entries.emplace_back(si, ti, parity);
  }
  r.setFromTriplets(entries.begin(), entries.end());
  return r;
}

Vec mass_matrix_diagonal(const ForestGeometry& g, const DegreeLayout& layout, WeightMode weights) {
  Vec diag = Vec::Zero(layout.total);
  for (std::size_t ri = 0; ri < layout.roots.size(); ++ri) {
    const NodeId i = layout.roots[ri];
    const int p = layout.local_degree[ri];
    if (layout.counts[ri] == 0) continue;
    const MeshCache& cache = g.root_cache(i);
    for (int si = 0; si < layout.counts[ri]; ++si)
      diag(layout.offsets[ri] + si) +=
          weights == WeightMode::Measure ? cache.measure[p](si) : 1.0;
  }
  // branch contributions land on their tree root's block
  for (const auto& [id, rec] : g.nodes) {
    if (rec.is_root) continue;
    const int ri = layout.root_position(rec.tree_root);
    const int p = layout.local_degree[ri];
    const SimplicialMesh& source = g.mesh_of(id);
    if (p < 0 || p > source.dim || layout.counts[ri] == 0) continue;
    auto cit = g.composite_map.find(id);
    if (cit == g.composite_map.end() || cit->second.empty())
      throw MdError("branch " + std::to_string(id) + " has no usable identification");
    const auto& comp = cit->second;
    const MeshCache& scache = g.cache_of(id);
    const MeshCache& tcache = g.root_cache(rec.tree_root);
    for (int si = 0; si < source.count(p); ++si) {
      const auto& s = source.simplices[p][si];
      std::vector<int> img(s.size());
      for (std::size_t q = 0; q < s.size(); ++q) img[q] = comp[s[q]];
      std::sort(img.begin(), img.end());
      const int ti = tcache.find(p, img);
      if (ti < 0)
        throw MdError("branch " + std::to_string(id) + ": identification is not simplicial");
      diag(layout.offsets[ri] + ti) +=
          weights == WeightMode::Measure ? scache.measure[p](si) : 1.0;
    }
  }
  return diag;
}

SpMat MassMatrix::matrix() const {
  SpMat m(diagonal.size(), diagonal.size());
  for (Eigen::Index i = 0; i < diagonal.size(); ++i) m.insert(i, i) = diagonal(i);
  m.makeCompressed();
  return m;
}

MassMatrix mass_matrix(const ForestGeometry& g, const DegreeLayout& layout, WeightMode weights) {
  return MassMatrix{layout.k, weights, mass_matrix_diagonal(g, layout, weights)};
}

double inner_product(const MixedForm& a, const MixedForm& b, const MassMatrix& m) {
  if (a.k != b.k || a.k != m.k)
    throw MdError("degree mismatch in inner product");
  if (a.coefficients.size() != m.diagonal.size() || b.coefficients.size() != m.diagonal.size())
    throw MdError("coefficient length mismatch in inner product");
  return a.coefficients.dot(m.diagonal.cwiseProduct(b.coefficients));
}

double norm_l2(const MixedForm& a, const MassMatrix& m) {
  return std::sqrt(std::max(0.0, inner_product(a, a, m)));
}

void write_mixed_form_csv(const MixedForm& a, const std::string& geometry_hash,
                          const std::string& csv_path, const std::string& sidecar_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw MdError("cannot write '" + csv_path + "'");
  csv << "dof_index,value\n";
  for (Eigen::Index i = 0; i < a.coefficients.size(); ++i)
    csv << i << "," << format_double(a.coefficients(i)) << "\n";
  nlohmann::json side;
  side["k"] = a.k;
  side["geometry_hash"] = geometry_hash;
  std::ofstream js(sidecar_path, std::ios::binary);
  if (!js) throw MdError("cannot write '" + sidecar_path + "'");
  js << canonical_json(side.dump()) << "\n";
}

MixedForm read_mixed_form_csv(const std::string& csv_path, const std::string& sidecar_path,
                              const std::string& expected_geometry_hash) {
  std::ifstream js(sidecar_path, std::ios::binary);
  if (!js) throw ParseError("cannot open '" + sidecar_path + "'");
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("sidecar: ") + e.what());
  }
  MixedForm out;
  out.k = side.at("k").get<int>();
  const std::string hash = side.at("geometry_hash").get<std::string>();
  if (!expected_geometry_hash.empty() && hash != expected_geometry_hash)
    throw ParseError("field was exported for a different geometry (hash mismatch)");

  std::ifstream csv(csv_path, std::ios::binary);
  if (!csv) throw ParseError("cannot open '" + csv_path + "'");
  std::string line;
  if (!std::getline(csv, line) || line.rfind("dof_index,value", 0) != 0)
    throw ParseError(csv_path + ": expected header 'dof_index,value'");
  std::vector<double> values;
  int lineno = 1;
  while (std::getline(csv, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string idx, val;
    if (!std::getline(ss, idx, ',') || !std::getline(ss, val))
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": malformed row");
    const long i = std::stol(idx);
    if (i != static_cast<long>(values.size()))
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": rows must be dense and ordered");
    values.push_back(std::stod(val));
  }
  out.coefficients = Eigen::Map<Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

}  // namespace mdforms

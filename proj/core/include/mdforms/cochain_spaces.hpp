#pragma once

#include "mdforms/forest_geometry.hpp"

#include <string>
#include <vector>

namespace mdforms {

enum class WeightMode { Measure, Unit };
enum class BcVariant { Natural, Essential };

inline const char* to_string(WeightMode w) { return w == WeightMode::Measure ? "measure" : "unit"; }
inline const char* to_string(BcVariant b) { return b == BcVariant::Natural ? "natural" : "essential"; }

/// DOF layout for global degree k: every root of dimension d carries cochains
/// of local degree k - (n - d); degrees outside [0, d] contribute nothing.
struct DegreeLayout {
  int k = -1;
  int n = 0;
  std::vector<NodeId> roots;          // sorted
  std::vector<int> local_degree;      // per root, may be out of range
  std::vector<int> counts;            // per root, 0 when void
  std::vector<int> offsets;           // per root, prefix sums
  int total = 0;

  int root_position(NodeId root) const;
  int local_degree_of(NodeId root) const { return local_degree[root_position(root)]; }
  int offset_of(NodeId root) const { return offsets[root_position(root)]; }
  int count_of(NodeId root) const { return counts[root_position(root)]; }
};

DegreeLayout degree_layout(const ForestGeometry& g, int k);

/// Coefficient vector over the root DOFs of one degree. Branch components are
/// never stored; they are signed traces of the root values.
struct MixedForm {
  int k = -1;
  Vec coefficients;
};

/// Signed 0/±1 selection matrix taking root cochains of branch j's tree to
/// cochains on the mesh j coincides with. The per-simplex sign accounts for
/// the vertex reordering of the identification; the manifold orientation flag
/// is applied separately where formulas require it.
SpMatI restriction_operator(const ForestGeometry& g, const DegreeLayout& layout, NodeId j);

/// Diagonal of the degree-k mass matrix: the sum over all forest nodes of
/// R^T W R with W the node-local simplex weights.
Vec mass_matrix_diagonal(const ForestGeometry& g, const DegreeLayout& layout, WeightMode weights);

struct MassMatrix {
  int k = -1;
  WeightMode weights = WeightMode::Measure;
  Vec diagonal;
  SpMat matrix() const;
};

MassMatrix mass_matrix(const ForestGeometry& g, const DegreeLayout& layout, WeightMode weights);

double inner_product(const MixedForm& a, const MixedForm& b, const MassMatrix& m);
double norm_l2(const MixedForm& a, const MassMatrix& m);

/// CSV export with header "dof_index,value" plus a JSON sidecar carrying the
/// degree and the geometry hash.
void write_mixed_form_csv(const MixedForm& a, const std::string& geometry_hash,
                          const std::string& csv_path, const std::string& sidecar_path);
MixedForm read_mixed_form_csv(const std::string& csv_path, const std::string& sidecar_path,
                              const std::string& expected_geometry_hash);

}  // namespace mdforms

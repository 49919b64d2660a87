#pragma once

#include "mdforms/mesh.hpp"

#include <map>
#include <string>
#include <vector>

namespace mdforms {

/// One node of the forest. Roots carry a manifold of their own; branches are
/// boundary pieces of their tree's root and coincide geometrically with the
/// root named by `s_target`.
struct NodeRecord {
  NodeId node_id = -1;
  int dim = 0;
  bool is_root = false;
  NodeId tree_root = -1;
  NodeId s_target = -1;   // root i with the same geometry as this node
  NodeId parent = 0;      // roots point at the implicit global root 0
  std::string mesh_ref;
};

/// Vertex identification of a branch: maps the vertices of the target root's
/// mesh into the parent's geometry mesh. `orientation` is the relative
/// orientation of the identified patch and the target manifold.
struct IdentificationMap {
  NodeId branch_node = -1;
  std::vector<std::pair<int, int>> vertex_map;
  int orientation = 0;
};

struct Violation {
  std::string code;
  std::string message;
  std::vector<NodeId> nodes;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool conforming() const { return violations.empty(); }
};

/// A signed neighbor reference: `node` contributes to the jump with `sign`.
struct SignedNeighbor {
  NodeId node = -1;
  int sign = 0;
};

struct NeighborSets {
  std::vector<SignedNeighbor> gamma_inverse;  // sources of the jump onto this node
  std::vector<NodeId> gamma;                  // nodes whose jump this node feeds
  std::vector<NodeId> j_up;                   // codimension-one ancestors
  NodeId s_target = -1;
};

/// Parsed and indexed forest geometry. Immutable after load; all derived
/// tables are populated by parse_geometry.
struct ForestGeometry {
  int n = 0;
  std::map<NodeId, NodeRecord> nodes;
  std::map<std::string, SimplicialMesh> meshes;
  std::map<NodeId, IdentificationMap> maps;

  // derived
  std::vector<NodeId> roots;                       // sorted by id
  std::map<NodeId, std::vector<NodeId>> children;  // parent -> children
  std::map<NodeId, std::vector<NodeId>> tree_nodes;  // root -> all branch nodes
  std::map<NodeId, std::vector<NodeId>> s_inverse;
  // composite vertex map of a branch: vertex of mesh(s_j) -> vertex of the
  // tree root's mesh
  std::map<NodeId, std::vector<int>> composite_map;
  std::map<NodeId, std::vector<SignedNeighbor>> gamma_inverse;
  std::map<NodeId, std::vector<NodeId>> gamma;
  std::map<NodeId, std::vector<NodeId>> j_up;
  std::map<std::string, MeshCache> mesh_cache;
  std::string geometry_hash;
  std::string metadata_json;  // optional fixture metadata, verbatim

  const NodeRecord& node(NodeId id) const;
  const SimplicialMesh& mesh_of(NodeId id) const;      // geometry mesh of a node
  const MeshCache& cache_of(NodeId id) const;
  const SimplicialMesh& root_mesh(NodeId root) const;  // mesh owned by a root
  const MeshCache& root_cache(NodeId root) const;
  bool is_root(NodeId id) const { return node(id).is_root; }
  int dim_of(NodeId id) const { return node(id).dim; }
};

/// Parses a geometry document and populates every derived index. The result
/// is fully indexed but not yet validated.
ForestGeometry parse_geometry(const std::string& text);
ForestGeometry parse_geometry_file(const std::string& path);

/// Checks the conformity conditions: telescoping identifications, target
/// existence, unique boundary covering, the orientation sign identity over
/// all two-hop paths, and dimensional monotonicity. Violations are data, not
/// errors; an empty report means the forest is conforming.
ValidationReport validate_conforming(const ForestGeometry& g);

/// Neighbor index sets of one node. Throws MdError for unknown ids.
NeighborSets neighbor_sets(const ForestGeometry& g, NodeId j);

/// The sign with which node l enters the jump onto node j. Requires l to be
/// in gamma_inverse(j).
int orientation_sign(const ForestGeometry& g, NodeId j, NodeId l);

/// SHA-256 of the canonicalized geometry document, hex encoded.
std::string geometry_hash_of_text(const std::string& text);

}  // namespace mdforms

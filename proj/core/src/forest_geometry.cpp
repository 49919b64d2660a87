#include "mdforms/forest_geometry.hpp"

#include "mdforms/json_canonical.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mdforms {

using nlohmann::json;

const NodeRecord& ForestGeometry::node(NodeId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw MdError("unknown node id " + std::to_string(id));
  return it->second;
}

const SimplicialMesh& ForestGeometry::root_mesh(NodeId root) const {
  const NodeRecord& r = node(root);
  auto it = meshes.find(r.mesh_ref);
  if (it == meshes.end()) throw MdError("node " + std::to_string(root) + " references unknown mesh '" + r.mesh_ref + "'");
  return it->second;
}

const MeshCache& ForestGeometry::root_cache(NodeId root) const {
  const NodeRecord& r = node(root);
  auto it = mesh_cache.find(r.mesh_ref);
  if (it == mesh_cache.end()) throw MdError("no cache for mesh '" + r.mesh_ref + "'");
  return it->second;
}

const SimplicialMesh& ForestGeometry::mesh_of(NodeId id) const {
  return root_mesh(node(id).s_target);
}

const MeshCache& ForestGeometry::cache_of(NodeId id) const {
  return root_cache(node(id).s_target);
}

std::string geometry_hash_of_text(const std::string& text) {
  return sha256_hex(canonical_json(text));
}

namespace {

template <typename T>
T get_field(const json& obj, const char* field, const char* context) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw ParseError(std::string(context) + ": missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(context) + ": field '" + field + "': " + e.what());
  }
}

int branch_depth(const ForestGeometry& g, NodeId id) {
  int depth = 0;
  NodeId cur = id;
  while (!g.node(cur).is_root) {
    cur = g.node(cur).parent;
    ++depth;
    if (depth > 64) throw ParseError("parent cycle at node " + std::to_string(id));
  }
  return depth;
}

// Dense vertex map of one identification, domain = vertices of mesh(s_j).
// Entries are -1 when the map is partial or out of range.
std::vector<int> dense_vertex_map(const ForestGeometry& g, const IdentificationMap& m,
                                  int domain_size, int codomain_size) {
  std::vector<int> vm(domain_size, -1);
  for (const auto& [from, to] : m.vertex_map) {
    if (from < 0 || from >= domain_size || to < 0 || to >= codomain_size) continue;
    vm[from] = to;
  }
  return vm;
}

struct MirrorKey {
  NodeId s = -1;
  std::vector<int> comp;
  bool operator==(const MirrorKey& o) const { return s == o.s && comp == o.comp; }
};
struct MirrorKeyHash {
  std::size_t operator()(const MirrorKey& k) const {
    std::vector<int> v;
    v.reserve(k.comp.size() + 1);
    v.push_back(k.s);
    v.insert(v.end(), k.comp.begin(), k.comp.end());
    return TupleHash{}(v);
  }
};

}  // namespace

ForestGeometry parse_geometry(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }

  ForestGeometry g;
  g.n = get_field<int>(doc, "n", "document");
  g.geometry_hash = geometry_hash_of_text(text);
  if (doc.contains("metadata")) g.metadata_json = doc["metadata"].dump();

  if (!doc.contains("meshes") || !doc["meshes"].is_object())
    throw ParseError("document: missing object field 'meshes'");
  for (auto it = doc["meshes"].begin(); it != doc["meshes"].end(); ++it) {
    const std::string ref = it.key();
    const json& jm = it.value();
    const std::string ctx = "mesh '" + ref + "'";
    SimplicialMesh mesh;
    mesh.dim = get_field<int>(jm, "dim", ctx.c_str());
    if (mesh.dim < 0 || mesh.dim > g.n)
      throw ParseError(ctx + ": dim " + std::to_string(mesh.dim) + " out of range");
    for (const auto& jv : get_field<json>(jm, "vertices", ctx.c_str())) {
      std::vector<double> coords;
      for (const auto& c : jv) coords.push_back(c.get<double>());
      if (static_cast<int>(coords.size()) != mesh.dim)
        throw ParseError(ctx + ": vertex with " + std::to_string(coords.size()) +
                         " coordinates, expected " + std::to_string(mesh.dim));
      mesh.vertices.push_back(std::move(coords));
    }
    mesh.simplices.assign(mesh.dim + 1, {});
    const json& js = get_field<json>(jm, "simplices", ctx.c_str());
    for (auto sit = js.begin(); sit != js.end(); ++sit) {
      int p = -1;
      try {
        p = std::stoi(sit.key());
      } catch (...) {
        throw ParseError(ctx + ": bad simplex degree key '" + sit.key() + "'");
      }
      if (p < 0 || p > mesh.dim)
        throw ParseError(ctx + ": simplex degree " + sit.key() + " out of range");
      for (const auto& jt : sit.value()) {
        std::vector<int> tuple = jt.get<std::vector<int>>();
        if (static_cast<int>(tuple.size()) != p + 1)
          throw ParseError(ctx + ": non-simplicial cell in degree-" + sit.key() + " list");
        for (int v : tuple)
          if (v < 0 || v >= mesh.num_vertices())
            throw ParseError(ctx + ": simplex references unknown vertex " + std::to_string(v));
        mesh.simplices[p].push_back(std::move(tuple));
      }
    }
    if (jm.contains("boundary_labels")) {
      for (const auto& jl : jm["boundary_labels"]) {
        std::vector<int> facet = get_field<std::vector<int>>(jl, "facet", ctx.c_str());
        const json& lab = get_field<json>(jl, "label", ctx.c_str());
        FacetLabel label;
        if (lab.is_string() && lab.get<std::string>() == "dirichlet") {
          label.dirichlet = true;
        } else if (lab.is_object() && lab.contains("branch")) {
          label.branch = lab["branch"].get<int>();
        } else {
          throw ParseError(ctx + ": boundary label must be \"dirichlet\" or {\"branch\": id}");
        }
        mesh.boundary_labels.emplace_back(std::move(facet), label);
      }
    }
    g.meshes.emplace(ref, std::move(mesh));
  }

  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw ParseError("document: missing array field 'nodes'");
  for (const auto& jn : doc["nodes"]) {
    NodeRecord rec;
    rec.node_id = get_field<int>(jn, "id", "node");
    const std::string ctx = "node " + std::to_string(rec.node_id);
    rec.dim = get_field<int>(jn, "dim", ctx.c_str());
    rec.is_root = get_field<bool>(jn, "root", ctx.c_str());
    rec.tree_root = get_field<int>(jn, "tree", ctx.c_str());
    rec.s_target = get_field<int>(jn, "s", ctx.c_str());
    rec.parent = get_field<int>(jn, "parent", ctx.c_str());
    rec.mesh_ref = get_field<std::string>(jn, "mesh", ctx.c_str());
    if (rec.node_id <= 0) throw ParseError(ctx + ": ids must be positive");
    if (!g.nodes.emplace(rec.node_id, rec).second)
      throw ParseError(ctx + ": duplicate node id");
  }

  if (doc.contains("maps")) {
    for (const auto& jm : doc["maps"]) {
      IdentificationMap m;
      m.branch_node = get_field<int>(jm, "branch", "map");
      const std::string ctx = "map for branch " + std::to_string(m.branch_node);
      m.orientation = get_field<int>(jm, "orientation", ctx.c_str());
      for (const auto& jp : get_field<json>(jm, "vertex_map", ctx.c_str())) {
        auto pair = jp.get<std::vector<int>>();
        if (pair.size() != 2) throw ParseError(ctx + ": vertex_map entries must be pairs");
        m.vertex_map.emplace_back(pair[0], pair[1]);
      }
      if (!g.maps.emplace(m.branch_node, m).second)
        throw ParseError(ctx + ": duplicate map");
    }
  }

  // reference resolution
  for (const auto& [id, rec] : g.nodes) {
    const std::string ctx = "node " + std::to_string(id);
    if (!g.meshes.count(rec.mesh_ref))
      throw ParseError(ctx + ": dangling mesh reference '" + rec.mesh_ref + "'");
    if (!g.nodes.count(rec.s_target))
      throw ParseError(ctx + ": dangling s reference " + std::to_string(rec.s_target));
    if (!g.nodes.count(rec.tree_root))
      throw ParseError(ctx + ": dangling tree reference " + std::to_string(rec.tree_root));
    if (!rec.is_root) {
      if (!g.nodes.count(rec.parent))
        throw ParseError(ctx + ": dangling parent reference " + std::to_string(rec.parent));
      if (!g.maps.count(id))
        throw ParseError(ctx + ": branch has no identification map");
    }
  }

  // derived indexes
  for (const auto& [id, rec] : g.nodes) {
    if (rec.is_root) g.roots.push_back(id);
    else {
      g.children[rec.parent].push_back(id);
      g.tree_nodes[rec.tree_root].push_back(id);
    }
    g.s_inverse[rec.s_target].push_back(id);
  }
  for (auto& [k, v] : g.children) std::sort(v.begin(), v.end());
  for (auto& [k, v] : g.tree_nodes) std::sort(v.begin(), v.end());
  for (auto& [k, v] : g.s_inverse) std::sort(v.begin(), v.end());

  for (const auto& [ref, mesh] : g.meshes) g.mesh_cache.emplace(ref, build_mesh_cache(mesh));

  // Composite vertex maps, computed root-down so parents are ready first.
  std::vector<NodeId> branches;
  for (const auto& [id, rec] : g.nodes)
    if (!rec.is_root) branches.push_back(id);
  std::sort(branches.begin(), branches.end(), [&](NodeId a, NodeId b) {
    const int da = branch_depth(g, a), db = branch_depth(g, b);
    return da != db ? da < db : a < b;
  });
  for (NodeId id : branches) {
    const NodeRecord& rec = g.nodes.at(id);
    const NodeRecord& parent = g.nodes.at(rec.parent);
    const SimplicialMesh& source = g.root_mesh(g.nodes.at(rec.s_target).node_id);
    const SimplicialMesh& target = g.root_mesh(parent.is_root ? parent.node_id : parent.s_target);
    std::vector<int> vm = dense_vertex_map(g, g.maps.at(id), source.num_vertices(), target.num_vertices());
    if (std::count(vm.begin(), vm.end(), -1) > 0 ||
        static_cast<int>(g.maps.at(id).vertex_map.size()) != source.num_vertices()) {
      g.composite_map[id] = {};  // partial map, flagged by validation
      continue;
    }
    if (parent.is_root) {
      g.composite_map[id] = std::move(vm);
    } else {
      auto pit = g.composite_map.find(rec.parent);
      if (pit == g.composite_map.end() || pit->second.empty()) {
        g.composite_map[id] = {};
        continue;
      }
      std::vector<int> comp(vm.size(), -1);
      bool ok = true;
      for (std::size_t v = 0; v < vm.size(); ++v) {
        if (vm[v] < 0 || vm[v] >= static_cast<int>(pit->second.size())) { ok = false; break; }
        comp[v] = pit->second[vm[v]];
      }
      g.composite_map[id] = ok ? std::move(comp) : std::vector<int>{};
    }
  }

  // Mirror lookup: (tree root, s, composite map) -> node.
  std::map<NodeId, std::unordered_map<MirrorKey, NodeId, MirrorKeyHash>> mirrors;
  for (NodeId id : branches) {
    const NodeRecord& rec = g.nodes.at(id);
    const auto& comp = g.composite_map.at(id);
    if (comp.empty()) continue;
    mirrors[rec.tree_root].emplace(MirrorKey{rec.s_target, comp}, id);
  }

  // gamma_inverse on roots: branches of one-dimension-higher trees that
  // coincide with the root; the sign is the stored relative orientation.
  for (NodeId i : g.roots) {
    const int di = g.nodes.at(i).dim;
    std::vector<SignedNeighbor> gi;
    auto sit = g.s_inverse.find(i);
    if (sit != g.s_inverse.end()) {
      for (NodeId l : sit->second) {
        const NodeRecord& lr = g.nodes.at(l);
        if (lr.is_root) continue;
        auto rit = g.nodes.find(lr.tree_root);
        if (rit == g.nodes.end() || rit->second.dim != di + 1) continue;
        gi.push_back({l, g.maps.at(l).orientation});
      }
    }
    g.gamma_inverse[i] = std::move(gi);
  }

  // gamma_inverse on branches: push the root's set through the identification
  // and cancel contributions that land on the same node with opposite signs.
  for (NodeId id : branches) {
    const NodeRecord& rec = g.nodes.at(id);
    const auto& comp_j = g.composite_map.at(id);
    std::map<NodeId, int> net;
    if (!comp_j.empty()) {
      for (const auto& hop : g.gamma_inverse.at(rec.tree_root)) {
        const NodeRecord& lr = g.nodes.at(hop.node);
        const auto& comp_l = g.composite_map.at(hop.node);
        if (comp_l.empty()) continue;
        std::vector<int> t(comp_j.size(), -1);
        bool ok = true;
        for (std::size_t v = 0; v < comp_j.size(); ++v) {
          if (comp_j[v] < 0 || comp_j[v] >= static_cast<int>(comp_l.size())) { ok = false; break; }
          t[v] = comp_l[comp_j[v]];
        }
        if (!ok) continue;
        auto mit = mirrors.find(lr.tree_root);
        if (mit == mirrors.end()) continue;
        auto nit = mit->second.find(MirrorKey{rec.s_target, t});
        if (nit == mit->second.end()) continue;
        net[nit->second] += hop.sign;
      }
    }
    std::vector<SignedNeighbor> gj;
    for (const auto& [nid, s] : net)
      if (s != 0) gj.push_back({nid, s > 0 ? 1 : -1});
    g.gamma_inverse[id] = std::move(gj);
  }

  for (const auto& [j, list] : g.gamma_inverse)
    for (const auto& nb : list) g.gamma[nb.node].push_back(j);
  for (auto& [k, v] : g.gamma) std::sort(v.begin(), v.end());

  for (const auto& [id, rec] : g.nodes) {
    std::vector<NodeId> up;
    NodeId cur = id;
    while (!g.nodes.at(cur).is_root) {
      cur = g.nodes.at(cur).parent;
      if (g.nodes.at(cur).dim == rec.dim + 1) up.push_back(cur);
    }
    g.j_up[id] = std::move(up);
  }

  return g;
}

ForestGeometry parse_geometry_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open geometry file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_geometry(ss.str());
}

NeighborSets neighbor_sets(const ForestGeometry& g, NodeId j) {
  const NodeRecord& rec = g.node(j);
  NeighborSets out;
  out.s_target = rec.s_target;
  auto git = g.gamma_inverse.find(j);
  if (git != g.gamma_inverse.end()) out.gamma_inverse = git->second;
  auto tit = g.gamma.find(j);
  if (tit != g.gamma.end()) out.gamma = tit->second;
  auto uit = g.j_up.find(j);
  if (uit != g.j_up.end()) out.j_up = uit->second;
  return out;
}

int orientation_sign(const ForestGeometry& g, NodeId j, NodeId l) {
  auto git = g.gamma_inverse.find(j);
  if (git != g.gamma_inverse.end())
    for (const auto& nb : git->second)
      if (nb.node == l) return nb.sign;
  throw MdError("nodes " + std::to_string(j) + " and " + std::to_string(l) + " are not jump-adjacent");
}

// ---------------------------------------------------------------------------
// validation

namespace {

struct Validator {
  const ForestGeometry& g;
  ValidationReport rep;

  void add(const std::string& code, const std::string& msg, std::vector<NodeId> ids = {}) {
    rep.violations.push_back({code, msg, std::move(ids)});
  }

  void structure() {
    if (g.roots.empty()) add("empty-forest", "geometry contains no root nodes");
    for (const auto& [id, rec] : g.nodes) {
      const std::string at = "node " + std::to_string(id);
      if (rec.dim < 0 || rec.dim > g.n)
        add("dim-range", at + ": dim " + std::to_string(rec.dim) + " outside [0," + std::to_string(g.n) + "]", {id});
      if (rec.is_root) {
        if (rec.s_target != id) add("root-self", at + ": root must have s = id", {id});
        if (rec.parent != 0) add("root-parent", at + ": root must have parent 0", {id});
        if (rec.tree_root != id) add("root-tree", at + ": root must have tree = id", {id});
        auto mit = g.meshes.find(rec.mesh_ref);
        if (mit != g.meshes.end() && mit->second.dim != rec.dim)
          add("mesh-dim", at + ": mesh dimension differs from node dimension", {id});
      } else {
        const NodeRecord* parent = g.nodes.count(rec.parent) ? &g.nodes.at(rec.parent) : nullptr;
        if (!parent) {
          add("dangling-parent", at + ": parent does not exist", {id});
          continue;
        }
        if (rec.dim >= parent->dim)
          add("dim-monotonic", at + ": dim must strictly decrease from parent", {id, rec.parent});
        const NodeId ptree = parent->is_root ? parent->node_id : parent->tree_root;
        if (rec.tree_root != ptree)
          add("tree-mismatch", at + ": tree differs from parent's tree", {id, rec.parent});
        const NodeRecord& starget = g.nodes.at(rec.s_target);
        if (!starget.is_root)
          add("s-not-root", at + ": s target is not a root", {id, rec.s_target});
        if (starget.dim != rec.dim)
          add("s-dim", at + ": s target has different dimension", {id, rec.s_target});
        if (rec.mesh_ref != starget.mesh_ref)
          add("branch-mesh", at + ": mesh must be the mesh of root s", {id});
        auto mit = g.maps.find(id);
        if (mit != g.maps.end() && mit->second.orientation != 1 && mit->second.orientation != -1)
          add("orientation-value", at + ": orientation must be +1 or -1", {id});
      }
    }
    std::map<std::string, int> mesh_owner;
    for (NodeId r : g.roots) {
      const auto& ref = g.nodes.at(r).mesh_ref;
      if (mesh_owner.count(ref))
        add("mesh-shared", "mesh '" + ref + "' is owned by two roots", {mesh_owner[ref], r});
      else
        mesh_owner[ref] = r;
    }
  }

  void mesh_integrity() {
    for (const auto& [ref, mesh] : g.meshes) {
      const std::string at = "mesh '" + ref + "'";
      const auto& cache = g.mesh_cache.at(ref);
      std::map<std::vector<double>, int> coords;
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        auto [it, fresh] = coords.emplace(mesh.vertices[v], v);
        if (!fresh)
          add("duplicate-vertex", at + ": vertices " + std::to_string(it->second) + " and " +
                                      std::to_string(v) + " have identical coordinates");
      }
      for (int p = 0; p <= mesh.dim; ++p) {
        std::set<std::vector<int>> seen;
        for (const auto& s : mesh.simplices[p]) {
          if (!std::is_sorted(s.begin(), s.end()) ||
              std::adjacent_find(s.begin(), s.end()) != s.end())
            add("unsorted-simplex", at + ": simplex tuples must be strictly increasing");
          if (!seen.insert(s).second) add("duplicate-simplex", at + ": repeated simplex in degree " + std::to_string(p));
          if (p > 0) {
            std::vector<int> face(s.size() - 1);
            for (std::size_t r = 0; r < s.size(); ++r) {
              int idx = 0;
              for (std::size_t q = 0; q < s.size(); ++q)
                if (q != r) face[idx++] = s[q];
              if (cache.find(p - 1, face) < 0) {
                add("face-closure", at + ": missing face of a degree-" + std::to_string(p) + " simplex");
                break;
              }
            }
          }
        }
        for (int i = 0; i < mesh.count(p); ++i)
          if (p > 0 && cache.measure[p](i) <= 0.0)
            add("zero-measure", at + ": degenerate simplex in degree " + std::to_string(p));
      }
      if (mesh.count(0) != mesh.num_vertices())
        add("vertex-list", at + ": degree-0 list must enumerate every vertex once");
      if (mesh.count(mesh.dim) == 0) add("no-cells", at + ": no top-dimensional simplices");
      if (mesh.dim >= 1) {
        std::vector<char> used(mesh.num_vertices(), 0);
        for (const auto& t : mesh.simplices[mesh.dim])
          for (int v : t) used[v] = 1;
        for (int v = 0; v < mesh.num_vertices(); ++v)
          if (!used[v]) add("isolated-vertex", at + ": vertex " + std::to_string(v) + " lies in no cell");
        for (int t = 0; t < mesh.count(mesh.dim); ++t)
          if (cache.top_orientation[t] == 0)
            add("zero-measure", at + ": degenerate top simplex " + std::to_string(t));

        // facet incidence: 1 on the boundary, 2 in the interior
        std::vector<int> tops_per_facet(mesh.count(mesh.dim - 1), 0);
        for (const auto& t : mesh.simplices[mesh.dim]) {
          std::vector<int> face(t.size() - 1);
          for (std::size_t r = 0; r < t.size(); ++r) {
            int idx = 0;
            for (std::size_t q = 0; q < t.size(); ++q)
              if (q != r) face[idx++] = t[q];
            const int f = cache.find(mesh.dim - 1, face);
            if (f >= 0) ++tops_per_facet[f];
          }
        }
        for (int f = 0; f < mesh.count(mesh.dim - 1); ++f)
          if (tops_per_facet[f] == 0 || tops_per_facet[f] > 2)
            add("non-manifold", at + ": facet " + std::to_string(f) + " lies in " +
                                    std::to_string(tops_per_facet[f]) + " cells");

        std::set<std::vector<int>> labeled;
        for (const auto& [facet, label] : mesh.boundary_labels) {
          const int f = cache.find(mesh.dim - 1, facet);
          if (f < 0) {
            add("label-unknown-facet", at + ": boundary label on a facet not in the mesh");
            continue;
          }
          if (!labeled.insert(facet).second)
            add("label-duplicate", at + ": facet labeled twice");
          if (cache.boundary_of_facet[f] < 0)
            add("label-interior", at + ": boundary label on an interior facet");
          if (!label.dirichlet) {
            auto nit = g.nodes.find(label.branch);
            if (nit == g.nodes.end() || nit->second.is_root)
              add("label-dangling", at + ": label references missing branch " + std::to_string(label.branch));
          }
        }
        for (const auto& b : cache.boundary)
          if (!b.label.dirichlet && b.label.branch < 0)
            add("unlabeled-boundary", at + ": boundary facet " + std::to_string(b.facet) + " carries no label");
      }
    }
  }

  // The vertex identification of each branch must be a simplicial isomorphism
  // onto its patch; codimension-one patches must match the facet labels and
  // the stored orientation must equal the geometric relative orientation.
  void identifications() {
    for (const auto& [id, rec] : g.nodes) {
      if (rec.is_root) continue;
      const std::string at = "branch " + std::to_string(id);
      const SimplicialMesh& source = g.mesh_of(id);
      const MeshCache& source_cache = g.cache_of(id);
      const NodeRecord& parent = g.nodes.at(rec.parent);
      const NodeId target_root = parent.is_root ? parent.node_id : parent.s_target;
      const SimplicialMesh& target = g.root_mesh(target_root);
      const MeshCache& target_cache = g.root_cache(target_root);
      const IdentificationMap& m = g.maps.at(id);

      std::vector<int> vm(source.num_vertices(), -1);
      std::vector<char> hit(target.num_vertices(), 0);
      bool total = static_cast<int>(m.vertex_map.size()) == source.num_vertices();
      for (const auto& [from, to] : m.vertex_map) {
        if (from < 0 || from >= source.num_vertices() || to < 0 || to >= target.num_vertices()) {
          add("map-range", at + ": vertex map entry out of range", {id});
          total = false;
          continue;
        }
        if (vm[from] >= 0) { add("map-retarget", at + ": source vertex mapped twice", {id}); total = false; }
        if (hit[to]) { add("map-injective", at + ": vertex map is not injective", {id}); total = false; }
        vm[from] = to;
        hit[to] = 1;
      }
      if (std::count(vm.begin(), vm.end(), -1) > 0) total = false;
      if (!total) {
        add("map-partial", at + ": vertex map does not cover the target root's mesh", {id});
        continue;
      }

      // image simplices must exist at every degree
      bool simplicial = true;
      for (int p = 0; p <= source.dim && simplicial; ++p) {
        for (const auto& s : source.simplices[p]) {
          std::vector<int> img(s.size());
          for (std::size_t q = 0; q < s.size(); ++q) img[q] = vm[s[q]];
          std::sort(img.begin(), img.end());
          if (target_cache.find(p, img) < 0) {
            add("map-not-simplicial", at + ": image of a degree-" + std::to_string(p) +
                                          " simplex is not a simplex of the parent mesh", {id});
            simplicial = false;
            break;
          }
        }
      }
      if (!simplicial) continue;

      const int depth = branch_depth(g, id);
      if (depth == 1 && rec.dim == target.dim - 1) {
        // patch = labeled boundary facets, exactly
        std::set<int> image_facets;
        int geo_sign = 0;
        bool sign_ok = true;
        for (int si = 0; si < source.count(source.dim); ++si) {
          const auto& s = source.simplices[source.dim][si];
          std::vector<int> img(s.size());
          for (std::size_t q = 0; q < s.size(); ++q) img[q] = vm[s[q]];
          const int parity = permutation_parity(img);
          std::sort(img.begin(), img.end());
          const int f = target_cache.find(target.dim - 1, img);
          image_facets.insert(f);
          const int b = target_cache.boundary_of_facet.empty() ? -1 : target_cache.boundary_of_facet[f];
          if (b < 0) {
            add("patch-interior", at + ": patch simplex is not on the target boundary", {id});
            sign_ok = false;
            continue;
          }
          const auto& bf = target_cache.boundary[b];
          if (bf.label.branch != id)
            add("patch-label", at + ": patch facet labeled for a different owner", {id});
          const int source_orient = source.dim == 0 ? 1 : source_cache.top_orientation[si];
          if (source_orient == 0) { sign_ok = false; continue; }
          const int eps = bf.induced_sign * parity * source_orient;
          if (geo_sign == 0) geo_sign = eps;
          else if (geo_sign != eps) { add("orientation-geometry", at + ": relative orientation varies over the patch", {id}); sign_ok = false; }
        }
        for (const auto& b : target_cache.boundary)
          if (b.label.branch == id && !image_facets.count(b.facet))
            add("patch-missing", at + ": labeled facet not covered by the identification", {id});
        if (sign_ok && geo_sign != 0 && geo_sign != m.orientation)
          add("orientation-geometry", at + ": stored orientation contradicts the geometric one", {id});
      } else if (depth == 1) {
        for (const auto& s : source.simplices[source.dim]) {
          std::vector<int> img(s.size());
          for (std::size_t q = 0; q < s.size(); ++q) img[q] = vm[s[q]];
          std::sort(img.begin(), img.end());
          const int idx = target_cache.find(source.dim, img);
          if (idx < 0 || !target_cache.boundary_closure[source.dim][idx])
            add("patch-interior", at + ": patch simplex is not on the target boundary", {id});
        }
      } else {
        // telescoping: the stored map must coincide with the map of a branch
        // of the root the parent identifies with
        const NodeId mirror_root = parent.s_target;
        bool found = false;
        for (NodeId c : g.children.count(mirror_root) ? g.children.at(mirror_root) : std::vector<NodeId>{}) {
          if (g.nodes.at(c).s_target != rec.s_target) continue;
          const IdentificationMap& cm = g.maps.at(c);
          std::vector<int> cvm(source.num_vertices(), -1);
          if (static_cast<int>(cm.vertex_map.size()) != source.num_vertices()) continue;
          bool ok = true;
          for (const auto& [from, to] : cm.vertex_map) {
            if (from < 0 || from >= source.num_vertices()) { ok = false; break; }
            cvm[from] = to;
          }
          if (ok && cvm == vm) { found = true; break; }
        }
        if (!found)
          add("telescoping", at + ": map does not factor through a branch of root " +
                                 std::to_string(mirror_root), {id, mirror_root});
      }
    }
  }

  // Unique covering: every boundary simplex of a root mesh is either in the
  // Dirichlet closure or interior to the patch of exactly one tree node.
  void covering() {
    for (NodeId i : g.roots) {
      const SimplicialMesh& mesh = g.root_mesh(i);
      const MeshCache& cache = g.root_cache(i);
      if (mesh.dim == 0) continue;

      struct Image { std::unordered_map<std::vector<int>, int, TupleHash> at; };
      std::vector<std::pair<NodeId, std::vector<Image>>> patches;
      auto tit = g.tree_nodes.find(i);
      if (tit != g.tree_nodes.end()) {
        for (NodeId j : tit->second) {
          auto cit = g.composite_map.find(j);
          if (cit == g.composite_map.end() || cit->second.empty()) continue;
          const auto& comp = cit->second;
          const SimplicialMesh& source = g.mesh_of(j);
          std::vector<Image> images(source.dim + 1);
          bool ok = true;
          for (int p = 0; p <= source.dim && ok; ++p) {
            for (int si = 0; si < source.count(p); ++si) {
              const auto& s = source.simplices[p][si];
              std::vector<int> img(s.size());
              for (std::size_t q = 0; q < s.size(); ++q) img[q] = comp[s[q]];
              std::sort(img.begin(), img.end());
              if (cache.find(p, img) < 0) { ok = false; break; }
              images[p].at.emplace(std::move(img), si);
            }
          }
          if (ok) patches.emplace_back(j, std::move(images));
        }
      }

      for (int p = 0; p < mesh.dim; ++p) {
        for (int si = 0; si < mesh.count(p); ++si) {
          if (!cache.boundary_closure[p][si]) continue;
          const bool dirichlet = cache.dirichlet_closure[p][si] != 0;
          int cover = 0;
          std::vector<NodeId> owners;
          for (const auto& [j, images] : patches) {
            const SimplicialMesh& source = g.mesh_of(j);
            if (p > source.dim) continue;
            auto it = images[p].at.find(mesh.simplices[p][si]);
            if (it == images[p].at.end()) continue;
            const MeshCache& scache = g.cache_of(j);
            const bool interior = source.dim == 0 || !scache.boundary_closure[p][it->second];
            if (interior) { ++cover; owners.push_back(j); }
          }
          const int expected = dirichlet ? 0 : 1;
          if (cover != expected)
            add("covering", "root " + std::to_string(i) + ": boundary simplex of degree " +
                                std::to_string(p) + " covered " + std::to_string(cover) +
                                " times, expected " + std::to_string(expected), owners);
        }
      }
    }
  }

  // Dirichlet regions must agree across identifications.
  void dirichlet_consistency() {
    for (const auto& [id, rec] : g.nodes) {
      if (rec.is_root) continue;
      auto cit = g.composite_map.find(id);
      if (cit == g.composite_map.end() || cit->second.empty()) continue;
      const auto& comp = cit->second;
      const SimplicialMesh& source = g.mesh_of(id);
      const MeshCache& scache = g.cache_of(id);
      const MeshCache& tcache = g.root_cache(rec.tree_root);
      for (int p = 0; p <= source.dim; ++p) {
        for (int si = 0; si < source.count(p); ++si) {
          const auto& s = source.simplices[p][si];
          std::vector<int> img(s.size());
          for (std::size_t q = 0; q < s.size(); ++q) img[q] = comp[s[q]];
          std::sort(img.begin(), img.end());
          const int ti = tcache.find(p, img);
          if (ti < 0) continue;
          const bool src_d = p < static_cast<int>(scache.dirichlet_closure.size()) &&
                             scache.dirichlet_closure[p][si] != 0;
          const bool tgt_d = tcache.dirichlet_closure[p][ti] != 0;
          if (src_d != tgt_d) {
            add("dirichlet-mismatch", "branch " + std::to_string(id) +
                                          ": Dirichlet region differs between the identified meshes", {id});
            p = source.dim + 1;  // one report per branch
            break;
          }
        }
      }
    }
  }

  // Exhaustive two-hop sign identity: contributions that reach a root through
  // different intermediate manifolds but along the same composite
  // identification must cancel pairwise.
  void sign_identity() {
    for (NodeId i : g.roots) {
      auto git = g.gamma_inverse.find(i);
      if (git == g.gamma_inverse.end() || git->second.empty()) continue;
      struct PathGroup { int sum = 0; std::vector<std::pair<NodeId, NodeId>> paths; };
      std::map<std::pair<NodeId, std::vector<int>>, PathGroup> groups;
      for (const auto& hop1 : git->second) {
        const NodeRecord& lr = g.nodes.at(hop1.node);
        auto c1 = g.composite_map.find(hop1.node);
        if (c1 == g.composite_map.end() || c1->second.empty()) continue;
        auto g2 = g.gamma_inverse.find(lr.tree_root);
        if (g2 == g.gamma_inverse.end()) continue;
        for (const auto& hop2 : g2->second) {
          auto c2 = g.composite_map.find(hop2.node);
          if (c2 == g.composite_map.end() || c2->second.empty()) continue;
          std::vector<int> t(c1->second.size(), -1);
          bool ok = true;
          for (std::size_t v = 0; v < c1->second.size(); ++v) {
            const int w = c1->second[v];
            if (w < 0 || w >= static_cast<int>(c2->second.size())) { ok = false; break; }
            t[v] = c2->second[w];
          }
          if (!ok) continue;
          const NodeId far_root = g.nodes.at(hop2.node).tree_root;
          auto& grp = groups[{far_root, std::move(t)}];
          grp.sum += hop1.sign * hop2.sign;
          grp.paths.emplace_back(hop1.node, hop2.node);
        }
      }
      for (const auto& [key, grp] : groups) {
        if (grp.sum == 0 && grp.paths.size() % 2 == 0) continue;
        std::vector<NodeId> ids{i};
        for (const auto& [a, b] : grp.paths) { ids.push_back(a); ids.push_back(b); }
        add("sign-identity", "root " + std::to_string(i) + ": two-hop contributions from root " +
                                 std::to_string(key.first) + " do not cancel", ids);
      }
    }
    // jump multiplicity on branches
    for (const auto& [id, rec] : g.nodes) {
      if (rec.is_root) continue;
      const auto& comp_j = g.composite_map.count(id) ? g.composite_map.at(id) : std::vector<int>{};
      if (comp_j.empty()) continue;
      std::map<NodeId, int> net;
      for (const auto& hop : g.gamma_inverse.at(rec.tree_root)) {
        auto cit = g.composite_map.find(hop.node);
        if (cit == g.composite_map.end() || cit->second.empty()) continue;
        // same mirror resolution as the index step
        const NodeRecord& lr = g.nodes.at(hop.node);
        std::vector<int> t(comp_j.size(), -1);
        bool ok = true;
        for (std::size_t v = 0; v < comp_j.size(); ++v) {
          const int w = comp_j[v];
          if (w < 0 || w >= static_cast<int>(cit->second.size())) { ok = false; break; }
          t[v] = cit->second[w];
        }
        if (!ok) continue;
        auto trn = g.tree_nodes.find(lr.tree_root);
        if (trn == g.tree_nodes.end()) continue;
        for (NodeId cand : trn->second) {
          if (g.nodes.at(cand).s_target != rec.s_target) continue;
          auto cc = g.composite_map.find(cand);
          if (cc != g.composite_map.end() && cc->second == t) { net[cand] += hop.sign; break; }
        }
      }
      for (const auto& [nid, s] : net)
        if (s != 0 && s != 1 && s != -1)
          add("jump-multiplicity", "branch " + std::to_string(id) + ": contribution from node " +
                                       std::to_string(nid) + " has multiplicity " + std::to_string(s),
              {id, nid});
    }
  }
};

}  // namespace

ValidationReport validate_conforming(const ForestGeometry& g) {
  Validator v{g, {}};
  v.structure();
  v.mesh_integrity();
  v.identifications();
  v.covering();
  v.dirichlet_consistency();
  v.sign_identity();
  return v.rep;
}

}  // namespace mdforms

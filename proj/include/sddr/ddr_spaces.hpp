// Discrete spaces Xgrad / Xcurl / Xdiv: layouts, per-entity bases,
// interpolators, restrictions and boundary masks.

#pragma once

#include "sddr/mesh.hpp"
#include "sddr/polyspaces.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace sddr {

enum class SpaceKind { Grad, Curl, Div };
enum class EntityKind { Vertex, Edge, Face, Cell };

const char* space_name(SpaceKind s);

/// eta_Y per face and cell. Only eta_Y = 2 everywhere (ell_Y = k - 1) is
/// implemented; other values are rejected.
struct SerendipityConfig {
  std::vector<int> eta_face;
  std::vector<int> eta_cell;

  static SerendipityConfig ddr_mode(const Mesh& mesh);
  int ell_face(int k, std::size_t f) const { return k + 1 - eta_face.at(f); }
  int ell_cell(int k, std::size_t t) const { return k + 1 - eta_cell.at(t); }
  void validate(const Mesh& mesh) const;
};

/// Entity-blocked numbering: vertices, edges, faces, cells, each in id order.
/// Block sizes are uniform per entity kind.
struct DofLayout {
  SpaceKind kind = SpaceKind::Grad;
  int k = 0;
  std::size_t n_vertices = 0, n_edges = 0, n_faces = 0, n_cells = 0;
  std::size_t vertex_size = 0, edge_size = 0, face_size = 0, cell_size = 0;
  // sub-blocks: face = [face_a | face_b], cell = [cell_a | cell_b]
  //   CURL: face R^{k-1}(F) | Rc^k(F), cell R^{k-1}(T) | Rc^k(T)
  //   DIV:  cell G^{k-1}(T) | Gc^k(T)
  std::size_t face_a = 0, face_b = 0, cell_a = 0, cell_b = 0;

  DofLayout() = default;
  DofLayout(SpaceKind kind, int k, const Mesh& mesh);

  std::size_t size() const { return cell_offset(n_cells); }
  std::size_t vertex_offset(std::size_t i) const { return i * vertex_size; }
  std::size_t edge_offset(std::size_t i) const { return n_vertices * vertex_size + i * edge_size; }
  std::size_t face_offset(std::size_t i) const { return edge_offset(n_edges) + i * face_size; }
  std::size_t cell_offset(std::size_t i) const { return face_offset(n_faces) + i * cell_size; }
  std::size_t block_size(EntityKind e) const;
  std::size_t offset(EntityKind e, std::size_t id) const;

  /// FNV-1a over the defining integers.
  std::uint64_t hash() const;
  bool operator==(const DofLayout& o) const { return hash() == o.hash(); }
};

struct DofVector {
  DofLayout layout;
  Eigen::VectorXd values;

  DofVector() = default;
  explicit DofVector(const DofLayout& l) : layout(l), values(Eigen::VectorXd::Zero(Eigen::Index(l.size()))) {}
  DofVector(const DofLayout& l, Eigen::VectorXd v);
};

/// Flat little-endian doubles in `path`, layout description in `path`.json.
void save_dof_vector(const DofVector& v, const std::filesystem::path& path);
DofVector load_dof_vector(const std::filesystem::path& path);

struct EdgeBases {
  PolyFamily Pkm1, Pk, Pkp1;
};

struct FaceBases {
  PolyFamily Pkm1, Pk, Pkp1, Pkp1_0, Pk2;
  PolyFamily Rkm1, Rck;   // CURL DoF spaces
  PolyFamily Rk;          // face-gradient test space (with Rck)
  PolyFamily Rckp2;       // scalar-trace test space
};

struct CellBases {
  PolyFamily Pkm1, Pk, Pkp1, Pkp1_0, Pk3;
  PolyFamily Rkm1, Rck;   // CURL DoF spaces
  PolyFamily Gkm1, Gck;   // DIV DoF spaces
  PolyFamily Rk;          // element-gradient test space (with Rck)
  PolyFamily Rckp2;       // gradient-potential test space
  PolyFamily Gckp1;       // curl-potential test space (through its curl)
};

/// Mesh, degree, layouts and per-entity polynomial bases shared by every
/// discrete operator.
class DDRCore {
 public:
  DDRCore(const Mesh& mesh, int k);
  DDRCore(const Mesh& mesh, int k, const SerendipityConfig& cfg);

  const Mesh& mesh() const { return *m_mesh; }
  int degree() const { return m_k; }
  const SerendipityConfig& serendipity() const { return m_cfg; }
  const DofLayout& layout(SpaceKind s) const;

  const EntityBasis& edge_basis(std::size_t e) const { return m_edge_basis[e]; }
  const EntityBasis& face_basis(std::size_t f) const { return m_face_basis[f]; }
  const EntityBasis& cell_basis(std::size_t t) const { return m_cell_basis[t]; }
  const EdgeBases& edge_bases(std::size_t e) const { return m_edge[e]; }
  const FaceBases& face_bases(std::size_t f) const { return m_face[f]; }
  const CellBases& cell_bases(std::size_t t) const { return m_cell[t]; }

  /// Global DoF indices of the restriction to an entity, in local order:
  /// vertices, edges, faces (as listed by the entity), then the entity block.
  std::vector<std::size_t> local_dofs(SpaceKind s, EntityKind e, std::size_t id) const;

  /// Position of each DoF of `sub` (local order) inside `dofs_of_parent`.
  static std::vector<std::size_t> extension(const std::vector<std::size_t>& sub,
                                            const std::vector<std::size_t>& dofs_of_parent);

 private:
  const Mesh* m_mesh;
  int m_k;
  SerendipityConfig m_cfg;
  DofLayout m_grad, m_curl, m_div;
  std::vector<EntityBasis> m_edge_basis, m_face_basis, m_cell_basis;
  std::vector<EdgeBases> m_edge;
  std::vector<FaceBases> m_face;
  std::vector<CellBases> m_cell;
};

using ScalarField = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

/// Interpolators; `degree` is the quadrature exactness used for the moments
/// (default 2k+4).
DofVector interpolate_grad(const DDRCore& core, const ScalarField& q, int degree = -1);
DofVector interpolate_curl(const DDRCore& core, const VectorField& v, int degree = -1);
DofVector interpolate_div(const DDRCore& core, const VectorField& w, int degree = -1);

Eigen::VectorXd restrict_to(const DDRCore& core, const DofVector& v, EntityKind e, std::size_t id);
void scatter_add(const DDRCore& core, DofVector& v, EntityKind e, std::size_t id, const Eigen::VectorXd& local);

enum class BoundaryType { Natural, Essential, Unclassified };
using BoundaryPredicate = std::function<BoundaryType(const Face&)>;

class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// True for DoFs fixed by essential conditions: GRAD blocks on essential
/// boundary faces and their edges and vertices; CURL blocks on essential
/// boundary faces and their edges. DIV has no essential DoFs.
std::vector<bool> boundary_subspace_mask(const DDRCore& core, SpaceKind s, const BoundaryPredicate& bc);

}  // namespace sddr

// Polyhedral mesh: vertices, edges, faces, cells with incidence, orientations
// and geometric anchors. Immutable after construction.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace sddr {

using Vec3 = Eigen::Vector3d;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure in a mesh file; carries the offending line number.
class MeshParseError : public MeshError {
 public:
  MeshParseError(const std::string& what, int line);
  int line() const { return m_line; }

 private:
  int m_line;
};

struct Vertex {
  std::size_t id = 0;
  Vec3 coords = Vec3::Zero();
  bool boundary = false;
};

struct Edge {
  std::size_t id = 0;
  std::array<std::size_t, 2> vertices{};  // tangent points from [0] to [1]
  Vec3 tangent = Vec3::Zero();
  Vec3 midpoint = Vec3::Zero();
  double length = 0.0;
  bool boundary = false;
  std::vector<std::size_t> faces;
};

struct Face {
  std::size_t id = 0;
  std::vector<std::size_t> vertices;  // loop, counter-clockwise seen from the normal side
  std::vector<std::size_t> edges;     // edges[i] joins vertices[i] and vertices[i+1]
  std::vector<int> edge_orientations; // omega_FE
  std::vector<Vec3> edge_normals;     // n_FE, in-plane, (t_E, n_FE, n_F) right-handed
  Vec3 normal = Vec3::Zero();
  Vec3 center = Vec3::Zero();         // x_F (centroid)
  std::array<Vec3, 2> frame{Vec3::Zero(), Vec3::Zero()};  // (e1, e2, n_F) right-handed
  double area = 0.0;
  double diameter = 0.0;
  bool boundary = false;
  std::vector<std::size_t> cells;
};

struct Cell {
  std::size_t id = 0;
  std::vector<std::size_t> faces;
  std::vector<int> face_orientations;  // omega_TF: omega_TF * n_F points out of T
  std::vector<std::size_t> edges;      // derived, sorted by id
  std::vector<std::size_t> vertices;   // derived, sorted by id
  Vec3 center = Vec3::Zero();          // x_T (centroid)
  double volume = 0.0;
  double diameter = 0.0;
};

/// Raw polyhedral description: vertex coordinates, faces as vertex loops and
/// cells as lists of face indices. Everything else is derived.
struct PolyhedralDescription {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::size_t>> faces;
  std::vector<std::vector<std::size_t>> cells;
};

class Mesh {
 public:
  /// Builds incidence, orientations and anchors, then validates every
  /// geometric invariant. Throws MeshError naming the failing entity.
  explicit Mesh(PolyhedralDescription description);

  std::size_t n_vertices() const { return m_vertices.size(); }
  std::size_t n_edges() const { return m_edges.size(); }
  std::size_t n_faces() const { return m_faces.size(); }
  std::size_t n_cells() const { return m_cells.size(); }

  const Vertex& vertex(std::size_t i) const { return m_vertices[i]; }
  const Edge& edge(std::size_t i) const { return m_edges[i]; }
  const Face& face(std::size_t i) const { return m_faces[i]; }
  const Cell& cell(std::size_t i) const { return m_cells[i]; }

  const std::vector<Vertex>& vertices() const { return m_vertices; }
  const std::vector<Edge>& edges() const { return m_edges; }
  const std::vector<Face>& faces() const { return m_faces; }
  const std::vector<Cell>& cells() const { return m_cells; }

  /// max cell diameter
  double h_max() const { return m_h_max; }

  /// min over cells of (inscribed-ball diameter around x_T) / h_T.
  /// Reported only; never asserted.
  double regularity_ratio() const { return m_regularity; }

  /// Position of face F in the face list of cell T; throws if F is not a face of T.
  std::size_t local_face_index(std::size_t cell, std::size_t face) const;

  /// Relative defect of sum_F omega_TF int_F x.n_F = 3|T| for cell T,
  /// with |T| computed independently from the cone decomposition.
  double divergence_closure_defect(std::size_t cell) const;

  /// Relative defect of sum_E omega_FE int_E (x - x_F).n_FE = 2|F|.
  double face_closure_defect(std::size_t face) const;

  /// Copy with omega_TF negated for one (cell, local face) pair. Skips
  /// validation; used to check that fault detectors fire.
  Mesh with_flipped_orientation(std::size_t cell, std::size_t local_face) const;

  const PolyhedralDescription& description() const { return m_description; }

 private:
  void build_edges();
  void build_faces();
  void build_cells();
  void validate() const;

  PolyhedralDescription m_description;
  std::vector<Vertex> m_vertices;
  std::vector<Edge> m_edges;
  std::vector<Face> m_faces;
  std::vector<Cell> m_cells;
  double m_h_max = 0.0;
  double m_regularity = 0.0;
};

/// point-in-polyhedron by ray parity over the fan triangulation of the faces of T
bool point_in_cell(const Mesh& mesh, std::size_t cell, const Vec3& x);

/// Omega_TF determined by probing x_F -+ eps n_F, eps = 1e-6 h_T. Throws if
/// both or neither probe lies inside T.
int orientation_sign(const Mesh& mesh, std::size_t cell, std::size_t face);

/// n^3 unit-cube-scaled hexahedra tiling (0,1)^3.
Mesh generate_cubic_mesh(std::size_t n);

/// Each of the n^3 cubes split into 6 Kuhn tetrahedra.
Mesh generate_tet_mesh(std::size_t n);

/// POLY3 text format. See README for the grammar.
Mesh read_mesh(const std::filesystem::path& path);
Mesh parse_poly3(const std::string& text);
std::string write_poly3(const Mesh& mesh);

}  // namespace sddr

#include "sddr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sddr {

MeshParseError::MeshParseError(const std::string& what, int line)
    : MeshError("line " + std::to_string(line) + ": " + what), m_line(line) {}

namespace {

std::string name(const char* kind, std::size_t id) {
  return std::string(kind) + " " + std::to_string(id);
}

// Moeller-Trumbore; counts hits with t > 0.
bool ray_hits_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  return e2.dot(q) * inv > 0.0;
}

// Ray parity over the fan triangulation (x_F, v_i, v_i+1) of the given faces,
// majority vote over three generic directions.
bool inside_by_parity(const std::vector<Face>& faces, const std::vector<Vertex>& vertices,
                      const std::vector<std::size_t>& cell_faces, const Vec3& x) {
  static const std::array<Vec3, 3> dirs = {
      Vec3(0.3141592653589793, 0.2718281828459045, 0.9092974268256817).normalized(),
      Vec3(-0.5772156649015329, 0.7071067811865476, 0.4142135623730950).normalized(),
      Vec3(0.6180339887498949, -0.3819660112501051, -0.6931471805599453).normalized()};
  int votes = 0;
  for (const Vec3& d : dirs) {
    int hits = 0;
    for (std::size_t f : cell_faces) {
      const Face& F = faces[f];
      const std::size_t m = F.vertices.size();
      for (std::size_t i = 0; i < m; ++i) {
        const Vec3& a = vertices[F.vertices[i]].coords;
        const Vec3& b = vertices[F.vertices[(i + 1) % m]].coords;
        if (ray_hits_triangle(x, d, F.center, a, b)) ++hits;
      }
    }
    votes += (hits % 2 == 1) ? 1 : 0;
  }
  return votes >= 2;
}

int probe_orientation(const std::vector<Face>& faces, const std::vector<Vertex>& vertices,
                      const std::vector<std::size_t>& cell_faces, double h_T, std::size_t cell_id,
                      std::size_t face) {
  const Face& F = faces[face];
  const double eps = 1e-6 * h_T;
  const bool minus_inside = inside_by_parity(faces, vertices, cell_faces, F.center - eps * F.normal);
  const bool plus_inside = inside_by_parity(faces, vertices, cell_faces, F.center + eps * F.normal);
  if (minus_inside == plus_inside) {
    throw MeshError("ambiguous orientation of " + name("face", face) + " in " +
                    name("cell", cell_id) + ": probes on both sides classified alike");
  }
  // x_F - eps*omega*n_F must lie inside T
  return minus_inside ? 1 : -1;
}

}  // namespace

Mesh::Mesh(PolyhedralDescription description) : m_description(std::move(description)) {
  const auto& d = m_description;
  if (d.vertices.empty() || d.faces.empty() || d.cells.empty()) {
    throw MeshError("mesh must have at least one vertex, face and cell");
  }
  m_vertices.resize(d.vertices.size());
  for (std::size_t i = 0; i < d.vertices.size(); ++i) {
    if (!d.vertices[i].allFinite()) throw MeshError(name("vertex", i) + " has non-finite coordinates");
    m_vertices[i].id = i;
    m_vertices[i].coords = d.vertices[i];
  }
  build_edges();
  build_faces();
  build_cells();
  validate();
}

void Mesh::build_edges() {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_ids;
  m_faces.resize(m_description.faces.size());
  for (std::size_t f = 0; f < m_description.faces.size(); ++f) {
    const auto& loop = m_description.faces[f];
    if (loop.size() < 3) throw MeshError(name("face", f) + " has fewer than 3 vertices");
    std::set<std::size_t> uniq(loop.begin(), loop.end());
    if (uniq.size() != loop.size()) throw MeshError(name("face", f) + " repeats a vertex");
    Face& F = m_faces[f];
    F.id = f;
    F.vertices = loop;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const std::size_t a = loop[i];
      const std::size_t b = loop[(i + 1) % loop.size()];
      if (a >= m_vertices.size() || b >= m_vertices.size()) {
        throw MeshError(name("face", f) + " references a missing vertex");
      }
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_ids.emplace(std::make_pair(key.first, key.second), m_edges.size());
      if (inserted) {
        Edge E;
        E.id = m_edges.size();
        E.vertices = {key.first, key.second};
        const Vec3 v = m_vertices[key.second].coords - m_vertices[key.first].coords;
        E.length = v.norm();
        if (!(E.length > 0.0)) throw MeshError(name("edge", E.id) + " has zero length");
        E.tangent = v / E.length;
        E.midpoint = 0.5 * (m_vertices[key.first].coords + m_vertices[key.second].coords);
        m_edges.push_back(E);
      }
      F.edges.push_back(it->second);
      m_edges[it->second].faces.push_back(f);
    }
  }
}

void Mesh::build_faces() {
  for (Face& F : m_faces) {
    const std::size_t m = F.vertices.size();
    // Newell normal
    Vec3 area_vec = Vec3::Zero();
    Vec3 avg = Vec3::Zero();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& a = m_vertices[F.vertices[i]].coords;
      const Vec3& b = m_vertices[F.vertices[(i + 1) % m]].coords;
      area_vec += 0.5 * a.cross(b);
      avg += a;
    }
    avg /= double(m);
    const double area_norm = area_vec.norm();
    if (!(area_norm > 0.0)) throw MeshError(name("face", F.id) + " is degenerate");
    F.normal = area_vec / area_norm;

    double diam = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        diam = std::max(diam, (m_vertices[F.vertices[i]].coords - m_vertices[F.vertices[j]].coords).norm());
      }
    }
    F.diameter = diam;

    // centroid by fan from the vertex average
    double area = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& a = m_vertices[F.vertices[i]].coords;
      const Vec3& b = m_vertices[F.vertices[(i + 1) % m]].coords;
      const double ai = 0.5 * (a - avg).cross(b - avg).dot(F.normal);
      area += ai;
      centroid += ai * (avg + a + b) / 3.0;
    }
    F.area = area;
    F.center = centroid / area;

    for (std::size_t i = 0; i < m; ++i) {
      const double off = (m_vertices[F.vertices[i]].coords - F.center).dot(F.normal);
      if (std::abs(off) > 1e-12 * F.diameter) {
        throw MeshError(name("face", F.id) + " is not planar (vertex " +
                        std::to_string(F.vertices[i]) + " off-plane by " + std::to_string(off) + ")");
      }
    }

    const Vec3 first = m_vertices[F.vertices[1]].coords - m_vertices[F.vertices[0]].coords;
    const Vec3 e1 = (first - first.dot(F.normal) * F.normal).normalized();
    F.frame = {e1, F.normal.cross(e1)};

    F.edge_normals.resize(m);
    F.edge_orientations.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const Edge& E = m_edges[F.edges[i]];
      const Vec3 nFE = F.normal.cross(E.tangent);
      F.edge_normals[i] = nFE;
      const double side = (E.midpoint - F.center).dot(nFE);
      if (std::abs(side) <= 1e-12 * F.diameter) {
        throw MeshError(name("face", F.id) + ": centroid lies on the line of " + name("edge", E.id));
      }
      F.edge_orientations[i] = side > 0.0 ? 1 : -1;
      // star-shapedness with respect to x_F
      const Vec3& a = m_vertices[F.vertices[i]].coords;
      const Vec3& b = m_vertices[F.vertices[(i + 1) % m]].coords;
      if (!((a - F.center).cross(b - F.center).dot(F.normal) > 0.0)) {
        throw MeshError(name("face", F.id) + " is not star-shaped with respect to its centroid");
      }
    }
  }
}

void Mesh::build_cells() {
  m_cells.resize(m_description.cells.size());
  for (std::size_t t = 0; t < m_description.cells.size(); ++t) {
    Cell& T = m_cells[t];
    T.id = t;
    T.faces = m_description.cells[t];
    if (T.faces.size() < 4) throw MeshError(name("cell", t) + " has fewer than 4 faces");
    std::set<std::size_t> uniq(T.faces.begin(), T.faces.end());
    if (uniq.size() != T.faces.size()) throw MeshError(name("cell", t) + " repeats a face");
    std::set<std::size_t> verts;
    std::map<std::size_t, int> edge_count;
    for (std::size_t f : T.faces) {
      if (f >= m_faces.size()) throw MeshError(name("cell", t) + " references a missing face");
      m_faces[f].cells.push_back(t);
      verts.insert(m_faces[f].vertices.begin(), m_faces[f].vertices.end());
      for (std::size_t e : m_faces[f].edges) edge_count[e]++;
    }
    for (const auto& [e, c] : edge_count) {
      if (c != 2) {
        throw MeshError(name("cell", t) + " is not closed: " + name("edge", e) + " is shared by " +
                        std::to_string(c) + " of its faces");
      }
      T.edges.push_back(e);
    }
    T.vertices.assign(verts.begin(), verts.end());
    double diam = 0.0;
    for (std::size_t i = 0; i < T.vertices.size(); ++i) {
      for (std::size_t j = i + 1; j < T.vertices.size(); ++j) {
        diam = std::max(diam, (m_vertices[T.vertices[i]].coords - m_vertices[T.vertices[j]].coords).norm());
      }
    }
    T.diameter = diam;

    T.face_orientations.resize(T.faces.size());
    for (std::size_t i = 0; i < T.faces.size(); ++i) {
      T.face_orientations[i] = probe_orientation(m_faces, m_vertices, T.faces, diam, t, T.faces[i]);
    }

    // volume and centroid by signed cones from the vertex average
    Vec3 avg = Vec3::Zero();
    for (std::size_t v : T.vertices) avg += m_vertices[v].coords;
    avg /= double(T.vertices.size());
    double vol = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (std::size_t i = 0; i < T.faces.size(); ++i) {
      const Face& F = m_faces[T.faces[i]];
      const std::size_t m = F.vertices.size();
      for (std::size_t j = 0; j < m; ++j) {
        const Vec3& a = m_vertices[F.vertices[j]].coords;
        const Vec3& b = m_vertices[F.vertices[(j + 1) % m]].coords;
        const double v = T.face_orientations[i] * (F.center - avg).cross(a - avg).dot(b - avg) / 6.0;
        vol += v;
        centroid += v * (avg + F.center + a + b) / 4.0;
      }
    }
    if (!(vol > 0.0)) throw MeshError(name("cell", t) + " has non-positive volume");
    T.volume = vol;
    T.center = centroid / vol;

    // star-shapedness with respect to x_T: every cone tetrahedron positively oriented
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < T.faces.size(); ++i) {
      const Face& F = m_faces[T.faces[i]];
      const double dist = T.face_orientations[i] * (F.center - T.center).dot(F.normal);
      min_dist = std::min(min_dist, dist);
      const std::size_t m = F.vertices.size();
      for (std::size_t j = 0; j < m; ++j) {
        const Vec3& a = m_vertices[F.vertices[j]].coords;
        const Vec3& b = m_vertices[F.vertices[(j + 1) % m]].coords;
        const double v = T.face_orientations[i] * (F.center - T.center).cross(a - T.center).dot(b - T.center);
        if (!(v > 0.0)) {
          throw MeshError(name("cell", t) + " is not star-shaped with respect to its centroid (" +
                          name("face", F.id) + ")");
        }
      }
    }
    m_h_max = std::max(m_h_max, diam);
    const double ratio = 2.0 * min_dist / diam;
    m_regularity = (t == 0) ? ratio : std::min(m_regularity, ratio);
  }

  for (Face& F : m_faces) {
    if (F.cells.empty() || F.cells.size() > 2) {
      throw MeshError(name("face", F.id) + " is incident to " + std::to_string(F.cells.size()) + " cells");
    }
    F.boundary = F.cells.size() == 1;
    if (F.boundary) {
      for (std::size_t v : F.vertices) m_vertices[v].boundary = true;
      for (std::size_t e : F.edges) m_edges[e].boundary = true;
    }
  }
}

std::size_t Mesh::local_face_index(std::size_t cell, std::size_t face) const {
  const auto& fs = m_cells[cell].faces;
  const auto it = std::find(fs.begin(), fs.end(), face);
  if (it == fs.end()) throw MeshError(name("face", face) + " is not a face of " + name("cell", cell));
  return std::size_t(it - fs.begin());
}

double Mesh::divergence_closure_defect(std::size_t cell) const {
  const Cell& T = m_cells[cell];
  double flux = 0.0;
  double vol_abs = 0.0;
  for (std::size_t i = 0; i < T.faces.size(); ++i) {
    const Face& F = m_faces[T.faces[i]];
    flux += T.face_orientations[i] * F.area * (F.center - T.center).dot(F.normal);
    const std::size_t m = F.vertices.size();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& a = m_vertices[F.vertices[j]].coords;
      const Vec3& b = m_vertices[F.vertices[(j + 1) % m]].coords;
      vol_abs += std::abs((F.center - T.center).cross(a - T.center).dot(b - T.center)) / 6.0;
    }
  }
  return std::abs(flux - 3.0 * vol_abs) / (3.0 * vol_abs);
}

double Mesh::face_closure_defect(std::size_t face) const {
  const Face& F = m_faces[face];
  double flux = 0.0;
  double area_abs = 0.0;
  const std::size_t m = F.vertices.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Edge& E = m_edges[F.edges[i]];
    flux += F.edge_orientations[i] * E.length * (E.midpoint - F.center).dot(F.edge_normals[i]);
    const Vec3& a = m_vertices[F.vertices[i]].coords;
    const Vec3& b = m_vertices[F.vertices[(i + 1) % m]].coords;
    area_abs += 0.5 * std::abs((a - F.center).cross(b - F.center).dot(F.normal));
  }
  return std::abs(flux - 2.0 * area_abs) / (2.0 * area_abs);
}

Mesh Mesh::with_flipped_orientation(std::size_t cell, std::size_t local_face) const {
  Mesh copy(*this);
  copy.m_cells.at(cell).face_orientations.at(local_face) *= -1;
  return copy;
}

void Mesh::validate() const {
  for (const Face& F : m_faces) {
    if (face_closure_defect(F.id) > 1e-10) {
      throw MeshError(name("face", F.id) + " fails the 2D divergence closure check");
    }
    if (F.cells.size() == 2) {
      const Cell& A = m_cells[F.cells[0]];
      const Cell& B = m_cells[F.cells[1]];
      const int wa = A.face_orientations[local_face_index(A.id, F.id)];
      const int wb = B.face_orientations[local_face_index(B.id, F.id)];
      if (wa != -wb) {
        throw MeshError(name("face", F.id) + ": incident cells do not carry opposite orientations");
      }
    }
  }
  for (const Cell& T : m_cells) {
    if (divergence_closure_defect(T.id) > 1e-10) {
      throw MeshError(name("cell", T.id) + " fails the divergence closure check");
    }
    if (!point_in_cell(*this, T.id, T.center)) {
      throw MeshError(name("cell", T.id) + ": centroid is not inside the cell");
    }
  }
}

bool point_in_cell(const Mesh& mesh, std::size_t cell, const Vec3& x) {
  return inside_by_parity(mesh.faces(), mesh.vertices(), mesh.cell(cell).faces, x);
}

int orientation_sign(const Mesh& mesh, std::size_t cell, std::size_t face) {
  const Cell& T = mesh.cell(cell);
  const int probed = probe_orientation(mesh.faces(), mesh.vertices(), T.faces, T.diameter, cell, face);
  const int stored = T.face_orientations[mesh.local_face_index(cell, face)];
  if (probed != stored) {
    throw MeshError("orientation of " + name("face", face) + " in " + name("cell", cell) +
                    " disagrees with the stored value");
  }
  return probed;
}

}  // namespace sddr

namespace sddr {

namespace {

// Cells given as lists of vertex loops; shared faces are merged by their
// vertex set, keeping the loop of the first occurrence.
class DescriptionBuilder {
 public:
  explicit DescriptionBuilder(std::vector<Vec3> vertices) { m_desc.vertices = std::move(vertices); }

  void add_cell(const std::vector<std::vector<std::size_t>>& loops) {
    std::vector<std::size_t> faces;
    faces.reserve(loops.size());
    for (const auto& loop : loops) {
      std::vector<std::size_t> key = loop;
      std::sort(key.begin(), key.end());
      auto [it, inserted] = m_face_ids.emplace(std::move(key), m_desc.faces.size());
      if (inserted) m_desc.faces.push_back(loop);
      faces.push_back(it->second);
    }
    m_desc.cells.push_back(std::move(faces));
  }

  PolyhedralDescription take() { return std::move(m_desc); }

 private:
  PolyhedralDescription m_desc;
  std::map<std::vector<std::size_t>, std::size_t> m_face_ids;
};

std::vector<Vec3> lattice(std::size_t n) {
  std::vector<Vec3> v;
  v.reserve((n + 1) * (n + 1) * (n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t j = 0; j <= n; ++j) {
      for (std::size_t i = 0; i <= n; ++i) {
        v.emplace_back(double(i) / double(n), double(j) / double(n), double(k) / double(n));
      }
    }
  }
  return v;
}

}  // namespace

Mesh generate_cubic_mesh(std::size_t n) {
  if (n < 1) throw std::invalid_argument("generate_cubic_mesh: n must be >= 1");
  const std::size_t m = n + 1;
  auto id = [m](std::size_t i, std::size_t j, std::size_t k) { return i + m * (j + m * k); };
  DescriptionBuilder b(lattice(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        // loops counter-clockwise seen from +x, +y, +z respectively
        b.add_cell({
            {id(i, j, k), id(i, j + 1, k), id(i, j + 1, k + 1), id(i, j, k + 1)},
            {id(i + 1, j, k), id(i + 1, j + 1, k), id(i + 1, j + 1, k + 1), id(i + 1, j, k + 1)},
            {id(i, j, k), id(i, j, k + 1), id(i + 1, j, k + 1), id(i + 1, j, k)},
            {id(i, j + 1, k), id(i, j + 1, k + 1), id(i + 1, j + 1, k + 1), id(i + 1, j + 1, k)},
            {id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k)},
            {id(i, j, k + 1), id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)},
        });
      }
    }
  }
  return Mesh(b.take());
}

Mesh generate_tet_mesh(std::size_t n) {
  if (n < 1) throw std::invalid_argument("generate_tet_mesh: n must be >= 1");
  const std::size_t m = n + 1;
  auto id = [m](std::size_t i, std::size_t j, std::size_t k) { return i + m * (j + m * k); };
  static const std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  DescriptionBuilder b(lattice(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& p : perms) {
          std::array<std::size_t, 3> c = {i, j, k};
          std::array<std::size_t, 4> t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            c[p[s]] += 1;
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          b.add_cell({{t[0], t[1], t[2]}, {t[0], t[1], t[3]}, {t[0], t[2], t[3]}, {t[1], t[2], t[3]}});
        }
      }
    }
  }
  return Mesh(b.take());
}

namespace {

class Tokenizer {
 public:
  explicit Tokenizer(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      std::vector<std::string> toks;
      std::string tok;
      while (ls >> tok) toks.push_back(tok);
      if (!toks.empty()) m_lines.push_back({no, std::move(toks)});
    }
  }

  // next non-empty logical line
  const std::pair<int, std::vector<std::string>>& next(const char* what) {
    if (m_pos >= m_lines.size()) {
      throw MeshParseError(std::string("unexpected end of file, expected ") + what, m_last_line() + 1);
    }
    return m_lines[m_pos++];
  }

  bool done() const { return m_pos >= m_lines.size(); }
  int current_line() const { return m_pos < m_lines.size() ? m_lines[m_pos].first : m_last_line(); }

 private:
  int m_last_line() const { return m_lines.empty() ? 0 : m_lines.back().first; }
  std::vector<std::pair<int, std::vector<std::string>>> m_lines;
  std::size_t m_pos = 0;
};

std::size_t to_index(const std::string& s, int line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw MeshParseError("expected a non-negative integer, got '" + s + "'", line);
  }
  if (pos != s.size() || v < 0) throw MeshParseError("expected a non-negative integer, got '" + s + "'", line);
  return std::size_t(v);
}

double to_double(const std::string& s, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw MeshParseError("expected a real number, got '" + s + "'", line);
  }
  if (pos != s.size()) throw MeshParseError("expected a real number, got '" + s + "'", line);
  return v;
}

std::vector<std::size_t> read_list(const std::pair<int, std::vector<std::string>>& l, std::size_t bound,
                                   const char* what) {
  const auto& [line, toks] = l;
  const std::size_t m = to_index(toks[0], line);
  if (toks.size() != m + 1) {
    throw MeshParseError(std::string(what) + " declares " + std::to_string(m) + " entries but lists " +
                             std::to_string(toks.size() - 1),
                         line);
  }
  std::vector<std::size_t> ids(m);
  for (std::size_t i = 0; i < m; ++i) {
    ids[i] = to_index(toks[i + 1], line);
    if (ids[i] >= bound) throw MeshParseError(std::string(what) + " references out-of-range id " + toks[i + 1], line);
  }
  return ids;
}

}  // namespace

Mesh parse_poly3(const std::string& text) {
  Tokenizer tk(text);
  const auto& header = tk.next("header");
  if (header.second.size() != 2 || header.second[0] != "POLY3" || header.second[1] != "1") {
    throw MeshParseError("expected header 'POLY3 1'", header.first);
  }
  const auto& counts = tk.next("counts 'nV nF nT'");
  if (counts.second.size() != 3) throw MeshParseError("expected 'nV nF nT'", counts.first);
  const std::size_t nv = to_index(counts.second[0], counts.first);
  const std::size_t nf = to_index(counts.second[1], counts.first);
  const std::size_t nt = to_index(counts.second[2], counts.first);

  PolyhedralDescription d;
  d.vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto& l = tk.next("vertex line");
    if (l.second.size() != 3) throw MeshParseError("vertex line must have 3 coordinates", l.first);
    d.vertices.emplace_back(to_double(l.second[0], l.first), to_double(l.second[1], l.first),
                            to_double(l.second[2], l.first));
  }
  for (std::size_t i = 0; i < nf; ++i) d.faces.push_back(read_list(tk.next("face line"), nv, "face"));
  for (std::size_t i = 0; i < nt; ++i) d.cells.push_back(read_list(tk.next("cell line"), nf, "cell"));
  if (!tk.done()) throw MeshParseError("trailing content after the last cell", tk.current_line());
  return Mesh(std::move(d));
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_poly3(ss.str());
}

std::string write_poly3(const Mesh& mesh) {
  const auto& d = mesh.description();
  std::ostringstream out;
  out.precision(17);
  out << "POLY3 1\n" << d.vertices.size() << ' ' << d.faces.size() << ' ' << d.cells.size() << '\n';
  for (const Vec3& v : d.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : d.faces) {
    out << f.size();
    for (std::size_t v : f) out << ' ' << v;
    out << '\n';
  }
  for (const auto& c : d.cells) {
    out << c.size();
    for (std::size_t f : c) out << ' ' << f;
    out << '\n';
  }
  return out.str();
}

}  // namespace sddr

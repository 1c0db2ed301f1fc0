#include "sddr/ddr_spaces.hpp"

#include "sddr/quadrature.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace sddr {

const char* space_name(SpaceKind s) {
  switch (s) {
    case SpaceKind::Grad: return "GRAD";
    case SpaceKind::Curl: return "CURL";
    case SpaceKind::Div: return "DIV";
  }
  return "?";
}

SerendipityConfig SerendipityConfig::ddr_mode(const Mesh& mesh) {
  SerendipityConfig c;
  c.eta_face.assign(mesh.n_faces(), 2);
  c.eta_cell.assign(mesh.n_cells(), 2);
  return c;
}

void SerendipityConfig::validate(const Mesh& mesh) const {
  if (eta_face.size() != mesh.n_faces() || eta_cell.size() != mesh.n_cells()) {
    throw std::invalid_argument("SerendipityConfig: one eta per face and per cell is required");
  }
  for (int e : eta_face) {
    if (e < 2) throw std::invalid_argument("SerendipityConfig: eta_F must be >= 2");
    if (e != 2) throw std::invalid_argument("SerendipityConfig: only eta = 2 (no serendipity reduction) is implemented");
  }
  for (int e : eta_cell) {
    if (e < 2) throw std::invalid_argument("SerendipityConfig: eta_T must be >= 2");
    if (e != 2) throw std::invalid_argument("SerendipityConfig: only eta = 2 (no serendipity reduction) is implemented");
  }
}

DofLayout::DofLayout(SpaceKind s, int degree, const Mesh& mesh)
    : kind(s), k(degree), n_vertices(mesh.n_vertices()), n_edges(mesh.n_edges()), n_faces(mesh.n_faces()),
      n_cells(mesh.n_cells()) {
  if (k < 0) throw std::invalid_argument("DofLayout: k must be >= 0");
  auto u = [](int v) { return std::size_t(v); };
  switch (s) {
    case SpaceKind::Grad:
      vertex_size = 1;
      edge_size = u(dim_poly(1, k - 1));
      face_a = u(dim_poly(2, k - 1));
      cell_a = u(dim_poly(3, k - 1));
      break;
    case SpaceKind::Curl:
      edge_size = u(dim_poly(1, k));
      face_a = u(subspace_dim(2, Subspace::R, k - 1));
      face_b = u(subspace_dim(2, Subspace::Rc, k));
      cell_a = u(subspace_dim(3, Subspace::R, k - 1));
      cell_b = u(subspace_dim(3, Subspace::Rc, k));
      break;
    case SpaceKind::Div:
      face_a = u(dim_poly(2, k));
      cell_a = u(subspace_dim(3, Subspace::G, k - 1));
      cell_b = u(subspace_dim(3, Subspace::Gc, k));
      break;
  }
  face_size = face_a + face_b;
  cell_size = cell_a + cell_b;
}

std::size_t DofLayout::block_size(EntityKind e) const {
  switch (e) {
    case EntityKind::Vertex: return vertex_size;
    case EntityKind::Edge: return edge_size;
    case EntityKind::Face: return face_size;
    case EntityKind::Cell: return cell_size;
  }
  return 0;
}

std::size_t DofLayout::offset(EntityKind e, std::size_t id) const {
  switch (e) {
    case EntityKind::Vertex: return vertex_offset(id);
    case EntityKind::Edge: return edge_offset(id);
    case EntityKind::Face: return face_offset(id);
    case EntityKind::Cell: return cell_offset(id);
  }
  return 0;
}

std::uint64_t DofLayout::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (std::uint64_t v : {std::uint64_t(kind), std::uint64_t(k), std::uint64_t(n_vertices), std::uint64_t(n_edges),
                          std::uint64_t(n_faces), std::uint64_t(n_cells), std::uint64_t(vertex_size),
                          std::uint64_t(edge_size), std::uint64_t(face_a), std::uint64_t(face_b),
                          std::uint64_t(cell_a), std::uint64_t(cell_b)}) {
    mix(v);
  }
  return h;
}

DofVector::DofVector(const DofLayout& l, Eigen::VectorXd v) : layout(l), values(std::move(v)) {
  if (values.size() != Eigen::Index(layout.size())) throw std::invalid_argument("DofVector: length does not match the layout");
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p) { return std::filesystem::path(p.string() + ".json"); }

}  // namespace

void save_dof_vector(const DofVector& v, const std::filesystem::path& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < v.values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v.values(i));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    bin.write(buf, 8);
  }
  const DofLayout& l = v.layout;
  nlohmann::json j = {
      {"space", space_name(l.kind)},
      {"k", l.k},
      {"entities", {l.n_vertices, l.n_edges, l.n_faces, l.n_cells}},
      {"blocks", {l.vertex_size, l.edge_size, l.face_a, l.face_b, l.cell_a, l.cell_b}},
      {"size", l.size()},
      {"layout_hash", l.hash()},
      {"encoding", "float64-le"},
  };
  std::ofstream js(sidecar(path));
  if (!js) throw std::runtime_error("cannot write " + sidecar(path).string());
  js << j.dump(2) << '\n';
}

DofVector load_dof_vector(const std::filesystem::path& path) {
  std::ifstream js(sidecar(path));
  if (!js) throw std::runtime_error("missing layout sidecar " + sidecar(path).string());
  const nlohmann::json j = nlohmann::json::parse(js);
  DofLayout l;
  const std::string s = j.at("space");
  l.kind = s == "GRAD" ? SpaceKind::Grad : s == "CURL" ? SpaceKind::Curl : s == "DIV" ? SpaceKind::Div
                                                                                     : throw std::runtime_error("unknown space " + s);
  l.k = j.at("k");
  const auto& e = j.at("entities");
  l.n_vertices = e.at(0);
  l.n_edges = e.at(1);
  l.n_faces = e.at(2);
  l.n_cells = e.at(3);
  const auto& b = j.at("blocks");
  l.vertex_size = b.at(0);
  l.edge_size = b.at(1);
  l.face_a = b.at(2);
  l.face_b = b.at(3);
  l.cell_a = b.at(4);
  l.cell_b = b.at(5);
  l.face_size = l.face_a + l.face_b;
  l.cell_size = l.cell_a + l.cell_b;
  if (j.at("layout_hash").get<std::uint64_t>() != l.hash()) throw std::runtime_error("layout hash mismatch in " + sidecar(path).string());

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + path.string());
  Eigen::VectorXd values(Eigen::Index(l.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    char buf[8];
    if (!bin.read(buf, 8)) throw std::runtime_error("truncated DoF file " + path.string());
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    values(i) = std::bit_cast<double>(bits);
  }
  if (bin.peek() != std::char_traits<char>::eof()) throw std::runtime_error("DoF file longer than its layout: " + path.string());
  return DofVector(l, std::move(values));
}

DDRCore::DDRCore(const Mesh& mesh, int k) : DDRCore(mesh, k, SerendipityConfig::ddr_mode(mesh)) {}

DDRCore::DDRCore(const Mesh& mesh, int k, const SerendipityConfig& cfg)
    : m_mesh(&mesh), m_k(k), m_cfg(cfg), m_grad(SpaceKind::Grad, k, mesh), m_curl(SpaceKind::Curl, k, mesh),
      m_div(SpaceKind::Div, k, mesh) {
  m_cfg.validate(mesh);
  m_edge_basis.reserve(mesh.n_edges());
  m_edge.reserve(mesh.n_edges());
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    const EntityBasis& B = m_edge_basis.emplace_back(EntityBasis::for_edge(mesh, e, k + 1));
    m_edge.push_back({B.scalar_basis(k - 1), B.scalar_basis(k), B.scalar_basis(k + 1)});
  }
  m_face_basis.reserve(mesh.n_faces());
  m_face.reserve(mesh.n_faces());
  for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
    const EntityBasis& B = m_face_basis.emplace_back(EntityBasis::for_face(mesh, f, k + 2));
    FaceBases fb;
    fb.Pkm1 = B.scalar_basis(k - 1);
    fb.Pk = B.scalar_basis(k);
    fb.Pkp1 = B.scalar_basis(k + 1);
    fb.Pkp1_0 = B.zero_mean_basis(k + 1);
    fb.Pk2 = B.vector_basis(k);
    fb.Rkm1 = B.subspace_basis(Subspace::R, k - 1);
    fb.Rck = B.subspace_basis(Subspace::Rc, k);
    fb.Rk = B.subspace_basis(Subspace::R, k);
    fb.Rckp2 = B.subspace_basis(Subspace::Rc, k + 2);
    m_face.push_back(std::move(fb));
  }
  m_cell_basis.reserve(mesh.n_cells());
  m_cell.reserve(mesh.n_cells());
  for (std::size_t t = 0; t < mesh.n_cells(); ++t) {
    const EntityBasis& B = m_cell_basis.emplace_back(EntityBasis::for_cell(mesh, t, k + 2));
    CellBases cb;
    cb.Pkm1 = B.scalar_basis(k - 1);
    cb.Pk = B.scalar_basis(k);
    cb.Pkp1 = B.scalar_basis(k + 1);
    cb.Pkp1_0 = B.zero_mean_basis(k + 1);
    cb.Pk3 = B.vector_basis(k);
    cb.Rkm1 = B.subspace_basis(Subspace::R, k - 1);
    cb.Rck = B.subspace_basis(Subspace::Rc, k);
    cb.Gkm1 = B.subspace_basis(Subspace::G, k - 1);
    cb.Gck = B.subspace_basis(Subspace::Gc, k);
    cb.Rk = B.subspace_basis(Subspace::R, k);
    cb.Rckp2 = B.subspace_basis(Subspace::Rc, k + 2);
    cb.Gckp1 = B.subspace_basis(Subspace::Gc, k + 1);
    m_cell.push_back(std::move(cb));
  }
}

const DofLayout& DDRCore::layout(SpaceKind s) const {
  switch (s) {
    case SpaceKind::Grad: return m_grad;
    case SpaceKind::Curl: return m_curl;
    case SpaceKind::Div: return m_div;
  }
  return m_grad;
}

std::vector<std::size_t> DDRCore::local_dofs(SpaceKind s, EntityKind e, std::size_t id) const {
  const DofLayout& l = layout(s);
  std::vector<std::size_t> out;
  auto add = [&](EntityKind kind, std::size_t i) {
    const std::size_t n = l.block_size(kind);
    const std::size_t o = l.offset(kind, i);
    for (std::size_t j = 0; j < n; ++j) out.push_back(o + j);
  };
  switch (e) {
    case EntityKind::Vertex:
      add(EntityKind::Vertex, id);
      break;
    case EntityKind::Edge: {
      const Edge& E = m_mesh->edge(id);
      for (std::size_t v : E.vertices) add(EntityKind::Vertex, v);
      add(EntityKind::Edge, id);
      break;
    }
    case EntityKind::Face: {
      const Face& F = m_mesh->face(id);
      for (std::size_t v : F.vertices) add(EntityKind::Vertex, v);
      for (std::size_t ed : F.edges) add(EntityKind::Edge, ed);
      add(EntityKind::Face, id);
      break;
    }
    case EntityKind::Cell: {
      const Cell& T = m_mesh->cell(id);
      for (std::size_t v : T.vertices) add(EntityKind::Vertex, v);
      for (std::size_t ed : T.edges) add(EntityKind::Edge, ed);
      for (std::size_t f : T.faces) add(EntityKind::Face, f);
      add(EntityKind::Cell, id);
      break;
    }
  }
  return out;
}

std::vector<std::size_t> DDRCore::extension(const std::vector<std::size_t>& sub,
                                            const std::vector<std::size_t>& dofs_of_parent) {
  std::unordered_map<std::size_t, std::size_t> pos;
  pos.reserve(dofs_of_parent.size());
  for (std::size_t i = 0; i < dofs_of_parent.size(); ++i) pos.emplace(dofs_of_parent[i], i);
  std::vector<std::size_t> out(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto it = pos.find(sub[i]);
    if (it == pos.end()) throw std::logic_error("extension: DoF not present in the parent entity");
    out[i] = it->second;
  }
  return out;
}

namespace {

int default_degree(const DDRCore& core, int degree) { return degree >= 0 ? degree : 2 * core.degree() + 4; }

void put(DofVector& v, std::size_t offset, const Eigen::VectorXd& block) {
  v.values.segment(Eigen::Index(offset), block.size()) = block;
}

Eigen::VectorXd sample(const QuadratureRule& r, const std::function<double(const Vec3&)>& f) {
  Eigen::VectorXd s(Eigen::Index(r.size()));
  for (std::size_t q = 0; q < r.size(); ++q) s(Eigen::Index(q)) = f(r.points[q]);
  return s;
}

std::vector<Eigen::VectorXd> sample3(const QuadratureRule& r, const VectorField& f) {
  std::vector<Eigen::VectorXd> s(3, Eigen::VectorXd(Eigen::Index(r.size())));
  for (std::size_t q = 0; q < r.size(); ++q) {
    const Vec3 v = f(r.points[q]);
    for (int j = 0; j < 3; ++j) s[std::size_t(j)](Eigen::Index(q)) = v(j);
  }
  return s;
}

}  // namespace

DofVector interpolate_grad(const DDRCore& core, const ScalarField& q, int degree) {
  const Mesh& m = core.mesh();
  const int d = default_degree(core, degree);
  const DofLayout& l = core.layout(SpaceKind::Grad);
  DofVector out(l);
  for (std::size_t i = 0; i < m.n_vertices(); ++i) out.values(Eigen::Index(l.vertex_offset(i))) = q(m.vertex(i).coords);
  if (core.degree() == 0) return out;
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    const QuadratureRule r = edge_rule(m, e, d);
    put(out, l.edge_offset(e), core.edge_basis(e).project(core.edge_bases(e).Pkm1, r, {sample(r, q)}));
  }
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    const QuadratureRule r = face_rule(m, f, d);
    put(out, l.face_offset(f), core.face_basis(f).project(core.face_bases(f).Pkm1, r, {sample(r, q)}));
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const QuadratureRule r = cell_rule(m, t, d);
    put(out, l.cell_offset(t), core.cell_basis(t).project(core.cell_bases(t).Pkm1, r, {sample(r, q)}));
  }
  return out;
}

DofVector interpolate_curl(const DDRCore& core, const VectorField& v, int degree) {
  const Mesh& m = core.mesh();
  const int d = default_degree(core, degree);
  const DofLayout& l = core.layout(SpaceKind::Curl);
  DofVector out(l);
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    const QuadratureRule r = edge_rule(m, e, d);
    const Vec3 t = m.edge(e).tangent;
    put(out, l.edge_offset(e), core.edge_basis(e).project(core.edge_bases(e).Pk, r, {sample(r, [&](const Vec3& x) { return v(x).dot(t); })}));
  }
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    const QuadratureRule r = face_rule(m, f, d);
    const auto s = sample3(r, v);
    const FaceBases& fb = core.face_bases(f);
    Eigen::VectorXd block(Eigen::Index(l.face_size));
    block << core.face_basis(f).project(fb.Rkm1, r, s), core.face_basis(f).project(fb.Rck, r, s);
    put(out, l.face_offset(f), block);
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const QuadratureRule r = cell_rule(m, t, d);
    const auto s = sample3(r, v);
    const CellBases& cb = core.cell_bases(t);
    Eigen::VectorXd block(Eigen::Index(l.cell_size));
    block << core.cell_basis(t).project(cb.Rkm1, r, s), core.cell_basis(t).project(cb.Rck, r, s);
    put(out, l.cell_offset(t), block);
  }
  return out;
}

DofVector interpolate_div(const DDRCore& core, const VectorField& w, int degree) {
  const Mesh& m = core.mesh();
  const int d = default_degree(core, degree);
  const DofLayout& l = core.layout(SpaceKind::Div);
  DofVector out(l);
  for (std::size_t f = 0; f < m.n_faces(); ++f) {
    const QuadratureRule r = face_rule(m, f, d);
    const Vec3 n = m.face(f).normal;
    put(out, l.face_offset(f), core.face_basis(f).project(core.face_bases(f).Pk, r, {sample(r, [&](const Vec3& x) { return w(x).dot(n); })}));
  }
  for (std::size_t t = 0; t < m.n_cells(); ++t) {
    const QuadratureRule r = cell_rule(m, t, d);
    const auto s = sample3(r, w);
    const CellBases& cb = core.cell_bases(t);
    Eigen::VectorXd block(Eigen::Index(l.cell_size));
    block << core.cell_basis(t).project(cb.Gkm1, r, s), core.cell_basis(t).project(cb.Gck, r, s);
    put(out, l.cell_offset(t), block);
  }
  return out;
}

Eigen::VectorXd restrict_to(const DDRCore& core, const DofVector& v, EntityKind e, std::size_t id) {
  const auto dofs = core.local_dofs(v.layout.kind, e, id);
  Eigen::VectorXd r(Eigen::Index(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) r(Eigen::Index(i)) = v.values(Eigen::Index(dofs[i]));
  return r;
}

void scatter_add(const DDRCore& core, DofVector& v, EntityKind e, std::size_t id, const Eigen::VectorXd& local) {
  const auto dofs = core.local_dofs(v.layout.kind, e, id);
  if (Eigen::Index(dofs.size()) != local.size()) throw std::invalid_argument("scatter_add: local size mismatch");
  for (std::size_t i = 0; i < dofs.size(); ++i) v.values(Eigen::Index(dofs[i])) += local(Eigen::Index(i));
}

std::vector<bool> boundary_subspace_mask(const DDRCore& core, SpaceKind s, const BoundaryPredicate& bc) {
  const Mesh& m = core.mesh();
  const DofLayout& l = core.layout(s);
  std::vector<bool> mask(l.size(), false);
  for (const Face& F : m.faces()) {
    if (!F.boundary) continue;
    const BoundaryType b = bc(F);
    if (b == BoundaryType::Unclassified) throw BoundaryError("boundary face " + std::to_string(F.id) + " is not classified");
    if (b != BoundaryType::Essential || s == SpaceKind::Div) continue;
    for (std::size_t g : core.local_dofs(s, EntityKind::Face, F.id)) mask[g] = true;
  }
  return mask;
}

}  // namespace sddr

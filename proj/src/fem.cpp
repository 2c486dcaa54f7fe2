#include "wg/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "wg/errors.hpp"
#include "wg/numeric.hpp"

namespace wg::fem {

using geometry::Mesh;
using geometry::Vec2;

namespace {

// Dunavant degree-5 rule, exact for the P2 stiffness (degree 2) and mass (degree 4).
struct QPoint {
  double l0, l1, l2, w;
};
const QPoint kQuad[7] = {
    {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827},
};

// 6-point Gauss-Legendre on [0,1] for edge traces against the cosine modes.
const double kGL6x[6] = {0.033765242898424, 0.169395306766868, 0.380690406958402,
                         0.619309593041598, 0.830604693233132, 0.966234757101576};
const double kGL6w[6] = {0.085662246189585, 0.180380786524069, 0.233956967286345,
                         0.233956967286345, 0.180380786524069, 0.085662246189585};

std::vector<std::array<int, 2>> build_edges(const Mesh& mesh,
                                            std::map<std::pair<int, int>, int>& edge_id) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      pairs.emplace_back(std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3]));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<std::array<int, 2>> edges(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    edges[i] = {pairs[i].first, pairs[i].second};
    edge_id[pairs[i]] = static_cast<int>(i);
  }
  return edges;
}

}  // namespace

SparseOperatorPair assemble(const Mesh& mesh, int order) {
  if (order != 1 && order != 2) throw ConfigError("element order must be 1 or 2");
  SparseOperatorPair ops;
  ops.order = order;
  ops.num_vertices = static_cast<int>(mesh.vertices.size());

  std::map<std::pair<int, int>, int> edge_id;
  ops.edge_vertices = build_edges(mesh, edge_id);
  ops.num_edges = static_cast<int>(ops.edge_vertices.size());
  int ndof = ops.dof_count();

  double scale = 0.0;
  for (const auto& t : mesh.triangles) {
    Vec2 p = mesh.vertices[t[0]], q = mesh.vertices[t[1]], r = mesh.vertices[t[2]];
    scale = std::max(scale, std::abs(cross(q - p, r - p)));
  }

  std::vector<Eigen::Triplet<double>> tk, tm;
  int nloc = order == 1 ? 3 : 6;
  tk.reserve(mesh.triangles.size() * nloc * nloc);
  tm.reserve(mesh.triangles.size() * nloc * nloc);

  for (const auto& t : mesh.triangles) {
    Vec2 p0 = mesh.vertices[t[0]], p1 = mesh.vertices[t[1]], p2 = mesh.vertices[t[2]];
    double det = cross(p1 - p0, p2 - p0);
    if (det <= 1e-14 * scale)
      throw DegenerateTriangle("triangle area " + std::to_string(det / 2) + " below tolerance");
    double area = det / 2.0;
    // gradients of the barycentric coordinates
    Vec2 gl[3] = {{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                  {(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                  {(p0.y - p1.y) / det, (p1.x - p0.x) / det}};

    int dof[6];
    for (int i = 0; i < 3; ++i) dof[i] = t[i];
    if (order == 2) {
      for (int e = 0; e < 3; ++e) {
        int a = t[(e + 1) % 3], b = t[(e + 2) % 3];
        dof[3 + e] = ops.num_vertices + edge_id[{std::min(a, b), std::max(a, b)}];
      }
    }

    double ke[6][6] = {}, me[6][6] = {};
    for (const QPoint& qp : kQuad) {
      double L[3] = {qp.l0, qp.l1, qp.l2};
      double phi[6];
      Vec2 grad[6];
      if (order == 1) {
        for (int i = 0; i < 3; ++i) {
          phi[i] = L[i];
          grad[i] = gl[i];
        }
      } else {
        for (int i = 0; i < 3; ++i) {
          phi[i] = L[i] * (2 * L[i] - 1);
          grad[i] = (4 * L[i] - 1) * gl[i];
        }
        for (int e = 0; e < 3; ++e) {
          int i = (e + 1) % 3, j = (e + 2) % 3;
          phi[3 + e] = 4 * L[i] * L[j];
          grad[3 + e] = 4 * L[i] * gl[j] + 4 * L[j] * gl[i];
        }
      }
      double w = qp.w * area;
      for (int i = 0; i < nloc; ++i)
        for (int j = i; j < nloc; ++j) {
          ke[i][j] += w * dot(grad[i], grad[j]);
          me[i][j] += w * phi[i] * phi[j];
        }
    }
    for (int i = 0; i < nloc; ++i)
      for (int j = i; j < nloc; ++j) {
        tk.emplace_back(dof[i], dof[j], ke[i][j]);
        tm.emplace_back(dof[i], dof[j], me[i][j]);
        if (i != j) {
          tk.emplace_back(dof[j], dof[i], ke[i][j]);
          tm.emplace_back(dof[j], dof[i], me[i][j]);
        }
      }
  }
  ops.stiffness.resize(ndof, ndof);
  ops.mass.resize(ndof, ndof);
  ops.stiffness.setFromTriplets(tk.begin(), tk.end());
  ops.mass.setFromTriplets(tm.begin(), tm.end());
  ops.stiffness.makeCompressed();
  ops.mass.makeCompressed();
  return ops;
}

TraceGeometry TraceGeometry::build(const Mesh& mesh, const SparseOperatorPair& ops) {
  std::map<std::pair<int, int>, int> edge_id;
  for (int i = 0; i < ops.num_edges; ++i)
    edge_id[{ops.edge_vertices[i][0], ops.edge_vertices[i][1]}] = i;

  TraceGeometry tg;
  tg.port_edges.resize(mesh.ports.size());
  for (size_t k = 0; k < mesh.ports.size(); ++k) {
    auto arcs = mesh.port_arclength(static_cast<int>(k));
    const auto& chain = mesh.ports[k].chain;
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      PortEdgeDofs pe;
      pe.v0 = chain[i];
      pe.v1 = chain[i + 1];
      pe.y0 = arcs[i];
      pe.y1 = arcs[i + 1];
      if (ops.order == 2) {
        auto it = edge_id.find({std::min(pe.v0, pe.v1), std::max(pe.v0, pe.v1)});
        if (it == edge_id.end())
          throw InvariantViolation("conforming", "port edge absent from the triangulation");
        pe.vmid = ops.num_vertices + it->second;
      }
      tg.port_edges[k].push_back(pe);
    }
  }
  return tg;
}

namespace {

// quadratic (or linear) trace shape functions on an edge, parameter s in [0,1]
inline void edge_shapes(int order, double s, double out[3]) {
  if (order == 1) {
    out[0] = 1 - s;
    out[1] = s;
    out[2] = 0;
  } else {
    out[0] = (1 - s) * (1 - 2 * s);
    out[1] = s * (2 * s - 1);
    out[2] = 4 * s * (1 - s);
  }
}

}  // namespace

Eigen::VectorXd boundary_trace_coeffs(const Eigen::VectorXd& u, const TraceGeometry& tg,
                                      const modes::TransverseBasis& basis) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis.total());
  for (int g = 0; g < basis.total(); ++g) {
    const auto& gm = basis.mode(g);
    double acc = 0.0;
    for (const PortEdgeDofs& pe : tg.port_edges[gm.port]) {
      double len = pe.y1 - pe.y0;
      for (int q = 0; q < 6; ++q) {
        double s = kGL6x[q];
        double shp[3];
        edge_shapes(pe.vmid >= 0 ? 2 : 1, s, shp);
        double uval = shp[0] * u[pe.v0] + shp[1] * u[pe.v1] + (pe.vmid >= 0 ? shp[2] * u[pe.vmid] : 0.0);
        double y = pe.y0 + s * len;
        acc += kGL6w[q] * len * uval * basis.nu(gm.port, gm.local, y);
      }
    }
    c[g] = acc;
  }
  return c;
}

Eigen::VectorXd mode_load_vector(int g, int dof_count, const TraceGeometry& tg,
                                 const modes::TransverseBasis& basis) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dof_count);
  const auto& gm = basis.mode(g);
  for (const PortEdgeDofs& pe : tg.port_edges[gm.port]) {
    double len = pe.y1 - pe.y0;
    for (int q = 0; q < 6; ++q) {
      double s = kGL6x[q];
      double shp[3];
      edge_shapes(pe.vmid >= 0 ? 2 : 1, s, shp);
      double y = pe.y0 + s * len;
      double nu = basis.nu(gm.port, gm.local, y);
      rhs[pe.v0] += kGL6w[q] * len * nu * shp[0];
      rhs[pe.v1] += kGL6w[q] * len * nu * shp[1];
      if (pe.vmid >= 0) rhs[pe.vmid] += kGL6w[q] * len * nu * shp[2];
    }
  }
  return rhs;
}

EigenBasis solve_neumann_eigenbasis(const SparseOperatorPair& ops, const Mesh& mesh,
                                    const modes::TransverseBasis& basis, int M,
                                    const EigenSolveOptions& opts) {
  if (M < 1 || M > ops.dof_count() - 1)
    throw ConfigError("eigenvalue count must lie in [1, dof-1]");
  double area = mesh.area();
  double density_hint = area / (4.0 * std::numbers::pi);  // Weyl: counts ~ area*e/(4 pi)
  auto [vals, vecs] = lowest_eigenpairs(ops.stiffness, ops.mass, M, density_hint, opts);

  TraceGeometry tg = TraceGeometry::build(mesh, ops);
  EigenBasis eb;
  eb.eigenvalues = vals;
  eb.trace_coeffs.resize(M, basis.total());
  for (int m = 0; m < M; ++m)
    eb.trace_coeffs.row(m) = boundary_trace_coeffs(vecs.col(m), tg, basis).transpose();
  eb.meta.mesh_fingerprint = mesh.fingerprint();
  eb.meta.M = M;
  eb.meta.P_tot = basis.total();
  eb.meta.order = ops.order;

  double scale = std::max(1.0, std::abs(vals[M - 1]));
  if (std::abs(vals[0]) > 1e-7 * scale)
    throw NotConverged("lowest eigenvalue " + std::to_string(vals[0]) +
                       " is not the constant mode");
  for (int m = 1; m < M; ++m)
    if (vals[m] < vals[m - 1] - 1e-9 * scale) throw NotConverged("eigenvalues not nondecreasing");
  return eb;
}

Eigen::VectorXd helmholtz_neumann_solve(const SparseOperatorPair& ops, const Mesh& mesh,
                                        const modes::TransverseBasis& basis, double lambda,
                                        const Eigen::VectorXd& g) {
  if (g.size() != basis.total()) throw ConfigError("mode coefficient vector has wrong length");
  SpMat A = ops.stiffness - lambda * ops.mass;
  TraceGeometry tg = TraceGeometry::build(mesh, ops);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ops.dof_count());
  for (int gidx = 0; gidx < basis.total(); ++gidx)
    if (g[gidx] != 0.0) rhs += g[gidx] * mode_load_vector(gidx, ops.dof_count(), tg, basis);

  Eigen::VectorXd u;
  if (lambda < 0.0) {
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("factorization failed");
    u = ldlt.solve(rhs);
  } else {
    Eigen::SparseLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success)
      throw SingularSystem("lambda appears to coincide with an interior Neumann eigenvalue");
    u = lu.solve(rhs);
  }
  double res = (A * u - rhs).norm();
  double nr = rhs.norm();
  if (nr > 0 && res > 1e-8 * nr)
    throw SingularSystem("Helmholtz solve residual " + std::to_string(res / nr) +
                         "; lambda is too close to an interior eigenvalue");
  return boundary_trace_coeffs(u, tg, basis);
}

Eigen::MatrixXd direct_ndmap(const SparseOperatorPair& ops, const Mesh& mesh,
                             const modes::TransverseBasis& basis, double lambda) {
  SpMat A = ops.stiffness - lambda * ops.mass;
  TraceGeometry tg = TraceGeometry::build(mesh, ops);
  int P = basis.total();
  Eigen::MatrixXd rhs(ops.dof_count(), P);
  for (int g = 0; g < P; ++g) rhs.col(g) = mode_load_vector(g, ops.dof_count(), tg, basis);

  Eigen::MatrixXd sol(ops.dof_count(), P);
  if (lambda < 0.0) {
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("factorization failed");
    sol = ldlt.solve(rhs);
  } else {
    Eigen::SparseLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success)
      throw SingularSystem("auxiliary point coincides with an interior eigenvalue");
    sol = lu.solve(rhs);
  }
  Eigen::MatrixXd N(P, P);
  for (int g = 0; g < P; ++g) N.col(g) = boundary_trace_coeffs(sol.col(g), tg, basis);
  return N;
}

void write_basis(const EigenBasis& basis, const std::string& path) {
  std::ostringstream out;
  out << "wgbasis 1\n";
  out << "fingerprint " << basis.meta.mesh_fingerprint << "\n";
  out << "M " << basis.meta.M << "\n";
  out << "P_tot " << basis.meta.P_tot << "\n";
  out << "order " << basis.meta.order << "\n";
  out << "params " << (basis.meta.params.empty() ? "-" : basis.meta.params) << "\n";
  out << "eigenvalues\n";
  for (int m = 0; m < basis.meta.M; ++m) out << fmt17(basis.eigenvalues[m]) << "\n";
  out << "trace\n";
  for (int m = 0; m < basis.meta.M; ++m) {
    for (int g = 0; g < basis.meta.P_tot; ++g) {
      if (g) out << " ";
      out << fmt17(basis.trace_coeffs(m, g));
    }
    out << "\n";
  }
  std::ofstream f(path);
  if (!f) throw Error("cannot write basis cache '" + path + "'");
  f << out.str();
}

EigenBasis read_basis(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open basis cache '" + path + "'");
  std::string magic, version;
  f >> magic >> version;
  if (magic != "wgbasis" || version != "1")
    throw Error("corrupted basis cache '" + path + "': bad header");
  EigenBasis eb;
  std::string key;
  f >> key >> eb.meta.mesh_fingerprint;
  if (key != "fingerprint") throw Error("corrupted basis cache '" + path + "': missing fingerprint");
  f >> key >> eb.meta.M;
  if (key != "M" || eb.meta.M <= 0) throw Error("corrupted basis cache '" + path + "': bad M");
  f >> key >> eb.meta.P_tot;
  if (key != "P_tot" || eb.meta.P_tot <= 0)
    throw Error("corrupted basis cache '" + path + "': bad P_tot");
  f >> key >> eb.meta.order;
  if (key != "order") throw Error("corrupted basis cache '" + path + "': bad order");
  f >> key >> eb.meta.params;
  if (key != "params") throw Error("corrupted basis cache '" + path + "': bad params");
  f >> key;
  if (key != "eigenvalues") throw Error("corrupted basis cache '" + path + "': missing eigenvalues");
  eb.eigenvalues.resize(eb.meta.M);
  for (int m = 0; m < eb.meta.M; ++m)
    if (!(f >> eb.eigenvalues[m])) throw Error("corrupted basis cache '" + path + "': eigenvalues");
  f >> key;
  if (key != "trace") throw Error("corrupted basis cache '" + path + "': missing trace matrix");
  eb.trace_coeffs.resize(eb.meta.M, eb.meta.P_tot);
  for (int m = 0; m < eb.meta.M; ++m)
    for (int g = 0; g < eb.meta.P_tot; ++g)
      if (!(f >> eb.trace_coeffs(m, g))) throw Error("corrupted basis cache '" + path + "': trace");
  return eb;
}

}  // namespace wg::fem

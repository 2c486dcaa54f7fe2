#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "wg/geometry.hpp"
#include "wg/modes.hpp"

namespace wg::fem {

using SpMat = Eigen::SparseMatrix<double>;

// Lagrange P1/P2 discretization of the (positive) Neumann Laplacian on X.
struct SparseOperatorPair {
  SpMat stiffness;  // symmetric positive semidefinite, constants in the kernel
  SpMat mass;       // symmetric positive definite
  int order = 2;    // element order (1 or 2)
  int num_vertices = 0;
  int num_edges = 0;  // midpoint dofs follow the vertex dofs for order 2
  // dof indices of the edge midpoints keyed by sorted vertex pair, in the
  // deterministic edge ordering used during assembly
  std::vector<std::array<int, 2>> edge_vertices;

  int dof_count() const { return order == 1 ? num_vertices : num_vertices + num_edges; }
};

SparseOperatorPair assemble(const geometry::Mesh& mesh, int order = 2);

// Dofs and arc coordinates of one port edge, for boundary-trace quadrature.
struct PortEdgeDofs {
  int v0 = 0, v1 = 0;   // endpoint vertex dofs, in chain order
  int vmid = -1;        // midpoint dof (order 2 only)
  double y0 = 0, y1 = 0;  // arc-length positions along the port
};

// Per-port trace layout of a discretization.
struct TraceGeometry {
  std::vector<std::vector<PortEdgeDofs>> port_edges;
  static TraceGeometry build(const geometry::Mesh& mesh, const SparseOperatorPair& ops);
};

// Inner products <u|_Gamma, nu_g> for all global modes g of the transverse basis.
Eigen::VectorXd boundary_trace_coeffs(const Eigen::VectorXd& u, const TraceGeometry& tg,
                                      const modes::TransverseBasis& basis);

// Load vector with Neumann data nu_g on the owning port, zero elsewhere.
Eigen::VectorXd mode_load_vector(int g, int dof_count, const TraceGeometry& tg,
                                 const modes::TransverseBasis& basis);

struct EigenBasisMeta {
  std::string mesh_fingerprint;
  int M = 0;
  int P_tot = 0;
  int order = 2;
  std::string params;  // free-form generation parameters
};

// The one-time expensive computation: lowest Neumann eigenvalues of X with the
// boundary traces of their eigenfunctions against the transverse modes.
struct EigenBasis {
  Eigen::VectorXd eigenvalues;   // ascending, e_1 ~ 0
  Eigen::MatrixXd trace_coeffs;  // M x P_tot
  EigenBasisMeta meta;
};

struct EigenSolveOptions {
  double tol = 1e-10;          // ARPACK convergence tolerance
  double residual_tol = 1e-9;  // acceptance bound on ||K u - e M u|| / ||u||, relative
  int max_window = 110;        // eigenvalues per spectrum slice
  bool verbose = false;
};

EigenBasis solve_neumann_eigenbasis(const SparseOperatorPair& ops, const geometry::Mesh& mesh,
                                    const modes::TransverseBasis& basis, int M,
                                    const EigenSolveOptions& opts = {});

// Lowest `count` eigenpairs of the pencil (K, M) by shift-invert with spectrum
// slicing; returns (values, vectors), vectors M-orthonormal.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> lowest_eigenpairs(const SpMat& K, const SpMat& M,
                                                              int count, double density_hint,
                                                              const EigenSolveOptions& opts);

// Solves the Helmholtz Neumann problem (Delta - lambda) phi = 0 with boundary
// derivative sum_g g[g] nu_g on Gamma, zero on Sigma; returns <phi|_Gamma, nu_l>.
Eigen::VectorXd helmholtz_neumann_solve(const SparseOperatorPair& ops, const geometry::Mesh& mesh,
                                        const modes::TransverseBasis& basis, double lambda,
                                        const Eigen::VectorXd& g);

// Full Neumann-to-Dirichlet matrix at a real auxiliary point (one factorization,
// P_tot solves).
Eigen::MatrixXd direct_ndmap(const SparseOperatorPair& ops, const geometry::Mesh& mesh,
                             const modes::TransverseBasis& basis, double lambda);

// EigenBasis cache, ASCII "wgbasis 1" with 17 significant digits.
void write_basis(const EigenBasis& basis, const std::string& path);
EigenBasis read_basis(const std::string& path);

}  // namespace wg::fem

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wg/ndmap.hpp"

namespace wg::scattering {

using modes::BranchRule;
using modes::SheetIndex;
using modes::TransverseBasis;

struct Diagnostics {
  Eigen::VectorXd null_sigmas;  // smallest |J|+1 singular values of L, ascending
  double kernel_gap = 0.0;      // sigma_|J| / sigma_{|J|+1} in ascending order
  double tau_cond = 0.0;        // conditioning of the Dirichlet-frame inversion
  double extraction_residual = 0.0;
  double deriv_cond = 0.0;      // conditioning of the order-m correction solve
  double deriv_residual = 0.0;  // internal consistency of the derivative data
  double truncation_defect = -1.0;
  bool truncation_warning = false;
};

// S_J(lambda) with derivatives S^(1)..S^(n) in the fixed global mode ordering
// restricted to J.
struct ScatteringDerivatives {
  cplx lambda;
  SheetIndex J;
  Eigen::MatrixXcd S;
  std::vector<Eigen::MatrixXcd> derivs;
  Diagnostics diag;
};

struct EngineOptions {
  double ambiguous_kernel_threshold = 1e-2;
  double truncation_tol = 1e-6;
  int truncation_drop = 5;  // modes removed per port by the truncation monitor
};

// Evaluation engine bound to one domain: transverse basis + cached eigomdata
// + the directly computed auxiliary-point map for series acceleration.
class Engine {
 public:
  Engine(TransverseBasis tbasis, fem::EigenBasis ebasis, Eigen::MatrixXd direct_at_aux,
         double aux_lambda, EngineOptions opts = {});
  // plain-series engine (no acceleration); used by tests and cheap scans
  Engine(TransverseBasis tbasis, fem::EigenBasis ebasis, EngineOptions opts = {});

  const TransverseBasis& transverse() const { return tbasis_; }
  const fem::EigenBasis& eigenbasis() const { return ebasis_; }
  bool accelerated() const { return has_direct_; }
  double aux_lambda() const { return aux_lambda_; }

  Eigen::MatrixXcd ndmatrix(cplx lambda) const;

  // L = P (N - ext_diag^{-1}): rows of modes outside J carry the matching
  // condition, rows of J modes are zero (the projection kernel).
  Eigen::MatrixXcd matching_matrix(cplx lambda, const SheetIndex& J,
                                   BranchRule rule = BranchRule::SheetDefault) const;

  ScatteringDerivatives s_matrix(cplx lambda, const SheetIndex& J,
                                 BranchRule rule = BranchRule::SheetDefault) const;
  ScatteringDerivatives s_derivatives(cplx lambda, const SheetIndex& J, int n,
                                      BranchRule rule = BranchRule::SheetDefault) const;

  // trace of S^{-1} S' (the argument-principle integrand)
  cplx log_derivative_trace(cplx lambda, const SheetIndex& J,
                            BranchRule rule = BranchRule::SheetDefault) const;

  // smallest singular value of the evanescent-evanescent block of L at real
  // lambda (embedded-eigenvalue indicator)
  double embedded_indicator(double lambda, const SheetIndex& J) const;

  // recompute S with fewer modes per port and report the largest entry change
  double truncation_defect(cplx lambda, const SheetIndex& J,
                           BranchRule rule = BranchRule::SheetDefault) const;

  const EngineOptions& options() const { return opts_; }

 private:
  TransverseBasis tbasis_;
  fem::EigenBasis ebasis_;
  ndmap::NDMap direct_;
  bool has_direct_ = false;
  double aux_lambda_ = -1.0;
  EngineOptions opts_;
};

// Columns spanning the numerical null space of L (the expected_dim smallest
// right singular vectors) plus the ascending singular values; throws
// AmbiguousKernel when the spectral gap is too weak.
std::pair<Eigen::MatrixXcd, Eigen::VectorXd> null_space(const Eigen::MatrixXcd& L,
                                                        int expected_dim,
                                                        double ambiguous_threshold = 1e-2);

}  // namespace wg::scattering

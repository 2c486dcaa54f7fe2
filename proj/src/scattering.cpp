#include "wg/scattering.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

#include "wg/errors.hpp"

namespace wg::scattering {

namespace {

Eigen::MatrixXcd select_rows(const Eigen::MatrixXcd& A, const std::vector<int>& idx) {
  Eigen::MatrixXcd out(idx.size(), A.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = A.row(idx[i]);
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

Engine::Engine(TransverseBasis tbasis, fem::EigenBasis ebasis, Eigen::MatrixXd direct_at_aux,
               double aux_lambda, EngineOptions opts)
    : tbasis_(std::move(tbasis)), ebasis_(std::move(ebasis)), opts_(opts) {
  if (ebasis_.meta.P_tot != tbasis_.total())
    throw ConfigError("eigenbasis and transverse basis disagree on the mode count");
  direct_.lambda = aux_lambda;
  direct_.aux_lambda = aux_lambda;
  direct_.matrix = direct_at_aux.cast<cplx>();
  direct_.M_used = ebasis_.meta.M;
  has_direct_ = true;
  aux_lambda_ = aux_lambda;
}

Engine::Engine(TransverseBasis tbasis, fem::EigenBasis ebasis, EngineOptions opts)
    : tbasis_(std::move(tbasis)), ebasis_(std::move(ebasis)), opts_(opts) {
  if (ebasis_.meta.P_tot != tbasis_.total())
    throw ConfigError("eigenbasis and transverse basis disagree on the mode count");
}

Eigen::MatrixXcd Engine::ndmatrix(cplx lambda) const {
  if (has_direct_) return ndmap::accelerated_nd(ebasis_, direct_, lambda).matrix;
  return ndmap::lm_series(ebasis_, lambda).matrix;
}

Eigen::MatrixXcd Engine::matching_matrix(cplx lambda, const SheetIndex& J,
                                         BranchRule rule) const {
  Eigen::MatrixXcd N = ndmatrix(lambda);
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(N.rows(), N.cols());
  Eigen::VectorXcd ext = modes::ext_diag(lambda, J, tbasis_, rule);
  auto comp = J.complement(tbasis_.total());
  for (size_t i = 0; i < comp.size(); ++i) {
    int c = comp[i];
    L.row(c) = N.row(c);
    L(c, c) -= 1.0 / ext[i];
  }
  return L;
}

std::pair<Eigen::MatrixXcd, Eigen::VectorXd> null_space(const Eigen::MatrixXcd& L,
                                                        int expected_dim,
                                                        double ambiguous_threshold) {
  if (!L.allFinite()) throw ConfigError("matching matrix has non-finite entries");
  const int P = static_cast<int>(L.rows());
  if (expected_dim < 1 || expected_dim > P) throw ConfigError("bad null-space dimension");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(L, Eigen::ComputeFullV);
  Eigen::VectorXd sig = svd.singularValues();  // descending
  int keep = std::min(expected_dim + 1, P);
  Eigen::VectorXd asc(keep);
  for (int i = 0; i < keep; ++i) asc[i] = sig[P - 1 - i];
  Eigen::MatrixXcd W = svd.matrixV().rightCols(expected_dim);
  if (expected_dim < P) {
    double gap = asc[expected_dim - 1] / std::max(asc[expected_dim], 1e-300);
    if (gap > ambiguous_threshold)
      throw AmbiguousKernel("null-space gap " + std::to_string(gap) +
                                " exceeds the configured threshold",
                            gap);
  }
  return {W, asc};
}

ScatteringDerivatives Engine::s_matrix(cplx lambda, const SheetIndex& J, BranchRule rule) const {
  return s_derivatives(lambda, J, 0, rule);
}

ScatteringDerivatives Engine::s_derivatives(cplx lambda, const SheetIndex& J, int n,
                                            BranchRule rule) const {
  const int P = tbasis_.total();
  const int nj = J.size();
  if (nj < 1) throw ConfigError("sheet index must contain at least one mode");
  const auto idxJ = J.modes();
  const auto idxC = J.complement(P);
  const int nc = static_cast<int>(idxC.size());

  Eigen::MatrixXcd N = ndmatrix(lambda);
  Eigen::VectorXcd ext;
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(P, P);
  if (nc > 0) {
    ext = modes::ext_diag(lambda, J, tbasis_, rule);
    for (int i = 0; i < nc; ++i) {
      int c = idxC[i];
      L.row(c) = N.row(c);
      L(c, c) -= 1.0 / ext[i];
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      L, n >= 1 ? (Eigen::ComputeFullU | Eigen::ComputeFullV) : Eigen::ComputeFullV);
  Eigen::VectorXd sig = svd.singularValues();
  ScatteringDerivatives out;
  out.lambda = lambda;
  out.J = J;
  int keep = std::min(nj + 1, P);
  out.diag.null_sigmas.resize(keep);
  for (int i = 0; i < keep; ++i) out.diag.null_sigmas[i] = sig[P - 1 - i];
  if (nj < P) {
    out.diag.kernel_gap = out.diag.null_sigmas[nj - 1] / std::max(out.diag.null_sigmas[nj], 1e-300);
    if (out.diag.kernel_gap > opts_.ambiguous_kernel_threshold)
      throw AmbiguousKernel("null-space gap " + std::to_string(out.diag.kernel_gap) +
                                " exceeds the configured threshold",
                            out.diag.kernel_gap);
  }
  Eigen::MatrixXcd W = svd.matrixV().rightCols(nj);

  Eigen::MatrixXcd ND_W = N * W;
  Eigen::MatrixXcd W_N = select_rows(W, idxJ);
  Eigen::MatrixXcd W_D = select_rows(ND_W, idxJ);
  for (int j = 0; j < nj; ++j) {  // unit Dirichlet columns before inversion
    double s = W_D.col(j).norm();
    if (s < 1e-300) throw SingularTau("Dirichlet frame column vanished");
    W.col(j) /= s;
    W_N.col(j) /= s;
    W_D.col(j) /= s;
  }
  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> dsvd(W_D);
    double smin = dsvd.singularValues().minCoeff();
    double smax = dsvd.singularValues().maxCoeff();
    out.diag.tau_cond = smax / std::max(smin, 1e-300);
    if (smin <= 1e-14 * smax)
      throw SingularTau("Dirichlet frame of the scattering span is singular");
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> wd_lu(W_D);
  // tau = W_N * W_D^{-1}, solved from the right via transposes
  Eigen::MatrixXcd tau = W_D.transpose().lu().solve(W_N.transpose()).transpose();

  Eigen::VectorXcd d0 = modes::d_matrix(lambda, 0, J, tbasis_, rule);
  Eigen::MatrixXcd A = Eigen::MatrixXcd(d0.asDiagonal()) - tau;
  Eigen::MatrixXcd Bpos = Eigen::MatrixXcd(d0.asDiagonal()) + tau;
  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> asvd(A);
    double smin = asvd.singularValues().minCoeff();
    double smax = asvd.singularValues().maxCoeff();
    if (smin <= 1e-13 * smax)
      throw SingularExtraction("extraction matrix singular: lambda sits at a pole of S",
                               smin / std::max(smax, 1e-300));
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> a_lu(A);
  Eigen::MatrixXcd S_raw = a_lu.solve(Bpos);
  out.diag.extraction_residual =
      (A * S_raw - Bpos).norm() / std::max(Bpos.norm(), 1e-300);
  out.S = S_raw.transpose();
  if (n == 0) return out;

  // ---- derivative recursion in the scaled-derivative convention ----
  // per-order diagonal data
  std::vector<Eigen::VectorXcd> Dt(n + 1), Et(n + 1);
  Dt[0] = d0;
  if (nc > 0) Et[0] = ext;
  for (int q = 1; q <= n; ++q) {
    double f = factorial(q);
    Dt[q] = modes::d_matrix(lambda, q, J, tbasis_, rule) / f;
    if (nc > 0) Et[q] = modes::ext_diag_deriv(lambda, q, J, tbasis_, rule) / f;
  }
  // interior bands: eta_(r+1); band 0 is the map already computed
  std::vector<Eigen::MatrixXcd> band(n + 1);
  band[0] = N;
  for (int r = 1; r <= n; ++r) band[r] = ndmap::eta_block(ebasis_, lambda, r + 1);

  Eigen::VectorXcd d0inv = d0.cwiseInverse();
  Eigen::MatrixXcd B = W_D - d0inv.asDiagonal() * W_N;
  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> bsvd(B);
    double smin = bsvd.singularValues().minCoeff();
    double smax = bsvd.singularValues().maxCoeff();
    out.diag.deriv_cond = smax / std::max(smin, 1e-300);
    if (smin <= 1e-13 * smax)
      throw DerivativeIllConditioned("derivative correction solve is singular",
                                     out.diag.deriv_cond);
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> b_lu(B);

  // pseudo-inverse application through the stored SVD (rank P - nj)
  auto pinv_apply = [&](const Eigen::MatrixXcd& rhs) {
    Eigen::MatrixXcd y = svd.matrixU().adjoint() * rhs;
    for (int i = 0; i < P; ++i) {
      if (i < P - nj)
        y.row(i) /= sig[i];
      else
        y.row(i).setZero();
    }
    return (svd.matrixV() * y).eval();
  };

  std::vector<Eigen::MatrixXcd> X(n + 1), U(n + 1), Y(n + 1);
  X[0] = S_raw;
  U[0] = W * wd_lu.solve(Eigen::MatrixXcd::Identity(nj, nj) + X[0]);
  Eigen::MatrixXcd F0 = N * U[0];
  Y[0] = select_rows(F0, idxC);
  out.derivs.clear();
  out.diag.deriv_residual = 0.0;

  for (int m = 1; m <= n; ++m) {
    Eigen::MatrixXcd a = (-Dt[m]).asDiagonal() * Eigen::MatrixXcd::Identity(nj, nj);
    for (int q = 1; q <= m; ++q) a += Dt[q].asDiagonal() * X[m - q];
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(P, nj);
    for (int q = 0; q < m; ++q) c += band[m - q] * U[q];

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(P, nj);
    if (nc > 0) {
      Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(nc, nj);
      for (int q = 1; q <= m; ++q) b += Et[q].asDiagonal() * Y[m - q];
      Eigen::MatrixXcd rc = -select_rows(c, idxC) - ext.cwiseInverse().asDiagonal() * b;
      for (int i = 0; i < nc; ++i) rho.row(idxC[i]) = rc.row(i);
    }
    Eigen::MatrixXcd up = nc > 0 ? pinv_apply(rho) : Eigen::MatrixXcd::Zero(P, nj);

    Eigen::MatrixXcd nup_J = select_rows(Eigen::MatrixXcd(N * up), idxJ);
    Eigen::MatrixXcd up_J = select_rows(up, idxJ);
    Eigen::MatrixXcd rhs_J = -select_rows(c, idxJ) - d0inv.asDiagonal() * a - nup_J +
                             d0inv.asDiagonal() * up_J;
    Eigen::MatrixXcd Z = b_lu.solve(rhs_J);
    U[m] = up + W * Z;
    X[m] = d0inv.asDiagonal() * (select_rows(U[m], idxJ) - a);
    Eigen::MatrixXcd Fm = N * U[m] + c;
    double res = (select_rows(Fm, idxJ) - X[m]).norm() / std::max(X[m].norm(), 1e-300);
    out.diag.deriv_residual = std::max(out.diag.deriv_residual, res);
    Y[m] = select_rows(Fm, idxC);
    out.derivs.push_back(factorial(m) * X[m].transpose());
  }
  return out;
}

cplx Engine::log_derivative_trace(cplx lambda, const SheetIndex& J, BranchRule rule) const {
  ScatteringDerivatives sd = s_derivatives(lambda, J, 1, rule);
  return sd.S.partialPivLu().solve(sd.derivs[0]).trace();
}

double Engine::embedded_indicator(double lambda, const SheetIndex& J) const {
  const auto idxC = J.complement(tbasis_.total());
  if (idxC.empty()) throw ConfigError("embedded indicator needs evanescent modes");
  Eigen::MatrixXcd N = ndmatrix(lambda);
  Eigen::VectorXcd ext = modes::ext_diag(lambda, J, tbasis_);
  Eigen::MatrixXcd A(idxC.size(), idxC.size());
  for (size_t i = 0; i < idxC.size(); ++i) {
    for (size_t j = 0; j < idxC.size(); ++j) A(i, j) = N(idxC[i], idxC[j]);
    A(i, i) -= 1.0 / ext[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  return svd.singularValues().minCoeff();
}

double Engine::truncation_defect(cplx lambda, const SheetIndex& J, BranchRule rule) const {
  int maxJ_local = 0;
  for (int g : J.modes()) maxJ_local = std::max(maxJ_local, tbasis_.mode(g).local);
  std::vector<double> widths;
  std::vector<int> reduced_counts;
  for (int k = 0; k < tbasis_.num_ports(); ++k) {
    widths.push_back(tbasis_.width(k));
    int keep = std::max(maxJ_local + 2, tbasis_.modes_on_port(k) - opts_.truncation_drop);
    keep = std::min(keep, tbasis_.modes_on_port(k));
    reduced_counts.push_back(keep);
  }
  TransverseBasis rbasis(widths, reduced_counts);
  std::vector<int> col_of(rbasis.total());
  for (int g = 0; g < rbasis.total(); ++g)
    col_of[g] = tbasis_.global_index(rbasis.mode(g).port, rbasis.mode(g).local);

  fem::EigenBasis reb;
  reb.eigenvalues = ebasis_.eigenvalues;
  reb.trace_coeffs.resize(ebasis_.meta.M, rbasis.total());
  for (int g = 0; g < rbasis.total(); ++g)
    reb.trace_coeffs.col(g) = ebasis_.trace_coeffs.col(col_of[g]);
  reb.meta = ebasis_.meta;
  reb.meta.P_tot = rbasis.total();

  std::vector<int> rJ;
  for (int g : J.modes())
    rJ.push_back(rbasis.global_index(tbasis_.mode(g).port, tbasis_.mode(g).local));
  SheetIndex Jr = SheetIndex::from_modes(rJ, rbasis);

  Eigen::MatrixXcd S_full = s_matrix(lambda, J, rule).S;
  Eigen::MatrixXcd S_red;
  if (has_direct_) {
    Eigen::MatrixXd dsub(rbasis.total(), rbasis.total());
    for (int i = 0; i < rbasis.total(); ++i)
      for (int j = 0; j < rbasis.total(); ++j)
        dsub(i, j) = direct_.matrix(col_of[i], col_of[j]).real();
    Engine reduced(rbasis, reb, dsub, aux_lambda_, opts_);
    S_red = reduced.s_matrix(lambda, Jr, rule).S;
  } else {
    Engine reduced(rbasis, reb, opts_);
    S_red = reduced.s_matrix(lambda, Jr, rule).S;
  }
  return (S_full - S_red).cwiseAbs().maxCoeff();
}

}  // namespace wg::scattering

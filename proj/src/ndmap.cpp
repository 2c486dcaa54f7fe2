#include "wg/ndmap.hpp"

#include <cmath>

#include "wg/errors.hpp"

namespace wg::ndmap {

namespace {

void check_collision(const fem::EigenBasis& basis, cplx lambda) {
  double scale = std::max(1.0, basis.eigenvalues[basis.meta.M - 1]);
  double dmin = 1e300;
  for (int m = 0; m < basis.meta.M; ++m)
    dmin = std::min(dmin, std::abs(lambda - basis.eigenvalues[m]));
  if (dmin < 1e-10 * scale)
    throw EigenvalueCollision("lambda within " + std::to_string(dmin) +
                              " of an interior Neumann eigenvalue");
}

// accumulate sum_m w_m c_m c_m^T over the upper triangle, mirrored exactly
void weighted_outer_sum(const Eigen::MatrixXd& C, const Eigen::VectorXcd& w,
                        Eigen::MatrixXcd& out) {
  const int M = static_cast<int>(C.rows());
  const int P = static_cast<int>(C.cols());
  out.setZero(P, P);
  for (int m = M - 1; m >= 0; --m) {  // smallest terms first
    const auto c = C.row(m);
    for (int k = 0; k < P; ++k) {
      cplx wc = w[m] * c[k];
      for (int l = k; l < P; ++l) out(k, l) += wc * c[l];
    }
  }
  for (int k = 0; k < P; ++k)
    for (int l = k + 1; l < P; ++l) out(l, k) = out(k, l);
}

}  // namespace

NDMap lm_series(const fem::EigenBasis& basis, cplx lambda) {
  check_collision(basis, lambda);
  const int M = basis.meta.M;
  Eigen::VectorXcd w(M);
  for (int m = 0; m < M; ++m) w[m] = 1.0 / (lambda - basis.eigenvalues[m]);
  NDMap nd;
  nd.lambda = lambda;
  nd.M_used = M;
  weighted_outer_sum(basis.trace_coeffs, w, nd.matrix);
  return nd;
}

NDMap accelerated_nd(const fem::EigenBasis& basis, const NDMap& direct, cplx lambda) {
  check_collision(basis, lambda);
  const int M = basis.meta.M;
  const double aux = direct.aux_lambda;
  Eigen::VectorXcd w(M);
  for (int m = 0; m < M; ++m) {
    double e = basis.eigenvalues[m];
    w[m] = (aux - lambda) / ((e - lambda) * (e - aux));
  }
  NDMap nd;
  nd.lambda = lambda;
  nd.accelerated = true;
  nd.aux_lambda = aux;
  nd.M_used = M;
  weighted_outer_sum(basis.trace_coeffs, w, nd.matrix);
  nd.matrix += direct.matrix;
  return nd;
}

Eigen::MatrixXcd eta_block(const fem::EigenBasis& basis, cplx lambda, int p) {
  if (p < 1) throw ConfigError("eta block order must be positive");
  check_collision(basis, lambda);
  const int M = basis.meta.M;
  double sign = (p % 2 == 1) ? 1.0 : -1.0;
  Eigen::VectorXcd w(M);
  for (int m = 0; m < M; ++m)
    w[m] = sign * std::pow(lambda - basis.eigenvalues[m], -p);
  Eigen::MatrixXcd out;
  weighted_outer_sum(basis.trace_coeffs, w, out);
  return out;
}

SystemNDMap internal_system_map(const fem::EigenBasis& basis, cplx lambda, int n,
                                const NDMap* direct) {
  SystemNDMap sys;
  sys.order = n;
  sys.blocks.reserve(n + 1);
  if (direct)
    sys.blocks.push_back(accelerated_nd(basis, *direct, lambda).matrix);
  else
    sys.blocks.push_back(lm_series(basis, lambda).matrix);
  for (int r = 1; r <= n; ++r) sys.blocks.push_back(eta_block(basis, lambda, r + 1));
  return sys;
}

SystemNDMap external_system_map(cplx lambda, int n, const modes::SheetIndex& J,
                                const modes::TransverseBasis& basis, modes::BranchRule rule) {
  // forward bands: scaled derivatives of the diagonal i*sqrt(lambda - t);
  // the inverse band matrix is again banded Toeplitz and is built recursively
  Eigen::VectorXcd d0 = modes::ext_diag(lambda, J, basis, rule);
  const int m = static_cast<int>(d0.size());
  std::vector<Eigen::VectorXcd> fwd(n + 1);
  fwd[0] = d0;
  double fact = 1.0;
  for (int r = 1; r <= n; ++r) {
    fact *= r;
    fwd[r] = modes::ext_diag_deriv(lambda, r, J, basis, rule) / fact;
  }
  std::vector<Eigen::VectorXcd> inv(n + 1);
  inv[0] = d0.cwiseInverse();
  for (int r = 1; r <= n; ++r) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(m);
    for (int t = 1; t <= r; ++t) acc += fwd[t].cwiseProduct(inv[r - t]);
    inv[r] = -inv[0].cwiseProduct(acc);
  }
  SystemNDMap sys;
  sys.order = n;
  for (int r = 0; r <= n; ++r) sys.blocks.push_back(Eigen::MatrixXcd(inv[r].asDiagonal()));
  return sys;
}

}  // namespace wg::ndmap

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wg/fem.hpp"
#include "wg/modes.hpp"
#include "wg/numeric.hpp"

namespace wg::ndmap {

// Interior Neumann-to-Dirichlet map N(lambda) in the transverse mode basis.
struct NDMap {
  cplx lambda;
  Eigen::MatrixXcd matrix;  // P_tot x P_tot, symmetric
  bool accelerated = false;
  double aux_lambda = 0.0;  // auxiliary point of the convergence correction
  int M_used = 0;
};

// Block lower-triangular map of the derivative system: block (p,q), p >= q,
// depends only on r = p - q and the diagonal blocks equal the order-0 map.
struct SystemNDMap {
  int order = 0;
  std::vector<Eigen::MatrixXcd> blocks;  // blocks[r] = block (q + r, q)

  const Eigen::MatrixXcd& band(int r) const { return blocks.at(r); }
  Eigen::MatrixXcd block(int p, int q) const {
    if (p < q) return Eigen::MatrixXcd::Zero(blocks[0].rows(), blocks[0].cols());
    return blocks.at(p - q);
  }
};

// Plain eigenfunction-expansion series N_{k,l} = sum_m <nu_k,U_m><U_m,nu_l> / (lambda - e_m).
NDMap lm_series(const fem::EigenBasis& basis, cplx lambda);

// Quadratically convergent form: the directly computed map at the auxiliary
// point plus the rational correction series.
NDMap accelerated_nd(const fem::EigenBasis& basis, const NDMap& direct, cplx lambda);

// p-th band block: sum_m (-1)^(p-1) (lambda - e_m)^(-p) <nu,U_m><U_m,nu>; p = 1
// reproduces lm_series.
Eigen::MatrixXcd eta_block(const fem::EigenBasis& basis, cplx lambda, int p);

// Interior system map of order n: band r holds eta_(r+1). When `direct` is
// given the diagonal band uses the accelerated order-0 map (its lambda-
// derivatives coincide with the plain series bands).
SystemNDMap internal_system_map(const fem::EigenBasis& basis, cplx lambda, int n,
                                const NDMap* direct = nullptr);

// Exterior system map over the modes outside J: band r is the r-th scaled
// lambda-derivative of the diagonal mode-wise end map (i sqrt(lambda-t))^{-1},
// obtained from the inverse of the band matrix of root derivatives.
SystemNDMap external_system_map(cplx lambda, int n, const modes::SheetIndex& J,
                                const modes::TransverseBasis& basis,
                                modes::BranchRule rule = modes::BranchRule::SheetDefault);

}  // namespace wg::ndmap

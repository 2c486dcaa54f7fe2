#include <arpack.h>

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "wg/errors.hpp"
#include "wg/fem.hpp"

namespace wg::fem {

namespace {

struct Factor {
  double sigma = 0.0;
  long inertia = 0;  // number of pencil eigenvalues below sigma
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt;
};

// Factors K - sigma*M; the sign count of D gives the inertia (Sylvester).
// Jitters the shift when the unpivoted LDLT runs into a tiny pivot.
Factor factor_at(const SpMat& K, const SpMat& M, double sigma, double jitter_scale) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    Factor f;
    f.sigma = sigma;
    f.ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
    SpMat A = K - sigma * M;
    f.ldlt->compute(A);
    if (f.ldlt->info() == Eigen::Success) {
      auto D = f.ldlt->vectorD();
      double dmax = D.cwiseAbs().maxCoeff();
      double dmin = D.cwiseAbs().minCoeff();
      if (dmin > 1e-13 * dmax) {
        f.inertia = (D.array() < 0.0).count();
        return f;
      }
    }
    sigma += (0.013 + 0.017 * attempt) * jitter_scale;
  }
  throw SolverBreakdown("factorization failed near shift " + std::to_string(sigma));
}

// Shift-invert Lanczos (ARPACK mode 3, generalized) around sigma; returns the
// nev eigenpairs of (K, M) nearest the shift, vectors M-orthonormal.
void arpack_shift_invert(const SpMat& K, const SpMat& M, const Factor& f, int nev, int ncv,
                         double tol, Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
  const a_int n = static_cast<a_int>(K.rows());
  nev = std::min<int>(nev, n - 2);
  ncv = std::min<int>(ncv, n);
  a_int ido = 0, info = 0;
  a_int iparam[11] = {};
  iparam[0] = 1;    // exact shifts
  iparam[2] = 600;  // max Arnoldi iterations
  iparam[3] = 1;
  iparam[6] = 3;  // shift-invert on a generalized problem
  a_int ipntr[14] = {};
  std::vector<double> resid(n), V((size_t)n * ncv), workd(3 * (size_t)n),
      workl((size_t)ncv * (ncv + 8));
  Eigen::Map<Eigen::VectorXd> rmap(resid.data(), n);

  while (true) {
    dsaupd_c(&ido, "G", n, "LM", nev, tol, resid.data(), ncv, V.data(), n, iparam, ipntr,
             workd.data(), workl.data(), (a_int)workl.size(), &info);
    if (ido == -1 || ido == 1) {
      Eigen::Map<Eigen::VectorXd> x(&workd[ipntr[0] - 1], n);
      Eigen::Map<Eigen::VectorXd> y(&workd[ipntr[1] - 1], n);
      if (ido == -1) {
        y = f.ldlt->solve(M * x);
      } else {
        Eigen::Map<Eigen::VectorXd> Bx(&workd[ipntr[2] - 1], n);
        y = f.ldlt->solve(Bx);
      }
    } else if (ido == 2) {
      Eigen::Map<Eigen::VectorXd> x(&workd[ipntr[0] - 1], n);
      Eigen::Map<Eigen::VectorXd> y(&workd[ipntr[1] - 1], n);
      y = M * x;
    } else {
      break;
    }
  }
  if (info < 0) throw SolverBreakdown("ARPACK dsaupd error " + std::to_string(info));
  if (info == 1) throw NotConverged("ARPACK hit the iteration cap at shift " +
                                    std::to_string(f.sigma));

  std::vector<a_int> select(ncv, 1);
  vals.resize(nev);
  vecs.resize(n, nev);
  a_int ierr = 0;
  dseupd_c(1, "A", select.data(), vals.data(), vecs.data(), n, f.sigma, "G", n, "LM", nev, tol,
           resid.data(), ncv, V.data(), n, iparam, ipntr, workd.data(), workl.data(),
           (a_int)workl.size(), &ierr);
  if (ierr != 0) throw SolverBreakdown("ARPACK dseupd error " + std::to_string(ierr));
  int converged = iparam[4];
  if (converged < nev) {
    vals.conservativeResize(converged);
    vecs.conservativeResize(Eigen::NoChange, converged);
  }
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::MatrixXd> lowest_eigenpairs(const SpMat& K, const SpMat& M,
                                                              int count, double density_hint,
                                                              const EigenSolveOptions& opts) {
  const long n = K.rows();
  if (count >= n - 1) throw ConfigError("requested too many eigenpairs");
  // cap the slice width so the Lanczos basis fits a sane memory budget
  int W = std::min<int>(opts.max_window, std::max<int>(24, (int)(5.5e7 / n)));
  double density = std::max(density_hint, 1e-8);

  std::vector<double> all_vals;
  std::vector<Eigen::MatrixXd> vec_blocks;
  std::vector<Eigen::VectorXd> val_blocks;

  double x_prev = -1e-3 * std::max(1.0, (count + 10.0) / density);
  long c_prev = 0;  // K is PSD so no pencil eigenvalues lie below x_prev < 0
  int guard = 0;
  while (c_prev < count) {
    if (++guard > 300) throw NotConverged("spectrum slicing did not reach the requested count");
    double step = 0.5 * W / density;
    double x_mid = x_prev + step;
    double x_end = x_prev + 2.0 * step;
    Factor fend = factor_at(K, M, x_end, step);
    x_end = fend.sigma;
    long cnt = fend.inertia - c_prev;
    if (cnt > (long)(1.7 * W)) {  // spectrum denser than estimated: shrink
      density *= (double)cnt / W;
      continue;
    }
    long inertia_end = fend.inertia;
    fend.ldlt.reset();
    if (cnt == 0) {
      x_prev = x_end;
      density = std::max(density * 0.6, 1e-8);
      continue;
    }
    x_mid = 0.5 * (x_prev + x_end);  // keep the shift equidistant from both edges
    Factor fmid = factor_at(K, M, x_mid, 0.05 * step);

    bool ok = false;
    int nev = (int)cnt + 10;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
      Eigen::VectorXd vals;
      Eigen::MatrixXd vecs;
      int ncv = std::min<long>(n, 2 * nev + 12);
      try {
        arpack_shift_invert(K, M, fmid, nev, ncv, opts.tol, vals, vecs);
      } catch (const NotConverged&) {
        nev += (int)cnt / 2 + 10;
        continue;
      }
      std::vector<int> keep;
      for (int i = 0; i < vals.size(); ++i)
        if (vals[i] > x_prev && vals[i] <= x_end) keep.push_back(i);
      if ((long)keep.size() != cnt) {
        nev += (int)cnt / 2 + 10;
        continue;
      }
      Eigen::VectorXd kv(keep.size());
      Eigen::MatrixXd kx(n, keep.size());
      for (size_t i = 0; i < keep.size(); ++i) {
        kv[i] = vals[keep[i]];
        kx.col(i) = vecs.col(keep[i]);
      }
      // residual acceptance
      for (int i = 0; i < kv.size(); ++i) {
        Eigen::VectorXd Ku = K * kx.col(i);
        Eigen::VectorXd Mu = M * kx.col(i);
        double res = (Ku - kv[i] * Mu).norm();
        double scale = Ku.norm() + std::abs(kv[i]) * Mu.norm();
        if (res > opts.residual_tol * std::max(scale, 1e-30))
          throw NotConverged("eigen-residual above tolerance at e = " + std::to_string(kv[i]));
      }
      val_blocks.push_back(std::move(kv));
      vec_blocks.push_back(std::move(kx));
      ok = true;
    }
    if (!ok)
      throw NotConverged("slice (" + std::to_string(x_prev) + ", " + std::to_string(x_end) +
                         "] did not yield the inertia count");
    if (opts.verbose)
      std::fprintf(stderr, "[eig] window (%.6g, %.6g]: %ld pairs (total %ld)\n", x_prev, x_end,
                   cnt, inertia_end);
    density = 0.5 * density + 0.5 * (double)cnt / (x_end - x_prev);
    x_prev = x_end;
    c_prev = inertia_end;
  }

  long total = 0;
  for (const auto& v : val_blocks) total += v.size();
  std::vector<std::pair<double, std::pair<int, int>>> order;
  for (int b = 0; b < (int)val_blocks.size(); ++b)
    for (int i = 0; i < val_blocks[b].size(); ++i) order.push_back({val_blocks[b][i], {b, i}});
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Eigen::VectorXd vals(count);
  Eigen::MatrixXd vecs(n, count);
  for (int i = 0; i < count; ++i) {
    vals[i] = order[i].first;
    vecs.col(i) = vec_blocks[order[i].second.first].col(order[i].second.second);
  }
  // mutual M-orthogonality spot check across window boundaries
  for (int i = 1; i < count; ++i) {
    if (vals[i] - vals[i - 1] < 1e-9 * std::max(1.0, std::abs(vals[i]))) {
      double ip = std::abs(vecs.col(i).dot(M * vecs.col(i - 1)));
      if (ip > 1e-6)
        throw NotConverged("duplicate eigenpair detected at e = " + std::to_string(vals[i]));
    }
  }
  return {vals, vecs};
}

}  // namespace wg::fem

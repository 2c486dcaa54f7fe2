#pragma once

#include <vector>

#include "wg/scattering.hpp"

namespace wg::resonance {

using modes::BranchRule;
using modes::SheetIndex;

// Positively oriented axis-aligned rectangle in the lambda plane on sheet J.
struct Contour {
  cplx lo;  // bottom-left corner
  cplx hi;  // top-right corner
  SheetIndex J;
  double margin = 1e-3;  // required distance of the rectangle from branch points
};

struct CountOptions {
  int base_nodes = 8;  // Gauss-Legendre nodes per side, doubled until converged
  int max_nodes = 512;
  double quad_tol = 1e-3;
  double singular_limit = 1e8;  // integrand magnitude treated as a near-pole
};

// (1/2 pi i) times the contour integral of Tr(S^{-1} S'); near-integer for
// valid contours. A rectangle straddling the real axis is evaluated on the
// upper continuation, where enclosed pole/zero pairs cancel exactly.
cplx count_poles(const scattering::Engine& engine, const Contour& contour,
                 const CountOptions& opts = {});

// same integral over a small circle (used for pole orders)
cplx count_on_circle(const scattering::Engine& engine, const SheetIndex& J, cplx center,
                     double radius, const CountOptions& opts = {});

struct ResonanceResult {
  cplx lambda0;
  int order = 1;
  SheetIndex J;
  double newton_residual = 0.0;
  cplx count_integral_value;
  bool sqrt_reported = false;  // CLI reports both lambda and sqrt(lambda)
  bool cluster = false;        // max-depth box with count > 1, not refined
};

struct SearchOptions {
  int max_depth = 40;
  double margin = 1e-3;     // keep-away distance from thresholds
  double axis_clip = 1e-5;  // the search runs in the upper half-plane above this
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  int threads = 1;
  bool verbose = false;
  CountOptions quad;
};

// Recursive bisection of the region (clipped to the upper half-plane and split
// at thresholds) until boxes hold zero poles (dropped) or one (Newton refined);
// max-depth boxes with more are reported as clusters.
std::vector<ResonanceResult> locate_resonances(const scattering::Engine& engine, cplx lo, cplx hi,
                                               const SheetIndex& J, const SearchOptions& opts = {});

// Newton iteration lambda <- lambda + 1/Tr(S^{-1} S') on the upper continuation.
ResonanceResult newton_refine(const scattering::Engine& engine, cplx lambda_init,
                              const SheetIndex& J, double tol = 1e-10,
                              const SearchOptions& opts = {});

struct EmbeddedScanOptions {
  double accept_factor = 1e-6;   // accept dips below accept_factor * median
  double bracket_factor = 0.05;  // bracket local minima below this * median
  double refine_width = 1e-8;
  int threads = 1;
};

// Grid scan of the smallest singular value of the evanescent block of the
// matching matrix; golden-section refinement of the dips.
std::vector<double> embedded_scan(const scattering::Engine& engine, double lo, double hi,
                                  const SheetIndex& J, double step,
                                  const EmbeddedScanOptions& opts = {});

}  // namespace wg::resonance

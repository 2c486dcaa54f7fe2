#include "wg/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "wg/errors.hpp"
#include "wg/numeric.hpp"

namespace wg::resonance {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GLRule {
  std::vector<double> x, w;  // on [0, 1]
};

const GLRule& gauss_legendre(int n) {
  static std::map<int, GLRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration from the Chebyshev initial guess on [-1, 1]
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.x[i] = 0.5 * (x + 1.0);
    r.w[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

double rect_distance(double eta, cplx lo, cplx hi) {
  double dx = 0.0, dy = 0.0;
  if (eta < lo.real()) dx = lo.real() - eta;
  if (eta > hi.real()) dx = eta - hi.real();
  if (0.0 < lo.imag()) dy = lo.imag();
  if (0.0 > hi.imag()) dy = -hi.imag();
  return std::hypot(dx, dy);
}

cplx integrand(const scattering::Engine& engine, const SheetIndex& J, cplx lambda,
               BranchRule rule, double singular_limit) {
  cplx f;
  try {
    f = engine.log_derivative_trace(lambda, J, rule);
  } catch (const SingularExtraction&) {
    throw NodeSingular("pole on or near the contour at lambda = " + fmt17(lambda.real()) + "+" +
                       fmt17(lambda.imag()) + "i");
  } catch (const SingularTau&) {
    throw NodeSingular("singular frame on the contour");
  } catch (const DerivativeIllConditioned&) {
    throw NodeSingular("ill-conditioned derivative on the contour");
  }
  if (!std::isfinite(f.real()) || !std::isfinite(f.imag()) || std::abs(f) > singular_limit)
    throw NodeSingular("integrand magnitude indicates a pole near the contour");
  return f;
}

}  // namespace

cplx count_poles(const scattering::Engine& engine, const Contour& contour,
                 const CountOptions& opts) {
  cplx lo = contour.lo, hi = contour.hi;
  if (!(lo.real() < hi.real()) || !(lo.imag() < hi.imag()))
    throw ConfigError("contour rectangle is degenerate");
  for (double eta : engine.transverse().distinct_thresholds())
    if (rect_distance(eta, lo, hi) < contour.margin)
      throw ConfigError("contour rectangle within the margin of threshold " + std::to_string(eta));
  bool straddles = lo.imag() < 0.0 && hi.imag() > 0.0;
  BranchRule rule = straddles ? BranchRule::UpperContinuation : BranchRule::SheetDefault;

  // corners counterclockwise
  cplx c0 = lo, c1 = {hi.real(), lo.imag()}, c2 = hi, c3 = {lo.real(), hi.imag()};
  const cplx corners[5] = {c0, c1, c2, c3, c0};

  cplx prev = 0.0;
  for (int nodes = opts.base_nodes; nodes <= opts.max_nodes; nodes *= 2) {
    const GLRule& gl = gauss_legendre(nodes);
    cplx acc = 0.0;
    for (int side = 0; side < 4; ++side) {
      cplx a = corners[side], b = corners[side + 1];
      cplx dz = b - a;
      for (int q = 0; q < nodes; ++q) {
        cplx z = a + gl.x[q] * dz;
        acc += gl.w[q] * dz * integrand(engine, contour.J, z, rule, opts.singular_limit);
      }
    }
    acc /= cplx(0.0, kTwoPi);
    if (nodes > opts.base_nodes && std::abs(acc - prev) < opts.quad_tol) return acc;
    prev = acc;
  }
  throw QuadratureNotConverged("counting integral did not stabilize at " +
                               std::to_string(opts.max_nodes) + " nodes per side");
}

cplx count_on_circle(const scattering::Engine& engine, const SheetIndex& J, cplx center,
                     double radius, const CountOptions& opts) {
  cplx prev = 0.0;
  for (int nodes = 16; nodes <= 4 * opts.max_nodes; nodes *= 2) {
    cplx acc = 0.0;
    for (int q = 0; q < nodes; ++q) {
      double th = kTwoPi * q / nodes;
      cplx e{std::cos(th), std::sin(th)};
      cplx z = center + radius * e;
      acc += integrand(engine, J, z, BranchRule::UpperContinuation, opts.singular_limit) *
             cplx(0.0, 1.0) * radius * e;
    }
    acc *= kTwoPi / nodes;
    acc /= cplx(0.0, kTwoPi);
    if (nodes > 16 && std::abs(acc - prev) < opts.quad_tol) return acc;
    prev = acc;
  }
  throw QuadratureNotConverged("circle counting integral did not stabilize");
}

ResonanceResult newton_refine(const scattering::Engine& engine, cplx lambda_init,
                              const SheetIndex& J, double tol, const SearchOptions& opts) {
  const auto& etas = engine.transverse().distinct_thresholds();
  double win_lo = -1e300, win_hi = 1e300;
  for (double eta : etas) {
    if (eta <= lambda_init.real()) win_lo = std::max(win_lo, eta);
    if (eta > lambda_init.real()) win_hi = std::min(win_hi, eta);
  }
  cplx lam = lambda_init;
  double last_step = 1e300;
  bool converged = false;
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    cplx f;
    try {
      f = engine.log_derivative_trace(lam, J, BranchRule::UpperContinuation);
    } catch (const SingularExtraction&) {
      // numerically on the pole: declare convergence at the current point
      converged = true;
      break;
    }
    cplx step = 1.0 / f;
    lam += step;
    last_step = std::abs(step);
    if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag()) || lam.real() <= win_lo ||
        lam.real() >= win_hi ||
        std::abs(lam - lambda_init) > 1e3 * (1.0 + std::abs(lambda_init)))
      throw DriftedOutOfBox("Newton iterate left the threshold window");
    if (last_step < tol * (1.0 + std::abs(lam))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NotConverged("Newton did not reach the step tolerance in " +
                       std::to_string(opts.newton_max_iter) + " iterations");
  ResonanceResult r;
  r.lambda0 = lam;
  r.J = J;
  r.newton_residual = last_step;
  // order from a tiny-circle count, enlarging the circle when the quadrature
  // cannot resolve it
  double r0 = 10.0 * tol * (1.0 + std::abs(lam));
  bool have_order = false;
  for (int k = 0; k < 4 && !have_order; ++k) {
    try {
      cplx cnt = count_on_circle(engine, J, lam, r0, opts.quad);
      double nearest = std::round(cnt.real());
      if (nearest >= 1.0 && std::abs(cnt - nearest) < 0.05) {
        r.order = static_cast<int>(nearest);
        r.count_integral_value = cnt;
        have_order = true;
      }
    } catch (const Error&) {
    }
    r0 *= 10.0;
  }
  if (!have_order)
    throw NotConverged("pole order could not be determined by circle counting");
  return r;
}

namespace {

struct Box {
  cplx lo, hi;
  int depth = 0;
};

}  // namespace

std::vector<ResonanceResult> locate_resonances(const scattering::Engine& engine, cplx lo, cplx hi,
                                               const SheetIndex& J, const SearchOptions& opts) {
  // the search lives in the (closed) upper half-plane above the axis clip
  double im_lo = std::max(lo.imag(), opts.axis_clip);
  double im_hi = hi.imag();
  std::vector<ResonanceResult> found;
  if (!(im_lo < im_hi) || !(lo.real() < hi.real())) return found;

  // split the real range at thresholds, leaving the margin around each
  std::vector<std::pair<double, double>> re_ranges;
  {
    std::vector<double> cuts;
    for (double eta : engine.transverse().distinct_thresholds())
      if (eta > lo.real() - opts.margin && eta < hi.real() + opts.margin) cuts.push_back(eta);
    double cur = lo.real();
    for (double eta : cuts) {
      if (eta - opts.margin > cur) re_ranges.emplace_back(cur, eta - opts.margin);
      cur = std::max(cur, eta + opts.margin);
    }
    if (cur < hi.real()) re_ranges.emplace_back(cur, hi.real());
  }

  std::vector<Box> level;
  for (auto [a, b] : re_ranges)
    if (b - a > 1e-12) level.push_back({{a, im_lo}, {b, im_hi}, 0});

  std::mutex found_mu;
  std::vector<Box> next;
  std::mutex next_mu;

  while (!level.empty()) {
    next.clear();
    auto process = [&](size_t i) {
      Box box = level[i];
      cplx cnt;
      bool counted = false;
      Contour c{box.lo, box.hi, J, std::min(opts.margin, 0.45 * (box.hi.real() - box.lo.real()))};
      for (int attempt = 0; attempt < 5 && !counted; ++attempt) {
        try {
          cnt = count_poles(engine, c, opts.quad);
          counted = true;
        } catch (const NodeSingular&) {
          // grow the box so a near-edge pole moves inside; duplicates are
          // deduplicated after refinement
          double gw = 0.04 * (attempt + 1) * (c.hi.real() - c.lo.real());
          double gh = 0.04 * (attempt + 1) * (c.hi.imag() - c.lo.imag());
          c.lo -= cplx(gw, 0.0);
          c.hi += cplx(gw, gh);
          c.lo = {c.lo.real(), std::max(opts.axis_clip * 0.2, c.lo.imag() - gh)};
        } catch (const QuadratureNotConverged&) {
          break;
        }
      }
      if (!counted) {
        if (box.depth >= opts.max_depth) {
          ResonanceResult r;
          r.lambda0 = 0.5 * (box.lo + box.hi);
          r.J = J;
          r.cluster = true;
          r.order = 0;
          std::lock_guard<std::mutex> lk(found_mu);
          found.push_back(r);
          return;
        }
        // fall through to a split with an unknown count
        cnt = 2.0;
      }
      double mag = std::abs(cnt);
      double nearest = std::round(cnt.real());
      bool integer_like = std::abs(cnt - nearest) < 0.05 && std::abs(cnt.imag()) < 0.05;
      if (mag < 0.1) return;  // empty box
      if (integer_like && nearest == 1.0) {
        try {
          ResonanceResult r =
              newton_refine(engine, 0.5 * (box.lo + box.hi), J, opts.newton_tol, opts);
          r.count_integral_value = cnt;
          std::lock_guard<std::mutex> lk(found_mu);
          found.push_back(r);
          return;
        } catch (const Error&) {
          // refinement failed: subdivide further
        }
      }
      if (box.depth >= opts.max_depth) {
        ResonanceResult r;
        r.lambda0 = 0.5 * (box.lo + box.hi);
        r.J = J;
        r.cluster = true;
        r.order = integer_like ? (int)nearest : 0;
        r.count_integral_value = cnt;
        std::lock_guard<std::mutex> lk(found_mu);
        found.push_back(r);
        return;
      }
      double w = box.hi.real() - box.lo.real();
      double h = box.hi.imag() - box.lo.imag();
      bool split_re = (box.depth % 2 == 0);
      if (w > 4.0 * h) split_re = true;
      if (h > 4.0 * w) split_re = false;
      Box b1 = box, b2 = box;
      if (split_re) {
        double mid = 0.5 * (box.lo.real() + box.hi.real());
        b1.hi = {mid, box.hi.imag()};
        b2.lo = {mid, box.lo.imag()};
      } else {
        double mid = 0.5 * (box.lo.imag() + box.hi.imag());
        b1.hi = {box.hi.real(), mid};
        b2.lo = {box.lo.real(), mid};
      }
      b1.depth = b2.depth = box.depth + 1;
      std::lock_guard<std::mutex> lk(next_mu);
      next.push_back(b1);
      next.push_back(b2);
    };
    parallel_for(level.size(), process, opts.threads);
    level = next;
  }

  std::sort(found.begin(), found.end(), [](const ResonanceResult& a, const ResonanceResult& b) {
    if (a.lambda0.real() != b.lambda0.real()) return a.lambda0.real() < b.lambda0.real();
    return a.lambda0.imag() < b.lambda0.imag();
  });
  std::vector<ResonanceResult> out;
  for (const auto& r : found) {
    bool dup = false;
    for (const auto& kept : out)
      if (std::abs(kept.lambda0 - r.lambda0) < 1e-7 * (1.0 + std::abs(r.lambda0))) dup = true;
    if (!dup) out.push_back(r);
  }
  return out;
}

std::vector<double> embedded_scan(const scattering::Engine& engine, double lo, double hi,
                                  const SheetIndex& J, double step,
                                  const EmbeddedScanOptions& opts) {
  if (!(lo < hi) || step <= 0.0) throw ConfigError("bad embedded scan interval");
  int n = std::max(3, (int)std::floor((hi - lo) / step) + 1);
  std::vector<double> lam(n), sig(n);
  for (int i = 0; i < n; ++i) lam[i] = lo + (hi - lo) * i / (n - 1);
  parallel_for(
      n, [&](size_t i) { sig[i] = engine.embedded_indicator(lam[i], J); }, opts.threads);

  std::vector<double> sorted = sig;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];

  auto indicator = [&](double x) { return engine.embedded_indicator(x, J); };
  std::vector<double> out;
  for (int i = 1; i + 1 < n; ++i) {
    if (!(sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1])) continue;
    if (sig[i] > opts.bracket_factor * median) continue;
    // golden-section minimization on [lam[i-1], lam[i+1]]
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lam[i - 1], b = lam[i + 1];
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = indicator(x1), f2 = indicator(x2);
    while (b - a > opts.refine_width) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = indicator(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = indicator(x2);
      }
    }
    double xm = 0.5 * (a + b);
    if (indicator(xm) < opts.accept_factor * median) out.push_back(xm);
  }
  return out;
}

}  // namespace wg::resonance

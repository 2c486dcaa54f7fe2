#include "wg/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wg/errors.hpp"

namespace wg::modes {

namespace {
constexpr double kPi = std::numbers::pi;
}

TransverseBasis::TransverseBasis(std::vector<double> widths, std::vector<int> modes_per_port)
    : widths_(std::move(widths)), per_port_(std::move(modes_per_port)) {
  if (widths_.empty() || widths_.size() != per_port_.size())
    throw ConfigError("transverse basis: widths/modes size mismatch");
  for (size_t k = 0; k < widths_.size(); ++k) {
    if (widths_[k] <= 0.0) throw ConfigError("transverse basis: nonpositive port width");
    if (per_port_[k] < 1) throw ConfigError("transverse basis: need at least one mode per port");
    for (int m = 0; m < per_port_[k]; ++m) {
      double t = std::pow(m * kPi / widths_[k], 2);
      order_.push_back({static_cast<int>(k), m, t});
    }
  }
  std::stable_sort(order_.begin(), order_.end(), [](const GlobalMode& a, const GlobalMode& b) {
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    if (a.port != b.port) return a.port < b.port;
    return a.local < b.local;
  });
  const double tol = 1e-12;
  labels_.resize(order_.size());
  for (size_t g = 0; g < order_.size(); ++g) {
    double t = order_[g].threshold;
    if (distinct_.empty() || t > distinct_.back() + tol * (1.0 + t)) distinct_.push_back(t);
    labels_[g] = static_cast<int>(distinct_.size());
  }
}

TransverseBasis::TransverseBasis(std::vector<double> widths, int modes_per_port)
    : TransverseBasis(widths, std::vector<int>(widths.size(), modes_per_port)) {}

int TransverseBasis::global_index(int port, int local) const {
  for (size_t g = 0; g < order_.size(); ++g)
    if (order_[g].port == port && order_[g].local == local) return static_cast<int>(g);
  throw ConfigError("transverse basis: no such (port, mode)");
}

double TransverseBasis::nu(int port, int local, double y) const {
  double a = widths_[port];
  if (local == 0) return 1.0 / std::sqrt(a);
  return std::sqrt(2.0 / a) * std::cos(local * kPi * y / a);
}

SheetIndex SheetIndex::from_modes(std::vector<int> modes, const TransverseBasis& basis) {
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  for (int g : modes)
    if (g < 0 || g >= basis.total()) throw ConfigError("sheet index: mode out of range");
  // threshold-closed: modes at an equal threshold flip together
  for (int g : modes) {
    int lab = basis.threshold_label(g);
    for (int h = 0; h < basis.total(); ++h) {
      if (basis.threshold_label(h) == lab &&
          !std::binary_search(modes.begin(), modes.end(), h))
        throw ConfigError("sheet index: not threshold-closed (mode " + std::to_string(h + 1) +
                          " shares a threshold with a member)");
    }
  }
  SheetIndex J;
  J.modes_ = std::move(modes);
  return J;
}

SheetIndex SheetIndex::from_threshold_labels(const std::vector<int>& labels,
                                             const TransverseBasis& basis) {
  std::vector<int> modes;
  for (int lab : labels) {
    if (lab < 1 || lab > static_cast<int>(basis.distinct_thresholds().size()))
      throw ConfigError("sheet index: threshold label out of range");
    for (int g = 0; g < basis.total(); ++g)
      if (basis.threshold_label(g) == lab) modes.push_back(g);
  }
  return from_modes(std::move(modes), basis);
}

SheetIndex SheetIndex::propagating(double lambda, const TransverseBasis& basis) {
  std::vector<int> modes;
  for (int g = 0; g < basis.total(); ++g)
    if (basis.threshold(g) < lambda) modes.push_back(g);
  return from_modes(std::move(modes), basis);
}

bool SheetIndex::contains(int g) const {
  return std::binary_search(modes_.begin(), modes_.end(), g);
}

std::vector<int> SheetIndex::complement(int total) const {
  std::vector<int> out;
  out.reserve(total - modes_.size());
  for (int g = 0; g < total; ++g)
    if (!contains(g)) out.push_back(g);
  return out;
}

std::string SheetIndex::label() const {
  std::string s = "{";
  for (size_t i = 0; i < modes_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(modes_[i] + 1);
  }
  return s + "}";
}

cplx branch_sqrt(cplx lambda, double threshold, bool flipped) {
  cplx w = lambda - threshold;
  cplx u;
  if (w.imag() > 0.0) {
    u = std::sqrt(w);  // principal root already has positive imaginary part
  } else if (w.imag() < 0.0) {
    u = -std::sqrt(w);
  } else {
    u = w.real() >= 0.0 ? cplx(std::sqrt(w.real()), 0.0) : cplx(0.0, std::sqrt(-w.real()));
  }
  return flipped ? -u : u;
}

cplx sheet_root(cplx lambda, double threshold, bool flipped, BranchRule rule) {
  if (rule == BranchRule::UpperContinuation && threshold < lambda.real()) {
    cplx u = std::sqrt(lambda - threshold);  // cut moved off the working strip
    return flipped ? -u : u;
  }
  if (flipped && lambda.imag() == 0.0 && lambda.real() > threshold) {
    // Lower-side limit: the flipped root of a propagating mode is +sqrt(lambda-t)
    // on the spectrum itself, which makes the on-axis matrix the physical one.
    return cplx(std::sqrt(lambda.real() - threshold), 0.0);
  }
  return branch_sqrt(lambda, threshold, flipped);
}

cplx isqrt_deriv(cplx s, int k) {
  if (k == 0) return cplx(0.0, 1.0) * s;
  double c = 1.0;
  for (int q = 0; q < k; ++q) c *= 0.5 - q;
  return cplx(0.0, 1.0) * c * std::pow(s, 1 - 2 * k);
}

namespace {

Eigen::VectorXcd diag_over(const std::vector<int>& idx, cplx lambda, int k, bool flipped,
                           const TransverseBasis& basis, BranchRule rule) {
  Eigen::VectorXcd d(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    double t = basis.threshold(idx[i]);
    cplx s = sheet_root(lambda, t, flipped, rule);
    if (k >= 1 && s == cplx(0.0, 0.0))
      throw BranchPointSingularity("lambda sits at threshold " + std::to_string(t) +
                                   " (mode " + std::to_string(idx[i] + 1) + ")");
    d[i] = isqrt_deriv(s, k);
  }
  return d;
}

}  // namespace

Eigen::VectorXcd d_matrix(cplx lambda, int k, const SheetIndex& J, const TransverseBasis& basis,
                          BranchRule rule) {
  return diag_over(J.modes(), lambda, k, true, basis, rule);
}

Eigen::VectorXcd ext_diag(cplx lambda, const SheetIndex& J, const TransverseBasis& basis,
                          BranchRule rule) {
  auto idx = J.complement(basis.total());
  Eigen::VectorXcd d = diag_over(idx, lambda, 0, false, basis, rule);
  for (int i = 0; i < d.size(); ++i)
    if (d[i] == cplx(0.0, 0.0))
      throw BranchPointSingularity("external map singular: lambda at a threshold");
  return d;
}

Eigen::VectorXcd ext_diag_deriv(cplx lambda, int k, const SheetIndex& J,
                                const TransverseBasis& basis, BranchRule rule) {
  return diag_over(J.complement(basis.total()), lambda, k, false, basis, rule);
}

}  // namespace wg::modes

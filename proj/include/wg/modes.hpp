#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wg/numeric.hpp"

namespace wg::modes {

// One transverse Neumann mode of a port cross-section (an interval of width a):
//   nu_0(y) = 1/sqrt(a),  nu_m(y) = sqrt(2/a) cos(m pi y / a),  threshold (m pi / a)^2.
struct GlobalMode {
  int port;       // 0-based port index
  int local;      // transverse index m on that port
  double threshold;
};

class TransverseBasis {
 public:
  TransverseBasis() = default;  // empty; populated via assignment
  // widths[k] = port width a_k, modes_per_port[k] = number of transverse modes kept.
  TransverseBasis(std::vector<double> widths, std::vector<int> modes_per_port);
  TransverseBasis(std::vector<double> widths, int modes_per_port);

  int num_ports() const { return static_cast<int>(widths_.size()); }
  double width(int port) const { return widths_[port]; }
  int modes_on_port(int port) const { return per_port_[port]; }
  int total() const { return static_cast<int>(order_.size()); }

  const GlobalMode& mode(int g) const { return order_[g]; }
  double threshold(int g) const { return order_[g].threshold; }

  // Global index of (port, local transverse index).
  int global_index(int port, int local) const;

  // Trace function value nu_{port,m}(y), y in [0, a_port].
  double nu(int port, int local, double y) const;
  double nu_global(int g, double y) const { return nu(order_[g].port, order_[g].local, y); }

  // Distinct threshold values eta_1 < eta_2 < ... (branch points).
  const std::vector<double>& distinct_thresholds() const { return distinct_; }
  // 1-based label of the distinct threshold a global mode belongs to.
  int threshold_label(int g) const { return labels_[g]; }

 private:
  std::vector<double> widths_;
  std::vector<int> per_port_;
  std::vector<GlobalMode> order_;
  std::vector<double> distinct_;
  std::vector<int> labels_;
};

// A sheet of the Riemann surface: the set J of global modes whose square root
// carries the non-physical branch. Empty set = physical sheet.
class SheetIndex {
 public:
  SheetIndex() = default;

  // From explicit 0-based global mode indices; enforces threshold-closedness.
  static SheetIndex from_modes(std::vector<int> modes, const TransverseBasis& basis);
  // From 1-based distinct-threshold labels (the table convention: sheet {1} flips
  // every mode at the lowest threshold).
  static SheetIndex from_threshold_labels(const std::vector<int>& labels,
                                          const TransverseBasis& basis);
  // Propagating set at real lambda: all modes with threshold < lambda.
  static SheetIndex propagating(double lambda, const TransverseBasis& basis);

  bool contains(int g) const;
  bool empty() const { return modes_.empty(); }
  int size() const { return static_cast<int>(modes_.size()); }
  const std::vector<int>& modes() const { return modes_; }
  std::vector<int> complement(int total) const;
  std::string label() const;  // "{}" or "{1,2}" (1-based modes, for reports)

 private:
  std::vector<int> modes_;  // sorted, 0-based
};

// Square root of (lambda - t) resolved on a chosen branch.
// Unflipped: Im > 0, with real-axis values taken as the upper-half-plane limit
// (lambda - t real positive gives the positive real root). Flipped: the negative
// of the unflipped value.
cplx branch_sqrt(cplx lambda, double threshold, bool flipped);

// Branch policy for evaluating sheet quantities.
//   SheetDefault      — flipped = -unflipped everywhere except that flipped modes
//                       at real lambda > t take the lower-side limit +sqrt(lambda-t),
//                       so the on-spectrum matrix is the physical (unitary) one.
//   UpperContinuation — the analytic continuation of the upper-half-plane values
//                       across the axis (propagating-type modes switch to the
//                       principal branch); used by root finding near the axis.
enum class BranchRule { SheetDefault, UpperContinuation };

// Root for global mode g on sheet J under the given rule.
cplx sheet_root(cplx lambda, double threshold, bool flipped, BranchRule rule);

// k-th lambda-derivative of i*sqrt(lambda - t) expressed through the branch value s:
//   i * (1/2)(1/2 - 1)...(1/2 - k + 1) * s^(1-2k).
cplx isqrt_deriv(cplx s, int k);

// Diagonal of the k-th derivative D(lambda,k) over the J modes (flipped branch),
// in the global ordering restricted to J.
Eigen::VectorXcd d_matrix(cplx lambda, int k, const SheetIndex& J, const TransverseBasis& basis,
                          BranchRule rule = BranchRule::SheetDefault);

// Diagonal i*sqrt(lambda - t) over modes not in J (unflipped branch). The inverse
// of these entries is the Neumann-to-Dirichlet map of the ends mode by mode.
Eigen::VectorXcd ext_diag(cplx lambda, const SheetIndex& J, const TransverseBasis& basis,
                          BranchRule rule = BranchRule::SheetDefault);

// k-th derivative of the ext_diag entries (same branch), for the derivative system.
Eigen::VectorXcd ext_diag_deriv(cplx lambda, int k, const SheetIndex& J,
                                const TransverseBasis& basis,
                                BranchRule rule = BranchRule::SheetDefault);

}  // namespace wg::modes

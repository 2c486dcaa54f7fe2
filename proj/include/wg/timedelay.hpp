#pragma once

#include "wg/scattering.hpp"

namespace wg::timedelay {

struct TimeDelayResult {
  double lambda = 0.0;
  Eigen::MatrixXcd T;      // -2 i sqrt(lambda) S^{-1} S' (Hermitian on the spectrum)
  Eigen::MatrixXcd T_raw;  // -2 sqrt(lambda) S^{-1} S' (the uncorrected variant)
  cplx trace;
  double hermiticity_defect = 0.0;
};

// Time delay at real lambda below the first nonzero threshold. J must be the
// propagating set there (the zero-threshold modes).
TimeDelayResult time_delay(const scattering::Engine& engine, double lambda,
                           const modes::SheetIndex& J);

struct ScatteringLengthResult {
  double value = 0.0;
  double imag_defect = 0.0;
  bool warned = false;
};

// Limit of trace T toward lambda = 0 by polynomial extrapolation in sqrt(lambda)
// through lambda in {1e-2, 5e-3, 2.5e-3}; single-ended domains.
ScatteringLengthResult scattering_length(const scattering::Engine& engine,
                                         const modes::SheetIndex& J);

}  // namespace wg::timedelay

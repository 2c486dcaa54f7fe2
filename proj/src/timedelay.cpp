#include "wg/timedelay.hpp"

#include <cmath>

#include "wg/errors.hpp"

namespace wg::timedelay {

TimeDelayResult time_delay(const scattering::Engine& engine, double lambda,
                           const modes::SheetIndex& J) {
  const auto& tb = engine.transverse();
  double eta2 = 1e300;
  for (double eta : tb.distinct_thresholds())
    if (eta > 0.0) eta2 = std::min(eta2, eta);
  if (!(lambda > 0.0 && lambda < eta2))
    throw ConfigError("time delay needs 0 < lambda < the first nonzero threshold");
  for (int g : J.modes())
    if (tb.threshold(g) != 0.0)
      throw ConfigError("time delay sheet must consist of the zero-threshold modes");

  auto sd = engine.s_derivatives(lambda, J, 1);
  Eigen::MatrixXcd SinvSp = sd.S.partialPivLu().solve(sd.derivs[0]);
  TimeDelayResult out;
  out.lambda = lambda;
  double rtl = std::sqrt(lambda);
  out.T_raw = -2.0 * rtl * SinvSp;
  out.T = cplx(0.0, 1.0) * out.T_raw;  // the factor i that makes T Hermitian
  out.trace = out.T.trace();
  out.hermiticity_defect =
      (out.T - out.T.adjoint()).norm() / std::max(out.T.norm(), 1e-300);
  return out;
}

ScatteringLengthResult scattering_length(const scattering::Engine& engine,
                                         const modes::SheetIndex& J) {
  if (engine.transverse().num_ports() != 1)
    throw ConfigError("scattering length is defined for single-ended domains");
  const double lambdas[3] = {1e-2, 5e-3, 2.5e-3};
  double k[3], t[3];
  ScatteringLengthResult out;
  for (int i = 0; i < 3; ++i) {
    auto td = time_delay(engine, lambdas[i], J);
    k[i] = std::sqrt(lambdas[i]);
    t[i] = td.trace.real();
    out.imag_defect = std::max(out.imag_defect, std::abs(td.trace.imag()));
  }
  if (out.imag_defect > 1e-6) out.warned = true;
  if ((t[0] - t[1]) * (t[1] - t[2]) < 0.0)
    throw ExtrapolationUnstable("trace sequence toward lambda = 0 is not monotone");
  // Neville polynomial extrapolation in k = sqrt(lambda) to k = 0
  double p01 = (k[0] * t[1] - k[1] * t[0]) / (k[0] - k[1]);
  double p12 = (k[1] * t[2] - k[2] * t[1]) / (k[1] - k[2]);
  out.value = (k[0] * p12 - k[2] * p01) / (k[0] - k[2]);
  return out;
}

}  // namespace wg::timedelay

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "wg/errors.hpp"
#include "wg/modes.hpp"

using namespace wg;
using modes::BranchRule;
using modes::SheetIndex;
using modes::TransverseBasis;

namespace {
constexpr double kPi = std::numbers::pi;

double quad_nu_product(const TransverseBasis& tb, int port, int m1, int m2, int nq = 4000) {
  double a = tb.width(port), acc = 0.0;
  for (int i = 0; i < nq; ++i) {
    double y = a * (i + 0.5) / nq;
    acc += tb.nu(port, m1, y) * tb.nu(port, m2, y);
  }
  return acc * a / nq;
}
}  // namespace

TEST_CASE("transverse modes are orthonormal") {
  TransverseBasis tb({2.0, 1.5}, 6);
  for (int port = 0; port < 2; ++port)
    for (int m1 = 0; m1 < 4; ++m1)
      for (int m2 = m1; m2 < 4; ++m2) {
        double want = m1 == m2 ? 1.0 : 0.0;
        CHECK(quad_nu_product(tb, port, m1, m2) == doctest::Approx(want).epsilon(1e-10));
      }
}

TEST_CASE("global ordering sorts by threshold with port tie-break") {
  TransverseBasis tb({2.0, 2.0}, 3);
  REQUIRE(tb.total() == 6);
  CHECK(tb.threshold(0) == 0.0);
  CHECK(tb.threshold(1) == 0.0);
  CHECK(tb.mode(0).port == 0);
  CHECK(tb.mode(1).port == 1);
  CHECK(tb.threshold(2) == doctest::Approx(kPi * kPi / 4.0));
  CHECK(tb.mode(2).port == 0);
  CHECK(tb.mode(2).local == 1);
  // deterministic labels: two distinct thresholds per mode family
  CHECK(tb.threshold_label(0) == 1);
  CHECK(tb.threshold_label(1) == 1);
  CHECK(tb.threshold_label(2) == 2);
  CHECK(tb.distinct_thresholds().size() == 3);
}

TEST_CASE("threshold-closed sheets") {
  TransverseBasis tb({2.0, 2.0}, 3);
  CHECK_THROWS_AS(SheetIndex::from_modes({0}, tb), ConfigError);  // drops its threshold twin
  auto J = SheetIndex::from_modes({0, 1}, tb);
  CHECK(J.size() == 2);
  auto J2 = SheetIndex::from_threshold_labels({1}, tb);
  CHECK(J2.modes() == std::vector<int>{0, 1});
  auto J3 = SheetIndex::from_threshold_labels({2}, tb);
  CHECK(J3.modes() == std::vector<int>{2, 3});
  auto Jp = SheetIndex::propagating(1.0, tb);
  CHECK(Jp.modes() == std::vector<int>{0, 1});
}

TEST_CASE("branch_sqrt resolves the stated examples") {
  // lambda - t = -1
  CHECK(modes::branch_sqrt({-1.0, 0.0}, 0.0, false) == cplx(0.0, 1.0));
  CHECK(modes::branch_sqrt({-1.0, 0.0}, 0.0, true) == cplx(0.0, -1.0));
  // lambda - t = 2i
  cplx s = modes::branch_sqrt({0.0, 2.0}, 0.0, false);
  CHECK(s.real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.imag() == doctest::Approx(1.0).epsilon(1e-14));
  // lambda - t = 4, upper-half-plane limit
  CHECK(modes::branch_sqrt({4.0, 0.0}, 0.0, false) == cplx(2.0, 0.0));
  CHECK(modes::branch_sqrt({4.0, 0.0}, 0.0, true) == cplx(-2.0, 0.0));
  // branch point itself
  CHECK(modes::branch_sqrt({3.0, 0.0}, 3.0, false) == cplx(0.0, 0.0));
}

TEST_CASE("branch_sqrt squares back for random inputs") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000000; ++i) {
    cplx lam{u(rng), u(rng)};
    double t = u(rng);
    bool flip = (i % 2) == 0;
    cplx s = modes::branch_sqrt(lam, t, flip);
    cplx w = lam - t;
    CHECK(std::abs(s * s - w) <= 1e-12 * (1.0 + std::abs(w)));
    if (!flip && lam.imag() != 0.0) CHECK(s.imag() > 0.0);
  }
}

TEST_CASE("branch_sqrt is continuous along a path avoiding the cut") {
  // circle of radius 2 around the branch point, kept off the cut [t, inf)
  double t = 1.5;
  cplx prev = 0.0;
  bool first = true;
  for (int i = 0; i <= 1000; ++i) {
    double th = 0.02 + (2.0 * kPi - 0.04) * i / 1000.0;  // theta in (0, 2 pi)
    cplx lam = t + 2.0 * cplx{std::cos(th), std::sin(th)};
    cplx s = modes::branch_sqrt(lam, t, false);
    if (!first) CHECK(std::abs(s - prev) < 0.05);
    prev = s;
    first = false;
  }
}

TEST_CASE("d_matrix entries match the closed examples") {
  TransverseBasis tb({2.0}, 4);
  auto J = SheetIndex::from_threshold_labels({1}, tb);  // the zero-threshold mode
  // k = 0 at lambda - t = -1: i * (-i) = 1
  auto d0 = modes::d_matrix({-1.0, 0.0}, 0, J, tb);
  CHECK(d0[0].real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d0[0].imag() == doctest::Approx(0.0).epsilon(1e-14));
  // k = 1: i / (2 (-i)) = -1/2
  auto d1 = modes::d_matrix({-1.0, 0.0}, 1, J, tb);
  CHECK(d1[0].real() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(d1[0].imag() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("d_matrix k=1 matches central differences of k=0") {
  TransverseBasis tb({2.0}, 5);
  auto J = SheetIndex::from_threshold_labels({1}, tb);
  const double h = 1e-6;
  for (cplx lam : {cplx{-1.3, 0.4}, cplx{2.0, 1.0}, cplx{0.7, -0.8}}) {
    auto dp = modes::d_matrix(lam + h, 0, J, tb);
    auto dm = modes::d_matrix(lam - h, 0, J, tb);
    auto d1 = modes::d_matrix(lam, 1, J, tb);
    for (int i = 0; i < d1.size(); ++i) {
      cplx fd = (dp[i] - dm[i]) / (2.0 * h);
      CHECK(std::abs(fd - d1[i]) <= 1e-6 * std::abs(d1[i]));
    }
  }
}

TEST_CASE("d_matrix flags a branch point for k >= 1") {
  TransverseBasis tb({2.0}, 3);
  auto J = SheetIndex::from_threshold_labels({2}, tb);
  double t2 = tb.distinct_thresholds()[1];
  CHECK_THROWS_AS(modes::d_matrix({t2, 0.0}, 1, J, tb), BranchPointSingularity);
  CHECK_NOTHROW(modes::d_matrix({t2, 0.0}, 0, J, tb));
}

TEST_CASE("ext_diag covers the stated examples") {
  TransverseBasis tb({2.0}, 4);
  SheetIndex empty;
  // lambda = -1, t = 0, mode outside J: i * (i * 1) = -1
  auto e = modes::ext_diag({-1.0, 0.0}, empty, tb);
  CHECK(e.size() == 4);  // physical sheet covers all modes
  CHECK(e[0].real() == doctest::Approx(-1.0).epsilon(1e-14));
  // off the cut the unflipped roots keep positive imaginary part, so e^{i s x}
  // decays along the ends; equivalently the end-normal map -1/(i s) has
  // nonnegative real part
  for (cplx lam : {cplx{1.0, 0.7}, cplx{3.0, -0.2}, cplx{-4.0, 0.0}}) {
    auto d = modes::ext_diag(lam, empty, tb);
    for (int i = 0; i < d.size(); ++i) {
      cplx s = d[i] / cplx(0.0, 1.0);
      CHECK(s.imag() >= -1e-14);
      CHECK((-1.0 / d[i]).real() >= -1e-14);
    }
  }
}

TEST_CASE("sheet evaluation at a real spectral point uses the physical root") {
  TransverseBasis tb({2.0, 2.0}, 3);
  auto J = SheetIndex::from_threshold_labels({1}, tb);
  auto d0 = modes::d_matrix({1.0, 0.0}, 0, J, tb);
  // i * sqrt(lambda) with the lower-side limit: i * 1
  CHECK(d0[0] == cplx(0.0, 1.0));
  // upper continuation flips the propagating root
  auto dup = modes::d_matrix({1.0, 0.0}, 0, J, tb, BranchRule::UpperContinuation);
  CHECK(dup[0] == cplx(0.0, -1.0));
}

TEST_CASE("upper continuation is continuous across the axis within a window") {
  TransverseBasis tb({2.0}, 4);
  auto J = SheetIndex::from_threshold_labels({1}, tb);
  double x = 1.3;  // between the first two thresholds
  for (int g : {0, 1}) {
    bool flipped = g == 0;  // mode 0 in J
    cplx above = modes::sheet_root({x, 1e-9}, tb.threshold(g), flipped,
                                   BranchRule::UpperContinuation);
    cplx below = modes::sheet_root({x, -1e-9}, tb.threshold(g), flipped,
                                   BranchRule::UpperContinuation);
    CHECK(std::abs(above - below) < 1e-8);
  }
}

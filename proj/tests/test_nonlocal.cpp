#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "potwell/nonlocal.hpp"
#include "support.hpp"

using namespace potwell;
using testing::max_abs;
using testing::max_abs_diff;
using testing::random_field;

namespace {

// Integral of 1/|z| over a box away from the origin, 4-point Gauss-Legendre
// product rule on a uniform split of each axis.
double box_integral(std::array<double, 3> lo, double side, int split) {
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const double s = side / split;
  double total = 0.0;
  for (int a = 0; a < split; ++a)
    for (int b = 0; b < split; ++b)
      for (int c = 0; c < split; ++c)
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
              const double x = lo[0] + s * (a + 0.5 + 0.5 * gx[i]);
              const double y = lo[1] + s * (b + 0.5 + 0.5 * gx[j]);
              const double z = lo[2] + s * (c + 0.5 + 0.5 * gx[k]);
              total += gw[i] * gw[j] * gw[k] / std::sqrt(x * x + y * y + z * z);
            }
  return total * s * s * s / 8.0;
}

// Midpoint sum over n^3 cells of the centred unit cube, centre cell left out.
double midpoint_without_centre(int n) {
  const double h = 1.0 / n;
  const int half = n / 2;
  double total = 0.0;
  for (int i = -half; i <= half; ++i)
    for (int j = -half; j <= half; ++j)
      for (int k = -half; k <= half; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        total += 1.0 / std::sqrt(double(i * i + j * j + k * k));
      }
  return total * h * h;  // h^3 / (h |index|)
}

ScalarField mirror_x(const ScalarField& u) {
  const GridSpec& g = u.grid();
  const int m = g.m();
  ScalarField out(g);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) out[g.index(m - 1 - i, j, k)] = u[g.index(i, j, k)];
  return out;
}

double max_rel(const ScalarField& got, const ScalarField& ref) {
  double worst = 0.0;
  for (std::size_t n = 0; n < ref.size(); ++n)
    worst = std::max(worst, std::abs(got[n] - ref[n]) / std::abs(ref[n]));
  return worst;
}

}  // namespace

TEST_CASE("self constant") {
  const double S = self_constant();
  CHECK(S > 2.0);
  CHECK(S < 3.0);

  SUBCASE("closed form") {
    const double closed = 3.0 * std::log(2.0 + std::sqrt(3.0)) - std::numbers::pi / 2.0;
    CHECK(S == doctest::Approx(closed).epsilon(1e-12));
  }
  SUBCASE("dilation: the shell between side 1/2 and side 1 carries 3S/4") {
    double shell = 0.0;
    for (int a = -2; a < 2; ++a)
      for (int b = -2; b < 2; ++b)
        for (int c = -2; c < 2; ++c) {
          if (a >= -1 && a < 1 && b >= -1 && b < 1 && c >= -1 && c < 1) continue;
          shell += box_integral({a * 0.25, b * 0.25, c * 0.25}, 0.25, 4);
        }
    CHECK(std::abs(shell + S / 4.0 - S) <= 1e-6);
  }
  SUBCASE("Richardson extrapolation of midpoint sums") {
    const double m27 = midpoint_without_centre(27);
    const double m81 = midpoint_without_centre(81);
    const double extrapolated = (9.0 * m81 - m27) / 8.0;
    CHECK(std::abs(extrapolated - S) <= 1e-4);
    CHECK(std::abs(extrapolated - S) < std::abs(m81 - S));
  }
  SUBCASE("Monte Carlo") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    const int n = 10'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = unif(rng), y = unif(rng), z = unif(rng);
      const double f = 1.0 / std::sqrt(x * x + y * y + z * z);
      sum += f;
      sum_sq += f * f;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - S) <= 3.0 * se);
  }
}

TEST_CASE("kernel table") {
  GridSpec g(6);
  KernelTable t(g);
  const double h = g.h();
  CHECK(t.padded_size() == 12);
  CHECK(t.self_weight() == doctest::Approx(self_constant() / h));
  CHECK(t.weight(0, 0, 0) == doctest::Approx(h * h * self_constant()).epsilon(1e-15));
  CHECK(t.weight(1, 2, -2) == doctest::Approx(h * h * h / (3.0 * h)).epsilon(1e-15));
  CHECK(t.weight(-5, 0, 0) == t.weight(5, 0, 0));
  CHECK_THROWS_AS(t.weight(6, 0, 0), std::out_of_range);
}

TEST_CASE("convolve") {
  GridSpec g(8);
  KernelTable t(g);
  const double h = g.h();
  const double S = self_constant();

  CHECK(convolve(ScalarField(g), t).is_zero());
  CHECK_THROWS_AS(convolve(ScalarField(GridSpec(9)), t), std::invalid_argument);

  SUBCASE("single unit source") {
    const int i0 = 2, j0 = 5, k0 = 3;
    ScalarField src(g);
    src[g.index(i0, j0, k0)] = 1.0;
    const ScalarField v = convolve(src, t);
    ScalarField expect(g);
    for (int k = 0; k < 8; ++k)
      for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) {
          const double r = h * std::sqrt(double((i - i0) * (i - i0) + (j - j0) * (j - j0) + (k - k0) * (k - k0)));
          expect[g.index(i, j, k)] = r == 0.0 ? h * h * S : h * h * h / r;
        }
    CHECK(max_rel(v, expect) <= 1e-12);
    CHECK(max_rel(convolve_direct(src, t), expect) <= 1e-14);
  }
  SUBCASE("random sources against direct summation") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ScalarField src = random_field(g, seed, 0.0, 1.0);
      CHECK(max_rel(convolve(src, t), convolve_direct(src, t)) <= 1e-10);
    }
    // signed sources: compare against the scale of the output
    const ScalarField src = random_field(g, 99);
    const ScalarField ref = convolve_direct(src, t);
    CHECK(max_abs_diff(convolve(src, t), ref) <= 1e-12 * max_abs(ref));
  }
  SUBCASE("linearity and symmetry") {
    ScalarField a(g), b(g);
    a[g.index(1, 1, 1)] = 2.0;
    b[g.index(6, 3, 4)] = -0.5;
    const ScalarField sum = convolve_direct(a + b, t);
    const ScalarField sep = convolve_direct(a, t) + convolve_direct(b, t);
    CHECK(max_abs_diff(sum, sep) <= 1e-14 * max_abs(sum));

    const ScalarField u = random_field(g, 12);
    const ScalarField lhs = convolve(mirror_x(u), t);
    const ScalarField rhs = mirror_x(convolve(u, t));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-13 * max_abs(rhs));
    const ScalarField sym = u + mirror_x(u);
    const ScalarField vs = convolve(sym, t);
    CHECK(max_abs_diff(vs, mirror_x(vs)) <= 1e-13 * max_abs(vs));
  }
  SUBCASE("direct summation guard") {
    GridSpec big(17);
    KernelTable tb(big);
    CHECK(convolve_direct(ScalarField(GridSpec(16)), KernelTable(GridSpec(16))).is_zero());
    CHECK_THROWS_AS(convolve_direct(ScalarField(big), tb), std::length_error);
  }
}

TEST_CASE("potential energy") {
  GridSpec g(10);
  KernelTable t(g);
  CHECK(potential_energy(ScalarField(g), 2.0, t) == 0.0);
  CHECK_THROWS_AS(potential_energy(ScalarField(g), 1.0, t), std::invalid_argument);
  const ScalarField u = random_field(g, 21);
  const ScalarField w = random_field(g, 22);
  for (double p : {1.5, 2.0, 2.5, 3.0}) {
    const double P = potential_energy(u, p, t);
    CHECK(P > 0.0);
    CHECK(potential_energy(2.0 * u, p, t) == doctest::Approx(std::pow(2.0, 2.0 * p) * P).epsilon(1e-12));
    const double uw = inner(convolve(abs_pow(u, p), t), abs_pow(w, p));
    const double wu = inner(convolve(abs_pow(w, p), t), abs_pow(u, p));
    CHECK(uw == doctest::Approx(wu).epsilon(1e-12));
  }
  const ScalarField ap = abs_pow(-1.0 * u, 2.5);
  CHECK(ap[4] == doctest::Approx(std::pow(std::abs(u[4]), 2.5)).epsilon(1e-15));
}

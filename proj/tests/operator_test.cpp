#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <queue>

#include "pmdiff/analysis.hpp"
#include "pmdiff/operator.hpp"
#include "test_support.hpp"

using namespace pmdiff;
using pmdiff::testutil::random_field;

namespace {

// Brute-force 2D convolution with the outer-product kernel and symmetric
// (half-sample) extension, computed independently of convolve_gaussian.
ScalarField direct_convolution(const ScalarField& f, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> w(2 * r + 1);
  double total = 0;
  for (int t = -r; t <= r; ++t) total += w[t + r] = std::exp(-t * t / (2 * sigma * sigma));
  for (auto& x : w) x /= total;
  const int rows = static_cast<int>(f.rows());
  const int cols = static_cast<int>(f.cols());
  auto reflect = [](int idx, int n) {
    while (idx < 0 || idx >= n) idx = idx < 0 ? -idx - 1 : 2 * n - idx - 1;
    return idx;
  };
  std::vector<double> out(f.size(), 0.0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double acc = 0;
      for (int a = -r; a <= r; ++a) {
        for (int b = -r; b <= r; ++b) {
          const int ii = rows > 1 ? reflect(i + a, rows) : 0;
          const int jj = cols > 1 ? reflect(j + b, cols) : 0;
          const double wa = rows > 1 ? w[a + r] : (a == 0 ? 1.0 : 0.0);
          const double wb = cols > 1 ? w[b + r] : (b == 0 ? 1.0 : 0.0);
          acc += wa * wb * f(ii, jj);
        }
      }
      out[i * cols + j] = acc;
    }
  }
  return f.with_values(out);
}

}  // namespace

TEST(GradientMagnitude, Examples) {
  EXPECT_EQ(gradient_magnitude_sq(ScalarField::constant({3, 4}, 0.7), 1, 2), 0.0);
  const auto f = ScalarField::signal({0, 1, 2});
  EXPECT_DOUBLE_EQ(gradient_magnitude_sq(f, 0, 1), 1.0);
  EXPECT_EQ(gradient_magnitude_sq(f, 0, 0), 0.0);
  EXPECT_EQ(gradient_magnitude_sq(f, 0, 2), 0.0);
  EXPECT_THROW(gradient_magnitude_sq(f, 1, 0), IndexError);

  const ScalarField spaced({1, 3}, {0, 1, 2}, Spacing{0.5, 1.0});
  EXPECT_DOUBLE_EQ(gradient_magnitude_sq(spaced, 0, 1), 4.0);
}

TEST(DiffusivityField, Examples) {
  const auto ones = diffusivity_field(ScalarField::constant({3, 3}, 2.0), Diffusivity::rational(1.0));
  for (double v : ones.values()) EXPECT_EQ(v, 1.0);
  const auto c = diffusivity_field(ScalarField::signal({0, 1, 2}), Diffusivity::rational(1.0));
  EXPECT_DOUBLE_EQ(c[1], 0.5);
  const auto r = diffusivity_field(random_field(6, 6, 4, -50, 50), Diffusivity::exponential(1.0));
  for (double v : r.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Assemble, TwoPixelExample) {
  const auto op = assemble(ScalarField::signal({0, 1}), Diffusivity::rational(1.0));
  ASSERT_EQ(op.dimension(), 2u);
  EXPECT_EQ(op.entry(0, 0), -1.0);
  EXPECT_EQ(op.entry(0, 1), 1.0);
  EXPECT_EQ(op.entry(1, 0), 1.0);
  EXPECT_EQ(op.entry(1, 1), -1.0);
  const std::vector<double> u{0, 1};
  EXPECT_EQ(op.apply(u), (std::vector<double>{1, -1}));
}

TEST(Assemble, RowStructure) {
  const auto op = assemble(random_field(2, 2, 1), Diffusivity::rational(1.0));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(op.row(k).size(), 3u);
  const auto big = assemble(random_field(5, 7, 2), Diffusivity::rational(1.0));
  for (std::size_t k = 0; k < big.dimension(); ++k) EXPECT_LE(big.row(k).size(), 5u);
  EXPECT_EQ(big.row(1 * 7 + 3).size(), 5u);
}

TEST(Assemble, RejectsNonPositiveSpacing) {
  const auto f = random_field(3, 3, 1);
  EXPECT_THROW(assemble(f, Diffusivity::rational(1.0), 0.0, 1.0), ConfigError);
  EXPECT_THROW(assemble(f, Diffusivity::rational(1.0), 1.0, -1.0), ConfigError);
}

TEST(Assemble, MatchesHandWrittenSemidiscreteSums) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = random_field(5, 6, seed);
    for (auto m : {Diffusivity::rational(0.4), Diffusivity::exponential(0.4)}) {
      const auto got = assemble(f, m).apply(f.values());
      const auto want = testutil::reference_rhs(f, [&](double s) { return m.evaluate(s); });
      EXPECT_LE(testutil::max_abs_diff(got, want), 1e-14);
    }
  }
  const ScalarField aniso({4, 3}, {0.1, 0.5, 0.2, 0.9, 0.3, 0.4, 0.8, 0.7, 0.6, 0.0, 1.0, 0.25}, Spacing{0.5, 2.0});
  const auto m = Diffusivity::rational(1.0);
  EXPECT_LE(testutil::max_abs_diff(assemble(aniso, m).apply(aniso.values()),
                                  testutil::reference_rhs(aniso, [&](double s) { return m.evaluate(s); })),
            1e-13);
}

TEST(Apply, ConstantVectorAndZeroSum) {
  const auto op = assemble(random_field(6, 5, 9), Diffusivity::exponential(0.5));
  const std::vector<double> ones(op.dimension(), 3.0);
  for (double v : op.apply(ones)) EXPECT_NEAR(v, 0.0, 1e-14);
  const auto f = random_field(6, 5, 10);
  const auto y = op.apply(f.values());
  EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), 0.0, 1e-14);
  EXPECT_THROW(op.apply(std::vector<double>(3, 0.0)), DimensionError);
}

TEST(Assemble, PropertiesHoldOnRandomFields) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_field(9, 7, seed, -2.0, 2.0);
    for (auto m : {Diffusivity::rational(0.3), Diffusivity::exponential(0.3)}) {
      for (const auto& op : {assemble(f, m), assemble_half_point(f, m)}) {
        const auto rep = verify_operator_properties(op);
        EXPECT_TRUE(rep.all_pass()) << rep.to_text();
        EXPECT_EQ(rep.max_asymmetry, 0.0);
        EXPECT_EQ(rep.max_abs_row_sum, 0.0);
        EXPECT_GT(rep.min_off_diagonal, 0.0);
        EXPECT_EQ(rep.components, 1u);
      }
    }
  }
}

TEST(Assemble, ContinuousInField) {
  for (auto m : {Diffusivity::rational(1.0), Diffusivity::exponential(1.0)}) {
    const auto f = random_field(8, 8, 5);
    for (auto fam : {OperatorFamily::CentralDifference, OperatorFamily::HalfPoint}) {
      const auto c = check_continuity(f, m, fam);
      EXPECT_TRUE(c.pass) << c.max_change_coarse << " " << c.max_change_fine;
      EXPECT_LT(c.max_change_fine, c.max_change_coarse);
    }
  }
}

TEST(AssembleHalfPoint, TwoPixelExample) {
  const auto op = assemble_half_point(ScalarField::signal({0, 1}), Diffusivity::rational(1.0));
  EXPECT_DOUBLE_EQ(op.entry(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(op.entry(0, 0), -0.25);
}

TEST(GaussianKernel, Construction) {
  const GaussianKernel k0(0.0);
  EXPECT_EQ(k0.radius(), 0u);
  EXPECT_EQ(k0.weights().size(), 1u);
  const GaussianKernel k(1.3);
  EXPECT_EQ(k.radius(), 4u);
  double sum = 0;
  for (std::size_t n = 0; n < k.weights().size(); ++n) {
    sum += k.weights()[n];
    EXPECT_GT(k.weights()[n], 0.0);
    EXPECT_EQ(k.weights()[n], k.weights()[k.weights().size() - 1 - n]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_THROW(GaussianKernel(-0.1), DomainError);
}

TEST(ConvolveGaussian, SigmaZeroIsIdentity) {
  const auto f = random_field(7, 9, 3);
  EXPECT_EQ(convolve_gaussian(f, 0.0), f);
}

TEST(ConvolveGaussian, ConstantStaysConstant) {
  const auto f = ScalarField::constant({6, 11}, 0.42);
  for (double s : {0.5, 1.0, 3.0, 10.0}) {
    for (double v : convolve_gaussian(f, s).values()) EXPECT_NEAR(v, 0.42, 1e-15);
  }
}

TEST(ConvolveGaussian, ImpulseCenterIsSquaredKernelCenter) {
  auto v = std::vector<double>(41 * 41, 0.0);
  v[20 * 41 + 20] = 1.0;
  const ScalarField impulse({41, 41}, v);
  const auto out = convolve_gaussian(impulse, 1.0);
  const GaussianKernel k(1.0);
  EXPECT_NEAR(out(20, 20), k.center_weight() * k.center_weight(), 1e-16);
}

TEST(ConvolveGaussian, MatchesDirect2DConvolution) {
  for (double sigma : {0.7, 1.0, 2.5}) {
    const auto f = random_field(9, 13, 8);
    EXPECT_LE(testutil::max_abs_diff(convolve_gaussian(f, sigma).values(), direct_convolution(f, sigma).values()),
              1e-14);
  }
  // Kernel wider than the field: repeated reflection.
  const auto small = random_field(3, 4, 9);
  EXPECT_LE(testutil::max_abs_diff(convolve_gaussian(small, 2.0).values(), direct_convolution(small, 2.0).values()),
            1e-14);
  const auto row = ScalarField::signal({0, 1, 0, 0, 3, 2});
  EXPECT_LE(testutil::max_abs_diff(convolve_gaussian(row, 1.5).values(), direct_convolution(row, 1.5).values()),
            1e-14);
}

TEST(ConvolveGaussian, PreservesMean) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = random_field(5 + seed, 17 - seed, seed, 0.0, 10.0);
    for (double sigma : {0.5, 1.0, 4.0}) {
      const double m0 = mean(f);
      EXPECT_LE(std::abs(mean(convolve_gaussian(f, sigma)) - m0), 1e-12 * std::abs(m0));
    }
  }
}

TEST(DiffusionOperator, FromRowsValidates) {
  EXPECT_THROW(DiffusionOperator::from_rows({{{0, 1.0}, {0, 2.0}}}), DimensionError);
  EXPECT_THROW(DiffusionOperator::from_rows({{{3, 1.0}}}), IndexError);
  const auto op = DiffusionOperator::from_rows({{{1, 2.0}, {0, -2.0}}, {{0, 2.0}, {1, -2.0}}});
  EXPECT_EQ(op.entry(0, 1), 2.0);
  EXPECT_EQ(op.row(0)[0].col, 0u);
}

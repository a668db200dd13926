#include <gridcraft/profiles.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace gridcraft;
using gridcraft::testing::from_rows;
using gridcraft::testing::Gen;

namespace {

Profile1D sum_of(std::vector<double> v) { return Profile1D{Axis::Columns, ProfileKind::Sum, std::move(v), 0}; }

// Straightforward double loops over the pixels of one column / row.
std::vector<double> line(const IntensityImage& img, Axis axis, std::size_t k) {
  std::vector<double> v;
  if (axis == Axis::Columns) {
    for (std::size_t y = 0; y < img.height(); ++y) v.push_back(img.at(k, y));
  } else {
    for (std::size_t x = 0; x < img.width(); ++x) v.push_back(img.at(x, k));
  }
  return v;
}

double naive_sd(const std::vector<double>& v) {
  long double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(std::sqrt(s / (v.size() - 1)));
}

}  // namespace

TEST(SumProfile, TwoByTwo) {
  const auto img = from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(sum_profile(img, Axis::Columns).values, (std::vector<double>{4, 6}));
  EXPECT_EQ(sum_profile(img, Axis::Rows).values, (std::vector<double>{3, 7}));
  EXPECT_EQ(sum_profile(img, Axis::Rows).origin_offset, 0u);
}

TEST(MeanProfile, TwoByTwo) {
  const auto img = from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(mean_profile(img, Axis::Columns).values, (std::vector<double>{2, 3}));
}

TEST(StdDevProfile, TwoByTwo) {
  const auto img = from_rows({{1, 2}, {3, 4}});
  const auto p = stddev_profile(img, Axis::Columns);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p[1], std::sqrt(2.0), 1e-12);
}

TEST(StdDevProfile, SampleDenominator) {
  const auto img = from_rows({{0}, {0}, {2}, {2}});
  EXPECT_NEAR(stddev_profile(img, Axis::Columns)[0], std::sqrt(4.0 / 3.0), 1e-12);
}

TEST(StdDevProfile, SingleSampleLinesAreDegenerate) {
  const auto img = from_rows({{1, 2, 3}});
  try {
    stddev_profile(img, Axis::Columns);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateExtent);
  }
  EXPECT_NO_THROW(stddev_profile(img, Axis::Rows));
}

TEST(StdDevProfile, ConstantLinesAreZero) {
  const auto p = stddev_profile(IntensityImage::filled(5, 7, 1234.5), Axis::Rows);
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(Derivative, ForwardDifference) {
  const auto d = derivative(sum_of({1, 3, 6}));
  EXPECT_EQ(d.values, (std::vector<double>{2, 3}));
  EXPECT_EQ(d.kind, ProfileKind::Derivative);
  EXPECT_EQ(d.origin_offset, 0u);
  const auto d2 = derivative(d);
  EXPECT_EQ(d2.kind, ProfileKind::SecondDerivative);
  EXPECT_EQ(d2.values, (std::vector<double>{1}));
}

TEST(Derivative, ErrorsOnShortOrBinaryInput) {
  try {
    derivative(sum_of({1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
  EXPECT_THROW(derivative(binarize(sum_of({1, 5, 1}), 0.5)), Error);
}

TEST(Derivative, ConstantIsZeroAndTelescopes) {
  Gen gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = gen.values(gen.size(2, 300), -1e3, 1e3);
    const auto d = derivative(sum_of(v));
    double total = 0.0;
    for (double x : d.values) total += x;
    EXPECT_NEAR(total, v.back() - v.front(), 1e-9 * (1.0 + std::abs(v.back() - v.front())));
  }
  for (double x : derivative(sum_of(std::vector<double>(10, 3.5))).values) EXPECT_EQ(x, 0.0);
}

TEST(Derivative, IsLinear) {
  Gen gen(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = gen.size(2, 100);
    const auto p = gen.values(n, -100, 100), q = gen.values(n, -100, 100);
    const double a = gen.real(-3, 3), b = gen.real(-3, 3);
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = a * p[i] + b * q[i];
    const auto dm = derivative(sum_of(mix)), dp = derivative(sum_of(p)), dq = derivative(sum_of(q));
    for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_NEAR(dm[i], a * dp[i] + b * dq[i], 1e-9);
  }
}

TEST(Smooth, TruncatedWindow) {
  const auto s = smooth(sum_of({0, 3, 0}), 3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0], 1.5);
  EXPECT_DOUBLE_EQ(s[1], 1.0);
  EXPECT_DOUBLE_EQ(s[2], 1.5);
  EXPECT_EQ(s.kind, ProfileKind::Sum);
}

TEST(Smooth, WindowOneIsIdentityAndBadWindowsFail) {
  const auto p = sum_of({4, 1, 7, 2});
  EXPECT_EQ(smooth(p, 1).values, p.values);
  for (std::size_t w : {0u, 2u, 5u}) {
    try {
      smooth(p, w);
      FAIL() << w;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadWindow);
    }
  }
}

TEST(Smooth, PreservesConstants) {
  Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = gen.real(0, 1e5);
    const std::size_t n = gen.size(1, 200);
    const std::size_t w = 2 * gen.size(0, (n - 1) / 2) + 1;
    for (double v : smooth(sum_of(std::vector<double>(n, c)), w).values) EXPECT_NEAR(v, c, 1e-9 * c);
  }
}

TEST(Binarize, RangeRelativeThreshold) {
  EXPECT_EQ(binarize(sum_of({1, 5, 1}), 0.5).values, (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(binarize(sum_of({1, 5, 3}), 0.5).values, (std::vector<double>{0, 1, 1}));
}

TEST(Binarize, FlatProfileFails) {
  try {
    binarize(sum_of({2, 2, 2}), 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FlatProfile);
  }
  EXPECT_THROW(binarize(sum_of({1, 2}), 0.0), Error);
  EXPECT_THROW(binarize(sum_of({1, 2}), 1.0), Error);
}

TEST(Binarize, TinyFractionKeepsAllButStrictMinima) {
  Gen gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = gen.values(gen.size(2, 50), 0, 100);
    const double lo = *std::min_element(v.begin(), v.end());
    const auto b = binarize(sum_of(v), 1e-12);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(b[i], v[i] == lo ? 0.0 : 1.0);
  }
}

TEST(Binarize, ScaleInvariant) {
  Gen gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = gen.values(gen.size(2, 50), 0, 100);
    auto w = v;
    for (auto& x : w) x *= 8.0;
    EXPECT_EQ(binarize(sum_of(v), 0.3).values, binarize(sum_of(w), 0.3).values);
  }
}

TEST(Profiles, MatchNaiveLoopsOnRandomImages) {
  Gen gen(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto img = gen.image(gen.size(2, 64), gen.size(2, 64));
    for (Axis axis : {Axis::Columns, Axis::Rows}) {
      const auto s = sum_profile(img, axis), m = mean_profile(img, axis), sd = stddev_profile(img, axis);
      ASSERT_EQ(s.size(), img.extent(axis));
      for (std::size_t k = 0; k < s.size(); ++k) {
        const auto v = line(img, axis, k);
        long double total = 0;
        for (double x : v) total += x;
        EXPECT_NEAR(s[k], static_cast<double>(total), 1e-9 * static_cast<double>(total));
        EXPECT_NEAR(m[k], static_cast<double>(total / v.size()), 1e-9 * static_cast<double>(total / v.size()));
        const double ref = naive_sd(v);
        EXPECT_NEAR(sd[k], ref, 1e-9 * (ref + 1.0));
      }
    }
  }
}

TEST(Profiles, ScaleWithImage) {
  Gen gen(2);
  const auto img = gen.image(13, 9, 1000.0);
  const auto big = scaled(img, 4.0);
  for (Axis axis : {Axis::Columns, Axis::Rows}) {
    const auto a = sum_profile(img, axis), b = sum_profile(big, axis);
    const auto c = stddev_profile(img, axis), d = stddev_profile(big, axis);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(b[i], 4.0 * a[i], 1e-9 * b[i]);
      EXPECT_NEAR(d[i], 4.0 * c[i], 1e-9 * (d[i] + 1.0));
    }
  }
}

TEST(ProfileCsv, HeaderAndRoundTrip) {
  std::ostringstream os;
  write_profile_csv(os, derivative(sum_of({0.1, 0.3, 1.0 / 3.0})));
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "index,value");
  std::getline(in, row);
  EXPECT_EQ(std::stod(row.substr(row.find(',') + 1)), 0.3 - 0.1);
  std::getline(in, row);
  EXPECT_EQ(row.substr(0, 2), "1,");
  EXPECT_EQ(std::stod(row.substr(2)), 1.0 / 3.0 - 0.3);
}

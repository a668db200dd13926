#include <gridcraft/synth.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace gridcraft;

namespace {

// FNV-1a over the pixels rounded to 16-bit integers, little-endian.
std::uint64_t checksum(const IntensityImage& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : img.pixels()) {
    const auto q = static_cast<std::uint16_t>(std::min(65535.0, std::round(v)));
    for (int b = 0; b < 2; ++b) {
      h ^= static_cast<std::uint8_t>(q >> (8 * b));
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.meta_rows = 2;
  s.meta_cols = 3;
  s.spots_rows = 4;
  s.spots_cols = 5;
  s.pitch = 11.5;
  s.subarray_gap = 21.0;
  s.seed = 99;
  return s;
}

}  // namespace

TEST(SplitMix64, ReferenceStream) {
  SplitMix64 rng(1234567);
  EXPECT_EQ(rng.next(), 6457827717110365317ULL);
  EXPECT_EQ(rng.next(), 3203168211198807973ULL);
  EXPECT_EQ(rng.next(), 9817491932198370423ULL);
  EXPECT_EQ(rng.next(), 4593380528125082431ULL);
  EXPECT_EQ(rng.next(), 16408922859458223821ULL);
}

TEST(SplitMix64, NormalMoments) {
  SplitMix64 rng(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(SyntheticSpec, Validation) {
  auto s = small_spec();
  s.spots_cols = 0;
  EXPECT_THROW(s.validate(), Error);
  s = small_spec();
  s.dropout_rate = 1.0;
  EXPECT_THROW(generate(s), Error);
  s = small_spec();
  s.amplitude_lo = 5000.0;
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecInvalid);
  }
}

TEST(SyntheticSpec, OverlapWarning) {
  auto s = small_spec();
  EXPECT_TRUE(s.warnings().empty());
  s.pitch = 8.0;
  EXPECT_EQ(s.warnings().size(), 1u);
}

TEST(Generate, Fig3LikeGeometry) {
  const auto spec = fig3_like_spec();
  EXPECT_EQ(spec.image_width(), 888u);
  EXPECT_EQ(spec.image_height(), 1272u);
  const auto [img, truth] = generate(spec);
  EXPECT_EQ(img.width(), 888u);
  EXPECT_EQ(img.height(), 1272u);
  EXPECT_EQ(truth.spot_centers.size(), 6144u);
  EXPECT_EQ(truth.spot_cell_count(), 6144u);
  EXPECT_EQ(truth.subarray_grid().cell_count(), 16u);
  EXPECT_EQ(truth.subarray_cols.cuts, (std::vector<std::size_t>{0, 222, 444, 666, 888}));
  EXPECT_EQ(truth.subarray_rows.cuts, (std::vector<std::size_t>{0, 318, 636, 954, 1272}));
}

TEST(Generate, GoldenChecksum) {
  const auto [img, truth] = generate(fig3_like_spec());
  EXPECT_EQ(checksum(img), 14625303485690279207ULL);
}

TEST(Generate, DeterministicPerSeed) {
  const auto a = generate(small_spec()).first;
  const auto b = generate(small_spec()).first;
  EXPECT_EQ(a, b);
  auto other = small_spec();
  other.seed = 100;
  other.noise_sigma = 10.0;
  auto noisy = small_spec();
  noisy.noise_sigma = 10.0;
  EXPECT_NE(generate(other).first, generate(noisy).first);
}

TEST(Generate, NoiselessPixelsMatchDirectSum) {
  for (SpotShape shape : {SpotShape::Gaussian, SpotShape::Disc}) {
    auto spec = small_spec();
    spec.shape = shape;
    spec.dropout_rate = 0.2;
    const auto [img, truth] = generate(spec);
    const double sigma = spec.spot_sigma;
    const double reach = shape == SpotShape::Gaussian ? 4 * sigma : 2 * sigma;
    for (std::size_t y = 0; y < img.height(); y += 3) {
      for (std::size_t x = 0; x < img.width(); x += 2) {
        double v = spec.background_level;
        for (const auto& s : truth.spot_centers) {
          const double r2 = (x - s.x) * (x - s.x) + (y - s.y) * (y - s.y);
          if (r2 > reach * reach) continue;
          v += shape == SpotShape::Gaussian ? s.amplitude * std::exp(-r2 / (2 * sigma * sigma)) : s.amplitude;
        }
        ASSERT_NEAR(img.at(x, y), v, 1e-9 * v) << x << "," << y;
      }
    }
  }
}

TEST(Generate, CentresAndCutsAgree) {
  const auto spec = small_spec();
  const auto [img, truth] = generate(spec);
  const double tw = spec.tile_width(), th = spec.tile_height();
  for (const auto& s : truth.spot_centers) {
    EXPECT_DOUBLE_EQ(s.x, s.subarray_col * tw + spec.subarray_gap / 2 + spec.pitch * (s.spot_col + 0.5));
    EXPECT_DOUBLE_EQ(s.y, s.subarray_row * th + spec.subarray_gap / 2 + spec.pitch * (s.spot_row + 0.5));
    // The spot sits in the truth cell carrying its indices.
    const Rect sub = truth.subarray_grid().cell(s.subarray_row, s.subarray_col);
    const Rect cell = truth.spot_cuts[s.subarray_row][s.subarray_col].cell(s.spot_row, s.spot_col);
    EXPECT_GE(s.x, sub.x0 + cell.x0);
    EXPECT_LT(s.x, sub.x0 + cell.x1);
    EXPECT_GE(s.y, sub.y0 + cell.y0);
    EXPECT_LT(s.y, sub.y0 + cell.y1);
    if (!s.dropout) {
      EXPECT_GE(s.amplitude, spec.amplitude_lo);
      EXPECT_LE(s.amplitude, spec.amplitude_hi);
    }
  }
  // Spot cuts lie halfway between neighbouring centres (floored).
  const auto& cols = truth.spot_cuts[0][1].col_lines.interior();
  ASSERT_EQ(cols.size(), spec.spots_cols - 1);
  const double x0 = truth.subarray_cols.cuts[1];
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double mid = tw + spec.subarray_gap / 2 + spec.pitch * (k + 1);
    EXPECT_EQ(static_cast<double>(cols[k]) + x0, std::floor(mid));
  }
}

TEST(Generate, DropoutRateAndAttenuation) {
  auto spec = fig3_like_spec();
  spec.noise_sigma = 0.0;
  const auto [img, truth] = generate(spec);
  std::size_t dropped = 0;
  for (const auto& s : truth.spot_centers) {
    if (!s.dropout) continue;
    ++dropped;
    EXPECT_LE(s.amplitude, kDropoutAttenuation * spec.amplitude_hi);
  }
  const double rate = static_cast<double>(dropped) / truth.spot_centers.size();
  EXPECT_NEAR(rate, 0.05, 0.015);
}

TEST(Generate, NoiseLevelAndClamp) {
  auto spec = small_spec();
  spec.background_level = 0.0;
  spec.amplitude_lo = spec.amplitude_hi = 0.0;
  spec.noise_sigma = 50.0;
  const auto [img, truth] = generate(spec);
  std::size_t zeros = 0;
  for (double v : img.pixels()) {
    EXPECT_GE(v, 0.0);
    zeros += v == 0.0;
  }
  // Half of a zero-mean normal falls below zero and is clamped.
  EXPECT_NEAR(static_cast<double>(zeros) / img.pixels().size(), 0.5, 0.05);
}

TEST(SpecText, RoundTrip) {
  auto spec = small_spec();
  spec.shape = SpotShape::Disc;
  spec.noise_sigma = 12.25;
  std::stringstream ss;
  write_spec(ss, spec);
  const auto back = parse_spec(ss);
  EXPECT_EQ(generate(back).first, generate(spec).first);
  EXPECT_EQ(back.shape, SpotShape::Disc);
  EXPECT_EQ(back.seed, 99u);
}

TEST(SpecText, DefaultsCommentsAndErrors) {
  std::istringstream in("# comment\nseed = 7  # trailing\n\nnoise_sigma=0\n");
  const auto s = parse_spec(in);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.spots_rows, 24u);
  EXPECT_EQ(s.noise_sigma, 0.0);
  for (const char* bad : {"colour = red\n", "pitch = 12px\n", "seed = -3\n", "pitch\n", "spot_shape = square\n",
                          "pitch = 0\n"}) {
    std::istringstream b(bad);
    try {
      parse_spec(b);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SpecInvalid) << bad;
    }
  }
}

TEST(SpotCentersCsv, OneRowPerSpot) {
  const auto [img, truth] = generate(small_spec());
  std::ostringstream os;
  write_spot_centers_csv(os, truth.spot_centers);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + static_cast<long>(truth.spot_centers.size()));
  EXPECT_EQ(text.substr(0, text.find('\n')), "subarray_row,subarray_col,spot_row,spot_col,x,y,amplitude,dropout");
}

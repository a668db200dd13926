#pragma once

// Deterministic synthetic microarray images with exact ground-truth
// geometry.
//
// Layout: the image is a meta_rows x meta_cols grid of equal subarray
// tiles. A tile is spots_cols * pitch + subarray_gap wide (rows likewise);
// its spots sit on a pitch lattice centred in the tile, so the first spot
// centre is gap/2 + pitch/2 from the tile edge. Centres are in pixel-index
// coordinates (pixel x is sampled at x). True cuts lie at the floor of the
// midpoint between neighbouring centres; between subarrays that midpoint is
// the tile edge.

#include <gridcraft/core.hpp>
#include <gridcraft/gridding.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gridcraft {

/**
 * SplitMix64: a 64-bit Weyl sequence (state += 0x9E3779B97F4A7C15) passed
 * through a fixed xor-shift-multiply finaliser. Fully specified, so every
 * port produces the same stream.
 */
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second value of each pair is kept
  /// for the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class SpotShape { Gaussian, Disc };

struct SyntheticSpec {
  std::size_t meta_rows = 1;
  std::size_t meta_cols = 1;
  std::size_t spots_rows = 1;
  std::size_t spots_cols = 1;
  double pitch = 12.0;
  double spot_sigma = 2.5;  // Gaussian sigma; discs use radius 2 * spot_sigma
  double subarray_gap = 30.0;
  double background_level = 200.0;
  double amplitude_lo = 1000.0;
  double amplitude_hi = 3000.0;
  double noise_sigma = 0.0;
  double dropout_rate = 0.0;
  std::uint64_t seed = 1;
  SpotShape shape = SpotShape::Gaussian;

  double tile_width() const { return static_cast<double>(spots_cols) * pitch + subarray_gap; }
  double tile_height() const { return static_cast<double>(spots_rows) * pitch + subarray_gap; }
  std::size_t image_width() const {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(meta_cols) * tile_width()));
  }
  std::size_t image_height() const {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(meta_rows) * tile_height()));
  }
  double mean_amplitude() const { return 0.5 * (amplitude_lo + amplitude_hi); }

  void validate() const {
    if (meta_rows == 0 || meta_cols == 0 || spots_rows == 0 || spots_cols == 0) {
      throw Error(ErrorCode::SpecInvalid, "all lattice dimensions must be positive");
    }
    if (!(pitch > 0.0 && spot_sigma > 0.0)) throw Error(ErrorCode::SpecInvalid, "pitch and spot_sigma must be positive");
    if (!(subarray_gap >= 0.0)) throw Error(ErrorCode::SpecInvalid, "subarray_gap must be non-negative");
    if (!(background_level >= 0.0)) throw Error(ErrorCode::SpecInvalid, "background_level must be non-negative");
    if (!(amplitude_lo >= 0.0 && amplitude_lo <= amplitude_hi)) {
      throw Error(ErrorCode::SpecInvalid, "amplitude range must satisfy 0 <= lo <= hi");
    }
    if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::SpecInvalid, "noise_sigma must be non-negative");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error(ErrorCode::SpecInvalid, "dropout_rate must lie in [0, 1)");
  }

  /// Non-fatal advisories (currently: spots too wide for their pitch).
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (pitch <= 4.0 * spot_sigma) w.push_back("pitch <= 4 * spot_sigma: neighbouring spots overlap");
    return w;
  }
};

/// Dropped-out spots are rendered at this fraction of their drawn amplitude.
inline constexpr double kDropoutAttenuation = 0.02;

struct SpotCenter {
  std::size_t subarray_row = 0;
  std::size_t subarray_col = 0;
  std::size_t spot_row = 0;
  std::size_t spot_col = 0;
  double x = 0.0;
  double y = 0.0;
  double amplitude = 0.0;  // as rendered (attenuated for dropouts)
  bool dropout = false;
};

struct GroundTruth {
  GridLines subarray_cols;
  GridLines subarray_rows;
  /// spot_cuts[r][c]: spot-level cuts of subarray (r, c) in the local
  /// coordinates of that subarray's crop.
  std::vector<std::vector<CellGrid>> spot_cuts;
  std::vector<SpotCenter> spot_centers;

  CellGrid subarray_grid() const { return CellGrid(subarray_cols, subarray_rows); }

  std::size_t spot_cell_count() const {
    std::size_t n = 0;
    for (const auto& row : spot_cuts) {
      for (const auto& g : row) n += g.cell_count();
    }
    return n;
  }
};

/// Canonical 4 x 4 subarrays of 24 x 16 spots (6,144 spots). Pitch, spot
/// size, gap, intensity range and noise level are this library's choices;
/// noise_sigma is 10% of the mean spot amplitude.
inline SyntheticSpec fig3_like_spec() {
  SyntheticSpec s;
  s.meta_rows = 4;
  s.meta_cols = 4;
  s.spots_rows = 24;
  s.spots_cols = 16;
  s.pitch = 12.0;
  s.spot_sigma = 2.5;
  s.subarray_gap = 30.0;
  s.background_level = 200.0;
  s.amplitude_lo = 1000.0;
  s.amplitude_hi = 3000.0;
  s.noise_sigma = 200.0;
  s.dropout_rate = 0.05;
  s.seed = 20070416;
  return s;
}

namespace detail {

inline std::size_t floor_index(double v) { return static_cast<std::size_t>(std::floor(v)); }

inline GridLines truth_lines(Axis axis, std::size_t extent, double tile, std::size_t tiles) {
  std::vector<std::size_t> interior;
  for (std::size_t k = 1; k < tiles; ++k) interior.push_back(floor_index(static_cast<double>(k) * tile));
  return GridLines::from_interior(axis, extent, std::move(interior));
}

// Local spot cuts of the tile starting at `origin`, inside a crop that
// starts at floor(origin) and has length `extent`.
inline GridLines truth_spot_lines(Axis axis, double origin, std::size_t extent, std::size_t spots, double pitch,
                                  double gap) {
  const double crop0 = std::floor(origin);
  std::vector<std::size_t> interior;
  for (std::size_t k = 1; k < spots; ++k) {
    interior.push_back(floor_index(origin + 0.5 * gap + pitch * static_cast<double>(k) - crop0));
  }
  return GridLines::from_interior(axis, extent, std::move(interior));
}

}  // namespace detail

/**
 * Renders the image and its ground truth.
 *
 * Random draws, in order: for each spot (subarray row-major, then spot
 * row-major) one uniform for the dropout decision and one for the
 * amplitude; then, if noise_sigma > 0, one normal deviate per pixel in
 * row-major order. Pixel value = background + spots + noise, clamped at 0.
 */
inline std::pair<IntensityImage, GroundTruth> generate(const SyntheticSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const std::size_t W = spec.image_width(), H = spec.image_height();
  const double tw = spec.tile_width(), th = spec.tile_height();

  GroundTruth truth;
  truth.subarray_cols = detail::truth_lines(Axis::Columns, W, tw, spec.meta_cols);
  truth.subarray_rows = detail::truth_lines(Axis::Rows, H, th, spec.meta_rows);

  truth.spot_cuts.resize(spec.meta_rows);
  for (std::size_t R = 0; R < spec.meta_rows; ++R) {
    for (std::size_t C = 0; C < spec.meta_cols; ++C) {
      const Rect tile = CellGrid(truth.subarray_cols, truth.subarray_rows).cell(R, C);
      const double ox = static_cast<double>(C) * tw, oy = static_cast<double>(R) * th;
      truth.spot_cuts[R].emplace_back(
          detail::truth_spot_lines(Axis::Columns, ox, tile.width(), spec.spots_cols, spec.pitch, spec.subarray_gap),
          detail::truth_spot_lines(Axis::Rows, oy, tile.height(), spec.spots_rows, spec.pitch, spec.subarray_gap));
      for (std::size_t r = 0; r < spec.spots_rows; ++r) {
        for (std::size_t c = 0; c < spec.spots_cols; ++c) {
          SpotCenter s;
          s.subarray_row = R;
          s.subarray_col = C;
          s.spot_row = r;
          s.spot_col = c;
          s.x = ox + 0.5 * spec.subarray_gap + spec.pitch * (static_cast<double>(c) + 0.5);
          s.y = oy + 0.5 * spec.subarray_gap + spec.pitch * (static_cast<double>(r) + 0.5);
          s.dropout = rng.uniform() < spec.dropout_rate;
          s.amplitude = spec.amplitude_lo + (spec.amplitude_hi - spec.amplitude_lo) * rng.uniform();
          if (s.dropout) s.amplitude *= kDropoutAttenuation;
          truth.spot_centers.push_back(s);
        }
      }
    }
  }

  std::vector<double> px(W * H, spec.background_level);
  const double sigma = spec.spot_sigma;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double reach = spec.shape == SpotShape::Gaussian ? 4.0 * sigma : 2.0 * sigma;
  for (const auto& s : truth.spot_centers) {
    const auto x0 = static_cast<std::size_t>(std::max(0.0, std::ceil(s.x - reach)));
    const auto y0 = static_cast<std::size_t>(std::max(0.0, std::ceil(s.y - reach)));
    const auto x1 = std::min(W, detail::floor_index(s.x + reach) + 1);
    const auto y1 = std::min(H, detail::floor_index(s.y + reach) + 1);
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) {
        const double dx = static_cast<double>(x) - s.x, dy = static_cast<double>(y) - s.y;
        const double r2 = dx * dx + dy * dy;
        if (r2 > reach * reach) continue;
        px[y * W + x] += spec.shape == SpotShape::Gaussian ? s.amplitude * std::exp(-r2 * inv2s2) : s.amplitude;
      }
    }
  }
  if (spec.noise_sigma > 0.0) {
    for (double& v : px) v += spec.noise_sigma * rng.normal();
  }
  for (double& v : px) v = std::max(v, 0.0);

  return {IntensityImage(W, H, std::move(px), 16), std::move(truth)};
}

/// `key = value` lines, `#` comments. Keys absent from the text keep the
/// values of `defaults`. Unknown keys and malformed values raise SpecInvalid.
inline SyntheticSpec parse_spec(std::istream& in, SyntheticSpec defaults = fig3_like_spec()) {
  SyntheticSpec s = defaults;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw Error(ErrorCode::SpecInvalid, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto bad = [&] { return Error(ErrorCode::SpecInvalid, "line " + std::to_string(lineno) + ": bad value for " + key); };
    auto as_size = [&]() -> std::size_t {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        if (!value.empty() && value[0] == '-') throw bad();
        v = std::stoull(value, &pos);
      } catch (const std::logic_error&) {
        throw bad();
      }
      if (pos != value.size()) throw bad();
      return static_cast<std::size_t>(v);
    };
    auto as_double = [&]() -> double {
      std::size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(value, &pos);
      } catch (const std::logic_error&) {
        throw bad();
      }
      if (pos != value.size()) throw bad();
      return v;
    };
    if (key == "meta_rows") s.meta_rows = as_size();
    else if (key == "meta_cols") s.meta_cols = as_size();
    else if (key == "spots_rows") s.spots_rows = as_size();
    else if (key == "spots_cols") s.spots_cols = as_size();
    else if (key == "pitch") s.pitch = as_double();
    else if (key == "spot_sigma") s.spot_sigma = as_double();
    else if (key == "subarray_gap") s.subarray_gap = as_double();
    else if (key == "background_level") s.background_level = as_double();
    else if (key == "amplitude_lo") s.amplitude_lo = as_double();
    else if (key == "amplitude_hi") s.amplitude_hi = as_double();
    else if (key == "noise_sigma") s.noise_sigma = as_double();
    else if (key == "dropout_rate") s.dropout_rate = as_double();
    else if (key == "seed") s.seed = as_size();
    else if (key == "spot_shape") {
      if (value == "gaussian") s.shape = SpotShape::Gaussian;
      else if (value == "disc") s.shape = SpotShape::Disc;
      else throw bad();
    } else {
      throw Error(ErrorCode::SpecInvalid, "line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  s.validate();
  return s;
}

inline void write_spec(std::ostream& os, const SyntheticSpec& s) {
  std::ostringstream o;
  o.precision(17);
  o << "meta_rows = " << s.meta_rows << "\n"
    << "meta_cols = " << s.meta_cols << "\n"
    << "spots_rows = " << s.spots_rows << "\n"
    << "spots_cols = " << s.spots_cols << "\n"
    << "pitch = " << s.pitch << "\n"
    << "spot_sigma = " << s.spot_sigma << "\n"
    << "subarray_gap = " << s.subarray_gap << "\n"
    << "background_level = " << s.background_level << "\n"
    << "amplitude_lo = " << s.amplitude_lo << "\n"
    << "amplitude_hi = " << s.amplitude_hi << "\n"
    << "noise_sigma = " << s.noise_sigma << "\n"
    << "dropout_rate = " << s.dropout_rate << "\n"
    << "seed = " << s.seed << "\n"
    << "spot_shape = " << (s.shape == SpotShape::Gaussian ? "gaussian" : "disc") << "\n";
  os << o.str();
}

/// Spot centres as CSV.
inline void write_spot_centers_csv(std::ostream& os, const std::vector<SpotCenter>& centers) {
  os << "subarray_row,subarray_col,spot_row,spot_col,x,y,amplitude,dropout\n";
  char buf[160];
  for (const auto& s : centers) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%d\n", s.subarray_row, s.subarray_col,
                  s.spot_row, s.spot_col, s.x, s.y, s.amplitude, s.dropout ? 1 : 0);
    os << buf;
  }
}

}  // namespace gridcraft

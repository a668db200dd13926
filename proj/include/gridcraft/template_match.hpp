#pragma once

// Lattice placement by exhaustive translation search with zero-normalised
// cross-correlation against an ideal rendered subarray.

#include <gridcraft/core.hpp>
#include <gridcraft/gridding.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gridcraft {

/// Geometry of one ideal subarray: an n_rows x n_cols lattice of spots.
struct Template {
  std::size_t n_rows = 1;
  std::size_t n_cols = 1;
  double pitch_x = 1.0;
  double pitch_y = 1.0;
  double spot_radius = 1.0;
  double margin = 0.0;

  void validate() const {
    if (n_rows == 0 || n_cols == 0) throw Error(ErrorCode::InvalidArgument, "template needs at least one spot");
    if (!(pitch_x > 0.0 && pitch_y > 0.0 && spot_radius > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "template pitch and radius must be positive");
    }
    if (!(margin >= 0.0)) throw Error(ErrorCode::InvalidArgument, "template margin must be non-negative");
  }

  std::size_t width() const { return static_cast<std::size_t>(std::lround(2.0 * margin + n_cols * pitch_x)); }
  std::size_t height() const { return static_cast<std::size_t>(std::lround(2.0 * margin + n_rows * pitch_y)); }

  double center_x(std::size_t col) const { return margin + pitch_x * (static_cast<double>(col) + 0.5); }
  double center_y(std::size_t row) const { return margin + pitch_y * (static_cast<double>(row) + 0.5); }
};

/// Parses "rows=24,cols=16,pitch=12,radius=5,margin=6". `pitch` sets both
/// pitches; `pitch_x` / `pitch_y` set one. Missing keys keep their defaults.
inline Template parse_template(std::string_view text) {
  Template t;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "template item needs key=value");
    const std::string key(item.substr(0, eq)), value(item.substr(eq + 1));
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw Error(ErrorCode::InvalidArgument, "bad template value for " + key);
    auto count = [&] {
      if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, key + " must be a positive integer");
      return static_cast<std::size_t>(v);
    };
    if (key == "rows") t.n_rows = count();
    else if (key == "cols") t.n_cols = count();
    else if (key == "pitch") t.pitch_x = t.pitch_y = v;
    else if (key == "pitch_x") t.pitch_x = v;
    else if (key == "pitch_y") t.pitch_y = v;
    else if (key == "radius") t.spot_radius = v;
    else if (key == "margin") t.margin = v;
    else throw Error(ErrorCode::InvalidArgument, "unknown template key " + key);
  }
  t.validate();
  return t;
}

/// Noiseless subarray: unit Gaussian spots (sigma = radius / 2) on a zero
/// background, centred at margin + pitch * (k + 1/2).
inline IntensityImage render_template(const Template& t) {
  t.validate();
  const std::size_t w = t.width(), h = t.height();
  std::vector<double> px(w * h, 0.0);
  const double sigma = t.spot_radius / 2.0;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double reach = 4.0 * sigma;
  for (std::size_t r = 0; r < t.n_rows; ++r) {
    for (std::size_t c = 0; c < t.n_cols; ++c) {
      const double cx = t.center_x(c), cy = t.center_y(r);
      const auto x0 = static_cast<std::size_t>(std::max(0.0, std::ceil(cx - reach)));
      const auto y0 = static_cast<std::size_t>(std::max(0.0, std::ceil(cy - reach)));
      const auto x1 = std::min(w, static_cast<std::size_t>(std::floor(cx + reach)) + 1);
      const auto y1 = std::min(h, static_cast<std::size_t>(std::floor(cy + reach)) + 1);
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          px[y * w + x] += std::exp(-(dx * dx + dy * dy) * inv2s2);
        }
      }
    }
  }
  return IntensityImage(w, h, std::move(px));
}

struct TemplateMatchResult {
  std::ptrdiff_t dx = 0;
  std::ptrdiff_t dy = 0;
  double score = 0.0;
  CellGrid grid;
};

/// Lattice cell lines for a template placed at (dx, dy) in an image of the
/// given size. Only the lines between spots are cuts; the space outside the
/// lattice is absorbed by the border cells.
inline CellGrid lattice_grid(const Template& t, std::ptrdiff_t dx, std::ptrdiff_t dy, std::size_t width,
                             std::size_t height) {
  std::vector<std::size_t> xs, ys;
  for (std::size_t k = 1; k < t.n_cols; ++k) {
    const double x = static_cast<double>(dx) + t.margin + t.pitch_x * static_cast<double>(k);
    if (x > 0.0) xs.push_back(static_cast<std::size_t>(std::lround(x)));
  }
  for (std::size_t k = 1; k < t.n_rows; ++k) {
    const double y = static_cast<double>(dy) + t.margin + t.pitch_y * static_cast<double>(k);
    if (y > 0.0) ys.push_back(static_cast<std::size_t>(std::lround(y)));
  }
  return CellGrid(GridLines::from_interior(Axis::Columns, width, std::move(xs)),
                  GridLines::from_interior(Axis::Rows, height, std::move(ys)));
}

/**
 * Finds the translation of the rendered template that maximises the
 * zero-normalised cross-correlation with the image. Ties resolve to the
 * first offset in row-major order. A best score below `min_score` means the
 * lattice does not fit (rotation, scale or pitch mismatch) and raises
 * GeometricDistortion.
 */
inline TemplateMatchResult template_match(const IntensityImage& img, const Template& t, double min_score = 0.5) {
  const IntensityImage tpl = render_template(t);
  const std::size_t tw = tpl.width(), th = tpl.height();
  const std::size_t W = img.width(), H = img.height();
  if (tw > W || th > H) throw Error(ErrorCode::TemplateTooLarge, "rendered template exceeds image");

  const double n = static_cast<double>(tw * th);
  double tmean = 0.0;
  for (double v : tpl.pixels()) tmean += v;
  tmean /= n;
  std::vector<double> t0(tpl.pixels().size());
  double tnorm = 0.0;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    t0[i] = tpl.pixels()[i] - tmean;
    tnorm += t0[i] * t0[i];
  }

  // Summed-area tables of I and I^2 give each window's variance in O(1).
  const std::size_t sw = W + 1;
  std::vector<double> s1((W + 1) * (H + 1), 0.0), s2((W + 1) * (H + 1), 0.0);
  for (std::size_t y = 0; y < H; ++y) {
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t x = 0; x < W; ++x) {
      const double v = img.at(x, y);
      r1 += v;
      r2 += v * v;
      s1[(y + 1) * sw + x + 1] = s1[y * sw + x + 1] + r1;
      s2[(y + 1) * sw + x + 1] = s2[y * sw + x + 1] + r2;
    }
  }
  auto box = [&](const std::vector<double>& s, std::size_t x, std::size_t y) {
    return s[(y + th) * sw + x + tw] - s[y * sw + x + tw] - s[(y + th) * sw + x] + s[y * sw + x];
  };

  TemplateMatchResult best;
  best.score = -2.0;
  for (std::size_t oy = 0; oy + th <= H; ++oy) {
    for (std::size_t ox = 0; ox + tw <= W; ++ox) {
      const double sum = box(s1, ox, oy);
      const double sq = box(s2, ox, oy);
      const double var = sq - sum * sum / n;
      double score = 0.0;
      // Windows whose variance is within rounding of zero are flat.
      if (var > 1e-10 * sq && tnorm > 0.0) {
        double cross = 0.0;
        for (std::size_t y = 0; y < th; ++y) {
          const double* irow = img.row(oy + y) + ox;
          const double* trow = t0.data() + y * tw;
          for (std::size_t x = 0; x < tw; ++x) cross += irow[x] * trow[x];
        }
        score = std::clamp(cross / std::sqrt(var * tnorm), -1.0, 1.0);
      }
      if (score > best.score) {
        best.score = score;
        best.dx = static_cast<std::ptrdiff_t>(ox);
        best.dy = static_cast<std::ptrdiff_t>(oy);
      }
    }
  }
  if (best.score < min_score) {
    throw Error(ErrorCode::GeometricDistortion,
                "best template correlation " + std::to_string(best.score) + " below " + std::to_string(min_score));
  }
  best.grid = lattice_grid(t, best.dx, best.dy, W, H);
  return best;
}

}  // namespace gridcraft

#pragma once

// Cut-line detection on projection profiles.
//
// Two families of rules turn a profile into cut positions:
//   * threshold rules binarize the profile and cut at the middle of every
//     low run ("gap"),
//   * derivative rules cut at every local minimum, found where the first
//     difference changes sign from negative to non-negative.
// Both are used at two scopes: whole image (cuts between subarrays) and one
// subarray (cuts between spots).

#include <gridcraft/core.hpp>
#include <gridcraft/profiles.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridcraft {

/// Ordered cut positions along one axis. A cut at c separates pixel c-1 from
/// pixel c; the list always starts at 0 and ends at the axis extent.
struct GridLines {
  Axis axis = Axis::Columns;
  std::vector<std::size_t> cuts;

  GridLines() = default;
  GridLines(Axis a, std::vector<std::size_t> c) : axis(a), cuts(std::move(c)) { validate(); }

  /// Cuts {0, interior..., extent}; interior positions outside (0, extent)
  /// are dropped, duplicates collapsed.
  static GridLines from_interior(Axis a, std::size_t extent, std::vector<std::size_t> interior) {
    std::sort(interior.begin(), interior.end());
    std::vector<std::size_t> cuts{0};
    for (std::size_t c : interior) {
      if (c > cuts.back() && c < extent) cuts.push_back(c);
    }
    cuts.push_back(extent);
    return GridLines(a, std::move(cuts));
  }

  static GridLines borders(Axis a, std::size_t extent) { return from_interior(a, extent, {}); }

  std::size_t extent() const { return cuts.back(); }
  std::size_t intervals() const { return cuts.size() - 1; }

  std::vector<std::size_t> interior() const {
    return cuts.size() > 2 ? std::vector<std::size_t>(cuts.begin() + 1, cuts.end() - 1)
                           : std::vector<std::size_t>{};
  }

  void validate() const {
    if (cuts.size() < 2 || cuts.front() != 0) {
      throw Error(ErrorCode::InvalidArgument, "grid lines must start at 0 and contain the far border");
    }
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      if (cuts[i] <= cuts[i - 1]) throw Error(ErrorCode::InvalidArgument, "grid lines must be strictly increasing");
    }
  }

  friend bool operator==(const GridLines&, const GridLines&) = default;
};

/// Cartesian product of column and row cut lines; cells tile the image.
struct CellGrid {
  GridLines col_lines;
  GridLines row_lines;

  CellGrid() = default;
  CellGrid(GridLines cols, GridLines rows) : col_lines(std::move(cols)), row_lines(std::move(rows)) {
    if (col_lines.axis != Axis::Columns || row_lines.axis != Axis::Rows) {
      throw Error(ErrorCode::AxisMismatch, "cell grid needs column lines and row lines");
    }
  }

  std::size_t cols() const { return col_lines.intervals(); }
  std::size_t rows() const { return row_lines.intervals(); }
  std::size_t cell_count() const { return cols() * rows(); }
  std::size_t width() const { return col_lines.extent(); }
  std::size_t height() const { return row_lines.extent(); }

  Rect cell(std::size_t row, std::size_t col) const {
    return Rect{col_lines.cuts[col], row_lines.cuts[row], col_lines.cuts[col + 1], row_lines.cuts[row + 1]};
  }

  friend bool operator==(const CellGrid&, const CellGrid&) = default;
};

enum class MethodKind { TemplateMatch, SumThreshold, StdDevThreshold, SumDerivative, StdDevDerivative };

inline bool is_threshold(MethodKind k) {
  return k == MethodKind::SumThreshold || k == MethodKind::StdDevThreshold;
}
inline bool is_derivative(MethodKind k) {
  return k == MethodKind::SumDerivative || k == MethodKind::StdDevDerivative;
}

/// CLI names: template, sum, stddev, sum-deriv, stddev-deriv.
inline std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::TemplateMatch: return "template";
    case MethodKind::SumThreshold: return "sum";
    case MethodKind::StdDevThreshold: return "stddev";
    case MethodKind::SumDerivative: return "sum-deriv";
    case MethodKind::StdDevDerivative: return "stddev-deriv";
  }
  return "unknown";
}

inline std::optional<MethodKind> parse_method_kind(std::string_view name) {
  for (MethodKind k : {MethodKind::TemplateMatch, MethodKind::SumThreshold, MethodKind::StdDevThreshold,
                       MethodKind::SumDerivative, MethodKind::StdDevDerivative}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

/// Moving-average window applied to a profile before minima detection.
struct SmoothWindow {
  std::size_t value = 1;
};

/**
 * A gridding method together with its parameters.
 *
 * Threshold methods carry a range fraction; derivative methods have none,
 * and their factories do not even accept one. `create` is the checked entry
 * point for untyped input (the CLI): it rejects a threshold on a derivative
 * method and a missing threshold on a threshold method.
 */
class Method {
 public:
  static Method sum_threshold(double fraction) { return create(MethodKind::SumThreshold, fraction); }
  static Method stddev_threshold(double fraction) { return create(MethodKind::StdDevThreshold, fraction); }
  static Method sum_derivative(SmoothWindow w = {}) { return create(MethodKind::SumDerivative, std::nullopt, w); }
  static Method stddev_derivative(SmoothWindow w = {}) {
    return create(MethodKind::StdDevDerivative, std::nullopt, w);
  }
  static Method template_match() { return create(MethodKind::TemplateMatch, std::nullopt); }

  static Method create(MethodKind kind, std::optional<double> threshold_fraction, SmoothWindow w = {}) {
    if (is_threshold(kind)) {
      if (!threshold_fraction) {
        throw Error(ErrorCode::InvalidMethod, std::string(to_string(kind)) + " requires a threshold fraction");
      }
      if (!(*threshold_fraction > 0.0 && *threshold_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidMethod, "threshold fraction must lie in (0, 1)");
      }
    } else if (threshold_fraction) {
      throw Error(ErrorCode::InvalidMethod, std::string(to_string(kind)) + " does not take a threshold");
    }
    if (w.value == 0 || w.value % 2 == 0) throw Error(ErrorCode::InvalidMethod, "smoothing window must be odd");
    if (w.value != 1 && !is_derivative(kind)) {
      throw Error(ErrorCode::InvalidMethod, "smoothing applies to derivative methods only");
    }
    return Method(kind, threshold_fraction, w.value);
  }

  MethodKind kind() const { return kind_; }
  std::optional<double> threshold_fraction() const { return threshold_; }
  std::size_t smooth_window() const { return smooth_; }

  friend bool operator==(const Method&, const Method&) = default;

 private:
  Method(MethodKind k, std::optional<double> t, std::size_t s) : kind_(k), threshold_(t), smooth_(s) {}

  MethodKind kind_;
  std::optional<double> threshold_;
  std::size_t smooth_;
};

/// Image-level (between subarrays) or subarray-level (between spots).
enum class Scope { Subarray, Spot };

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename T>
std::vector<double> spacings(const std::vector<T>& positions) {
  std::vector<double> d;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    d.push_back(static_cast<double>(positions[i]) - static_cast<double>(positions[i - 1]));
  }
  return d;
}

struct Run {
  std::size_t begin;  // inclusive
  std::size_t end;    // inclusive
};

// Maximal runs of `value` in a binary profile.
inline std::vector<Run> runs_of(const std::vector<double>& b, double value) {
  std::vector<Run> out;
  for (std::size_t i = 0; i < b.size();) {
    if (b[i] != value) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < b.size() && b[j + 1] == value) ++j;
    out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

// Local minima of p: the first difference goes negative -> positive, or
// negative -> zero run -> positive (plateau, reported at its floor centre).
inline std::vector<std::size_t> raw_minima(const std::vector<double>& p) {
  std::vector<std::size_t> out;
  if (p.size() < 3) return out;
  std::vector<double> d1(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) d1[i] = p[i + 1] - p[i];
  std::size_t k = 1;
  while (k < d1.size()) {
    if (!(d1[k - 1] < 0.0) || d1[k] < 0.0) {
      ++k;
      continue;
    }
    if (d1[k] > 0.0) {
      out.push_back(k);
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j < d1.size() && d1[j] == 0.0) ++j;
    if (j < d1.size() && d1[j] > 0.0) out.push_back((k + j) / 2);
    k = j;
  }
  return out;
}

// Candidates closer than half the median spacing collapse onto the lower
// one. Repeated until no pair is merged.
inline std::vector<std::size_t> merge_close(const std::vector<double>& p, std::vector<std::size_t> c) {
  while (c.size() >= 2) {
    const double radius = 0.5 * median(spacings(c));
    std::vector<std::size_t> kept{c.front()};
    for (std::size_t i = 1; i < c.size(); ++i) {
      if (static_cast<double>(c[i] - kept.back()) < radius) {
        if (p[c[i]] < p[kept.back()]) kept.back() = c[i];
      } else {
        kept.push_back(c[i]);
      }
    }
    if (kept.size() == c.size()) break;
    c = std::move(kept);
  }
  return c;
}

// Prominence of each minimum: how far the profile must rise before a lower
// sample (or the border) is reached, taking the easier of the two sides.
inline std::vector<double> prominences(const std::vector<double>& p, const std::vector<std::size_t>& c) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = p[c[i]];
    double left = v, right = v;
    for (std::size_t k = c[i]; k-- > 0 && !(p[k] < v);) left = std::max(left, p[k]);
    for (std::size_t k = c[i] + 1; k < p.size() && !(p[k] < v); ++k) right = std::max(right, p[k]);
    out[i] = std::min(left, right) - v;
  }
  return out;
}

// Keeps the minima that stand out. Prominences are visited from the largest
// down and accepted while each is at least half the median of those already
// accepted; the first one that falls short ends the scan. Noise ripples in
// flat stretches are far shallower than the valleys between spots, so the
// scan stops at the boundary between the two populations.
inline std::vector<std::size_t> keep_prominent(const std::vector<double>& p, const std::vector<std::size_t>& c) {
  const auto prom = prominences(p, c);
  std::vector<std::size_t> order(c.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prom[a] > prom[b]; });
  std::vector<double> accepted;
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (!(prom[i] > 0.0)) break;
    if (!accepted.empty() && prom[i] < 0.5 * median(accepted)) break;
    accepted.push_back(prom[i]);
    kept.push_back(c[i]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline std::size_t argmax_in(const std::vector<double>& p, std::size_t lo, std::size_t hi_exclusive) {
  return static_cast<std::size_t>(
      std::max_element(p.begin() + static_cast<std::ptrdiff_t>(lo), p.begin() + static_cast<std::ptrdiff_t>(hi_exclusive)) -
      p.begin());
}

// Consecutive signal peaks further apart than 1.5x the median peak spacing
// straddle a subarray gap.
inline std::vector<std::size_t> wide_gap_indices(const std::vector<std::size_t>& peaks) {
  std::vector<std::size_t> out;
  if (peaks.size() < 2) return out;
  const auto gaps = spacings(peaks);
  const double limit = 1.5 * median(gaps);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i] > limit) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// One cut at the floor midpoint of every zero run that does not touch a
/// border; border runs are absorbed into the 0 and extent cuts.
inline GridLines gap_middle_cuts(const Profile1D& b, std::size_t extent) {
  if (b.kind != ProfileKind::Binary) throw Error(ErrorCode::InvalidArgument, "gap_middle_cuts needs a binary profile");
  if (b.size() != extent) throw Error(ErrorCode::DimensionMismatch, "profile length differs from extent");
  std::vector<std::size_t> interior;
  for (const auto& run : detail::runs_of(b.values, 0.0)) {
    if (run.begin == 0 || run.end + 1 == b.size()) continue;
    interior.push_back((run.begin + run.end) / 2);
  }
  return GridLines::from_interior(b.axis, extent, std::move(interior));
}

/**
 * Cuts at the local minima of a sum or standard-deviation profile.
 *
 * A minimum is where the first difference turns from negative to
 * non-negative with a positive second difference; a flat bottom yields one
 * cut at its floor centre. Noise minima are discarded by prominence (see
 * keep_prominent), then minima closer than half the median spacing are
 * merged onto the lower one. Both rules are relative to the profile itself,
 * so no intensity level is involved.
 */
inline GridLines derivative_minima_cuts(const Profile1D& p, std::size_t extent) {
  if (p.kind != ProfileKind::Sum && p.kind != ProfileKind::StdDev && p.kind != ProfileKind::Mean) {
    throw Error(ErrorCode::InvalidArgument, "minima detection needs a sum, mean or stddev profile");
  }
  if (p.size() != extent) throw Error(ErrorCode::DimensionMismatch, "profile length differs from extent");
  if (p.size() < 3) throw Error(ErrorCode::TooShort, "minima detection needs at least three samples");
  auto c = detail::merge_close(p.values, detail::keep_prominent(p.values, detail::raw_minima(p.values)));
  if (c.empty()) throw Error(ErrorCode::NoStructure, "profile has no interior minimum");
  return GridLines::from_interior(p.axis, extent, std::move(c));
}

/// Median spacing of consecutive interior cuts: the lattice pitch.
inline double estimate_period(const GridLines& g) {
  const auto interior = g.interior();
  if (interior.size() < 2) throw Error(ErrorCode::TooFewCuts, "period estimation needs two interior cuts");
  return detail::median(detail::spacings(interior));
}

/// The profile a method works on, smoothed when the method asks for it.
inline Profile1D method_profile(const IntensityImage& img, Axis axis, const Method& method) {
  switch (method.kind()) {
    case MethodKind::SumThreshold:
    case MethodKind::SumDerivative: return smooth(sum_profile(img, axis), method.smooth_window());
    case MethodKind::StdDevThreshold:
    case MethodKind::StdDevDerivative: return smooth(stddev_profile(img, axis), method.smooth_window());
    case MethodKind::TemplateMatch: break;
  }
  throw Error(ErrorCode::MethodMismatch, "template matching grids whole lattices, not single axes");
}

namespace detail {

inline GridLines threshold_subarray_cuts(const Profile1D& p, double fraction) {
  const auto b = binarize(p, fraction);
  const auto signals = runs_of(b.values, 1.0);
  std::vector<std::size_t> peaks;
  for (const auto& r : signals) peaks.push_back(argmax_in(p.values, r.begin, r.end + 1));
  std::vector<std::size_t> interior;
  // The zero run between signal i and i+1 is the gap they straddle.
  for (std::size_t i : wide_gap_indices(peaks)) interior.push_back((signals[i].end + 1 + signals[i + 1].begin - 1) / 2);
  return GridLines::from_interior(p.axis, p.size(), std::move(interior));
}

inline GridLines derivative_subarray_cuts(const Profile1D& p) {
  const auto spots = derivative_minima_cuts(p, p.size());
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < spots.intervals(); ++i) {
    peaks.push_back(argmax_in(p.values, spots.cuts[i], spots.cuts[i + 1]));
  }
  std::vector<std::size_t> interior;
  for (std::size_t i : wide_gap_indices(peaks)) interior.push_back((peaks[i] + peaks[i + 1]) / 2);
  return GridLines::from_interior(p.axis, p.size(), std::move(interior));
}

}  // namespace detail

/**
 * Cut lines along one axis.
 *
 * Spot scope: threshold methods binarize the profile and cut at gap
 * middles; derivative methods cut at profile minima.
 *
 * Subarray scope: the same per-spot signal structure is found first, then
 * only gaps between neighbouring signal peaks wider than 1.5x the median
 * peak spacing are kept. Threshold methods cut at the middle of such a gap's
 * zero run, derivative methods halfway between the two flanking peaks.
 */
inline GridLines grid_axis(const IntensityImage& img, Axis axis, const Method& method, Scope scope = Scope::Spot) {
  const Profile1D p = method_profile(img, axis, method);
  const std::size_t extent = img.extent(axis);
  if (is_threshold(method.kind())) {
    const double fraction = *method.threshold_fraction();
    if (scope == Scope::Spot) return gap_middle_cuts(binarize(p, fraction), extent);
    return detail::threshold_subarray_cuts(p, fraction);
  }
  if (!(p.max() > p.min())) throw Error(ErrorCode::NoStructure, "flat profile");
  if (scope == Scope::Spot) {
    // A single spot has a peak but no interior minimum: one interval.
    if (detail::raw_minima(p.values).empty()) return GridLines::borders(axis, extent);
    return derivative_minima_cuts(p, extent);
  }
  return detail::derivative_subarray_cuts(p);
}

/// Subarray-level cells of a whole array image.
inline CellGrid grid_image(const IntensityImage& img, const Method& method) {
  return CellGrid(grid_axis(img, Axis::Columns, method, Scope::Subarray),
                  grid_axis(img, Axis::Rows, method, Scope::Subarray));
}

/// Spot-level cells of one subarray crop.
inline CellGrid grid_subarray(const IntensityImage& sub, const Method& method) {
  return CellGrid(grid_axis(sub, Axis::Columns, method, Scope::Spot), grid_axis(sub, Axis::Rows, method, Scope::Spot));
}

}  // namespace gridcraft

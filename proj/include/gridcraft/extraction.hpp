#pragma once

// Cell extraction, the one-spot-per-cell check and cut-line scoring against
// ground truth.

#include <gridcraft/core.hpp>
#include <gridcraft/gridding.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

namespace gridcraft {

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// One spot cell. `bounds` is in the coordinates of the image the cell was
/// extracted from.
struct SpotCell {
  CellIndex subarray;
  CellIndex cell;
  Rect bounds;
};

/// All cells of `g`, row-major. Without `origin` the grid must span `img`
/// exactly; with it, the grid was computed on a crop whose top-left sits at
/// `origin` in `img` and the bounds are shifted accordingly.
inline std::vector<SpotCell> extract_cells(const IntensityImage& img, const CellGrid& g, CellIndex subarray = {},
                                           std::optional<std::pair<std::size_t, std::size_t>> at = std::nullopt) {
  const auto origin = at.value_or(std::pair<std::size_t, std::size_t>{0, 0});
  if (origin.first + g.width() > img.width() || origin.second + g.height() > img.height()) {
    throw Error(ErrorCode::DimensionMismatch, "cell grid does not fit the image");
  }
  if (!at && (g.width() != img.width() || g.height() != img.height())) {
    throw Error(ErrorCode::DimensionMismatch, "cell grid was built for a different image size");
  }
  std::vector<SpotCell> out;
  out.reserve(g.cell_count());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      Rect b = g.cell(r, c);
      b.x0 += origin.first;
      b.x1 += origin.first;
      b.y0 += origin.second;
      b.y1 += origin.second;
      out.push_back(SpotCell{subarray, CellIndex{r, c}, b});
    }
  }
  return out;
}

/**
 * Number of bright blobs in a cell: 8-connected components of the pixels at
 * or above the cell's mid-range level, ignoring components under 4 pixels.
 * Flat cells have no blobs. This is an evaluation aid, not a segmenter.
 */
inline std::size_t count_spots(const IntensityImage& cell) {
  const double lo = cell.min_value(), hi = cell.max_value();
  if (!(hi > lo)) return 0;
  const double level = lo + 0.5 * (hi - lo);
  const std::size_t w = cell.width(), h = cell.height();
  std::vector<char> fg(w * h), seen(w * h, 0);
  for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = cell.pixels()[i] >= level;

  constexpr std::size_t kMinArea = 4;
  std::size_t count = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < fg.size(); ++start) {
    if (!fg[start] || seen[start]) continue;
    std::size_t area = 0;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++area;
      const std::size_t x = i % w, y = i / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || (dx < 0 && x == 0) || (dy < 0 && y == 0) || (dx > 0 && x + 1 == w) ||
              (dy > 0 && y + 1 == h)) {
            continue;
          }
          const std::size_t j = (y + dy) * w + (x + dx);
          if (fg[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (area >= kMinArea) ++count;
  }
  return count;
}

/// Agreement between found and true interior cuts of one axis.
struct GridScore {
  std::size_t matched_cuts = 0;
  std::size_t missed_cuts = 0;
  std::size_t spurious_cuts = 0;
  double mean_abs_offset = 0.0;
  double max_abs_offset = 0.0;

  std::size_t errors() const { return missed_cuts + spurious_cuts; }

  /// Pools two scores; the mean offset is weighted by matched counts.
  GridScore& operator+=(const GridScore& o) {
    const std::size_t n = matched_cuts + o.matched_cuts;
    mean_abs_offset = n == 0 ? 0.0
                             : (mean_abs_offset * static_cast<double>(matched_cuts) +
                                o.mean_abs_offset * static_cast<double>(o.matched_cuts)) /
                                   static_cast<double>(n);
    matched_cuts = n;
    missed_cuts += o.missed_cuts;
    spurious_cuts += o.spurious_cuts;
    max_abs_offset = std::max(max_abs_offset, o.max_abs_offset);
    return *this;
  }
};

/// Same as score_grid, on bare interior positions.
inline GridScore score_cuts(const std::vector<std::size_t>& found, const std::vector<std::size_t>& truth, double tol) {
  struct Pair {
    double dist;
    std::size_t lo, hi, f, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t f = 0; f < found.size(); ++f) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double d = std::abs(static_cast<double>(found[f]) - static_cast<double>(truth[t]));
      if (d <= tol) pairs.push_back({d, std::min(found[f], truth[t]), std::max(found[f], truth[t]), f, t});
    }
  }
  // The order depends only on the unordered pair of positions, so swapping
  // found and truth yields the same matching.
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return std::tie(a.dist, a.lo, a.hi) < std::tie(b.dist, b.lo, b.hi); });
  std::vector<char> f_used(found.size(), 0), t_used(truth.size(), 0);
  GridScore s;
  double total = 0.0;
  for (const auto& p : pairs) {
    if (f_used[p.f] || t_used[p.t]) continue;
    f_used[p.f] = t_used[p.t] = 1;
    ++s.matched_cuts;
    total += p.dist;
    s.max_abs_offset = std::max(s.max_abs_offset, p.dist);
  }
  s.missed_cuts = truth.size() - s.matched_cuts;
  s.spurious_cuts = found.size() - s.matched_cuts;
  s.mean_abs_offset = s.matched_cuts ? total / static_cast<double>(s.matched_cuts) : 0.0;
  return s;
}

/**
 * Greedy one-to-one matching of interior cuts, closest pairs first, within
 * `tol` pixels. Unmatched true cuts are missed, unmatched found cuts are
 * spurious; offsets are measured over matched pairs.
 */
inline GridScore score_grid(const GridLines& found, const GridLines& truth, double tol) {
  if (found.axis != truth.axis) throw Error(ErrorCode::AxisMismatch, "cannot score cuts of different axes");
  if (found.extent() != truth.extent()) throw Error(ErrorCode::DimensionMismatch, "cut lines span different extents");
  if (!(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be non-negative");
  return score_cuts(found.interior(), truth.interior(), tol);
}

}  // namespace gridcraft

#pragma once

// Two-level gridding (image -> subarrays -> spots), cell flattening and
// scoring of a two-level grid against ground truth.

#include <gridcraft/core.hpp>
#include <gridcraft/extraction.hpp>
#include <gridcraft/gridding.hpp>
#include <gridcraft/synth.hpp>
#include <gridcraft/template_match.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace gridcraft {

/// Subarray cells plus, per subarray, its spot cells in crop-local
/// coordinates. `spots` is empty when only the subarray level was computed.
struct ArrayGrid {
  CellGrid subarrays;
  std::vector<std::vector<CellGrid>> spots;

  bool has_spots() const { return !spots.empty(); }

  std::size_t spot_cell_count() const {
    std::size_t n = 0;
    for (const auto& row : spots) {
      for (const auto& g : row) n += g.cell_count();
    }
    return n;
  }

  friend bool operator==(const ArrayGrid&, const ArrayGrid&) = default;
};

inline ArrayGrid to_array_grid(const GroundTruth& truth) { return ArrayGrid{truth.subarray_grid(), truth.spot_cuts}; }

struct PipelineOptions {
  std::size_t jobs = 1;
  bool subarrays_only = false;
  std::optional<Template> lattice;  // required by MethodKind::TemplateMatch
  double min_template_score = 0.5;
};

struct PipelineTiming {
  double subarrays_ms = 0.0;
  double spots_ms = 0.0;
};

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads. Every index is
/// processed; the first failure in index order is rethrown.
template <typename Task>
void parallel_for(std::size_t n, std::size_t jobs, Task&& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/**
 * Grids a whole array image: subarrays first, then the spots of every
 * subarray crop. Subarrays are processed concurrently when `jobs > 1`; the
 * result does not depend on the job count.
 *
 * Template matching places one lattice over the whole image, which is then
 * treated as a single subarray.
 */
inline ArrayGrid grid_array(const IntensityImage& img, const Method& method, const PipelineOptions& opt = {},
                            PipelineTiming* timing = nullptr) {
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  ArrayGrid out;
  if (method.kind() == MethodKind::TemplateMatch) {
    if (!opt.lattice) throw Error(ErrorCode::InvalidMethod, "template matching needs a lattice template");
    const auto t0 = Clock::now();
    out.subarrays = CellGrid(GridLines::borders(Axis::Columns, img.width()), GridLines::borders(Axis::Rows, img.height()));
    if (!opt.subarrays_only) {
      out.spots = {{template_match(img, *opt.lattice, opt.min_template_score).grid}};
    }
    if (timing) timing->spots_ms = ms_since(t0);
    return out;
  }

  auto t0 = Clock::now();
  out.subarrays = grid_image(img, method);
  if (timing) timing->subarrays_ms = ms_since(t0);
  if (opt.subarrays_only) return out;

  t0 = Clock::now();
  const std::size_t rows = out.subarrays.rows(), cols = out.subarrays.cols();
  std::vector<CellGrid> flat(rows * cols);
  parallel_for(rows * cols, opt.jobs, [&](std::size_t i) {
    const Rect r = out.subarrays.cell(i / cols, i % cols);
    flat[i] = grid_subarray(crop(img, r), method);
  });
  out.spots.assign(rows, {});
  for (std::size_t i = 0; i < flat.size(); ++i) out.spots[i / cols].push_back(std::move(flat[i]));
  if (timing) timing->spots_ms = ms_since(t0);
  return out;
}

/// Every spot cell of a two-level grid in image coordinates, ordered by
/// subarray (row-major) and then by cell (row-major).
inline std::vector<SpotCell> extract_all_cells(const IntensityImage& img, const ArrayGrid& g) {
  if (g.subarrays.width() != img.width() || g.subarrays.height() != img.height()) {
    throw Error(ErrorCode::DimensionMismatch, "grid was built for a different image size");
  }
  std::vector<SpotCell> out;
  for (std::size_t R = 0; R < g.subarrays.rows(); ++R) {
    for (std::size_t C = 0; C < g.subarrays.cols(); ++C) {
      const Rect sub = g.subarrays.cell(R, C);
      const CellGrid& spots = g.spots.at(R).at(C);
      if (spots.width() != sub.width() || spots.height() != sub.height()) {
        throw Error(ErrorCode::DimensionMismatch, "spot grid does not match its subarray");
      }
      auto cells = extract_cells(img, spots, CellIndex{R, C}, std::pair{sub.x0, sub.y0});
      out.insert(out.end(), cells.begin(), cells.end());
    }
  }
  return out;
}

/// Cut scores of a two-level grid, per scope and axis.
struct ArrayScore {
  GridScore subarray_cols;
  GridScore subarray_rows;
  GridScore spot_cols;
  GridScore spot_rows;

  GridScore spots() const {
    GridScore s = spot_cols;
    s += spot_rows;
    return s;
  }
};

namespace detail {

inline std::size_t interval_containing(const GridLines& g, double pos) {
  const auto it = std::upper_bound(g.cuts.begin(), g.cuts.end(), pos,
                                   [](double v, std::size_t c) { return v < static_cast<double>(c); });
  const auto idx = static_cast<std::size_t>(it - g.cuts.begin());
  return std::min(idx == 0 ? 0 : idx - 1, g.intervals() - 1);
}

inline std::vector<std::size_t> shifted(const std::vector<std::size_t>& v, std::size_t by) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) x += by;
  return out;
}

}  // namespace detail

/**
 * Scores `found` against `truth` (same image size) with matching tolerance
 * `tol`. Spot cuts are compared in image coordinates: each true subarray is
 * paired with the found subarray containing its centre, and only found cuts
 * inside the true subarray's span are candidates for it. Found spot cuts
 * that no true subarray claims count as spurious.
 */
inline ArrayScore score_array(const ArrayGrid& found, const ArrayGrid& truth, double tol) {
  ArrayScore s;
  s.subarray_cols = score_grid(found.subarrays.col_lines, truth.subarrays.col_lines, tol);
  s.subarray_rows = score_grid(found.subarrays.row_lines, truth.subarrays.row_lines, tol);
  if (!truth.has_spots()) return s;

  std::size_t found_cols = 0, found_rows = 0;
  for (std::size_t r = 0; r < found.spots.size(); ++r) {
    for (const auto& g : found.spots[r]) {
      found_cols += g.col_lines.interior().size();
      found_rows += g.row_lines.interior().size();
    }
  }

  double col_total = 0.0, row_total = 0.0;
  std::size_t truth_cols = 0, truth_rows = 0;
  for (std::size_t R = 0; R < truth.subarrays.rows(); ++R) {
    for (std::size_t C = 0; C < truth.subarrays.cols(); ++C) {
      const Rect tr = truth.subarrays.cell(R, C);
      const auto t_cols = detail::shifted(truth.spots[R][C].col_lines.interior(), tr.x0);
      const auto t_rows = detail::shifted(truth.spots[R][C].row_lines.interior(), tr.y0);
      truth_cols += t_cols.size();
      truth_rows += t_rows.size();
      if (!found.has_spots()) continue;

      const double cx = 0.5 * static_cast<double>(tr.x0 + tr.x1), cy = 0.5 * static_cast<double>(tr.y0 + tr.y1);
      const std::size_t fr = detail::interval_containing(found.subarrays.row_lines, cy);
      const std::size_t fc = detail::interval_containing(found.subarrays.col_lines, cx);
      const Rect frect = found.subarrays.cell(fr, fc);
      std::vector<std::size_t> f_cols, f_rows;
      for (std::size_t x : detail::shifted(found.spots[fr][fc].col_lines.interior(), frect.x0)) {
        if (x > tr.x0 && x < tr.x1) f_cols.push_back(x);
      }
      for (std::size_t y : detail::shifted(found.spots[fr][fc].row_lines.interior(), frect.y0)) {
        if (y > tr.y0 && y < tr.y1) f_rows.push_back(y);
      }
      const GridScore gc = score_cuts(f_cols, t_cols, tol);
      const GridScore gr = score_cuts(f_rows, t_rows, tol);
      s.spot_cols.matched_cuts += gc.matched_cuts;
      s.spot_rows.matched_cuts += gr.matched_cuts;
      col_total += gc.mean_abs_offset * static_cast<double>(gc.matched_cuts);
      row_total += gr.mean_abs_offset * static_cast<double>(gr.matched_cuts);
      s.spot_cols.max_abs_offset = std::max(s.spot_cols.max_abs_offset, gc.max_abs_offset);
      s.spot_rows.max_abs_offset = std::max(s.spot_rows.max_abs_offset, gr.max_abs_offset);
    }
  }
  auto finish = [](GridScore& g, std::size_t n_truth, std::size_t n_found, double total) {
    g.missed_cuts = n_truth - g.matched_cuts;
    g.spurious_cuts = n_found - g.matched_cuts;
    g.mean_abs_offset = g.matched_cuts ? total / static_cast<double>(g.matched_cuts) : 0.0;
  };
  finish(s.spot_cols, truth_cols, found_cols, col_total);
  finish(s.spot_rows, truth_rows, found_rows, row_total);
  return s;
}

}  // namespace gridcraft

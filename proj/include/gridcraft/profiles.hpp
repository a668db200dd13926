#pragma once

// One-dimensional projection profiles of an intensity image (sum, mean,
// sample standard deviation), their discrete derivatives, moving-average
// smoothing and range-relative binarisation.

#include <gridcraft/core.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string_view>
#include <vector>

namespace gridcraft {

enum class ProfileKind { Sum, StdDev, Mean, Derivative, SecondDerivative, Binary };

inline std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Sum: return "sum";
    case ProfileKind::StdDev: return "stddev";
    case ProfileKind::Mean: return "mean";
    case ProfileKind::Derivative: return "derivative";
    case ProfileKind::SecondDerivative: return "second-derivative";
    case ProfileKind::Binary: return "binary";
  }
  return "unknown";
}

/**
 * A signal sampled along one image axis.
 *
 * `values[k]` belongs to source pixel `origin_offset + k`. A forward
 * difference sits between two pixels; it is reported at the left one, so
 * derivatives keep their parent's offset and lose one trailing sample.
 */
struct Profile1D {
  Axis axis = Axis::Columns;
  ProfileKind kind = ProfileKind::Sum;
  std::vector<double> values;
  std::size_t origin_offset = 0;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
};

namespace detail {

// Column sums accumulate rows in ascending y; row sums accumulate columns in
// ascending x. The order is fixed so results do not depend on scheduling.
inline std::vector<double> axis_sums(const IntensityImage& img, Axis axis) {
  const std::size_t w = img.width(), h = img.height();
  if (axis == Axis::Columns) {
    std::vector<double> sums(w, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      const double* r = img.row(y);
      for (std::size_t x = 0; x < w; ++x) sums[x] += r[x];
    }
    return sums;
  }
  std::vector<double> sums(h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* r = img.row(y);
    double s = 0.0;
    for (std::size_t x = 0; x < w; ++x) s += r[x];
    sums[y] = s;
  }
  return sums;
}

// Number of samples aggregated into each profile value.
inline std::size_t aggregated_count(const IntensityImage& img, Axis axis) {
  return axis == Axis::Columns ? img.height() : img.width();
}

}  // namespace detail

/// S(x) = sum over y of I(x, y) for Columns; the row-wise analogue for Rows.
inline Profile1D sum_profile(const IntensityImage& img, Axis axis) {
  return Profile1D{axis, ProfileKind::Sum, detail::axis_sums(img, axis), 0};
}

inline Profile1D mean_profile(const IntensityImage& img, Axis axis) {
  auto values = detail::axis_sums(img, axis);
  const double n = static_cast<double>(detail::aggregated_count(img, axis));
  for (double& v : values) v /= n;
  return Profile1D{axis, ProfileKind::Mean, std::move(values), 0};
}

/// Sample standard deviation (n - 1 denominator) of every column (Columns)
/// or row (Rows). Two-pass: mean first, then squared deviations.
inline Profile1D stddev_profile(const IntensityImage& img, Axis axis) {
  const std::size_t n = detail::aggregated_count(img, axis);
  if (n < 2) {
    throw Error(ErrorCode::DegenerateExtent, "standard deviation needs at least two samples per line");
  }
  const auto mean = mean_profile(img, axis).values;
  const std::size_t w = img.width(), h = img.height();
  std::vector<double> ss(mean.size(), 0.0);
  if (axis == Axis::Columns) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* r = img.row(y);
      for (std::size_t x = 0; x < w; ++x) {
        const double d = r[x] - mean[x];
        ss[x] += d * d;
      }
    }
  } else {
    for (std::size_t y = 0; y < h; ++y) {
      const double* r = img.row(y);
      double s = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        const double d = r[x] - mean[y];
        s += d * d;
      }
      ss[y] = s;
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (double& v : ss) v = std::sqrt(v / denom);
  return Profile1D{axis, ProfileKind::StdDev, std::move(ss), 0};
}

/// Forward difference p[i+1] - p[i]. A derivative of a derivative is tagged
/// SecondDerivative.
inline Profile1D derivative(const Profile1D& p) {
  if (p.kind == ProfileKind::Binary) {
    throw Error(ErrorCode::InvalidArgument, "binary profiles cannot be differentiated");
  }
  if (p.size() < 2) throw Error(ErrorCode::TooShort, "derivative needs at least two samples");
  std::vector<double> d(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) d[i] = p.values[i + 1] - p.values[i];
  const ProfileKind kind =
      (p.kind == ProfileKind::Derivative || p.kind == ProfileKind::SecondDerivative)
          ? ProfileKind::SecondDerivative
          : ProfileKind::Derivative;
  return Profile1D{p.axis, kind, std::move(d), p.origin_offset};
}

/// Centred moving average. Samples near the ends average over the part of
/// the window that lies inside the profile.
inline Profile1D smooth(const Profile1D& p, std::size_t window) {
  if (window == 0 || window % 2 == 0 || window > p.size()) {
    throw Error(ErrorCode::BadWindow, "window must be odd, positive and no longer than the profile");
  }
  if (window == 1) return p;
  const std::size_t half = window / 2;
  const std::size_t n = p.size();
  Profile1D out = p;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += p.values[k];
    out.values[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// 1 where p >= min + fraction * (max - min), else 0.
inline Profile1D binarize(const Profile1D& p, double threshold_fraction) {
  if (p.kind != ProfileKind::Sum && p.kind != ProfileKind::StdDev && p.kind != ProfileKind::Mean) {
    throw Error(ErrorCode::InvalidArgument, "only sum, mean or stddev profiles can be binarized");
  }
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold fraction must lie in (0, 1)");
  }
  if (p.size() == 0) throw Error(ErrorCode::TooShort, "empty profile");
  const double lo = p.min(), hi = p.max();
  if (!(hi > lo)) throw Error(ErrorCode::FlatProfile, "profile has no dynamic range");
  const double level = lo + threshold_fraction * (hi - lo);
  Profile1D out{p.axis, ProfileKind::Binary, std::vector<double>(p.size()), p.origin_offset};
  for (std::size_t i = 0; i < p.size(); ++i) out.values[i] = p.values[i] >= level ? 1.0 : 0.0;
  return out;
}

/// Two-column CSV with header `index,value`; indices are source-pixel
/// coordinates and values round-trip exactly.
inline void write_profile_csv(std::ostream& os, const Profile1D& p) {
  os << "index,value\n";
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", p.origin_offset + i, p.values[i]);
    os << buf;
  }
}

}  // namespace gridcraft

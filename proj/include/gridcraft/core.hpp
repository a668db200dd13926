#pragma once

// Shared types for the gridcraft library: the intensity image, pixel
// rectangles, the profile axis and the error type every module throws.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridcraft {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  IoFailure,
  OutOfBounds,
  InvalidImage,
  DegenerateExtent,
  TooShort,
  BadWindow,
  FlatProfile,
  NoStructure,
  TooFewCuts,
  MethodMismatch,
  InvalidMethod,
  TemplateTooLarge,
  GeometricDistortion,
  DimensionMismatch,
  AxisMismatch,
  SpecInvalid,
  SchemaMismatch,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::DegenerateExtent: return "DegenerateExtent";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::FlatProfile: return "FlatProfile";
    case ErrorCode::NoStructure: return "NoStructure";
    case ErrorCode::TooFewCuts: return "TooFewCuts";
    case ErrorCode::MethodMismatch: return "MethodMismatch";
    case ErrorCode::InvalidMethod: return "InvalidMethod";
    case ErrorCode::TemplateTooLarge: return "TemplateTooLarge";
    case ErrorCode::GeometricDistortion: return "GeometricDistortion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AxisMismatch: return "AxisMismatch";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception thrown by every gridcraft operation. `code()` is stable and is
/// what the CLI reports in its machine-readable error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Profile direction. `Columns` yields one value per column index x
/// (aggregating down the rows), `Rows` one value per row index y.
enum class Axis { Columns, Rows };

inline std::string_view to_string(Axis axis) {
  return axis == Axis::Columns ? "cols" : "rows";
}

/// Half-open pixel rectangle: [x0, x1) x [y0, y1).
struct Rect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t x1 = 0;
  std::size_t y1 = 0;

  std::size_t width() const { return x1 - x0; }
  std::size_t height() const { return y1 - y0; }
  std::size_t area() const { return width() * height(); }

  bool valid() const { return x0 < x1 && y0 < y1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/**
 * Rectangular grayscale intensity matrix stored row-major.
 *
 * Coordinates are (x, y) = (column, row) with the origin at the top-left.
 * Intensities are non-negative reals in the source's linear units; nothing is
 * normalised, so 8- and 16-bit inputs keep their native scale. The object is
 * immutable once constructed and is safe to share between threads.
 */
class IntensityImage {
 public:
  IntensityImage() = default;

  IntensityImage(std::size_t width, std::size_t height, std::vector<double> pixels,
                 int bit_depth_hint = 16)
      : width_(width), height_(height), bit_depth_hint_(bit_depth_hint), pixels_(std::move(pixels)) {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorCode::InvalidImage, "image dimensions must be positive");
    }
    if (pixels_.size() != width_ * height_) {
      throw Error(ErrorCode::InvalidImage, "pixel count does not match width*height");
    }
    if (bit_depth_hint_ != 8 && bit_depth_hint_ != 16) {
      throw Error(ErrorCode::InvalidImage, "bit depth hint must be 8 or 16");
    }
    for (double v : pixels_) {
      // NaN fails this comparison too.
      if (!(v >= 0.0)) {
        throw Error(ErrorCode::InvalidImage, "intensities must be non-negative");
      }
    }
  }

  /// Constant-valued image.
  static IntensityImage filled(std::size_t width, std::size_t height, double value,
                               int bit_depth_hint = 16) {
    return IntensityImage(width, height, std::vector<double>(width * height, value), bit_depth_hint);
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  int bit_depth_hint() const { return bit_depth_hint_; }
  bool empty() const { return pixels_.empty(); }

  /// Extent along an axis: width for Columns, height for Rows.
  std::size_t extent(Axis axis) const { return axis == Axis::Columns ? width_ : height_; }

  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

  const std::vector<double>& pixels() const { return pixels_; }

  const double* row(std::size_t y) const { return pixels_.data() + y * width_; }

  Rect bounds() const { return Rect{0, 0, width_, height_}; }

  double max_value() const { return *std::max_element(pixels_.begin(), pixels_.end()); }
  double min_value() const { return *std::min_element(pixels_.begin(), pixels_.end()); }

  friend bool operator==(const IntensityImage& a, const IntensityImage& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int bit_depth_hint_ = 16;
  std::vector<double> pixels_;
};

inline bool contains(const IntensityImage& img, const Rect& r) {
  return r.valid() && r.x1 <= img.width() && r.y1 <= img.height();
}

/// Copy of the pixels inside `r`; pixel (a, b) of the result is pixel
/// (r.x0 + a, r.y0 + b) of the source.
inline IntensityImage crop(const IntensityImage& img, const Rect& r) {
  if (!contains(img, r)) {
    throw Error(ErrorCode::OutOfBounds, "crop rectangle outside image");
  }
  std::vector<double> out;
  out.reserve(r.area());
  for (std::size_t y = r.y0; y < r.y1; ++y) {
    const double* src = img.row(y);
    out.insert(out.end(), src + r.x0, src + r.x1);
  }
  return IntensityImage(r.width(), r.height(), std::move(out), img.bit_depth_hint());
}

/// Dark-spot scans: maps I to max(I) - I.
inline IntensityImage invert(const IntensityImage& img) {
  const double top = img.max_value();
  std::vector<double> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [top](double v) { return top - v; });
  return IntensityImage(img.width(), img.height(), std::move(out), img.bit_depth_hint());
}

/// Multiplies every intensity by k (k >= 0).
inline IntensityImage scaled(const IntensityImage& img, double k) {
  if (!(k >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "scale factor must be non-negative");
  }
  std::vector<double> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [k](double v) { return k * v; });
  return IntensityImage(img.width(), img.height(), std::move(out), img.bit_depth_hint());
}

}  // namespace gridcraft

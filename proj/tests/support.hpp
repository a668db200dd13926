#pragma once

// Test helpers: seeded random inputs and scratch directories.

#include <gridcraft/core.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gridcraft::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  IntensityImage image(std::size_t w, std::size_t h, double hi = 65535.0) {
    std::vector<double> px(w * h);
    for (auto& v : px) v = real(0.0, hi);
    return IntensityImage(w, h, std::move(px));
  }

  IntensityImage integer_image(std::size_t w, std::size_t h, int hi) {
    std::vector<double> px(w * h);
    for (auto& v : px) v = static_cast<double>(size(0, static_cast<std::size_t>(hi)));
    return IntensityImage(w, h, std::move(px));
  }

  std::vector<double> values(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gridcraft_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Pixel rows as a brace list, for small literal images.
inline IntensityImage from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> px;
  for (const auto& r : rows) px.insert(px.end(), r.begin(), r.end());
  return IntensityImage(rows.front().size(), rows.size(), std::move(px));
}

}  // namespace gridcraft::testing

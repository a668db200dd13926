#pragma once

// PNG / TIFF decoding and encoding for IntensityImage. Requires libpng and
// libtiff (CMake target gridcraft::io).

#include <gridcraft/core.hpp>

#include <png.h>
#include <tiffio.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace gridcraft {

/// How multi-channel rasters are reduced to one intensity plane. `Gray` and
/// `Luminance` both use Rec.601 weights on RGB input; single-channel input is
/// returned unchanged under every policy.
enum class ChannelPolicy { Gray, Red, Green, Luminance };

namespace detail {

struct RasterData {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;   // 8 or 16
  int channels = 1;    // samples per pixel as stored in `samples`
  std::vector<std::uint16_t> samples;  // interleaved, row-major
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline double reduce_pixel(const std::uint16_t* px, int channels, ChannelPolicy policy) {
  if (channels < 3) return px[0];  // gray or gray+alpha
  switch (policy) {
    case ChannelPolicy::Red: return px[0];
    case ChannelPolicy::Green: return px[1];
    case ChannelPolicy::Gray:
    case ChannelPolicy::Luminance: return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return px[0];
}

inline IntensityImage to_image(const RasterData& raw, ChannelPolicy policy) {
  std::vector<double> pixels(raw.width * raw.height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = reduce_pixel(raw.samples.data() + i * raw.channels, raw.channels, policy);
  }
  return IntensityImage(raw.width, raw.height, std::move(pixels), raw.bit_depth);
}

// libpng reports errors through longjmp. The two functions below keep every
// object with a destructor out of the frame that calls setjmp; buffers live
// in the caller.
inline bool png_read_header(png_structp png, png_infop info, std::FILE* fp, png_uint_32* w,
                            png_uint_32* h, int* depth, int* color) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);
  *w = png_get_image_width(png, info);
  *h = png_get_image_height(png, info);
  *depth = png_get_bit_depth(png, info);
  *color = png_get_color_type(png, info);
  if (*color == PNG_COLOR_TYPE_GRAY && *depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  return true;
}

inline bool png_read_body(png_structp png, png_infop info, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, info);
  return true;
}

inline bool png_write_all(png_structp png, png_infop info, std::FILE* fp, png_uint_32 w,
                          png_uint_32 h, int depth, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, info);
  return true;
}

inline void silent_png_warning(png_structp, png_const_charp) {}

inline RasterData read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoFailure, "libpng initialisation failed");
  }
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  if (!png_read_header(png, info, fp.get(), &w, &h, &depth, &color)) {
    throw Error(ErrorCode::CorruptData, "invalid PNG header in " + path.string());
  }
  if (color == PNG_COLOR_TYPE_PALETTE) {
    throw Error(ErrorCode::UnsupportedFormat, "palettized PNG not supported");
  }
  if (color == PNG_COLOR_TYPE_RGB_ALPHA) {
    throw Error(ErrorCode::UnsupportedFormat, "PNG with more than 3 channels not supported");
  }

  RasterData raw;
  raw.width = w;
  raw.height = h;
  raw.bit_depth = depth == 16 ? 16 : 8;
  raw.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buffer(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * rowbytes;
  if (!png_read_body(png, info, rows.data())) {
    throw Error(ErrorCode::CorruptData, "truncated or corrupt PNG data in " + path.string());
  }

  const std::size_t n = raw.width * raw.height * raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

inline void silent_tiff_handler(const char*, const char*, va_list) {}

inline RasterData read_tiff(const std::filesystem::path& path) {
  static const bool handlers_installed = [] {
    TIFFSetWarningHandler(silent_tiff_handler);
    TIFFSetErrorHandler(silent_tiff_handler);
    return true;
  }();
  (void)handlers_installed;

  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "r"), TIFFClose);
  if (!tif) throw Error(ErrorCode::CorruptData, "cannot parse TIFF " + path.string());

  std::uint32_t w = 0, h = 0;
  std::uint16_t bps = 1, spp = 1, photometric = PHOTOMETRIC_MINISBLACK;
  std::uint16_t planar = PLANARCONFIG_CONTIG, sample_format = SAMPLEFORMAT_UINT;
  if (!TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w) ||
      !TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h) || w == 0 || h == 0) {
    throw Error(ErrorCode::CorruptData, "TIFF without valid dimensions");
  }
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &sample_format);
  TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric);

  if (TIFFIsTiled(tif.get())) throw Error(ErrorCode::UnsupportedFormat, "tiled TIFF not supported");
  if (photometric == PHOTOMETRIC_PALETTE) {
    throw Error(ErrorCode::UnsupportedFormat, "palettized TIFF not supported");
  }
  if (bps != 8 && bps != 16) throw Error(ErrorCode::UnsupportedFormat, "TIFF must be 8 or 16 bit");
  if (spp != 1 && spp != 3) {
    throw Error(ErrorCode::UnsupportedFormat, "TIFF must have 1 or 3 samples per pixel");
  }
  if (sample_format != SAMPLEFORMAT_UINT) {
    throw Error(ErrorCode::UnsupportedFormat, "only unsigned integer TIFF samples are supported");
  }
  if (spp > 1 && planar != PLANARCONFIG_CONTIG) {
    throw Error(ErrorCode::UnsupportedFormat, "planar-separated TIFF not supported");
  }

  RasterData raw;
  raw.width = w;
  raw.height = h;
  raw.bit_depth = bps;
  raw.channels = spp;
  raw.samples.resize(raw.width * raw.height * raw.channels);
  std::vector<unsigned char> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
  const std::size_t per_row = raw.width * raw.channels;
  if (line.size() < per_row * (bps / 8)) throw Error(ErrorCode::CorruptData, "bad TIFF scanline size");
  for (std::uint32_t y = 0; y < h; ++y) {
    if (TIFFReadScanline(tif.get(), line.data(), y, 0) < 0) {
      throw Error(ErrorCode::CorruptData, "failed to read TIFF row " + std::to_string(y));
    }
    std::uint16_t* dst = raw.samples.data() + y * per_row;
    if (bps == 16) {
      // libtiff already swapped to host byte order.
      const auto* src = reinterpret_cast<const std::uint16_t*>(line.data());
      std::copy(src, src + per_row, dst);
    } else {
      std::copy(line.data(), line.data() + per_row, dst);
    }
  }
  return raw;
}

inline std::vector<std::uint16_t> quantize(const IntensityImage& img, int bit_depth) {
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint16_t> out(img.pixels().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(std::clamp(std::round(img.pixels()[i]), 0.0, top));
  }
  return out;
}

}  // namespace detail

/**
 * Decodes a PNG or TIFF (8/16-bit, gray or RGB) into an IntensityImage.
 * Sample values are kept as stored; no gamma or range conversion happens.
 */
inline IntensityImage load_image(const std::filesystem::path& path,
                                 ChannelPolicy policy = ChannelPolicy::Gray) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  std::array<unsigned char, 8> magic{};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(magic.data()), magic.size());
    if (in.gcount() < 4) throw Error(ErrorCode::UnsupportedFormat, "file too short: " + path.string());
  }
  constexpr std::array<unsigned char, 8> kPngMagic{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (magic == kPngMagic) return detail::to_image(detail::read_png(path), policy);
  const bool tiff_le = magic[0] == 'I' && magic[1] == 'I' && magic[2] == 42 && magic[3] == 0;
  const bool tiff_be = magic[0] == 'M' && magic[1] == 'M' && magic[2] == 0 && magic[3] == 42;
  if (tiff_le || tiff_be) return detail::to_image(detail::read_tiff(path), policy);
  throw Error(ErrorCode::UnsupportedFormat, "not a PNG or TIFF raster: " + path.string());
}

/// Writes a single-channel PNG. Intensities are rounded and clamped to the
/// range of `bit_depth` (8 or 16).
inline void save_png(const std::filesystem::path& path, const IntensityImage& img, int bit_depth = 16) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::InvalidArgument, "bit depth must be 8 or 16");
  const auto samples = detail::quantize(img, bit_depth);
  const std::size_t bytes_per = bit_depth / 8;
  std::vector<png_byte> buffer(samples.size() * bytes_per);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xFF);
    } else {
      buffer[i] = static_cast<png_byte>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (std::size_t y = 0; y < img.height(); ++y) rows[y] = buffer.data() + y * img.width() * bytes_per;

  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng initialisation failed");
  }
  const bool ok = detail::png_write_all(png, info, fp.get(), static_cast<png_uint_32>(img.width()),
                                        static_cast<png_uint_32>(img.height()), bit_depth, rows.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error(ErrorCode::IoFailure, "PNG encoding failed for " + path.string());
}

/// Writes a single-channel, uncompressed, strip-organised TIFF.
inline void save_tiff(const std::filesystem::path& path, const IntensityImage& img, int bit_depth = 16) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::InvalidArgument, "bit depth must be 8 or 16");
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "w"), TIFFClose);
  if (!tif) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(img.width()));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(img.height()));
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(bit_depth));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(1));

  const auto samples = detail::quantize(img, bit_depth);
  std::vector<unsigned char> line(img.width() * (bit_depth / 8));
  for (std::size_t y = 0; y < img.height(); ++y) {
    const std::uint16_t* src = samples.data() + y * img.width();
    if (bit_depth == 16) {
      std::copy(src, src + img.width(), reinterpret_cast<std::uint16_t*>(line.data()));
    } else {
      for (std::size_t x = 0; x < img.width(); ++x) line[x] = static_cast<unsigned char>(src[x]);
    }
    if (TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y), 0) < 0) {
      throw Error(ErrorCode::IoFailure, "TIFF encoding failed for " + path.string());
    }
  }
}

}  // namespace gridcraft

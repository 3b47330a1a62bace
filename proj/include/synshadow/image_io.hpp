#pragma once

// PNG (8/16-bit, any color type) and baseline JPEG decoding into normalized
// rasters; 8-bit PNG encoding. Backed by libpng and libjpeg.

#include <png.h>
#include <jpeglib.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "image.hpp"

namespace synshadow {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

// Interleaved decoded samples before normalization.
struct DecodedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  double max_value = 255.0;
  std::vector<std::uint16_t> samples;
};

// Decoder working memory lives outside the setjmp frames so a longjmp never
// crosses a live destructor.
struct DecodeScratch {
  std::vector<std::uint8_t> bytes;
  std::vector<std::uint8_t*> rows;
};

inline void png_error_handler(png_structp png, png_const_charp) {
  std::longjmp(png_jmpbuf(png), 1);
}
inline void png_warning_handler(png_structp, png_const_charp) {}

inline bool decode_png(std::FILE* fp, DecodedImage& out, DecodeScratch& scratch) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  auto& buffer = scratch.bytes;
  auto& rows = scratch.rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const std::size_t width = png_get_image_width(png, info);
  const std::size_t height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * height);
  rows.resize(height);
  for (std::size_t r = 0; r < height; ++r) rows[r] = buffer.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.height = height;
  out.width = width;
  out.channels = channels;
  out.samples.resize(height * width * channels);
  if (depth == 16) {
    out.max_value = 65535.0;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
      out.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  } else {
    out.max_value = 255.0;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = buffer[i];
  }
  return true;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

inline bool decode_jpeg(std::FILE* fp, DecodedImage& out, DecodeScratch& scratch) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  auto& samples = out.samples;
  auto& row = scratch.bytes;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t width = cinfo.output_width;
  const std::size_t height = cinfo.output_height;
  const std::size_t stride = width * static_cast<std::size_t>(cinfo.output_components);
  row.assign(stride, 0);
  samples.resize(height * stride);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW ptr = row.data();
    const std::size_t r = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &ptr, 1);
    for (std::size_t i = 0; i < stride; ++i) samples[r * stride + i] = row[i];
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  out.height = height;
  out.width = width;
  out.channels = 3;
  out.max_value = 255.0;
  return true;
}

inline DecodedImage decode_file(const std::filesystem::path& path) {
  auto fp = open_file(path, "rb");
  unsigned char magic[8] = {};
  const std::size_t got = std::fread(magic, 1, sizeof magic, fp.get());
  std::rewind(fp.get());
  DecodedImage decoded;
  DecodeScratch scratch;
  bool ok = false;
  if (got == 8 && png_sig_cmp(magic, 0, 8) == 0) {
    ok = decode_png(fp.get(), decoded, scratch);
  } else if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    ok = decode_jpeg(fp.get(), decoded, scratch);
  } else {
    throw IoError("unsupported image format: '" + path.string() + "'");
  }
  if (!ok) throw IoError("corrupt image file: '" + path.string() + "'");
  if (decoded.width == 0 || decoded.height == 0)
    throw IoError("zero-dimension image: '" + path.string() + "'");
  return decoded;
}

inline std::uint8_t quantize(double v) {
  // Round half up on the clamped value.
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

inline void encode_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
                       int channels, const std::vector<std::uint8_t>& bytes) {
  auto fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                            png_warning_handler);
  if (!png) throw IoError("png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(height);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoError("failed writing png '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const std::size_t stride = width * static_cast<std::size_t>(channels);
  for (std::size_t r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(bytes.data() + r * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) throw IoError("failed writing png '" + path.string() + "'");
}

}  // namespace detail

/// Decodes a PNG or JPEG file. 8-bit samples are divided by 255, 16-bit by
/// 65535; grayscale expands to three equal channels, alpha is dropped.
inline ImageRGB load_image(const std::filesystem::path& path) {
  const auto decoded = detail::decode_file(path);
  ImageRGB img(decoded.height, decoded.width);
  auto dst = img.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = decoded.samples[i] / decoded.max_value;
  return img;
}

/// Loads a matte or mask image; color inputs are reduced to the channel mean.
inline MatteMap load_matte(const std::filesystem::path& path) {
  const ImageRGB img = load_image(path);
  MatteMap matte(img.height(), img.width());
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    auto p = img.pixel(i);
    matte.values()[i] = p[0] == p[1] && p[1] == p[2] ? p[0] : (p[0] + p[1] + p[2]) / 3.0;
  }
  return matte;
}

inline void save_image(const ImageRGB& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(img.values().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::quantize(img.values()[i]);
  detail::encode_png(path, img.height(), img.width(), 3, bytes);
}

inline void save_image(const MatteMap& matte, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(matte.values().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::quantize(matte.values()[i]);
  detail::encode_png(path, matte.height(), matte.width(), 1, bytes);
}

inline void save_image(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(mask.values().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.values()[i] ? 255 : 0;
  detail::encode_png(path, mask.height(), mask.width(), 1, bytes);
}

}  // namespace synshadow

#include "pathattn/raster.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pathattn/error.hpp"

namespace pathattn {

namespace {

struct ErrorSink {
  char message[256] = "libpng error";
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::strncpy(sink->message, msg, sizeof(sink->message) - 1);
  png_longjmp(png, 1);
}
void png_warning_fn(png_structp, png_const_charp) {}

void write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}
void flush_fn(png_structp) {}

// No C++ object may be constructed between setjmp and the end of the
// protected region; libpng unwinds with longjmp.
bool encode_impl(std::vector<std::uint8_t>* out, ErrorSink* sink, int width, int height,
                 int color_type, int channels, const std::uint8_t* pixels) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, png_error_fn, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_fn, flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(pixels + stride * static_cast<std::size_t>(y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::vector<std::uint8_t> encode(int width, int height, int color_type, int channels,
                                 const std::uint8_t* pixels) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "empty image");
  std::vector<std::uint8_t> out;
  ErrorSink sink;
  if (!encode_impl(&out, &sink, width, height, color_type, channels, pixels))
    throw Error(ErrorCode::Io, sink.message);
  return out;
}

struct ReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->size) png_error(png, "truncated PNG");
  std::memcpy(data, st->data + st->pos, len);
  st->pos += len;
}

struct DecodeHeader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  int width = 0;
  int height = 0;
  std::size_t stride = 0;
};

bool decode_header(DecodeHeader* hdr, ReadState* st, ErrorSink* sink, int channels) {
  hdr->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, png_error_fn, png_warning_fn);
  if (!hdr->png) return false;
  hdr->info = png_create_info_struct(hdr->png);
  if (!hdr->info || setjmp(png_jmpbuf(hdr->png))) return false;
  png_structp png = hdr->png;
  png_infop info = hdr->info;
  png_set_read_fn(png, st, read_fn);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool is_gray = !(color & PNG_COLOR_MASK_COLOR) && color != PNG_COLOR_TYPE_PALETTE;
  if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  hdr->width = static_cast<int>(png_get_image_width(png, info));
  hdr->height = static_cast<int>(png_get_image_height(png, info));
  hdr->stride = png_get_rowbytes(png, info);
  return true;
}

bool decode_rows(DecodeHeader* hdr, png_bytepp rows) {
  if (setjmp(png_jmpbuf(hdr->png))) return false;
  png_read_image(hdr->png, rows);
  png_read_end(hdr->png, nullptr);
  return true;
}

std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bytes, int channels, int* w,
                                 int* h) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(ErrorCode::Io, "not a PNG file");
  ReadState st{bytes.data(), bytes.size(), 0};
  ErrorSink sink;
  DecodeHeader hdr;
  auto cleanup = [&] { png_destroy_read_struct(&hdr.png, &hdr.info, nullptr); };
  if (!decode_header(&hdr, &st, &sink, channels)) {
    cleanup();
    throw Error(ErrorCode::Io, sink.message);
  }
  if (hdr.stride != static_cast<std::size_t>(hdr.width) * static_cast<std::size_t>(channels)) {
    cleanup();
    throw Error(ErrorCode::Io, "unexpected PNG row layout");
  }
  std::vector<std::uint8_t> out(hdr.stride * static_cast<std::size_t>(hdr.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(hdr.height));
  for (int y = 0; y < hdr.height; ++y)
    rows[static_cast<std::size_t>(y)] = out.data() + hdr.stride * static_cast<std::size_t>(y);
  const bool ok = decode_rows(&hdr, rows.data());
  cleanup();
  if (!ok) throw Error(ErrorCode::Io, sink.message);
  *w = hdr.width;
  *h = hdr.height;
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray(int width, int height,
                                          std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorCode::DimensionMismatch, "gray buffer size mismatch");
  return encode(width, height, PNG_COLOR_TYPE_GRAY, 1, pixels.data());
}

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image) {
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw Error(ErrorCode::DimensionMismatch, "rgb buffer size mismatch");
  return encode(image.width, image.height, PNG_COLOR_TYPE_RGB, 3, image.data.data());
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  RgbImage img;
  img.data = decode(bytes, 3, &img.width, &img.height);
  return img;
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png_rgb(bytes);
  } catch (const Error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes, int* width,
                                          int* height) {
  return decode(bytes, 1, width, height);
}

}  // namespace pathattn

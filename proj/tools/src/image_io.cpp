#include "image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "panrpca/error.hpp"

namespace panrpca::cli {
namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::kIo, what);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

unsigned quantize(double v, unsigned max_code) {
  const double c = std::clamp(v, 0.0, 1.0) * max_code;
  return static_cast<unsigned>(std::lround(c));
}

struct MemoryReader {
  const std::string* data;
  std::size_t offset = 0;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* r = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (r->offset + count > r->data->size()) png_error(png, "truncated PNG");
  std::copy_n(r->data->data() + r->offset, count, out);
  r->offset += count;
}

void png_write_memory(png_structp png, png_bytep in, png_size_t count) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + count);
}

void png_flush_noop(png_structp) {}

LoadedImage decode_png(const std::string& bytes, const std::string& name) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) io_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    io_error("libpng init failed");
  }
  MemoryReader reader{&bytes};
  LoadedImage out;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_error("cannot decode PNG " + name);
  }
  png_set_read_fn(png, &reader, png_read_memory);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if ((color & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const auto stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Matrix pixels(height, width);
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 r = 0; r < height; ++r) {
    const unsigned char* row = rows[r];
    for (png_uint_32 c = 0; c < width; ++c) {
      const unsigned v =
          depth == 16 ? (unsigned(row[2 * c]) << 8) | row[2 * c + 1] : row[c];
      pixels(r, c) = v / scale;
    }
  }
  out.image = Image(std::move(pixels));
  out.bit_depth = depth == 16 ? 16 : 8;
  return out;
}

LoadedImage decode_pgm(const std::string& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) io_error("truncated PGM header in " + name);
    return bytes.substr(start, pos - start);
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2") io_error("not a PGM file: " + name);
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::logic_error&) {
    io_error("bad PGM header in " + name);
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    io_error("bad PGM header in " + name);
  }
  Matrix pixels(height, width);
  if (magic == "P5") {
    ++pos;  // single whitespace after maxval
    const int bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + static_cast<std::size_t>(width) * height * bpp) {
      io_error("truncated PGM data in " + name);
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * width + c;
        const unsigned v = bpp == 2 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
        pixels(r, c) = static_cast<double>(v) / maxval;
      }
    }
  } else {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        pixels(r, c) = std::stod(next_token()) / maxval;
      }
    }
  }
  return {Image(std::move(pixels)), maxval > 255 ? 16 : 8};
}

}  // namespace

LoadedImage read_image(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() >= 8 &&
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return decode_png(bytes, path.string());
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes, path.string());
  io_error("unsupported image format: " + path.string());
}

std::vector<unsigned char> encode_png(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(ErrorCode::kInvalidArgument, "PNG bit depth must be 8 or 16");
  }
  std::vector<unsigned char> out;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) io_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    io_error("libpng init failed");
  }
  const int h = image.height();
  const int w = image.width();
  const int bpp = bit_depth / 8;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(h) * w * bpp);
  const unsigned max_code = bit_depth == 16 ? 65535u : 255u;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const unsigned v = quantize(image(r, c), max_code);
      const std::size_t i = (static_cast<std::size_t>(r) * w + c) * bpp;
      if (bpp == 2) {
        buffer[i] = static_cast<unsigned char>(v >> 8);
        buffer[i + 1] = static_cast<unsigned char>(v & 0xff);
      } else {
        buffer[i] = static_cast<unsigned char>(v);
      }
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r) {
    rows[r] = buffer.data() + static_cast<std::size_t>(r) * w * bpp;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_memory, png_flush_noop);
  png_set_IHDR(png, info, w, h, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<unsigned char> encode_pgm(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(ErrorCode::kInvalidArgument, "PGM bit depth must be 8 or 16");
  }
  const unsigned max_code = bit_depth == 16 ? 65535u : 255u;
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n" +
                             std::to_string(max_code) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const unsigned v = quantize(image(r, c), max_code);
      if (bit_depth == 16) out.push_back(static_cast<unsigned char>(v >> 8));
      out.push_back(static_cast<unsigned char>(v & 0xff));
    }
  }
  return out;
}

void write_image(const fs::path& path, const Image& image, int bit_depth) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") {
    write_file_atomic(path, encode_pgm(image, bit_depth));
  } else if (ext == ".png") {
    write_file_atomic(path, encode_png(image, bit_depth));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unsupported image extension: " + ext);
  }
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) io_error("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) io_error("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path,
                       const std::vector<unsigned char>& bytes) {
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

std::string read_text_file(const fs::path& path) { return read_bytes(path); }

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) io_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace panrpca::cli

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "panrpca/core.hpp"

namespace panrpca::cli {

namespace fs = std::filesystem;

// Gray image with intensities scaled to [0, 1]; bit_depth is 8 or 16.
struct LoadedImage {
  Image image;
  int bit_depth = 8;
};

LoadedImage read_image(const fs::path& path);

// Pixel values are clamped to [0, 1] and quantized to the requested depth.
std::vector<unsigned char> encode_png(const Image& image, int bit_depth);
std::vector<unsigned char> encode_pgm(const Image& image, int bit_depth);

void write_image(const fs::path& path, const Image& image, int bit_depth);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const fs::path& path, const std::string& bytes);
void write_file_atomic(const fs::path& path,
                       const std::vector<unsigned char>& bytes);

std::string read_text_file(const fs::path& path);

// *.png / *.pgm files of a directory in lexicographic order.
std::vector<fs::path> list_images(const fs::path& dir);

}  // namespace panrpca::cli

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "panrpca/core.hpp"
#include "run_config.hpp"

namespace panrpca::cli {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// Frames (and optional observation masks) on disk. A sequence is either a
// directory of images or a directory holding a manifest.json written by one
// of the commands below.
struct Sequence {
  std::vector<Image> frames;
  std::vector<Image> masks;  // empty when the source has none
  int bit_depth = 8;
};

Sequence read_sequence(const fs::path& path);

// Full mask when the sequence carries none.
FrameStack to_stack(const Sequence& seq);
Matrix read_mask_matrix(const fs::path& path);

// Writes frames as <dir>/frame_NNNN.png plus manifest.json. Values outside
// [0, 1] are stored through an affine map recorded in the manifest, always
// at 16 bits. Returns the manifest.
Json write_sequence(const fs::path& dir, const std::vector<Image>& frames,
                    const std::vector<Image>& masks, int bit_depth,
                    const Json& extra = Json::object());

std::vector<Image> stack_columns(const Matrix& data, int height, int width);

void write_json(const fs::path& path, const Json& j);

Json cmd_register(const fs::path& input, const fs::path& output,
                  const RunConfig& cfg);
Json cmd_decompose(const fs::path& input, const fs::path& output,
                   const RunConfig& cfg);
Json cmd_corrupt(const fs::path& input, const fs::path& output,
                 const RunConfig& cfg);
Json cmd_synth(const fs::path& output, const RunConfig& cfg);

struct EvaluateInputs {
  fs::path truth;             // clean sequence; its masks define the region
  fs::path truth_foreground;  // bilevel sequence
  fs::path estimate;          // reconstructed scene, e.g. L + S2
  fs::path foreground;        // component thresholded for the F-measure
};

// Returns the report; also written to `output` when it is non-empty.
Json cmd_evaluate(const EvaluateInputs& in, const fs::path& output,
                  const RunConfig& cfg);

// Side-by-side panels; signed panels are shown as 0.5 + x / 2.
Image montage(const std::vector<Image>& panels, const std::vector<bool>& is_signed);

}  // namespace panrpca::cli

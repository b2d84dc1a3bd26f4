#pragma once

// Binary file formats (little-endian throughout) and text exports.
//
//   tensor      "RMT1" u32 h, w, k, then h*w*k f64 in (row, col, band) order
//   mask        "RMM1" u32 h, w, then h*w bytes in {0, 1}
//   checkpoint  "RMU1" u32 version, u32 k_blocks, descriptor, blocks, u32 crc32
//
// Writers go through a temporary file and a rename, so a reader never sees a
// partially written file.

#include "rme/tensor.hpp"
#include "rme/unrolled.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rme::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

Bytes encode_tensor(const Tensor3& t);
Tensor3 decode_tensor(const Bytes& bytes);
Bytes encode_mask(const ObservationMask& m);
ObservationMask decode_mask(const Bytes& bytes);
Bytes encode_checkpoint(const UnrolledModel& model);
UnrolledModel decode_checkpoint(const Bytes& bytes);

Bytes read_file(const std::string& path);
void write_file_atomic(const std::string& path, const Bytes& bytes);
void write_file_atomic(const std::string& path, const std::string& text);

void write_tensor(const std::string& path, const Tensor3& t);
Tensor3 read_tensor(const std::string& path);
void write_mask(const std::string& path, const ObservationMask& m);
ObservationMask read_mask(const std::string& path);
void write_checkpoint(const std::string& path, const UnrolledModel& model);
UnrolledModel read_checkpoint(const std::string& path);

// "P5\n<w> <h>\n255\n" followed by round(clamp01(v) * 255) per cell.
Bytes export_pgm(const Tensor3& t, std::size_t band);
// One line per row, comma separated, shortest round-trip formatting.
std::string export_csv(const Tensor3& t, std::size_t band);

/// Per-band CSV grids stacked into a tensor and min-max normalized per band.
struct ImportedTensor {
  Tensor3 tensor;
  std::vector<std::pair<double, double>> ranges;  // (min, max) per band
};
ImportedTensor import_csv(const std::vector<std::string>& paths);
// "band min max" per line.
std::string ranges_sidecar(const ImportedTensor& t);

} // namespace rme::io

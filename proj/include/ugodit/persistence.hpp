#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ugodit/network.hpp"
#include "ugodit/tensor.hpp"

namespace ugodit {

// Array container: "UGDARRAY", u32 version, u32 dtype tag (1 = float32),
// u32 rank, rank x u64 dims, then the values as float32. Integers and floats
// are little-endian.
inline constexpr std::uint32_t kArrayVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 1;

void write_array(std::ostream &out, const Tensor &t);
Tensor read_array(std::istream &in);
void save_array(const std::filesystem::path &path, const Tensor &t);
Tensor load_array(const std::filesystem::path &path);

// Checkpoint: "UGODITCK", u32 version, canonical architecture string,
// fingerprint, training provenance, then named arrays (u32 name length,
// name, array container).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ArchitectureSpec spec;
  std::string task;
  std::uint64_t train_count = 0; // M
  double lambda = 0.0;
  std::int64_t K = 0;
  std::int64_t N = 0;
  std::uint64_t seed = 0;

  bool operator==(const CheckpointMeta &) const = default;
};

struct Checkpoint {
  EncoderParams phi;
  CheckpointMeta meta;
};

void save_checkpoint(const EncoderParams &phi, const CheckpointMeta &meta, const std::filesystem::path &path);

// Validates the whole file before returning. Errors: FormatError (bad magic,
// truncation, malformed fields), VersionError (newer writer), IntegrityError
// (fingerprint or array layout disagrees with the embedded architecture),
// CorruptionError (non-finite values).
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace ugodit

#include <fstream>

#include "ifenn/binary_io.hpp"
#include "ifenn/errors.hpp"
#include "ifenn/tensor.hpp"

namespace ifenn::ad {

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open checkpoint for writing: " + path);
  binio::write_magic(os, "IFNC");
  binio::write_u8(os, kCheckpointVersion);
  binio::write_u64(os, entries.size());
  for (const auto& e : entries) {
    if (numel(e.shape) != e.values.size()) {
      throw InvalidArgument("checkpoint entry " + e.name + " has inconsistent shape");
    }
    binio::write_string(os, e.name);
    binio::write_u32(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) binio::write_u64(os, d);
  }
  for (const auto& e : entries) binio::write_f64_block(os, e.values);
  if (!os) throw InvalidArgument("failed writing checkpoint: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFound("checkpoint not found: " + path);
  binio::expect_magic(is, "IFNC");
  const auto version = binio::read_u8(is);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = binio::read_u64(is);
  if (count > (1u << 20)) throw FormatError("implausible checkpoint entry count");
  std::vector<NamedTensor> entries(count);
  for (auto& e : entries) {
    e.name = binio::read_string(is);
    const auto rank = binio::read_u32(is);
    if (rank > 8) throw FormatError("implausible tensor rank in checkpoint");
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(binio::read_u64(is));
  }
  for (auto& e : entries) e.values = binio::read_f64_block(is, numel(e.shape));
  return entries;
}

}  // namespace ifenn::ad

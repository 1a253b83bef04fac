#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace vmdload {

/// Binary container block: 16-byte header {"LCW1", n, channels, length}
/// followed by n*channels*length little-endian float64 values.
/// A container file is a sequence of such blocks.
struct ContainerBlock {
  std::uint32_t n = 0;
  std::uint32_t channels = 0;
  std::uint32_t length = 0;
  std::vector<double> values;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * channels * length;
  }
};

void write_block(std::ostream& out, const ContainerBlock& block);
/// Returns false at clean end of stream; throws DataError on truncation or bad magic.
bool read_block(std::istream& in, ContainerBlock& block);

void write_container(const std::filesystem::path& path, std::span<const ContainerBlock> blocks);
std::vector<ContainerBlock> read_container(const std::filesystem::path& path);

}  // namespace vmdload

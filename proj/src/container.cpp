#include "vmdload/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "vmdload/errors.hpp"

namespace vmdload {
namespace {

constexpr std::array<char, 4> kMagic{'L', 'C', 'W', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

}  // namespace

void write_block(std::ostream& out, const ContainerBlock& block) {
  if (block.values.size() != block.count()) {
    throw ShapeError("container block: value count " + std::to_string(block.values.size()) +
                     " does not match header " + std::to_string(block.count()));
  }
  out.write(kMagic.data(), kMagic.size());
  put_le(out, block.n);
  put_le(out, block.channels);
  put_le(out, block.length);
  for (double v : block.values) put_le(out, v);
}

bool read_block(std::istream& in, ContainerBlock& block) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 0) return false;
  if (in.gcount() != 4 || magic != kMagic) throw DataError("container: bad magic");
  if (!get_le(in, block.n) || !get_le(in, block.channels) || !get_le(in, block.length)) {
    throw DataError("container: truncated header");
  }
  block.values.resize(block.count());
  for (double& v : block.values) {
    if (!get_le(in, v)) throw DataError("container: truncated payload");
  }
  return true;
}

void write_container(const std::filesystem::path& path, std::span<const ContainerBlock> blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& b : blocks) write_block(out, b);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ContainerBlock> read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ContainerBlock> blocks;
  ContainerBlock block;
  while (read_block(in, block)) blocks.push_back(std::move(block));
  return blocks;
}

}  // namespace vmdload

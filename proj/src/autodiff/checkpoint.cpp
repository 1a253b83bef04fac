#include "vmdload/autodiff/checkpoint.hpp"

#include <fstream>
#include <map>

#include "vmdload/container.hpp"
#include "vmdload/errors.hpp"

namespace vmdload::ad {

void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta) {
  std::filesystem::create_directories(dir);
  nlohmann::json layers = nlohmann::json::array();
  ContainerBlock block;
  block.n = 1;
  block.channels = 1;
  for (const auto& [name, t] : tensors) {
    layers.push_back({{"name", name}, {"shape", t.shape()}, {"offset", block.values.size()}});
    block.values.insert(block.values.end(), t.value().begin(), t.value().end());
  }
  block.length = static_cast<std::uint32_t>(block.values.size());
  // Parameters first, manifest last: a manifest only exists next to a complete payload.
  write_container(dir / "params.lcw", std::span<const ContainerBlock>(&block, 1));
  nlohmann::json manifest = {{"layers", layers}, {"meta", meta}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
}

nlohmann::json load_checkpoint(const std::filesystem::path& dir, std::vector<NamedTensor>& tensors) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing checkpoint manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  const auto blocks = read_container(dir / "params.lcw");
  if (blocks.size() != 1) throw DataError("malformed checkpoint payload in " + dir.string());
  const auto& values = blocks.front().values;

  std::map<std::string, std::pair<Shape, std::size_t>> index;
  for (const auto& layer : manifest.at("layers")) {
    index[layer.at("name").get<std::string>()] = {layer.at("shape").get<Shape>(), layer.at("offset").get<std::size_t>()};
  }
  for (auto& [name, t] : tensors) {
    auto it = index.find(name);
    if (it == index.end()) throw DataError("checkpoint " + dir.string() + " lacks tensor '" + name + "'");
    const auto& [shape, offset] = it->second;
    if (shape != t.shape() || offset + static_cast<std::size_t>(t.numel()) > values.size()) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + to_string(shape) + ", expected " +
                      to_string(t.shape()));
    }
    t.value() = Eigen::Map<const Eigen::ArrayXd>(values.data() + offset, t.numel());
  }
  return manifest.value("meta", nlohmann::json::object());
}

}  // namespace vmdload::ad

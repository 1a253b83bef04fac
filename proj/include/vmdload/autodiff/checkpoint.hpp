#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmdload/autodiff/tensor.hpp"

namespace vmdload::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Writes `dir/manifest.json` (names, shapes, plus `meta`) and `dir/params.lcw`
/// (all tensors flattened into one container block, in manifest order).
void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta);

/// Fills the given tensors in place, matching by name and shape. Returns the manifest's meta.
nlohmann::json load_checkpoint(const std::filesystem::path& dir, std::vector<NamedTensor>& tensors);

}  // namespace vmdload::ad

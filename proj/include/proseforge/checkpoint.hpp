#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "proseforge/matrix.hpp"

namespace proseforge {

// Single-file archive: a JSON metadata record followed by named tensors with
// raw little-endian doubles. Save/load round-trips are bit-exact.
namespace checkpoint {

using Meta = nlohmann::json;
using NamedTensor = std::pair<std::string, const Matrix*>;

void save(const std::filesystem::path& path, const Meta& meta,
          const std::vector<NamedTensor>& tensors);

struct Archive {
    Meta meta;
    std::map<std::string, Matrix> tensors;

    const Matrix& tensor(const std::string& name) const;
};

Archive load(const std::filesystem::path& path);

} // namespace checkpoint

} // namespace proseforge

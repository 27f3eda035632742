#pragma once

#include <filesystem>
#include <variant>

#include <json.hpp>

#include "learn/forest.hpp"
#include "learn/lstm.hpp"
#include "learn/mlp.hpp"

namespace engage::learn {

using DetectorModel = std::variant<LstmModel, MlpModel, RandomForestModel>;

// Single-document model format:
//   {"kind":"lstm|mlp|rf","hyperparams":{...},"weights":[{"name","shape","data"},...]}
// with weights as flat row-major arrays. Rejects non-finite values both ways.
nlohmann::ordered_json model_to_json(const DetectorModel& m);
DetectorModel model_from_json(const nlohmann::json& j);

void save_model(const DetectorModel& m, const std::filesystem::path& file);
DetectorModel load_model(const std::filesystem::path& file);

}  // namespace engage::learn

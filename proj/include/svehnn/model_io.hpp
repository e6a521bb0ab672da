#pragma once

#include <string>

#include <json.hpp>

#include "svehnn/nn.hpp"

namespace svehnn {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const WdpnModel& model);
WdpnModel model_from_json(const nlohmann::json& j);

void save_model(const WdpnModel& model, const std::string& path);
WdpnModel load_model(const std::string& path);

// Stable content checksum over the canonical serialized form.
std::string model_checksum(const WdpnModel& model);

}  // namespace svehnn

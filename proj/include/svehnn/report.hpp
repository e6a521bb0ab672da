#pragma once

#include <string>

#include <json.hpp>

#include "svehnn/attribution.hpp"

namespace svehnn {

// Fixed header embedded in every output document: seed, config echo, model
// checksum, tool version. Volatile data (timestamps, wall clock) lives only
// under the top-level "timing" key so consumers can strip one field to get a
// canonical payload.
nlohmann::json make_meta(std::uint64_t seed, const std::string& model_checksum,
                         const nlohmann::json& config_echo);

nlohmann::json timing_block(const nlohmann::json& wall_clock);

// Canonical checksum of a document with its "timing" field removed.
std::string canonical_checksum(nlohmann::json document);

// Per-feature attribution report with point coordinates for 3-D rendering.
nlohmann::json attribution_report(const Attribution& attribution,
                                  const HeterogeneousInput& z, int k_points,
                                  int d_tabular);

void write_json_file(const nlohmann::json& document, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace svehnn

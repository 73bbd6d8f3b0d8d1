#pragma once

// Internal bridge between RunConfig and its JSON form; not installed.

#include <json.hpp>

#include "resilience/config.hpp"

namespace resilience::detail {

nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::ordered_json& j);

}  // namespace resilience::detail

#pragma once

#include <json.hpp>

#include "netqre/manifest.hpp"

namespace netqre::detail {

nlohmann::json manifest_to_json(const TraceManifest& m);
TraceManifest manifest_from_json(const nlohmann::json& j);

}  // namespace netqre::detail

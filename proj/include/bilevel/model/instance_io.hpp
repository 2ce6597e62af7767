#pragma once

#include <string>

#include "bilevel/model/instance.hpp"
#include "json.hpp"

namespace bilevel {

/// Throws SchemaError carrying the offending field path, e.g. "lower.d_l".
BilevelInstance instance_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const BilevelInstance& inst);

BilevelInstance load_instance(const std::string& path);
void save_instance(const BilevelInstance& inst, const std::string& path);

/// Canonical text form; identical instances give identical strings.
std::string instance_to_string(const BilevelInstance& inst);

}  // namespace bilevel

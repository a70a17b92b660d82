#pragma once

#include <string>

#include <json.hpp>

#include "dbs/pcfg.hpp"
#include "dbs/splitter.hpp"

namespace dbs {

using Json = nlohmann::json;

/// [{lhs, primitive, weight}, ...] in rule order.
Json weights_to_json(const Pcfg& pcfg);
/// Throws std::invalid_argument on malformed records or duplicate rules.
Labeling labeling_from_json(const Json& j);

Json grammar_to_json(const Pcfg& pcfg);
Json dsl_manifest(const Dsl& dsl);
Json partition_to_json(const Pcfg& pcfg, const Partition& partition);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace dbs

#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "chord/backbone.hpp"
#include "chord/chord_field.hpp"

namespace chord {

using Json = nlohmann::json;

Json load_config(const std::string& path);

// "a.b.c=value"; value is parsed as JSON when it parses, else kept as a string.
void apply_override(Json& config, const std::string& assignment);

Schedule schedule_from_json(const Json& j, const std::string& base_dir = ".");
GaussianMixture mixture_from_json(const Json& j);
// A preset name, {"preset": name} with any field below replaced, or an inline
// {schedule, source, target, output_kind}.
BackboneModel backbone_from_json(const Json& j, const std::string& base_dir = ".");
ChordParams chord_params_from_json(const Json& j);

std::string preset_dir();
std::vector<std::string> preset_names();
BackboneModel load_preset(const std::string& name);

}  // namespace chord

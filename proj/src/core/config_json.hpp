#pragma once

#include <nlohmann/json.hpp>

#include "core/evaluate.hpp"
#include "core/pipeline.hpp"

namespace uclearn {

// JSON -> config records. Missing fields keep defaults; unknown fields are
// ignored. Throws config errors on malformed values.
SurrogateConfig surrogate_config_from_json(const nlohmann::json& j);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
ProtectConfig protect_config_from_json(const nlohmann::json& j);

nlohmann::json parse_config_text(const char* text); // null/empty -> {}

} // namespace uclearn

#pragma once

#include <string>

#include "efhc/engine.hpp"

namespace efhc {

/// Parses a JSON experiment config. Every key is optional and defaults to
/// the ExperimentConfig default; unknown keys are rejected with a field-path
/// diagnostic. Throws on missing files or schema violations.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Serializes the full config (all keys explicit). parse of the output
/// yields an equal config.
std::string serialize_config(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace efhc

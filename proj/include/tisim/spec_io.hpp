#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "tisim/experiment.hpp"

namespace tisim {

/// Reads the experiment JSON document into a spec without validating it.
/// Amplitudes are normalised; unknown fields are rejected. Errors carry the
/// JSON location (byte offset for syntax errors, field path otherwise).
ExperimentSpec parse_spec(std::string_view document);

/// parse_spec followed by validate_spec; throws SimError listing every
/// violated invariant.
ExperimentSpec load_spec(std::string_view document);

nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// Pretty-printed document accepted by load_spec.
std::string dump_spec(const ExperimentSpec& spec);

}  // namespace tisim

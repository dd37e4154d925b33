#pragma once

#include "toricflow/run_config.hpp"

#include <string_view>

namespace toricflow {

// Parses and validates a run config. Unknown keys are rejected.
// Throws SchemaError (JSON pointer) for syntax / type / key errors and
// ValueError (field name) for out-of-range values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace toricflow

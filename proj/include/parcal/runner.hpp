#pragma once

// Config-driven runs behind the command-line front end and the C API.
//
// A run takes a JSON object of overrides, fills in defaults, rejects unknown
// keys, and returns one output document (CSV or JSON) that records the
// effective config.  Output depends only on the config, never on timing or
// the thread count.

#include <string>
#include <vector>

namespace parcal {

struct RunOutput {
  std::string format;    // "csv" or "json"
  std::string document;  // the file written by the front end
  std::string summary;   // short JSON digest for the terminal
};

/// kernel, cantor, potential, capacity, content, removability, bmo.
const std::vector<std::string>& run_commands();

/// Effective config (defaults merged with the overrides) as JSON text.
std::string effective_config(const std::string& command, const std::string& overrides_json);

RunOutput run_command(const std::string& command, const std::string& overrides_json);

struct SelftestOutcome {
  bool passed = true;
  std::string report;  // one line per check
};

/// Runs the command's trivial examples.
SelftestOutcome run_selftest(const std::string& command);

}  // namespace parcal

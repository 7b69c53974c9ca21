#pragma once

// Property suite run by `siegelnet selfcheck`: every module's invariants on
// random instances, plus the gradient registry and pipeline round trips.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace siegelnet::cli {

enum class Level { Fast, Full };

/// "fast" or "full"; ConfigError otherwise.
Level parse_level(const std::string& s);
std::string to_string(Level level);

struct CheckResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst = 0.0;      // largest observed error (same units as tolerance)
  double tolerance = 0.0;
  std::string detail;      // first failure message, if any
  double seconds = 0.0;

  bool passed() const { return failures == 0 && trials > 0; }
};

struct SelfcheckReport {
  Level level = Level::Fast;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Trial count and size cap for a level: fast = (100, 3), full = (1000, 6).
int level_trials(Level level);
long level_max_m(Level level);

/// `progress` (optional) is called after each check completes.
SelfcheckReport run_selfcheck(Level level, std::uint64_t seed,
                              const std::function<void(const CheckResult&)>& progress = {});

}  // namespace siegelnet::cli

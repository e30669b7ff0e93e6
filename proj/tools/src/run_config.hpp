#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biot_iga/harness.hpp"

namespace biot::cli {

enum class Command { Solve, Convergence, InfSup, Cantilever, Compare6 };

Command parse_command(std::string_view name);
std::string to_string(Command c);

struct RunConfig {
  Command command = Command::Convergence;
  TestId test = TestId::Test1;
  /// "default" selects the test's own domain.
  std::string geometry = "default";
  double annulus_r0 = 1.0;
  double annulus_r1 = 2.0;
  MixedDegrees degrees{1, 0, 2, 0};
  std::vector<int> meshes;
  SchemeSpec scheme = SchemeSpec::backward_euler();
  /// Unset: dt(h) = (6h)^gamma.
  std::optional<double> dt;
  MaterialParams params;
  double T = 1.0;
  InitialMode initial_mode = InitialMode::Consistent;
  int quadrature_points = 0;
  std::string output = "-";
  double traction = 1.0;
  int samples = 64;
  int pk_mesh = 4;
  std::vector<int> pk_degrees{2, 3, 4, 5};
  int threads = 1;

  /// Every effective parameter in a fixed order, defaults included.
  std::vector<std::pair<std::string, std::string>> echo() const;
  /// The explicit step, or (6h)^gamma with gamma = min(p_v, p_p + 1).
  double time_step(double h) const;
  GeometryMap domain() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Flat key=value lines; '#' starts a comment. Throws ConfigError on a
/// malformed line.
KeyValues parse_key_values(std::string_view text);

/// Applies `overrides` on top of `file`, then validates. Throws ConfigError
/// naming an unknown key or bad value, and StabilityConditionError when the
/// degrees violate the stability condition.
RunConfig parse_config(const KeyValues& file, const KeyValues& overrides = {});
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

/// BIOT_IGA_THREADS: unset -> 1, otherwise an integer >= 1.
int threads_from_env(const char* value);

}  // namespace biot::cli

#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "biot_iga/errors.hpp"
#include "biot_iga/quadrature.hpp"

namespace biot::cli {

namespace {

const std::set<std::string> kKeys = {
    "command", "test",    "geometry", "annulus_r0", "annulus_r1", "p_p",        "k_p",
    "p_v",     "k_v",     "meshes",   "scheme",     "dt",         "T",          "mu",
    "lambda",  "kappa",   "alpha",    "c0",         "young",      "poisson",    "initial",
    "quadrature", "output", "traction", "samples",  "pk_mesh",    "pk_degrees",
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("bad value for '" + key + "': '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x)) bad_value(key, v);
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || x < -1000000 || x > 1000000) bad_value(key, v);
  return static_cast<int>(x);
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const std::string item = trim(std::string_view(v).substr(pos, comma - pos));
    out.push_back(to_int(key, item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

SchemeSpec parse_scheme(const std::string& v) {
  if (v == "backward_euler" || v == "be") return SchemeSpec::backward_euler();
  if (v == "crank_nicolson" || v == "cn") return SchemeSpec::crank_nicolson();
  if (v == "bdf1") return SchemeSpec::bdf(1);
  if (v == "bdf2") return SchemeSpec::bdf(2);
  bad_value("scheme", v);
}

InitialMode parse_initial(const std::string& v) {
  if (v == "consistent") return InitialMode::Consistent;
  if (v == "projection") return InitialMode::Projection;
  if (v == "zero") return InitialMode::Zero;
  bad_value("initial", v);
}

std::string initial_name(InitialMode m) {
  switch (m) {
    case InitialMode::Consistent: return "consistent";
    case InitialMode::Projection: return "projection";
    case InitialMode::Zero: return "zero";
  }
  return "";
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "solve") return Command::Solve;
  if (name == "convergence") return Command::Convergence;
  if (name == "infsup") return Command::InfSup;
  if (name == "cantilever") return Command::Cantilever;
  if (name == "compare6") return Command::Compare6;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Convergence: return "convergence";
    case Command::InfSup: return "infsup";
    case Command::Cantilever: return "cantilever";
    case Command::Compare6: return "compare6";
  }
  return "";
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    }
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

RunConfig parse_config(const KeyValues& file, const KeyValues& overrides) {
  KeyValues kv = file;
  for (const auto& [k, v] : overrides) kv[k] = v;
  for (const auto& [k, v] : kv) {
    if (!kKeys.count(k)) throw ConfigError("unknown key '" + k + "'");
  }
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };

  RunConfig c;
  if (auto v = get("command")) c.command = parse_command(*v);
  const Command cmd = c.command;
  if (cmd == Command::Compare6) c.test = TestId::Test6;
  if (auto v = get("test")) c.test = parse_test_id(*v);
  if (cmd == Command::Compare6 && c.test != TestId::Test6) {
    throw ConfigError("compare6 runs test6 only");
  }

  // Command-dependent defaults.
  switch (cmd) {
    case Command::Solve: c.meshes = {12}; break;
    case Command::Convergence: c.meshes = {6, 12}; break;
    case Command::InfSup: c.meshes = {2, 4, 8}; break;
    case Command::Cantilever:
      c.meshes = {16};
      c.T = 1e-3;
      c.dt = 1e-4;
      break;
    case Command::Compare6:
      c.meshes = {2, 4, 8};
      c.degrees = {3, 2, 4, 2};
      c.scheme = SchemeSpec::bdf(2);
      c.dt = 1.0 / 128;
      break;
  }

  const bool young = get("young") || get("poisson");
  if (young && (get("mu") || get("lambda"))) {
    throw ConfigError("give either young/poisson or mu/lambda, not both");
  }
  if (cmd == Command::Cantilever) {
    c.params = CantileverConfig{}.params;
  } else {
    c.params = default_params(c.test);
  }
  if (young) {
    const double E = get("young") ? to_double("young", *get("young")) : 1e5;
    const double nu = get("poisson") ? to_double("poisson", *get("poisson")) : 0.4;
    try {
      const auto yp = MaterialParams::from_young_poisson(E, nu, 1.0, 1.0, 1.0);
      c.params.mu = yp.mu;
      c.params.lambda = yp.lambda;
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto v = get("mu")) c.params.mu = to_double("mu", *v);
  if (auto v = get("lambda")) {
    if (*v == "inf") {
      c.params.lambda_infinite = true;
    } else {
      c.params.lambda = to_double("lambda", *v);
      c.params.lambda_infinite = false;
    }
  }
  if (auto v = get("kappa")) c.params.kappa = to_double("kappa", *v);
  if (auto v = get("alpha")) c.params.alpha = to_double("alpha", *v);
  if (auto v = get("c0")) c.params.c0 = to_double("c0", *v);
  try {
    c.params.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  if (auto v = get("geometry")) {
    if (*v != "default" && *v != "unit_square" && *v != "quarter_annulus" && *v != "l_shape") {
      bad_value("geometry", *v);
    }
    c.geometry = *v;
  }
  if (c.geometry != "default" && (cmd == Command::Cantilever || cmd == Command::Compare6)) {
    throw ConfigError(to_string(cmd) + " runs on its own domain; drop the geometry key");
  }
  if (auto v = get("annulus_r0")) c.annulus_r0 = to_double("annulus_r0", *v);
  if (auto v = get("annulus_r1")) c.annulus_r1 = to_double("annulus_r1", *v);
  if (!(c.annulus_r0 > 0 && c.annulus_r0 < c.annulus_r1)) {
    throw ConfigError("annulus radii need 0 < annulus_r0 < annulus_r1");
  }

  if (auto v = get("p_p")) c.degrees.p_p = to_int("p_p", *v);
  if (auto v = get("k_p")) c.degrees.k_p = to_int("k_p", *v);
  if (auto v = get("p_v")) c.degrees.p_v = to_int("p_v", *v);
  if (auto v = get("k_v")) c.degrees.k_v = to_int("k_v", *v);
  check_stability_condition(c.degrees);

  if (auto v = get("meshes")) c.meshes = to_int_list("meshes", *v);
  if (c.meshes.empty()) throw ConfigError("mesh list is empty");
  for (int n : c.meshes) {
    if (n < 1) bad_value("meshes", std::to_string(n));
  }
  if ((cmd == Command::Solve || cmd == Command::Cantilever) && c.meshes.size() != 1) {
    throw ConfigError(to_string(cmd) + " takes a single mesh");
  }

  if (auto v = get("scheme")) c.scheme = parse_scheme(*v);
  if (auto v = get("T")) c.T = to_double("T", *v);
  if (!(c.T > 0)) bad_value("T", fmt(c.T));
  if (auto v = get("dt")) {
    if (*v == "paper") {
      if (cmd != Command::Solve && cmd != Command::Convergence) {
        throw ConfigError("dt=paper needs the solve or convergence command");
      }
      c.dt.reset();
    } else {
      c.dt = to_double("dt", *v);
    }
  }
  if (c.dt) {
    if (!(*c.dt > 0)) bad_value("dt", fmt(*c.dt));
    try {
      step_count(c.T, *c.dt);
    } catch (const ParameterError&) {
      throw ConfigError("T/dt is not an integer (T=" + fmt(c.T) + ", dt=" + fmt(*c.dt) + ")");
    }
  }

  if (auto v = get("initial")) c.initial_mode = parse_initial(*v);
  if (auto v = get("quadrature")) c.quadrature_points = to_int("quadrature", *v);
  if (c.quadrature_points < 0) bad_value("quadrature", std::to_string(c.quadrature_points));
  if (c.quadrature_points > 0 && cmd != Command::Solve && cmd != Command::Convergence) {
    throw ConfigError("quadrature applies to solve and convergence only");
  }
  if (auto v = get("output")) c.output = *v;
  if (auto v = get("traction")) c.traction = to_double("traction", *v);
  if (auto v = get("samples")) c.samples = to_int("samples", *v);
  if (c.samples < 2) bad_value("samples", std::to_string(c.samples));
  if (auto v = get("pk_mesh")) c.pk_mesh = to_int("pk_mesh", *v);
  if (c.pk_mesh < 1) bad_value("pk_mesh", std::to_string(c.pk_mesh));
  if (auto v = get("pk_degrees")) c.pk_degrees = to_int_list("pk_degrees", *v);
  for (int p : c.pk_degrees) {
    if (p < 2) bad_value("pk_degrees", std::to_string(p));
  }
  c.threads = threads_from_env(std::getenv("BIOT_IGA_THREADS"));
  return c;
}

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  KeyValues ov;
  for (const std::string& tok : overrides) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + tok + "' is not key=value");
    }
    ov[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return parse_config(parse_key_values(text), ov);
}

int threads_from_env(const char* value) {
  if (value == nullptr) return 1;
  const std::string v = trim(value);
  char* end = nullptr;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || n < 1 || n > 1024) {
    throw ConfigError("BIOT_IGA_THREADS must be an integer >= 1, got '" + v + "'");
  }
  return static_cast<int>(n);
}

double RunConfig::time_step(double h) const {
  return dt ? *dt : coupled_time_step(h, std::min(degrees.p_v, degrees.p_p + 1));
}

GeometryMap RunConfig::domain() const {
  if (geometry == "unit_square") return unit_square();
  if (geometry == "quarter_annulus") return quarter_annulus(annulus_r0, annulus_r1);
  if (geometry == "l_shape") return l_shape();
  if (command == Command::Cantilever) return quarter_annulus();
  return test_geometry(test);
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("command", to_string(command));
  e.emplace_back("test", biot::to_string(test));
  e.emplace_back("geometry", geometry);
  if (geometry == "quarter_annulus") {
    e.emplace_back("annulus_r0", fmt(annulus_r0));
    e.emplace_back("annulus_r1", fmt(annulus_r1));
  }
  e.emplace_back("p_p", std::to_string(degrees.p_p));
  e.emplace_back("k_p", std::to_string(degrees.k_p));
  e.emplace_back("p_v", std::to_string(degrees.p_v));
  e.emplace_back("k_v", std::to_string(degrees.k_v));
  e.emplace_back("meshes", join(meshes));
  e.emplace_back("scheme", scheme.name());
  e.emplace_back("dt", dt ? fmt(*dt) : "paper");
  e.emplace_back("T", fmt(T));
  e.emplace_back("mu", fmt(params.mu));
  e.emplace_back("lambda", params.lambda_infinite ? "inf" : fmt(params.lambda));
  e.emplace_back("kappa", fmt(params.kappa));
  e.emplace_back("alpha", fmt(params.alpha));
  e.emplace_back("c0", fmt(params.c0));
  e.emplace_back("initial", initial_name(initial_mode));
  if (command != Command::Compare6) {
    e.emplace_back("quadrature", std::to_string(quadrature_points > 0
                                                    ? quadrature_points
                                                    : default_rule_order(degrees)));
  }
  e.emplace_back("output", output);
  if (command == Command::Cantilever) {
    e.emplace_back("traction", fmt(traction));
    e.emplace_back("samples", std::to_string(samples));
  }
  if (command == Command::Compare6) {
    e.emplace_back("pk_mesh", std::to_string(pk_mesh));
    e.emplace_back("pk_degrees", join(pk_degrees));
  }
  e.emplace_back("threads", std::to_string(threads));
  return e;
}

}  // namespace biot::cli

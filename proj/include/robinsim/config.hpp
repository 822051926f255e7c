#pragma once

// Line-oriented `key = value` experiment files.
//
//   experiment = table1
//   engine = convergence       # sim1d | simnd | fpe | analytic | blcheck | convergence
//   sigma = constant 1         # 1D coefficient family + parameters
//   kappa = 1                  # or P, never both
//   dt = 0.1 0.01 0.001        # strictly decreasing
//
// Blank lines and text after '#' are ignored. Numbers are stored in their
// shortest round-trip form, so emit(parse(emit(c))) == emit(c).

#include <robinsim/coefficients.hpp>
#include <robinsim/errors.hpp>
#include <robinsim/euler1d.hpp>
#include <robinsim/euler_nd.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace robinsim {

enum class Engine { sim1d, simnd, fpe, analytic, blcheck, convergence };

inline std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::sim1d: return "sim1d";
    case Engine::simnd: return "simnd";
    case Engine::fpe: return "fpe";
    case Engine::analytic: return "analytic";
    case Engine::blcheck: return "blcheck";
    case Engine::convergence: return "convergence";
  }
  return "?";
}

inline std::optional<Engine> parse_engine(std::string_view s) {
  for (Engine e : {Engine::sim1d, Engine::simnd, Engine::fpe, Engine::analytic, Engine::blcheck, Engine::convergence}) {
    if (engine_name(e) == s) return e;
  }
  return std::nullopt;
}

enum class ReferenceSource { analytic, fpe, value };

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

enum class ValueKind { text, word, family, number, integer, list };

struct KeySpec {
  std::string_view name;
  ValueKind kind;
};

// Canonical emission order.
inline constexpr std::array<KeySpec, 31> config_keys{{
    {"experiment", ValueKind::text},   {"engine", ValueKind::word},      {"dim", ValueKind::integer},
    {"drift", ValueKind::family},      {"sigma", ValueKind::family},     {"tensor", ValueKind::list},
    {"drift_vector", ValueKind::list}, {"kappa", ValueKind::number},     {"P", ValueKind::number},
    {"reflection", ValueKind::word},   {"direction", ValueKind::list},   {"x0", ValueKind::list},
    {"T", ValueKind::number},          {"dt", ValueKind::list},          {"n", ValueKind::integer},
    {"seed", ValueKind::integer},      {"workers", ValueKind::integer},  {"bins", ValueKind::integer},
    {"hist_lo", ValueKind::number},    {"hist_hi", ValueKind::number},   {"reference", ValueKind::word},
    {"reference_value", ValueKind::number}, {"dx", ValueKind::number},   {"pde_dt", ValueKind::number},
    {"length", ValueKind::number},     {"Lx", ValueKind::number},        {"Ly", ValueKind::number},
    {"max_iterations", ValueKind::integer}, {"points", ValueKind::integer}, {"x_max", ValueKind::number},
    {"out", ValueKind::text},
}};

inline const KeySpec* find_key(std::string_view name) {
  for (const auto& k : config_keys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::optional<double> to_number(std::string_view tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> to_integer(std::string_view tok) {
  std::uint64_t v = 0;
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
    const auto res = std::from_chars(tok.data() + 2, tok.data() + tok.size(), v, 16);
    if (res.ec == std::errc{} && res.ptr == tok.data() + tok.size()) return v;
    return std::nullopt;
  }
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec == std::errc{} && res.ptr == tok.data() + tok.size()) return v;
  // Accept integral floating forms such as 1e6.
  const auto d = to_number(tok);
  if (d && *d >= 0.0 && *d <= 9007199254740992.0 && std::floor(*d) == *d) return static_cast<std::uint64_t>(*d);
  return std::nullopt;
}

/// Validate and normalize one value; returns the canonical text.
inline std::string normalize_value(const KeySpec& key, const std::string& raw, std::size_t line) {
  const auto fail = [&](const std::string& what) -> std::string {
    throw ConfigError("line " + std::to_string(line) + ": " + std::string(key.name) + ": " + what);
  };
  const auto tokens = split_ws(raw);
  if (tokens.empty()) fail("empty value");
  switch (key.kind) {
    case ValueKind::text:
      return raw;
    case ValueKind::word:
      if (tokens.size() != 1) fail("expected a single word");
      return tokens[0];
    case ValueKind::number: {
      if (tokens.size() != 1) fail("expected one number");
      const auto v = to_number(tokens[0]);
      if (!v) fail("'" + tokens[0] + "' is not a number");
      return format_number(*v);
    }
    case ValueKind::integer: {
      if (tokens.size() != 1) fail("expected one integer");
      const auto v = to_integer(tokens[0]);
      if (!v) fail("'" + tokens[0] + "' is not a non-negative integer");
      return std::to_string(*v);
    }
    case ValueKind::list:
    case ValueKind::family: {
      std::string out;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i == 0 && key.kind == ValueKind::family) {
          out = tokens[0];
          continue;
        }
        const auto v = to_number(tokens[i]);
        if (!v) fail("'" + tokens[i] + "' is not a number");
        if (!out.empty()) out += ' ';
        out += format_number(*v);
      }
      return out;
    }
  }
  return raw;
}

inline std::vector<double> numbers_of(const std::string& canonical, bool skip_first = false) {
  std::vector<double> out;
  const auto tokens = split_ws(canonical);
  for (std::size_t i = skip_first ? 1 : 0; i < tokens.size(); ++i) out.push_back(*to_number(tokens[i]));
  return out;
}

}  // namespace detail

/// Validated experiment description. `entries` holds the canonical text of
/// every key given in the file; the typed members are derived from it.
struct ExperimentConfig {
  std::map<std::string, std::string> entries;
  std::map<std::string, std::size_t> lines;

  std::string experiment;
  Engine engine = Engine::sim1d;
  int dim = 1;

  std::string drift_family = "zero";
  std::vector<double> drift_params;
  std::string sigma_family = "constant";
  std::vector<double> sigma_params{1.0};
  std::vector<double> tensor;        ///< row-major dim x dim
  std::vector<double> drift_vector;  ///< constant drift in d >= 2

  double kappa = 0.0;
  double P = 0.0;
  bool kappa_given = false;

  ReflectionRule reflection = ReflectionRule::conormal;
  std::vector<double> direction;
  std::vector<double> x0;
  double T = 1.0;
  std::vector<double> dt;
  std::uint64_t n = 0;
  std::uint64_t seed = default_seed;
  unsigned workers = 0;

  std::optional<std::size_t> bins;
  std::optional<double> hist_lo;
  std::optional<double> hist_hi;

  ReferenceSource reference = ReferenceSource::analytic;
  std::optional<double> reference_value;

  std::optional<double> dx;
  std::optional<double> pde_dt;
  std::optional<double> length;
  double Lx = 4.0;
  double Ly = 6.0;
  std::optional<int> max_iterations;  ///< linear-solver cap for the 2D FPE
  std::size_t points = 201;
  std::optional<double> x_max;
  std::string out = ".";

  bool has(std::string_view key) const { return entries.count(std::string(key)) != 0; }

  CoefficientModel1D model_1d() const {
    auto& reg = FieldRegistry::global();
    return {reg.make(drift_family, drift_params), reg.make(sigma_family, sigma_params)};
  }

  HalfSpaceModel<2> model_2d() const {
    Mat<2> s{};
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) s[i][j] = tensor[i * 2 + j];
    }
    Vec<2> a{};
    for (std::size_t i = 0; i < drift_vector.size(); ++i) a[i] = drift_vector[i];
    return HalfSpaceModel<2>(s, a);
  }

  /// Sets the seed and keeps the canonical entries in sync.
  void set_seed(std::uint64_t s) {
    seed = s;
    entries["seed"] = std::to_string(s);
  }
  void set_workers(unsigned w) {
    workers = w;
    entries["workers"] = std::to_string(w);
  }
  void set_out(const std::string& dir) {
    out = dir;
    entries["out"] = dir;
  }
};

namespace detail {

inline std::vector<std::string> required_keys(const ExperimentConfig& c) {
  const bool nd = c.dim >= 2;
  std::vector<std::string> keys;
  auto model = [&] {
    if (nd) {
      keys.emplace_back("tensor");
    } else {
      keys.emplace_back("sigma");
    }
  };
  switch (c.engine) {
    case Engine::sim1d:
      keys = {"sigma", "x0", "T", "dt", "n"};
      break;
    case Engine::simnd:
      keys = {"tensor", "x0", "T", "dt", "n"};
      break;
    case Engine::fpe:
    case Engine::analytic:
      model();
      keys.insert(keys.end(), {"x0", "T"});
      break;
    case Engine::blcheck:
      keys = {"sigma", "x0", "T", "dt"};
      break;
    case Engine::convergence:
      model();
      keys.insert(keys.end(), {"x0", "T", "dt", "n", "reference"});
      break;
  }
  return keys;
}

inline void derive_and_check(ExperimentConfig& c) {
  if (c.engine == Engine::simnd) c.dim = std::max(c.dim, 2);
  if (c.engine == Engine::sim1d || c.engine == Engine::analytic || c.engine == Engine::blcheck) {
    if (c.dim != 1) throw ConfigError("engine " + std::string(engine_name(c.engine)) + " is one-dimensional");
  }
  if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
  const std::size_t d = static_cast<std::size_t>(c.dim);

  if (c.x0.size() != d) throw ConfigError("x0 needs " + std::to_string(d) + " component(s)");
  if (!(c.T > 0.0)) throw ConfigError("T must be positive");
  for (std::size_t i = 1; i < c.dt.size(); ++i) {
    if (!(c.dt[i] < c.dt[i - 1])) throw ConfigError("dt list must be strictly decreasing");
  }
  for (double h : c.dt) {
    if (!(h > 0.0)) throw ConfigError("time steps must be positive");
    if (c.engine != Engine::blcheck) step_count(c.T, h);
  }

  double sigma_n = 0.0;
  if (d == 1) {
    const auto model = c.model_1d();
    sigma_n = model.diffusion(0.0, 0.0);
  } else {
    if (c.tensor.size() != d * d) throw ConfigError("tensor needs " + std::to_string(d * d) + " entries");
    if (!c.drift_vector.empty() && c.drift_vector.size() != d) {
      throw ConfigError("drift_vector needs " + std::to_string(d) + " entries");
    }
    try {
      sigma_n = c.model_2d().sigma_n();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("tensor is not symmetric positive definite: ") + e.what());
    }
    if (c.reflection == ReflectionRule::custom && c.direction.size() != d) {
      throw ConfigError("custom reflection needs a direction with " + std::to_string(d) + " entries");
    }
  }

  if (c.kappa_given) {
    if (!(c.kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
    c.P = d == 1 ? kappa_to_P(c.kappa, sigma_n) : kappa_to_P_nd(c.kappa, sigma_n);
  } else {
    if (!(c.P >= 0.0)) throw ConfigError("P must be non-negative");
    c.kappa = P_to_kappa(c.P, sigma_n);
  }
  for (double h : c.dt) {
    if (c.P * std::sqrt(h) > 1.0) {
      throw ConfigError("P*sqrt(dt) = " + format_number(c.P * std::sqrt(h)) + " exceeds 1 for dt = " + format_number(h));
    }
  }
  if (c.engine == Engine::convergence && c.reference == ReferenceSource::value && !c.reference_value) {
    throw ConfigError("reference = value needs reference_value");
  }
  if (c.engine == Engine::convergence && c.reference == ReferenceSource::analytic) {
    if (d != 1) throw ConfigError("analytic reference exists only in one dimension");
  }
  if ((c.engine == Engine::analytic || (c.engine == Engine::convergence && c.reference == ReferenceSource::analytic)) &&
      (c.drift_family != "zero" && c.drift_family != "constant")) {
    throw ConfigError("analytic solutions need constant drift");
  }
  if ((c.engine == Engine::analytic || (c.engine == Engine::convergence && c.reference == ReferenceSource::analytic)) &&
      c.sigma_family != "constant") {
    throw ConfigError("analytic solutions need constant sigma");
  }
  if (c.bins && *c.bins == 0) throw ConfigError("bins must be positive");
  if (c.points < 2) throw ConfigError("points must be at least 2");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
    const auto* spec = detail::find_key(key);
    if (!spec) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (c.entries.count(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(c.lines[key]) + ")");
    }
    if ((key == "kappa" && c.entries.count("P")) || (key == "P" && c.entries.count("kappa"))) {
      throw ConfigError("line " + std::to_string(line_no) + ": kappa and P are mutually exclusive (other on line " +
                        std::to_string(c.lines[key == "P" ? "kappa" : "P"]) + ")");
    }
    c.entries[key] = detail::normalize_value(*spec, value, line_no);
    c.lines[key] = line_no;
  }

  const auto at = [&](const char* key) -> const std::string& { return c.entries.at(key); };
  const auto line_error = [&](const char* key, const std::string& what) {
    return ConfigError("line " + std::to_string(c.lines.at(key)) + ": " + key + ": " + what);
  };

  std::vector<std::string> missing;
  for (const char* k : {"experiment", "engine"}) {
    if (!c.has(k)) missing.emplace_back(k);
  }
  if (c.has("engine")) {
    const auto e = parse_engine(at("engine"));
    if (!e) throw line_error("engine", "unknown engine '" + at("engine") + "'");
    c.engine = *e;
  }
  if (c.has("dim")) {
    c.dim = static_cast<int>(std::stoull(at("dim")));
  } else if (c.has("tensor") || c.engine == Engine::simnd) {
    c.dim = 2;
  }
  if (c.has("engine")) {
    for (const auto& k : detail::required_keys(c)) {
      if (!c.has(k)) missing.push_back(k);
    }
  }
  if (!c.has("kappa") && !c.has("P")) missing.emplace_back("kappa|P");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing required keys: " + list);
  }

  c.experiment = at("experiment");
  if (c.has("drift")) {
    const auto tokens = detail::split_ws(at("drift"));
    c.drift_family = tokens[0];
    c.drift_params = detail::numbers_of(at("drift"), true);
    if (!FieldRegistry::global().contains(c.drift_family)) {
      throw line_error("drift", "unknown coefficient family '" + c.drift_family + "'");
    }
  }
  if (c.has("sigma")) {
    const auto tokens = detail::split_ws(at("sigma"));
    c.sigma_family = tokens[0];
    c.sigma_params = detail::numbers_of(at("sigma"), true);
    if (!FieldRegistry::global().contains(c.sigma_family)) {
      throw line_error("sigma", "unknown coefficient family '" + c.sigma_family + "'");
    }
  }
  try {
    if (c.dim == 1) c.model_1d();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("coefficients: ") + e.what());
  }
  if (c.has("tensor")) c.tensor = detail::numbers_of(at("tensor"));
  if (c.has("drift_vector")) c.drift_vector = detail::numbers_of(at("drift_vector"));
  if (c.has("kappa")) {
    c.kappa_given = true;
    c.kappa = std::stod(at("kappa"));
  }
  if (c.has("P")) c.P = std::stod(at("P"));
  if (c.has("reflection")) {
    const auto& r = at("reflection");
    if (r == "conormal") {
      c.reflection = ReflectionRule::conormal;
    } else if (r == "normal") {
      c.reflection = ReflectionRule::normal;
    } else if (r == "custom") {
      c.reflection = ReflectionRule::custom;
    } else {
      throw line_error("reflection", "expected conormal, normal or custom");
    }
  }
  if (c.has("direction")) c.direction = detail::numbers_of(at("direction"));
  c.x0 = detail::numbers_of(at("x0"));
  c.T = std::stod(at("T"));
  if (c.has("dt")) c.dt = detail::numbers_of(at("dt"));
  if (c.has("n")) c.n = std::stoull(at("n"));
  if (c.has("seed")) c.seed = std::stoull(at("seed"));
  if (c.has("workers")) c.workers = static_cast<unsigned>(std::stoull(at("workers")));
  if (c.has("bins")) c.bins = std::stoull(at("bins"));
  if (c.has("hist_lo")) c.hist_lo = std::stod(at("hist_lo"));
  if (c.has("hist_hi")) c.hist_hi = std::stod(at("hist_hi"));
  if (c.has("reference")) {
    const auto& r = at("reference");
    if (r == "analytic") {
      c.reference = ReferenceSource::analytic;
    } else if (r == "fpe") {
      c.reference = ReferenceSource::fpe;
    } else if (r == "value") {
      c.reference = ReferenceSource::value;
    } else {
      throw line_error("reference", "expected analytic, fpe or value");
    }
  }
  if (c.has("reference_value")) c.reference_value = std::stod(at("reference_value"));
  if (c.has("dx")) c.dx = std::stod(at("dx"));
  if (c.has("pde_dt")) c.pde_dt = std::stod(at("pde_dt"));
  if (c.has("length")) c.length = std::stod(at("length"));
  if (c.has("Lx")) c.Lx = std::stod(at("Lx"));
  if (c.has("Ly")) c.Ly = std::stod(at("Ly"));
  if (c.has("max_iterations")) c.max_iterations = static_cast<int>(std::stoull(at("max_iterations")));
  if (c.has("points")) c.points = std::stoull(at("points"));
  if (c.has("x_max")) c.x_max = std::stod(at("x_max"));
  if (c.has("out")) c.out = at("out");

  detail::derive_and_check(c);
  return c;
}

/// Canonical text: one `key = value` line per given key, in a fixed order.
inline std::string emit_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& key : detail::config_keys) {
    const auto it = c.entries.find(std::string(key.name));
    if (it == c.entries.end()) continue;
    out += std::string(key.name) + " = " + it->second + "\n";
  }
  return out;
}

}  // namespace robinsim

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermo/bath/dos.hpp"
#include "thermo/cli/hash.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/version.hpp"

namespace thermo::cli {

using json = nlohmann::json;

// Invalid configuration; the message names the offending line or field.
class ConfigError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

enum class Model { FreeSpin, Ising, MeanField, Nbl, Nrg };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::FreeSpin: return "free_spin";
    case Model::Ising: return "ising";
    case Model::MeanField: return "meanfield";
    case Model::Nbl: return "nbl";
    case Model::Nrg: return "nrg";
  }
  return "?";
}

inline Model model_from_string(const std::string& s) {
  if (s == "free_spin") return Model::FreeSpin;
  if (s == "ising") return Model::Ising;
  if (s == "meanfield") return Model::MeanField;
  if (s == "nbl") return Model::Nbl;
  if (s == "nrg") return Model::Nrg;
  throw ConfigError("field 'model': unknown model '" + s + "' (free_spin, ising, meanfield, nbl, nrg)");
}

enum class CachePolicy { Use, Refresh, Off };

struct TemperatureGrid {
  double min = 1e-4;
  double max = 1.0;
  int points = 60;

  // Log-spaced, strictly decreasing.
  std::vector<double> values() const {
    std::vector<double> T(points);
    if (points == 1) return {max};
    const double a = std::log(max), b = std::log(min);
    for (int i = 0; i < points; ++i) T[i] = std::exp(a + (b - a) * i / (points - 1));
    T.front() = max;
    T.back() = min;
    return T;
  }
};

struct SolverOverrides {
  double lambda = 2.5;
  int N_s = 600;
  double beta_bar = 0.7;
  int n_sites = -1;  // NRG chain length; -1: chosen from the lowest requested scale
  bool interleave = false;
  bool track_rdm = false;
  double tolerance = 1e-12;
  int max_iter = 500;
  std::optional<double> B_0;  // Ising / mean-field bath-site field; default equals B
};

struct RunConfig {
  Model model = Model::FreeSpin;
  DosSpec dos = DosSpec::flat();
  json dos_json;
  std::vector<double> couplings{0.0};
  std::vector<double> fields;
  std::optional<TemperatureGrid> temperatures;
  SolverOverrides solver;
  std::filesystem::path output_dir = "out";
  CachePolicy cache = CachePolicy::Use;
  int workers = 0;

  // Everything that determines the numbers, in canonical (sorted-key) form.
  json canonical() const {
    json j;
    j["model"] = to_string(model);
    j["dos"] = dos_json;
    j["couplings"] = couplings;
    j["fields"] = fields;
    if (temperatures)
      j["temperatures"] = {{"min", temperatures->min}, {"max", temperatures->max}, {"points", temperatures->points}};
    json s = {{"lambda", solver.lambda},       {"N_s", solver.N_s},
              {"beta_bar", solver.beta_bar},   {"n_sites", solver.n_sites},
              {"interleave", solver.interleave}, {"track_rdm", solver.track_rdm},
              {"tolerance", solver.tolerance}, {"max_iter", solver.max_iter}};
    s["B_0"] = solver.B_0 ? json(*solver.B_0) : json(nullptr);
    j["solver"] = s;
    return j;
  }

  std::string hash() const { return sha256_hex(canonical().dump() + "|" + std::string(kVersion)); }
};

namespace config_detail {

inline int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "': missing or wrong type");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("field '" + where + "': expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("field '" + where + "': not finite");
  return v;
}

inline std::vector<double> number_list(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_number()) return {number(j, where)};
  if (!j.is_array()) throw ConfigError("field '" + where + "': expected a number or a list of numbers");
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

} // namespace config_detail

// DoS from {"family": ..., "D": ..., "r": ..., "table": path}; table paths are
// resolved against `base`. The returned json is canonical (content hash in
// place of the path).
inline std::pair<DosSpec, json> parse_dos(const json& j, const std::filesystem::path& base = {}) {
  using namespace config_detail;
  if (j.is_string()) return parse_dos(json{{"family", j.get<std::string>()}}, base);
  if (!j.is_object()) throw ConfigError("field 'dos': expected an object");
  const auto fam_s = get<std::string>(j, "family", "dos.");
  DosFamily fam;
  try {
    fam = dos_family_from_string(fam_s);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("field 'dos.family': ") + e.what());
  }
  const double D = j.contains("D") ? number(j["D"], "dos.D") : 1.0;
  json canon = {{"family", fam_s}, {"D", D}};
  try {
    switch (fam) {
      case DosFamily::Flat: return {DosSpec::flat(D), canon};
      case DosFamily::Nanowire: return {DosSpec::nanowire(D), canon};
      case DosFamily::Gaussian: return {DosSpec::gaussian(D), canon};
      case DosFamily::Graphene: {
        const double r = j.contains("r") ? number(j["r"], "dos.r") : 1.0;
        canon["r"] = r;
        return {DosSpec::graphene(D, r), canon};
      }
      case DosFamily::TbgDiverging: {
        const double r = j.contains("r") ? number(j["r"], "dos.r") : -0.25;
        canon["r"] = r;
        return {DosSpec::tbg(D, r), canon};
      }
      case DosFamily::Tabulated: {
        auto path = std::filesystem::path(get<std::string>(j, "table", "dos."));
        if (path.is_relative() && !base.empty()) path = base / path;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("field 'dos.table': cannot read '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        canon = {{"family", fam_s}, {"table_sha256", sha256_hex(ss.str())}};
        return {DosSpec::from_table_file(path.string()), canon};
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("field 'dos': ") + e.what());
  }
  throw ConfigError("field 'dos.family': unsupported");
}

inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base = {}) {
  using namespace config_detail;
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("line 1: top level must be an object");
  static const std::vector<std::string> known{"model", "dos",    "couplings", "fields", "temperatures",
                                              "solver", "output", "cache",     "workers"};
  for (auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("field '" + k + "': unknown key");

  RunConfig c;
  c.model = model_from_string(get<std::string>(j, "model", ""));
  if (j.contains("dos")) {
    auto [d, dj] = parse_dos(j["dos"], base);
    c.dos = d;
    c.dos_json = dj;
  } else {
    c.dos_json = {{"family", "flat"}, {"D", 1.0}};
  }
  if (j.contains("couplings")) c.couplings = number_list(j["couplings"], "couplings");
  if (c.couplings.empty()) throw ConfigError("field 'couplings': must be non-empty");
  if (!j.contains("fields")) throw ConfigError("field 'fields': missing");
  c.fields = number_list(j["fields"], "fields");
  if (c.fields.empty()) throw ConfigError("field 'fields': must be non-empty");

  if (j.contains("temperatures")) {
    const auto& t = j["temperatures"];
    if (!t.is_object()) throw ConfigError("field 'temperatures': expected {min, max, points}");
    TemperatureGrid g;
    g.min = number(t.value("min", json(g.min)), "temperatures.min");
    g.max = number(t.value("max", json(g.max)), "temperatures.max");
    if (t.contains("points")) {
      if (!t["points"].is_number_integer()) throw ConfigError("field 'temperatures.points': expected an integer");
      g.points = t["points"].get<int>();
    }
    if (!(g.min > 0.0)) throw ConfigError("field 'temperatures.min': must be positive");
    if (!(g.max > g.min)) throw ConfigError("field 'temperatures.max': must exceed min");
    if (g.points < 2) throw ConfigError("field 'temperatures.points': need at least 2");
    c.temperatures = g;
  } else if (c.model != Model::Nrg) {
    throw ConfigError("field 'temperatures': required for model '" + to_string(c.model) + "'");
  }

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (!s.is_object()) throw ConfigError("field 'solver': expected an object");
    static const std::vector<std::string> sk{"lambda",    "N_s",       "beta_bar", "n_sites", "interleave",
                                             "track_rdm", "tolerance", "max_iter", "B_0"};
    for (auto& [k, v] : s.items())
      if (std::find(sk.begin(), sk.end(), k) == sk.end()) throw ConfigError("field 'solver." + k + "': unknown key");
    auto& o = c.solver;
    if (s.contains("lambda")) o.lambda = number(s["lambda"], "solver.lambda");
    if (s.contains("beta_bar")) o.beta_bar = number(s["beta_bar"], "solver.beta_bar");
    if (s.contains("tolerance")) o.tolerance = number(s["tolerance"], "solver.tolerance");
    auto integer = [&](const char* k, int& dst) {
      if (!s.contains(k)) return;
      if (!s[k].is_number_integer()) throw ConfigError(std::string("field 'solver.") + k + "': expected an integer");
      dst = s[k].get<int>();
    };
    integer("N_s", o.N_s);
    integer("n_sites", o.n_sites);
    integer("max_iter", o.max_iter);
    if (s.contains("interleave")) o.interleave = get<bool>(s, "interleave", "solver.");
    if (s.contains("track_rdm")) o.track_rdm = get<bool>(s, "track_rdm", "solver.");
    if (s.contains("B_0") && !s["B_0"].is_null()) o.B_0 = number(s["B_0"], "solver.B_0");
    if (!(o.lambda > 1.0)) throw ConfigError("field 'solver.lambda': must exceed 1");
    if (!(o.beta_bar >= 0.4 && o.beta_bar <= 1.5)) throw ConfigError("field 'solver.beta_bar': must lie in [0.4, 1.5]");
    if (o.N_s < 100) throw ConfigError("field 'solver.N_s': must be at least 100");
  }
  if (j.contains("output")) {
    auto p = std::filesystem::path(get<std::string>(j, "output", ""));
    c.output_dir = (p.is_relative() && !base.empty()) ? base / p : p;
  } else if (!base.empty()) {
    c.output_dir = base / "out";
  }
  if (j.contains("cache")) {
    const auto s = get<std::string>(j, "cache", "");
    if (s == "use") c.cache = CachePolicy::Use;
    else if (s == "refresh") c.cache = CachePolicy::Refresh;
    else if (s == "off") c.cache = CachePolicy::Off;
    else throw ConfigError("field 'cache': expected use, refresh or off");
  }
  if (j.contains("workers")) {
    if (!j["workers"].is_number_integer() || j["workers"].get<int>() < 0)
      throw ConfigError("field 'workers': expected a non-negative integer");
    c.workers = j["workers"].get<int>();
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

} // namespace thermo::cli

#pragma once

// Scenario files: one strict JSON document. Unknown or missing keys are
// errors; messages carry the JSON path and the source line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acdr/error.hpp"
#include "acdr/scenario.hpp"

namespace acdr {

namespace io_detail {

/// Maps JSON paths ("units/3/theta_min") to the line where they appear.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) { scan(text); }

  int line_of(const std::string& path) const {
    auto it = lines_.find(path);
    if (it != lines_.end()) return it->second;
    // fall back to the nearest enclosing element
    std::string p = path;
    while (!p.empty()) {
      const auto cut = p.rfind('/');
      p = cut == std::string::npos ? std::string{} : p.substr(0, cut);
      it = lines_.find(p);
      if (it != lines_.end()) return it->second;
    }
    return 1;
  }

 private:
  struct Frame {
    bool is_object = false;
    std::string key;
    int index = 0;
    bool expect_key = false;
    bool expect_value = true;
  };

  std::string path_of(const std::vector<Frame>& stack) const {
    std::string p;
    for (const auto& f : stack) {
      if (!p.empty()) p += '/';
      p += f.is_object ? f.key : std::to_string(f.index);
    }
    return p;
  }

  void scan(const std::string& text) {
    std::vector<Frame> stack;
    int line = 1;
    lines_[""] = 1;
    auto mark_value = [&] {
      if (!stack.empty() && !stack.back().is_object && stack.back().expect_value) {
        lines_.emplace(path_of(stack), line);
        stack.back().expect_value = false;
      }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char ch = text[i];
      if (ch == '\n') {
        ++line;
      } else if (ch == '"') {
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\' && i + 1 < text.size()) ++i;
          s += text[i];
        }
        if (!stack.empty() && stack.back().is_object && stack.back().expect_key) {
          stack.back().key = s;
          stack.back().expect_key = false;
          lines_.emplace(path_of(stack), line);
        } else {
          mark_value();
        }
      } else if (ch == '{' || ch == '[') {
        mark_value();
        Frame f;
        f.is_object = ch == '{';
        f.expect_key = f.is_object;
        stack.push_back(f);
      } else if (ch == '}' || ch == ']') {
        if (!stack.empty()) stack.pop_back();
      } else if (ch == ',') {
        if (!stack.empty()) {
          if (stack.back().is_object) {
            stack.back().expect_key = true;
          } else {
            ++stack.back().index;
            stack.back().expect_value = true;
          }
        }
      } else if (ch != ' ' && ch != '\t' && ch != '\r' && ch != ':') {
        mark_value();
      }
    }
  }

  std::map<std::string, int> lines_;
};

using Json = nlohmann::json;

class SchemaReader {
 public:
  SchemaReader(std::string source, const LineIndex& lines) : source_(std::move(source)), lines_(lines) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(lines_.line_of(path)) + ": " + what);
  }

  const Json& object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(path, "field " + display(path) + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) fail(join(path, it.key()), "unknown field " + it.key() + " in " + display(path));
    for (const char* k : allowed)
      if (!j.contains(k)) fail(path, std::string("missing field ") + k + where(path));
    return j;
  }

  double number(const Json& j, const std::string& path, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_number()) fail(join(path, key), std::string("field ") + key + " must be a number");
    return v.get<double>();
  }

  long long integer(const Json& j, const std::string& path, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) fail(join(path, key), std::string("field ") + key + " must be an integer");
    return v.get<long long>();
  }

  std::uint64_t unsigned_integer(const Json& j, const std::string& path, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(join(path, key), std::string("field ") + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const Json& j, const std::string& path, const char* key) const {
    const auto& v = j.at(key);
    if (!v.is_string()) fail(join(path, key), std::string("field ") + key + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const Json& j, const std::string& path, const char* key) const {
    const auto& v = j.at(key);
    const auto p = join(path, key);
    if (!v.is_array()) fail(p, std::string("field ") + key + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(p + "/" + std::to_string(i), std::string("field ") + key + " must hold numbers");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "/" + key;
  }

 private:
  static std::string display(const std::string& path) { return path.empty() ? "<root>" : path; }
  static std::string where(const std::string& path) { return path.empty() ? "" : " in " + path; }

  std::string source_;
  const LineIndex& lines_;
};

inline UnitState parse_state(const SchemaReader& r, const Json& j, const std::string& path) {
  const auto s = r.string(j, path, "initial_state");
  if (s == "on") return UnitState::on;
  if (s == "off") return UnitState::off;
  r.fail(SchemaReader::join(path, "initial_state"), "field initial_state must be \"on\" or \"off\"");
}

// Locates the first unit field mentioned in a validation message.
inline std::string blamed_field(const std::string& path, const std::string& message) {
  static const char* const fields[] = {"rated_power",    "eer",           "thermal_resistance",    "thermal_capacity",
                                       "initial_theta",  "theta_min",     "theta_set",             "theta_max",
                                       "min_up_periods", "min_down_periods", "initial_dwell_periods", "markov"};
  std::size_t best = std::string::npos;
  std::string field;
  for (const char* f : fields) {
    const auto at = message.find(f);
    if (at < best) {
      best = at;
      field = f;
    }
  }
  return field.empty() ? path : path + "/" + field;
}

}  // namespace io_detail

inline Scenario scenario_from_json_text(const std::string& text, const std::string& source = "<scenario>") {
  using io_detail::Json;
  io_detail::LineIndex lines(text);
  io_detail::SchemaReader r(source, lines);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }

  Scenario s;
  r.object(doc, "", {"horizon", "forecast", "prices", "beta", "mc_samples", "master_seed", "units"});

  const auto& h = r.object(doc.at("horizon"), "horizon", {"periods", "dt", "start_clock_time"});
  s.horizon.periods = static_cast<int>(r.integer(h, "horizon", "periods"));
  s.horizon.dt = r.number(h, "horizon", "dt");
  s.horizon.start_clock_time = r.number(h, "horizon", "start_clock_time");

  const auto& f = r.object(doc.at("forecast"), "forecast", {"theta_out_pre", "epsilon", "norm_kind"});
  s.forecast.theta_out_pre = r.numbers(f, "forecast", "theta_out_pre");
  s.forecast.epsilon = r.number(f, "forecast", "epsilon");
  try {
    s.forecast.norm_kind = parse_norm_kind(r.string(f, "forecast", "norm_kind"));
  } catch (const ConfigError& e) {
    r.fail("forecast/norm_kind", e.what());
  }

  const auto& p = r.object(doc.at("prices"), "prices", {"price"});
  s.prices.price = r.numbers(p, "prices", "price");

  s.beta = r.number(doc, "", "beta");
  s.mc_samples = static_cast<int>(r.integer(doc, "", "mc_samples"));
  s.master_seed = r.unsigned_integer(doc, "", "master_seed");

  const auto& units = doc.at("units");
  if (!units.is_array()) r.fail("units", "field units must be an array");
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto path = "units/" + std::to_string(i);
    const auto& j = r.object(units[i], path,
                             {"id", "rated_power", "eer", "thermal_resistance", "thermal_capacity", "theta_set",
                              "theta_min", "theta_max", "min_up_periods", "min_down_periods", "markov",
                              "initial_state", "initial_dwell_periods", "initial_theta"});
    AcUnit u;
    u.id = static_cast<int>(r.integer(j, path, "id"));
    u.rated_power = r.number(j, path, "rated_power");
    u.eer = r.number(j, path, "eer");
    u.thermal_resistance = r.number(j, path, "thermal_resistance");
    u.thermal_capacity = r.number(j, path, "thermal_capacity");
    u.theta_set = r.number(j, path, "theta_set");
    u.theta_min = r.number(j, path, "theta_min");
    u.theta_max = r.number(j, path, "theta_max");
    u.min_up_periods = static_cast<int>(r.integer(j, path, "min_up_periods"));
    u.min_down_periods = static_cast<int>(r.integer(j, path, "min_down_periods"));
    const auto mpath = path + "/markov";
    const auto& m = r.object(j.at("markov"), mpath, {"a", "b", "c", "d"});
    u.markov = {r.number(m, mpath, "a"), r.number(m, mpath, "b"), r.number(m, mpath, "c"), r.number(m, mpath, "d")};
    u.initial_state = io_detail::parse_state(r, j, path);
    u.initial_dwell_periods = static_cast<int>(r.integer(j, path, "initial_dwell_periods"));
    u.initial_theta = r.number(j, path, "initial_theta");
    try {
      validate(u);
    } catch (const ConfigError& e) {
      r.fail(io_detail::blamed_field(path, e.what()), e.what());
    }
    s.units.push_back(u);
  }

  try {
    validate(s);
  } catch (const ConfigError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return s;
}

inline std::string scenario_to_json_text(const Scenario& s) {
  using OJson = nlohmann::ordered_json;
  OJson doc;
  doc["horizon"] = {{"periods", s.horizon.periods},
                    {"dt", s.horizon.dt},
                    {"start_clock_time", s.horizon.start_clock_time}};
  doc["forecast"] = {{"theta_out_pre", s.forecast.theta_out_pre},
                     {"epsilon", s.forecast.epsilon},
                     {"norm_kind", to_string(s.forecast.norm_kind)}};
  doc["prices"] = {{"price", s.prices.price}};
  doc["beta"] = s.beta;
  doc["mc_samples"] = s.mc_samples;
  doc["master_seed"] = s.master_seed;
  OJson units = OJson::array();
  for (const auto& u : s.units) {
    OJson j;
    j["id"] = u.id;
    j["rated_power"] = u.rated_power;
    j["eer"] = u.eer;
    j["thermal_resistance"] = u.thermal_resistance;
    j["thermal_capacity"] = u.thermal_capacity;
    j["theta_set"] = u.theta_set;
    j["theta_min"] = u.theta_min;
    j["theta_max"] = u.theta_max;
    j["min_up_periods"] = u.min_up_periods;
    j["min_down_periods"] = u.min_down_periods;
    j["markov"] = {{"a", u.markov.a}, {"b", u.markov.b}, {"c", u.markov.c}, {"d", u.markov.d}};
    j["initial_state"] = to_string(u.initial_state);
    j["initial_dwell_periods"] = u.initial_dwell_periods;
    j["initial_theta"] = u.initial_theta;
    units.push_back(std::move(j));
  }
  doc["units"] = std::move(units);
  return doc.dump(2) + "\n";
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str(), path.string());
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scenario file " + path.string());
  out << scenario_to_json_text(s);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace acdr

#include "config.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "relaxor/error.hpp"

namespace relaxor::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

std::vector<ConfigEntry> parse_config(const std::string& text) {
  std::vector<ConfigEntry> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    for (const auto& e : out) {
      if (e.key == key) {
        throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + ": duplicate key '" + key +
                                                  "' (first set on line " + std::to_string(e.line) + ")");
      }
    }
    out.push_back({key, value, lineno});
  }
  return out;
}

std::vector<ConfigEntry> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const char* to_string(Source s) {
  switch (s) {
    case Source::Default: return "default";
    case Source::Preset: return "seed";
    case Source::Config: return "config";
    case Source::Flag: return "flag";
  }
  return "?";
}

void RunManifest::set(const std::string& key, nlohmann::ordered_json value, Source src) {
  parameters[key] = {{"value", std::move(value)}, {"source", to_string(src)}};
}

void RunManifest::add_output(const std::string& role, const std::string& path) { outputs.emplace_back(role, path); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config_path.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(config_path);
  j["version"] = version;
  j["parameters"] = parameters;
  j["seeds"] = seeds;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& [role, path] : outputs) outs.push_back({{"role", role}, {"path", path}});
  j["outputs"] = outs;
  j["started"] = started;
  j["finished"] = finished;
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const std::time_t tt = system_clock::to_time_t(now);
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace relaxor::cli

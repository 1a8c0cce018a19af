#include "cidc/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cidc/params.hpp"

namespace cidc {

namespace {

[[noreturn]] void fail_at(const std::string& source, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line_no << ": " << what;
  throw std::invalid_argument(os.str());
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double parse_double(const std::string& v, const std::string& source, std::size_t line_no,
                    const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail_at(source, line_no, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& v, const std::string& source, std::size_t line_no,
                       const std::string& key) {
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail_at(source, line_no, "key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& source, std::size_t line_no,
                const std::string& key) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  fail_at(source, line_no, "key '" + key + "': expected on/off, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source_name) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t> seen;  // key -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) fail_at(source_name, line_no, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail_at(source_name, line_no, "empty key");
    if (!seen.emplace(key, line_no).second)
      fail_at(source_name, line_no, "duplicate key '" + key + "'");

    if (key == "lambda") {
      cfg.lambda = parse_double(value, source_name, line_no, key);
    } else if (key == "t_slot") {
      cfg.t_slot = parse_double(value, source_name, line_no, key);
    } else if (key == "t_difs") {
      cfg.t_difs = parse_double(value, source_name, line_no, key);
    } else if (key == "m") {
      cfg.m = static_cast<int>(parse_int(value, source_name, line_no, key));
    } else if (key == "cycles") {
      cfg.cycles = static_cast<int>(parse_int(value, source_name, line_no, key));
    } else if (key == "rounds") {
      cfg.rounds = static_cast<int>(parse_int(value, source_name, line_no, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value, source_name, line_no, key));
    } else if (key == "n") {
      cfg.n.clear();
      for (const std::string& v : split_list(value))
        cfg.n.push_back(static_cast<int>(parse_int(v, source_name, line_no, key)));
    } else if (key == "w") {
      cfg.w.clear();
      for (const std::string& v : split_list(value))
        cfg.w.push_back(static_cast<int>(parse_int(v, source_name, line_no, key)));
    } else if (key == "delta") {
      cfg.delta.clear();
      for (const std::string& v : split_list(value))
        cfg.delta.push_back(parse_double(v, source_name, line_no, key));
    } else if (key == "t_tx") {
      cfg.t_tx.clear();
      for (const std::string& v : split_list(value))
        cfg.t_tx.push_back(parse_double(v, source_name, line_no, key));
    } else if (key == "protocols") {
      cfg.protocols.clear();
      for (const std::string& v : split_list(value)) {
        if (v == "cidc") cfg.protocols.push_back(Protocol::cidc);
        else if (v == "dcf") cfg.protocols.push_back(Protocol::dcf);
        else fail_at(source_name, line_no, "key 'protocols': unknown protocol '" + v + "'");
      }
    } else if (key == "out") {
      if (value.empty()) fail_at(source_name, line_no, "key 'out': empty path");
      cfg.out = value;
    } else if (key == "analytics") {
      cfg.analytics = parse_bool(value, source_name, line_no, key);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(parse_int(value, source_name, line_no, key));
    } else if (key == "traces") {
      cfg.traces = parse_bool(value, source_name, line_no, key);
    } else {
      fail_at(source_name, line_no, "unknown key '" + key + "'");
    }
  }

  auto line_of = [&seen](const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? std::size_t{0} : it->second;
  };
  auto fail_key = [&](const std::string& key, const std::string& what) {
    fail_at(source_name, line_of(key), "key '" + key + "': " + what);
  };

  if (!(cfg.lambda > 0.0)) fail_key("lambda", "must be positive");
  if (!(cfg.t_slot > 0.0)) fail_key("t_slot", "must be positive");
  if (cfg.lambda * cfg.t_slot >= 1.0) fail_key("lambda", "lambda * t_slot must be below 1");
  if (cfg.t_difs < 0.0) fail_key("t_difs", "must not be negative");
  if (cfg.m < 1) fail_key("m", "must be at least 1");
  if (cfg.cycles < 1) fail_key("cycles", "must be at least 1");
  if (cfg.rounds < 1) fail_key("rounds", "must be at least 1");
  if (cfg.workers < 0) fail_key("workers", "must not be negative");
  if (cfg.n.empty()) fail_key("n", "empty sweep list");
  if (cfg.t_tx.empty()) fail_key("t_tx", "empty sweep list");
  if (cfg.protocols.empty()) fail_key("protocols", "empty sweep list");
  if (cfg.delta.empty()) fail_key("delta", "empty sweep list");
  const bool has_dcf =
      std::find(cfg.protocols.begin(), cfg.protocols.end(), Protocol::dcf) != cfg.protocols.end();
  if (has_dcf && cfg.w.empty()) fail_key("w", "empty sweep list");
  for (int v : cfg.n)
    if (v < 1) fail_key("n", "vehicle counts must be at least 1");
  for (int v : cfg.w)
    if (v < 1) fail_key("w", "windows must be at least 1");
  for (double v : cfg.delta)
    if (v < 0.0 || v > 100.0) fail_key("delta", "churn percent outside [0, 100]");
  for (double v : cfg.t_tx) {
    try {
      derive_k(v, cfg.t_difs, cfg.t_slot);
    } catch (const std::invalid_argument& e) {
      fail_key("t_tx", e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  return parse_config(is, path);
}

}  // namespace cidc

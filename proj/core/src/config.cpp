#include "bridgemt/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridgemt {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected number, got '" + v + "'");
  }
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value', got '" + line +
                                  "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_kv_text(buf.str());
}

void TrainConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (v <= 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive("d_h", d_h);
  positive("d_x", d_x);
  positive("d_w", d_w);
  positive("heads", heads);
  positive("enc_layers", enc_layers);
  positive("dec_layers", dec_layers);
  positive("lr", lr);
  positive("batch_size", batch_size);
  positive("max_steps", max_steps);
  positive("validation_interval", validation_interval);
  if (d_h % 2 != 0) throw std::invalid_argument("config: d_h must be even (bidirectional halves)");
  if (penalty_coeff < 0) throw std::invalid_argument("config: penalty_coeff must be >= 0");
  if (clip_norm < 0) throw std::invalid_argument("config: clip_norm must be >= 0");
  if (precision != "f32" && precision != "f64") {
    throw std::invalid_argument("config: precision must be f32 or f64, got '" + precision + "'");
  }
}

TrainConfig preset_config(const std::string& name) {
  TrainConfig c;
  if (name == "paper") {
    c.d_h = 512;
    c.d_x = 512;
    c.d_w = 1024;
    c.heads = 10;
    c.enc_layers = 2;
    c.dec_layers = 2;
    c.lr = 1.0;
    c.batch_size = 64;
  } else if (name == "desk") {
    c.d_h = 64;
    c.d_x = 64;
    c.d_w = 128;
    c.heads = 10;
    c.enc_layers = 2;
    c.dec_layers = 2;
    c.lr = 0.5;
    c.batch_size = 32;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
  }
  c.preset = name;
  return c;
}

TrainConfig make_config(const std::string& preset, const std::map<std::string, std::string>& overrides) {
  TrainConfig c = preset_config(preset.empty() ? "desk" : preset);
  for (const auto& [key, v] : overrides) {
    if (key == "d_h") c.d_h = to_int(key, v);
    else if (key == "d_x") c.d_x = to_int(key, v);
    else if (key == "d_w") c.d_w = to_int(key, v);
    else if (key == "heads" || key == "r") c.heads = to_int(key, v);
    else if (key == "enc_layers") c.enc_layers = to_int(key, v);
    else if (key == "dec_layers") c.dec_layers = to_int(key, v);
    else if (key == "d_a") c.d_a = to_int(key, v);
    else if (key == "lr") c.lr = to_double(key, v);
    else if (key == "batch_size") c.batch_size = to_int(key, v);
    else if (key == "max_steps") c.max_steps = to_int(key, v);
    else if (key == "validation_interval") c.validation_interval = to_int(key, v);
    else if (key == "penalty_coeff") c.penalty_coeff = to_double(key, v);
    else if (key == "clip_norm") c.clip_norm = to_double(key, v);
    else if (key == "seed") c.seed = static_cast<uint64_t>(std::stoull(v));
    else if (key == "precision") c.precision = v;
    else if (key == "vocab_max_size") c.vocab_max_size = to_int(key, v);
    else if (key == "vocab_min_freq") c.vocab_min_freq = to_int(key, v);
    else if (key == "dev_limit") c.dev_limit = to_int(key, v);
    else if (key == "preset") { /* handled by caller */ }
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  auto kv = parse_kv_file(path);
  std::string preset = "desk";
  if (auto it = kv.find("preset"); it != kv.end()) preset = it->second;
  return make_config(preset, kv);
}

std::map<std::string, std::string> config_to_map(const TrainConfig& c) {
  std::map<std::string, std::string> m;
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  m["d_h"] = std::to_string(c.d_h);
  m["d_x"] = std::to_string(c.d_x);
  m["d_w"] = std::to_string(c.d_w);
  m["heads"] = std::to_string(c.heads);
  m["enc_layers"] = std::to_string(c.enc_layers);
  m["dec_layers"] = std::to_string(c.dec_layers);
  m["d_a"] = std::to_string(c.d_a);
  m["lr"] = num(c.lr);
  m["batch_size"] = std::to_string(c.batch_size);
  m["max_steps"] = std::to_string(c.max_steps);
  m["validation_interval"] = std::to_string(c.validation_interval);
  m["penalty_coeff"] = num(c.penalty_coeff);
  m["clip_norm"] = num(c.clip_norm);
  m["seed"] = std::to_string(c.seed);
  m["precision"] = c.precision;
  m["preset"] = c.preset;
  m["vocab_max_size"] = std::to_string(c.vocab_max_size);
  m["vocab_min_freq"] = std::to_string(c.vocab_min_freq);
  m["dev_limit"] = std::to_string(c.dev_limit);
  return m;
}

}  // namespace bridgemt

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bridgemt {

/// Line-oriented `key = value` files: one pair per line, '#' starts a
/// comment, blank lines ignored. Later keys override earlier ones.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text);

/// Model and training hyperparameters. The "paper" preset carries the
/// published dimensions; "desk" is a scaled-down profile for CPU-sized
/// experiments on synthetic corpora.
struct TrainConfig {
  int d_h = 64;           // encoder/decoder hidden size (bidirectional halves are d_h/2)
  int d_x = 64;           // embedding size, shared by source and target sides
  int d_w = 128;          // inner width of the bridge MLP
  int heads = 10;         // attention heads r
  int enc_layers = 2;
  int dec_layers = 2;
  int d_a = 0;            // attention MLP width; 0 means d_h
  double lr = 0.5;
  int batch_size = 32;
  int max_steps = 1000;
  int validation_interval = 100;
  double penalty_coeff = 1.0;
  double clip_norm = 5.0;      // 0 disables clipping
  uint64_t seed = 1;
  std::string precision = "f32";  // f32 | f64
  std::string preset = "desk";
  int vocab_max_size = 50000;
  int vocab_min_freq = 1;
  int dev_limit = 0;  // max dev sentences scored per task; 0 = all

  int attention_dim() const { return d_a > 0 ? d_a : d_h; }
  void validate() const;
};

/// Returns the named preset ("paper" or "desk").
TrainConfig preset_config(const std::string& name);

/// Builds a config from an optional preset name and key=value overrides.
TrainConfig make_config(const std::string& preset, const std::map<std::string, std::string>& overrides);

TrainConfig load_config(const std::string& path);

/// Key=value echo used in checkpoint manifests and logs; keys are sorted.
std::map<std::string, std::string> config_to_map(const TrainConfig& c);

}  // namespace bridgemt

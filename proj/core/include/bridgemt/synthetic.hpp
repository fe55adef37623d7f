#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bridgemt {

/// Deterministic multi-parallel corpus generator. Pivot sentences are
/// integer sequences drawn from a Zipf-like distribution; each language
/// renders them through an invertible transform (token prefix renaming plus
/// an order permutation), so line i of every language file translates the
/// same pivot sentence and any pair is learnable by a finite procedure.
struct LanguageTransform {
  enum class Order { identity, reverse, rotate };
  std::string prefix;
  Order order = Order::identity;
  int rotate_by = 0;
};

struct SyntheticSpec {
  int languages = 4;       // named "a", "b", "c", ...
  int pivot_vocab = 60;    // P; tokens are 1..P
  int min_len = 3;
  int max_len = 9;
  int train_size = 2000;
  int dev_size = 200;
  int test_size = 200;
  uint64_t seed = 7;
  double zipf_exponent = 1.1;
  // Per-language override; languages without an entry get the default
  // schedule: a, b identity; c rotate-by-1; d reverse; later rotate-by-(i-2).
  std::map<std::string, LanguageTransform> transforms;

  std::vector<std::string> language_names() const;
  LanguageTransform transform_for(int index) const;
  void validate() const;
};

SyntheticSpec parse_synthetic_spec(const std::map<std::string, std::string>& kv);
SyntheticSpec load_synthetic_spec(const std::string& path);

/// Applies one language's rendering to a pivot sentence.
std::vector<std::string> render_sentence(const std::vector<int>& pivot, const LanguageTransform& t);

/// Writes {train,dev,test}.{lang}.txt under out_dir; byte-identical for a
/// fixed spec.
void generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace bridgemt

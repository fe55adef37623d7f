#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace bridgemt {

/// Token <-> id bijection for one language. Ids 0..3 are reserved:
/// pad=0, bos=1, eos=2, unk=3. Regular tokens start at id 4, ordered by
/// descending corpus frequency with lexicographic tie-break, so vocabulary
/// construction is deterministic across runs.
class Vocabulary {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kBos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kUnk = 3;

  Vocabulary();

  /// Builds from whitespace-tokenized sentences. max_size caps the total
  /// vocabulary size including the four reserved entries; tokens below
  /// min_freq or beyond the cap encode as unk.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, size_t max_size = 50000,
                          int min_freq = 1);

  int32_t id(const std::string& token) const;  // unk for unknown tokens
  const std::string& token(int32_t id) const;  // throws on out-of-range ids
  size_t size() const { return tokens_.size(); }

  std::vector<int32_t> encode(const std::vector<std::string>& tokens) const;
  /// Inverse of encode for regular tokens; reserved ids are skipped.
  std::vector<std::string> decode(const std::vector<int32_t>& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> ids_;
  void index();
};

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace bridgemt

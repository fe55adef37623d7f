#include "bridgemt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bridgemt {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(std::move(tok));
  return out;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>"} { index(); }

void Vocabulary::index() {
  ids_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = static_cast<int32_t>(i);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, size_t max_size, int min_freq) {
  // std::map keys are ordered, which gives the lexicographic tie-break for free.
  std::map<std::string, int64_t> freq;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++freq[tok];

  std::vector<std::pair<std::string, int64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  for (const auto& [tok, count] : ranked) {
    if (v.tokens_.size() >= max_size) break;
    if (count < min_freq) break;  // ranked by frequency, nothing later qualifies
    v.tokens_.push_back(tok);
  }
  v.index();
  return v;
}

int32_t Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("Vocabulary::token: id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int32_t>& ids) const {
  std::vector<std::string> out;
  for (int32_t i : ids) {
    if (i == kPad || i == kBos || i == kEos) continue;
    out.push_back(token(i));
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("Vocabulary::save: cannot open " + path);
  for (size_t i = 4; i < tokens_.size(); ++i) os << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("Vocabulary::load: cannot open " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.tokens_.push_back(line);
  }
  v.index();
  return v;
}

}  // namespace bridgemt

#include "bridgemt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace bridgemt {

ParallelBatch encode_batch(const std::vector<TokenPair>& pairs, const Vocabulary& src_vocab,
                           const Vocabulary& tgt_vocab, const std::string& src_lang, const std::string& tgt_lang) {
  if (pairs.empty()) throw std::invalid_argument("encode_batch: empty batch");
  ParallelBatch b;
  b.batch = static_cast<int>(pairs.size());
  b.src_lang = src_lang;
  b.tgt_lang = tgt_lang;
  size_t max_src = 0, max_tgt = 0;
  for (const auto& [s, t] : pairs) {
    max_src = std::max(max_src, s.size() + 1);  // + eos
    max_tgt = std::max(max_tgt, t.size() + 2);  // + bos, eos
  }
  b.src_len = static_cast<int>(max_src);
  b.tgt_len = static_cast<int>(max_tgt);
  b.src_ids.assign(static_cast<size_t>(b.batch) * b.src_len, Vocabulary::kPad);
  b.tgt_ids.assign(static_cast<size_t>(b.batch) * b.tgt_len, Vocabulary::kPad);
  b.src_mask.assign(b.src_ids.size(), 0);
  b.tgt_mask.assign(b.tgt_ids.size(), 0);

  for (int r = 0; r < b.batch; ++r) {
    const auto& [s, t] = pairs[r];
    size_t col = 0;
    for (const auto& tok : s) b.src_ids[static_cast<size_t>(r) * b.src_len + col++] = src_vocab.id(tok);
    b.src_ids[static_cast<size_t>(r) * b.src_len + col++] = Vocabulary::kEos;
    for (size_t j = 0; j < col; ++j) b.src_mask[static_cast<size_t>(r) * b.src_len + j] = 1;

    col = 0;
    b.tgt_ids[static_cast<size_t>(r) * b.tgt_len + col++] = Vocabulary::kBos;
    for (const auto& tok : t) b.tgt_ids[static_cast<size_t>(r) * b.tgt_len + col++] = tgt_vocab.id(tok);
    b.tgt_ids[static_cast<size_t>(r) * b.tgt_len + col++] = Vocabulary::kEos;
    for (size_t j = 0; j < col; ++j) b.tgt_mask[static_cast<size_t>(r) * b.tgt_len + j] = 1;
  }
  return b;
}

std::vector<std::vector<std::string>> load_sentences(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open corpus file " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = split_tokens(line);
    if (toks.empty()) {
      throw std::runtime_error("blank line " + std::to_string(lineno) + " in corpus file " + path);
    }
    out.push_back(std::move(toks));
  }
  return out;
}

std::shared_ptr<ParallelCorpus> load_parallel(const std::string& dir, const std::string& src_lang,
                                              const std::string& tgt_lang, const std::string& split) {
  const std::string src_path = dir + "/" + split + "." + src_lang + ".txt";
  const std::string tgt_path = dir + "/" + split + "." + tgt_lang + ".txt";
  auto corpus = std::make_shared<ParallelCorpus>();
  corpus->src = load_sentences(src_path);
  corpus->tgt = load_sentences(tgt_path);
  if (corpus->src.size() != corpus->tgt.size()) {
    throw std::runtime_error("line count mismatch: " + src_path + " has " + std::to_string(corpus->src.size()) +
                             " lines, " + tgt_path + " has " + std::to_string(corpus->tgt.size()));
  }
  return corpus;
}

BatchIterator::BatchIterator(std::shared_ptr<const ParallelCorpus> corpus, Rng rng)
    : corpus_(std::move(corpus)), rng_(rng) {
  if (!corpus_ || corpus_->size() == 0) throw std::invalid_argument("BatchIterator: empty corpus");
  order_.resize(corpus_->size());
  std::iota(order_.begin(), order_.end(), size_t(0));
  reshuffle();
}

void BatchIterator::reshuffle() {
  shuffle(order_, rng_);
  pos_ = 0;
}

std::vector<TokenPair> BatchIterator::next(int batch_size) {
  if (pos_ >= order_.size()) reshuffle();
  std::vector<TokenPair> out;
  out.reserve(batch_size);
  while (static_cast<int>(out.size()) < batch_size && pos_ < order_.size()) {
    const size_t i = order_[pos_++];
    out.emplace_back(corpus_->src[i], corpus_->tgt[i]);
  }
  return out;
}

}  // namespace bridgemt

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bridgemt/rng.hpp"
#include "bridgemt/vocab.hpp"

namespace bridgemt {

/// Line-aligned tokenized sentence pairs for one directed language pair.
struct ParallelCorpus {
  std::vector<std::vector<std::string>> src;
  std::vector<std::vector<std::string>> tgt;
  size_t size() const { return src.size(); }
};

/// Padded id matrices for one training batch. Rows are sentences. Source
/// rows end with eos; target rows are bos ... eos; pad=0 fills the rest and
/// masks are true exactly on non-pad positions.
struct ParallelBatch {
  std::vector<int32_t> src_ids, tgt_ids;   // row-major [batch x len]
  std::vector<uint8_t> src_mask, tgt_mask;
  int batch = 0, src_len = 0, tgt_len = 0;
  std::string src_lang, tgt_lang;
};

using TokenPair = std::pair<std::vector<std::string>, std::vector<std::string>>;

ParallelBatch encode_batch(const std::vector<TokenPair>& pairs, const Vocabulary& src_vocab,
                           const Vocabulary& tgt_vocab, const std::string& src_lang, const std::string& tgt_lang);

/// Loads {split}.{src}.txt / {split}.{tgt}.txt from dir. Both files must
/// exist, have equal line counts and no blank lines.
std::shared_ptr<ParallelCorpus> load_parallel(const std::string& dir, const std::string& src_lang,
                                              const std::string& tgt_lang, const std::string& split);

std::vector<std::vector<std::string>> load_sentences(const std::string& path);

/// Sequential batch supplier over a corpus, reshuffled at every epoch
/// boundary with its own seeded stream. The final short batch of an epoch
/// is emitted as-is.
class BatchIterator {
 public:
  BatchIterator(std::shared_ptr<const ParallelCorpus> corpus, Rng rng);

  std::vector<TokenPair> next(int batch_size);

 private:
  std::shared_ptr<const ParallelCorpus> corpus_;
  std::vector<size_t> order_;
  size_t pos_ = 0;
  Rng rng_;
  void reshuffle();
};

}  // namespace bridgemt

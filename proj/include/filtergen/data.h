// Copyright 2026 The filtergen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Corpus ingestion: vocabulary, token sequences, corpora and synthetic
// Markov sources whose sequence probabilities are known exactly.

#ifndef FILTERGEN_DATA_H_
#define FILTERGEN_DATA_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "filtergen/common.h"
#include "json.hpp"

namespace filtergen {

using TokenId = int32_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kPad = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kNumReserved = 4;

inline constexpr int kDefaultMaxLen = 64;

// Token <-> id bijection. Ids 0..3 are the reserved BOS/EOS/PAD/UNK
// symbols; corpus tokens start at kNumReserved.
class Vocab {
 public:
  Vocab();
  // `content_tokens` must be distinct and must not spell a reserved symbol.
  explicit Vocab(std::vector<std::string> content_tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int content_size() const { return size() - kNumReserved; }

  const std::string& token(TokenId id) const;
  // UNK for tokens outside the vocabulary.
  TokenId id_of(const std::string& token) const;
  bool contains(const std::string& token) const;
  bool valid_id(TokenId id) const { return id >= 0 && id < size(); }

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::string> content_tokens() const;

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

  static const std::vector<std::string>& reserved_tokens();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

using VocabPtr = std::shared_ptr<const Vocab>;

// A non-empty list of token ids.
class Sequence {
 public:
  explicit Sequence(std::vector<TokenId> ids);
  Sequence(std::initializer_list<TokenId> ids)
      : Sequence(std::vector<TokenId>(ids)) {}

  int size() const { return static_cast<int>(ids_.size()); }
  TokenId operator[](int i) const { return ids_[i]; }
  const std::vector<TokenId>& ids() const { return ids_; }
  std::span<const TokenId> span() const { return ids_; }

  // Throws InputError if an id is not valid under `vocab` or the length
  // exceeds `max_len`.
  void validate(const Vocab& vocab, int max_len) const;

  bool operator==(const Sequence& o) const { return ids_ == o.ids_; }
  bool operator<(const Sequence& o) const { return ids_ < o.ids_; }

 private:
  std::vector<TokenId> ids_;
};

enum class Split { kTrain, kValid, kTest, kUnspecified };

const char* split_name(Split s);

struct Corpus {
  VocabPtr vocab;
  std::vector<Sequence> sequences;
  Split split = Split::kUnspecified;

  size_t size() const { return sequences.size(); }
  bool empty() const { return sequences.empty(); }
};

// Whitespace-tokenized lines -> vocabulary of the `max_size` most frequent
// tokens. Ties keep first-occurrence order.
Vocab build_vocab(std::span<const std::string> lines, int max_size);

Sequence encode(const std::string& line, const Vocab& vocab,
                int max_len = kDefaultMaxLen);
std::string decode(const Sequence& seq, const Vocab& vocab);

std::vector<std::string> split_whitespace(const std::string& line);

// File I/O. Corpus files hold one sentence per line, tokens separated by
// spaces. Blank lines are skipped.
std::vector<std::string> read_lines(const std::string& path);
Corpus read_corpus(const std::string& path, VocabPtr vocab,
                   int max_len = kDefaultMaxLen,
                   Split split = Split::kUnspecified);
void write_corpus(const std::string& path, const Corpus& corpus);
Vocab read_vocab(const std::string& path);
void write_vocab(const std::string& path, const Vocab& vocab);

// Contiguous split into (head, tail) with `tail_size` trailing sequences.
std::pair<Corpus, Corpus> split_tail(const Corpus& corpus, size_t tail_size);

struct CorpusSplits {
  Corpus train, valid, test;
};
// Contiguous train/valid/test split; the three parts are disjoint and cover
// the input.
CorpusSplits split_corpus(const Corpus& corpus, double valid_fraction,
                          double test_fraction);

// First-order Markov chain over the content tokens of a vocabulary, emitting
// sequences of a fixed length. Index i of `initial` / `transition` refers to
// token id kNumReserved + i.
struct MarkovSource {
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;
  int length = 1;
  std::vector<std::string> tokens;  // defaults to "a", "b", ...

  int num_states() const { return static_cast<int>(initial.size()); }

  // Throws InputError unless rows are stochastic within 1e-9.
  void validate() const;
  Vocab make_vocab() const;

  nlohmann::json to_json() const;
  static MarkovSource from_json(const nlohmann::json& j);
};

MarkovSource read_markov_source(const std::string& path);

// n i.i.d. sequences of length source.length.
Corpus synth_markov(const MarkovSource& source, size_t n, uint64_t seed,
                    VocabPtr vocab = nullptr);
Sequence sample_markov(const MarkovSource& source, Rng& rng);

// initial[x_1] * prod_t transition[x_{t-1}][x_t]; 0 for sequences of the
// wrong length or containing non-content ids.
double exact_prob(const MarkovSource& source, const Sequence& seq);

}  // namespace filtergen

#endif  // FILTERGEN_DATA_H_

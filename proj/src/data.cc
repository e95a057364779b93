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

#include "filtergen/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace filtergen {

using nlohmann::json;

const std::vector<std::string>& Vocab::reserved_tokens() {
  static const std::vector<std::string> kReserved = {"<bos>", "<eos>", "<pad>",
                                                     "<unk>"};
  return kReserved;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> content_tokens) {
  tokens_ = reserved_tokens();
  tokens_.reserve(kNumReserved + content_tokens.size());
  for (auto& t : content_tokens) tokens_.push_back(std::move(t));
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw InputError("Vocab: empty token");
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw InputError("Vocab: duplicate or reserved token '" + tokens_[i] +
                       "'");
    }
  }
}

const std::string& Vocab::token(TokenId id) const {
  if (!valid_id(id)) {
    throw InputError("Vocab: id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

TokenId Vocab::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

std::vector<std::string> Vocab::content_tokens() const {
  return {tokens_.begin() + kNumReserved, tokens_.end()};
}

json Vocab::to_json() const { return json{{"tokens", content_tokens()}}; }

Vocab Vocab::from_json(const json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw InputError("vocab JSON must be an object with a 'tokens' array");
  }
  return Vocab(j["tokens"].get<std::vector<std::string>>());
}

Sequence::Sequence(std::vector<TokenId> ids) : ids_(std::move(ids)) {
  if (ids_.empty()) throw InputError("Sequence: length must be >= 1");
}

void Sequence::validate(const Vocab& vocab, int max_len) const {
  if (size() > max_len) {
    throw InputError("Sequence: length " + std::to_string(size()) +
                     " exceeds max " + std::to_string(max_len));
  }
  for (TokenId id : ids_) {
    if (!vocab.valid_id(id)) {
      throw InputError("Sequence: invalid id " + std::to_string(id));
    }
  }
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
    case Split::kUnspecified:
      break;
  }
  return "unspecified";
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

Vocab build_vocab(std::span<const std::string> lines, int max_size) {
  if (max_size < 0) throw InputError("build_vocab: negative max_size");
  struct Entry {
    size_t count = 0;
    size_t first = 0;
  };
  std::unordered_map<std::string, Entry> stats;
  std::vector<std::string> order;
  bool any = false;
  for (const auto& line : lines) {
    for (auto& tok : split_whitespace(line)) {
      any = true;
      auto [it, inserted] = stats.try_emplace(tok, Entry{0, order.size()});
      if (inserted) order.push_back(tok);
      ++it->second.count;
    }
  }
  if (!any) throw InputError("build_vocab: no non-empty line");

  const auto& reserved = Vocab::reserved_tokens();
  std::vector<std::string> candidates;
  for (auto& tok : order) {
    if (std::find(reserved.begin(), reserved.end(), tok) == reserved.end()) {
      candidates.push_back(tok);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const std::string& a, const std::string& b) {
                     return stats[a].count > stats[b].count;
                   });
  if (candidates.size() > static_cast<size_t>(max_size)) {
    candidates.resize(max_size);
  }
  return Vocab(std::move(candidates));
}

Sequence encode(const std::string& line, const Vocab& vocab, int max_len) {
  std::vector<TokenId> ids;
  for (const auto& tok : split_whitespace(line)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(vocab.id_of(tok));
  }
  return Sequence(std::move(ids));
}

std::string decode(const Sequence& seq, const Vocab& vocab) {
  std::string out;
  for (int i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(seq[i]);
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Corpus read_corpus(const std::string& path, VocabPtr vocab, int max_len,
                   Split split) {
  Corpus corpus{std::move(vocab), {}, split};
  for (const auto& line : read_lines(path)) {
    if (split_whitespace(line).empty()) continue;
    corpus.sequences.push_back(encode(line, *corpus.vocab, max_len));
  }
  if (corpus.empty()) throw InputError("corpus '" + path + "' is empty");
  return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (const auto& seq : corpus.sequences) {
    out << decode(seq, *corpus.vocab) << '\n';
  }
}

Vocab read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return Vocab::from_json(json::parse(in));
}

void write_vocab(const std::string& path, const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << vocab.to_json().dump(2) << '\n';
}

std::pair<Corpus, Corpus> split_tail(const Corpus& corpus, size_t tail_size) {
  tail_size = std::min(tail_size, corpus.size());
  const auto cut = corpus.sequences.end() - static_cast<long>(tail_size);
  Corpus head{corpus.vocab, {corpus.sequences.begin(), cut}, corpus.split};
  Corpus tail{corpus.vocab, {cut, corpus.sequences.end()}, corpus.split};
  return {std::move(head), std::move(tail)};
}

CorpusSplits split_corpus(const Corpus& corpus, double valid_fraction,
                          double test_fraction) {
  if (valid_fraction < 0 || test_fraction < 0 ||
      valid_fraction + test_fraction >= 1.0) {
    throw InputError("split_corpus: fractions must be >= 0 and sum below 1");
  }
  const size_t n = corpus.size();
  const auto n_test = static_cast<size_t>(std::floor(n * test_fraction));
  const auto n_valid = static_cast<size_t>(std::floor(n * valid_fraction));
  auto [rest, test] = split_tail(corpus, n_test);
  auto [train, valid] = split_tail(rest, n_valid);
  train.split = Split::kTrain;
  valid.split = Split::kValid;
  test.split = Split::kTest;
  return {std::move(train), std::move(valid), std::move(test)};
}

void MarkovSource::validate() const {
  const size_t k = initial.size();
  if (k == 0) throw InputError("MarkovSource: empty state space");
  if (length < 1) throw InputError("MarkovSource: length must be >= 1");
  if (!tokens.empty() && tokens.size() != k) {
    throw InputError("MarkovSource: token list does not match state count");
  }
  auto check_row = [](const std::vector<double>& row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw InputError(std::string("MarkovSource: negative or non-finite "
                                     "entry in ") + what);
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InputError(std::string("MarkovSource: ") + what +
                       " does not sum to 1");
    }
  };
  check_row(initial, "initial");
  if (transition.size() != k) {
    throw InputError("MarkovSource: transition must be square");
  }
  for (const auto& row : transition) {
    if (row.size() != k) {
      throw InputError("MarkovSource: transition must be square");
    }
    check_row(row, "transition row");
  }
}

Vocab MarkovSource::make_vocab() const {
  if (!tokens.empty()) return Vocab(tokens);
  std::vector<std::string> names;
  for (int i = 0; i < num_states(); ++i) {
    names.push_back(i < 26 ? std::string(1, static_cast<char>('a' + i))
                           : "s" + std::to_string(i));
  }
  return Vocab(std::move(names));
}

json MarkovSource::to_json() const {
  json j{{"initial", initial}, {"transition", transition}, {"length", length}};
  if (!tokens.empty()) j["tokens"] = tokens;
  return j;
}

MarkovSource MarkovSource::from_json(const json& j) {
  if (!j.is_object()) throw InputError("MarkovSource JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "initial" && key != "transition" && key != "length" &&
        key != "tokens") {
      throw InputError("MarkovSource JSON: unknown key '" + key + "'");
    }
  }
  MarkovSource s;
  try {
    s.initial = j.at("initial").get<std::vector<double>>();
    s.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    s.length = j.at("length").get<int>();
    if (j.contains("tokens")) {
      s.tokens = j["tokens"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("MarkovSource JSON: ") + e.what());
  }
  s.validate();
  return s;
}

MarkovSource read_markov_source(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return MarkovSource::from_json(json::parse(in));
}

Sequence sample_markov(const MarkovSource& source, Rng& rng) {
  std::vector<TokenId> ids;
  ids.reserve(source.length);
  size_t state = rng.categorical(source.initial);
  ids.push_back(static_cast<TokenId>(state) + kNumReserved);
  for (int t = 1; t < source.length; ++t) {
    state = rng.categorical(source.transition[state]);
    ids.push_back(static_cast<TokenId>(state) + kNumReserved);
  }
  return Sequence(std::move(ids));
}

Corpus synth_markov(const MarkovSource& source, size_t n, uint64_t seed,
                    VocabPtr vocab) {
  source.validate();
  if (!vocab) vocab = std::make_shared<const Vocab>(source.make_vocab());
  if (vocab->content_size() != source.num_states()) {
    throw InputError("synth_markov: vocab does not match source states");
  }
  Rng rng(seed);
  Corpus corpus{std::move(vocab), {}, Split::kUnspecified};
  corpus.sequences.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    corpus.sequences.push_back(sample_markov(source, rng));
  }
  return corpus;
}

double exact_prob(const MarkovSource& source, const Sequence& seq) {
  if (seq.size() != source.length) return 0.0;
  auto state_of = [&](TokenId id) -> int {
    const int s = id - kNumReserved;
    return (s >= 0 && s < source.num_states()) ? s : -1;
  };
  int prev = state_of(seq[0]);
  if (prev < 0) return 0.0;
  double p = source.initial[prev];
  for (int t = 1; t < seq.size(); ++t) {
    const int cur = state_of(seq[t]);
    if (cur < 0) return 0.0;
    p *= source.transition[prev][cur];
    prev = cur;
  }
  return p;
}

}  // namespace filtergen

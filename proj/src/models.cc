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

#include "filtergen/models.h"

#include <fstream>

namespace filtergen {

using nlohmann::json;

LengthMode GenConfig::mode() const {
  return kind == "neural" ? neural.mode : ngram.mode;
}

json GenConfig::to_json() const {
  json j = kind == "neural" ? neural.to_json() : ngram.to_json();
  j["kind"] = kind;
  j["vocab_size"] = vocab_size;
  return j;
}

GenConfig GenConfig::from_json(const json& j) {
  if (!j.is_object()) throw InputError("generator config must be an object");
  GenConfig c;
  c.kind = j.value("kind", "ngram");
  json rest = j;
  rest.erase("kind");
  if (rest.contains("vocab_size")) {
    c.vocab_size = rest["vocab_size"].get<int>();
    rest.erase("vocab_size");
    if (c.vocab_size < 1) throw InputError("vocab_size must be >= 1");
  }
  if (c.kind == "ngram") {
    c.ngram = NGramConfig::from_json(rest);
  } else if (c.kind == "neural") {
    c.neural = NeuralLMConfig::from_json(rest);
  } else {
    throw InputError("generator kind must be 'ngram' or 'neural', got '" +
                     c.kind + "'");
  }
  return c;
}

std::shared_ptr<GenModel> train_mle(const Corpus& train, const Corpus& valid,
                                    const GenConfig& config, uint64_t seed) {
  if (train.empty()) throw InputError("train_mle: empty corpus");
  if (!valid.empty() && !(*valid.vocab == *train.vocab)) {
    throw InputError("train_mle: train and valid vocabularies differ");
  }
  if (config.kind == "neural") {
    if (valid.empty()) {
      const size_t hold = std::max<size_t>(1, train.size() / 10);
      if (hold >= train.size()) {
        throw InputError("train_mle: too little data for a validation split");
      }
      auto [head, tail] = split_tail(train, hold);
      return std::make_shared<NeuralLM>(
          NeuralLM::train(head, tail, config.neural, seed));
    }
    return std::make_shared<NeuralLM>(
        NeuralLM::train(train, valid, config.neural, seed));
  }
  return std::make_shared<NGramLM>(NGramLM::train(train, config.ngram));
}

GenConfig gen_config_of(const GenModel& model) {
  GenConfig c;
  if (model.kind() == "ngram" || model.kind() == "neural") {
    json j = model.config_json();
    j.erase("length");
    j["kind"] = model.kind();
    c = GenConfig::from_json(j);
  }
  if (model.mode() == LengthMode::kFixed) {
    c.ngram.mode = c.neural.mode = LengthMode::kFixed;
    c.ngram.max_len = c.neural.max_len = model.length();
  }
  return c;
}

json gen_checkpoint(const GenModel& model) {
  return {{"format_version", kCheckpointVersion},
          {"kind", model.kind()},
          {"vocab", model.vocab().to_json()},
          {"config", model.config_json()},
          {"params", model.params_json()}};
}

std::shared_ptr<GenModel> gen_from_checkpoint(const json& j) {
  if (!j.is_object() || j.value("format_version", 0) != kCheckpointVersion) {
    throw InputError("unsupported checkpoint format");
  }
  auto vocab = std::make_shared<const Vocab>(Vocab::from_json(j.at("vocab")));
  const std::string kind = j.at("kind").get<std::string>();
  const json& config = j.at("config");
  const json& params = j.at("params");
  if (kind == "ngram") {
    return std::make_shared<NGramLM>(
        NGramLM::from_checkpoint(vocab, config, params));
  }
  if (kind == "neural") {
    return std::make_shared<NeuralLM>(
        NeuralLM::from_checkpoint(vocab, config, params));
  }
  if (kind == "markov") {
    MarkovSource s;
    s.length = config.at("length").get<int>();
    s.initial = params.at("initial").get<std::vector<double>>();
    const auto flat = params.at("transition").get<std::vector<double>>();
    const size_t k = s.initial.size();
    if (flat.size() != k * k) throw InputError("markov checkpoint: bad shape");
    for (size_t r = 0; r < k; ++r) {
      s.transition.emplace_back(flat.begin() + r * k,
                                flat.begin() + (r + 1) * k);
    }
    s.tokens = vocab->content_tokens();
    return std::make_shared<SourceModel>(std::move(s), vocab);
  }
  throw InputError("checkpoint kind '" + kind + "' is not a generator");
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void save_gen_model(const std::string& path, const GenModel& model) {
  save_json(path, gen_checkpoint(model));
}

std::shared_ptr<GenModel> load_gen_model(const std::string& path) {
  return gen_from_checkpoint(load_json(path));
}

void save_discriminator(const std::string& path, const TextCNN& disc) {
  save_json(path, disc.to_checkpoint());
}

std::shared_ptr<TextCNN> load_discriminator(const std::string& path) {
  return std::make_shared<TextCNN>(TextCNN::from_checkpoint(load_json(path)));
}

}  // namespace filtergen

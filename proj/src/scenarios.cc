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

#include "filtergen/scenarios.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace filtergen {

namespace detail {
const std::vector<std::pair<std::string, std::string>>& embedded_scenarios();
}  // namespace detail

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  require_keys(j,
               {"id", "description", "source", "generator", "discriminator",
                "c", "length_buckets"},
               "scenario");
  ScenarioSpec s;
  try {
    s.id = j.at("id").get<std::string>();
    s.description = j.value("description", "");
    s.source = MarkovSource::from_json(j.at("source"));

    json gen = j.at("generator");
    if (!gen.is_object()) throw InputError("scenario generator: not an object");
    if (gen.value("kind", "") == "markov") {
      require_keys(gen, {"kind", "source"}, "scenario generator");
      s.generator_source = MarkovSource::from_json(gen.at("source"));
    } else {
      if (gen.contains("train_samples")) {
        s.train_samples = gen["train_samples"].get<int>();
        gen.erase("train_samples");
      }
      s.generator = GenConfig::from_json(gen);
    }

    const json disc = j.value("discriminator", json{{"kind", "textcnn"}});
    if (!disc.is_object()) throw InputError("scenario discriminator: not an object");
    s.discriminator = disc.value("kind", "textcnn");
    if (s.discriminator == "textcnn") {
      json rest = disc;
      rest.erase("kind");
      if (rest.contains("real_samples")) {
        s.disc_real_samples = rest["real_samples"].get<int>();
        rest.erase("real_samples");
      }
      s.disc = TextCNNConfig::from_json(rest);
    } else if (s.discriminator == "optimal") {
      require_keys(disc, {"kind"}, "scenario discriminator");
    } else {
      throw InputError("scenario discriminator kind must be 'optimal' or "
                       "'textcnn'");
    }
    if (j.contains("c")) s.c_grid = j["c"].get<std::vector<double>>();
    s.length_buckets = j.value("length_buckets", 0);
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }

  if (s.generator_source) {
    if (s.generator_source->num_states() != s.source.num_states() ||
        s.generator_source->length != s.source.length) {
      throw InputError("scenario: generator source does not match the domain");
    }
  }
  if (s.train_samples < 1 || s.disc_real_samples < 2) {
    throw InputError("scenario: sample counts must be positive");
  }
  for (double c : s.c_grid) {
    if (!(c > 0.0 && c <= 1.0)) throw InputError("scenario: c not in (0, 1]");
  }
  if (s.length_buckets < 0 || s.length_buckets > s.source.length) {
    throw InputError("scenario: length_buckets must be in [0, length]");
  }
  // Scenario generators always emit exactly `length` content tokens.
  s.generator.ngram.mode = LengthMode::kFixed;
  s.generator.ngram.max_len = s.source.length;
  s.generator.neural.mode = LengthMode::kFixed;
  s.generator.neural.max_len = s.source.length;
  return s;
}

json ScenarioSpec::to_json() const {
  json j;
  j["id"] = id;
  j["description"] = description;
  j["source"] = source.to_json();
  if (generator_source) {
    j["generator"] = {{"kind", "markov"}, {"source", generator_source->to_json()}};
  } else {
    j["generator"] = generator.to_json();
    j["generator"]["train_samples"] = train_samples;
  }
  if (discriminator == "optimal") {
    j["discriminator"] = {{"kind", "optimal"}};
  } else {
    j["discriminator"] = disc.to_json();
    j["discriminator"]["kind"] = "textcnn";
    j["discriminator"]["real_samples"] = disc_real_samples;
  }
  j["c"] = c_grid;
  j["length_buckets"] = length_buckets;
  return j;
}

std::vector<std::string> bundled_scenario_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : detail::embedded_scenarios()) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const std::string& bundled_scenario_text(const std::string& id) {
  for (const auto& [name, text] : detail::embedded_scenarios()) {
    if (name == id) return text;
  }
  throw InputError("unknown scenario '" + id + "'");
}

ScenarioSpec load_scenario(const std::string& id_or_path) {
  for (const auto& [name, text] : detail::embedded_scenarios()) {
    if (name == id_or_path) return ScenarioSpec::from_json(json::parse(text));
  }
  std::ifstream in(id_or_path);
  if (!in) {
    throw InputError("'" + id_or_path +
                     "' is neither a bundled scenario nor a readable file");
  }
  try {
    return ScenarioSpec::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InputError("'" + id_or_path + "' is not valid JSON: " + e.what());
  }
}

Corpus Scenario::real_samples(size_t n, uint64_t seed) const {
  return synth_markov(spec.source, n, seed, vocab);
}

std::vector<double> Scenario::optimal_d() const {
  return optimal_discriminator(p_r, p_theta);
}

Corpus scenario_train_corpus(const ScenarioSpec& spec, VocabPtr vocab,
                             uint64_t seed) {
  if (spec.generator_source) return Corpus{vocab, {}, Split::kTrain};
  Corpus c = synth_markov(spec.source, spec.train_samples,
                          derive_seed(seed, "scenario-train"), vocab);
  c.split = Split::kTrain;
  return c;
}

GenModelPtr scenario_generator(const ScenarioSpec& spec, const Corpus& train,
                               VocabPtr vocab, uint64_t seed) {
  if (spec.generator_source) {
    MarkovSource g = *spec.generator_source;
    g.tokens = spec.source.tokens;
    return std::make_shared<SourceModel>(std::move(g), vocab);
  }
  return train_mle(train, Corpus{vocab, {}, Split::kValid}, spec.generator,
                   derive_seed(seed, "scenario-generator"));
}

Scenario assemble_scenario(const ScenarioSpec& spec, VocabPtr vocab,
                           GenModelPtr generator, Corpus generator_train) {
  if (!generator || !(generator->vocab() == *vocab) ||
      generator->mode() != LengthMode::kFixed ||
      generator->length() != spec.source.length) {
    throw InputError("scenario: generator does not match the scenario domain");
  }
  Scenario s;
  s.spec = spec;
  s.vocab = std::move(vocab);
  s.p_r = enumerate_distribution(spec.source, s.vocab);
  s.generator = std::move(generator);
  s.p_theta = enumerate_distribution(*s.generator);
  s.generator_train = std::move(generator_train);
  return s;
}

Scenario build_scenario(const ScenarioSpec& spec, uint64_t seed) {
  auto vocab = std::make_shared<const Vocab>(spec.source.make_vocab());
  Corpus train = scenario_train_corpus(spec, vocab, seed);
  auto gen = scenario_generator(spec, train, vocab, seed);
  return assemble_scenario(spec, vocab, std::move(gen), std::move(train));
}

ScenarioDiscriminator scenario_discriminator(const Scenario& s, uint64_t seed) {
  ScenarioDiscriminator out;
  if (s.spec.discriminator == "optimal") {
    out.table = s.optimal_d();
    out.disc = std::make_shared<TableDiscriminator>(s.p_r, out.table);
    return out;
  }
  const Corpus real = s.real_samples(s.spec.disc_real_samples,
                                     derive_seed(seed, "scenario-disc-real"));
  auto [cnn, report] = train_discriminator(real, *s.generator, s.spec.disc,
                                           derive_seed(seed, "scenario-disc"));
  auto shared = std::make_shared<TextCNN>(std::move(cnn));
  out.table = tabulate(*shared, s.p_r);
  out.disc = shared;
  out.report = std::move(report);
  return out;
}

}  // namespace filtergen

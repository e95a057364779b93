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

#include "filtergen/experiment.h"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace filtergen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid configuration:";
  for (const auto& e : errors) out += "\n  - " + e;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

// ---------------------------------------------------------------------------
// Configuration

json ExperimentConfig::to_json() const {
  json data;
  if (!scenario.empty()) {
    data = {{"test_samples", test_samples}, {"real_samples", real_samples}};
  } else {
    data = {{"train", train_path}, {"test", test_path}, {"max_len", max_len}};
    if (!valid_path.empty()) data["valid"] = valid_path;
  }
  json j = {{"seed", seed},
            {"data", data},
            {"filter",
             {{"c", c_grid},
              {"estimate", estimate.to_json()},
              {"max_attempts", max_attempts_per_sample}}},
            {"sweep",
             {{"temperatures", temperatures},
              {"metrics", metrics},
              {"samples", samples},
              {"bleu_order", bleu_order},
              {"embedding", embedding},
              {"embedding_dim", embedding_dim}}},
            {"out_dir", out_dir},
            {"workers", workers}};
  if (!scenario.empty()) j["scenario"] = scenario;
  if (generator) j["generator"] = generator->to_json();
  if (discriminator) j["discriminator"] = discriminator->to_json();
  if (classifier) j["sweep"]["classifier"] = classifier->to_json();
  return j;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("out_dir");
  return sha256_hex(j.dump()).substr(0, 16);
}

namespace {

// Reads optional keys of one JSON object, collecting every error.
class Section {
 public:
  Section(const json& j, std::string where, std::vector<std::string>& errors,
          std::initializer_list<const char*> allowed)
      : j_(j), where_(std::move(where)), errors_(errors) {
    if (!j_.is_object()) {
      errors_.push_back(where_ + " must be an object");
      return;
    }
    for (const auto& [key, _] : j_.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) errors_.push_back("unknown key '" + prefix() + key + "'");
    }
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  const json& at(const char* key) const { return j_.at(key); }

  template <typename T>
  bool get(const char* key, T& out) const {
    if (!has(key)) return false;
    try {
      out = j_.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      errors_.push_back(prefix() + key + ": wrong type");
      return false;
    }
  }

  // Parses a nested object with `parse`, recording InputError messages.
  template <typename F>
  void nested(const char* key, F parse) const {
    if (!has(key)) return;
    try {
      parse(j_.at(key));
    } catch (const InputError& e) {
      errors_.push_back(prefix() + key + ": " + e.what());
    } catch (const json::exception& e) {
      errors_.push_back(prefix() + key + ": " + e.what());
    }
  }

  void error(const std::string& msg) const { errors_.push_back(msg); }

 private:
  std::string prefix() const { return where_.empty() ? "" : where_ + "."; }

  const json& j_;
  std::string where_;
  std::vector<std::string>& errors_;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::string& base_dir) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  const Section top(j, "", errors,
                    {"seed", "scenario", "data", "generator", "discriminator",
                     "filter", "sweep", "out_dir", "workers"});
  if (!j.is_object()) throw ConfigError(errors);

  if (!top.has("seed")) {
    errors.push_back("seed required");
  } else if (!j["seed"].is_number_integer() || j["seed"].get<int64_t>() < 0) {
    errors.push_back("seed must be a non-negative integer");
  } else {
    c.seed = j["seed"].get<uint64_t>();
  }

  top.get("scenario", c.scenario);
  if (top.has("data")) {
    const Section data(j["data"], "data", errors,
                       {"train", "valid", "test", "max_len", "test_samples",
                        "real_samples"});
    data.get("train", c.train_path);
    data.get("valid", c.valid_path);
    data.get("test", c.test_path);
    data.get("max_len", c.max_len);
    data.get("test_samples", c.test_samples);
    data.get("real_samples", c.real_samples);
  }
  c.train_path = resolve(base_dir, c.train_path);
  c.valid_path = resolve(base_dir, c.valid_path);
  c.test_path = resolve(base_dir, c.test_path);
  if (c.scenario.empty() == c.train_path.empty()) {
    errors.push_back("exactly one of 'scenario' and 'data.train' is required");
  }
  if (!c.scenario.empty()) {
    try {
      const auto ids = bundled_scenario_ids();
      std::string ref = c.scenario;
      if (std::find(ids.begin(), ids.end(), ref) == ids.end()) {
        ref = resolve(base_dir, ref);
        c.scenario = ref;
      }
      load_scenario(ref);
    } catch (const std::exception& e) {
      errors.push_back(std::string("scenario: ") + e.what());
    }
  } else if (!c.train_path.empty()) {
    if (c.test_path.empty()) errors.push_back("data.test required");
    for (const auto* p : {&c.train_path, &c.valid_path, &c.test_path}) {
      if (!p->empty() && !fs::is_regular_file(*p)) {
        errors.push_back("file not found: " + *p);
      }
    }
  }
  if (c.max_len < 1) errors.push_back("data.max_len must be >= 1");
  if (c.test_samples < 2) errors.push_back("data.test_samples must be >= 2");
  if (c.real_samples < 2) errors.push_back("data.real_samples must be >= 2");

  top.nested("generator", [&](const json& g) {
    GenConfig gen = GenConfig::from_json(g);
    if (!g.contains("max_len")) {
      gen.ngram.max_len = c.max_len;
      gen.neural.max_len = c.max_len;
    }
    c.generator = gen;
  });
  top.nested("discriminator", [&](const json& d) {
    c.discriminator = TextCNNConfig::from_json(d);
  });

  if (top.has("filter")) {
    const Section filter(j["filter"], "filter", errors,
                         {"c", "estimate", "max_attempts"});
    filter.get("c", c.c_grid);
    filter.nested("estimate", [&](const json& e) {
      c.estimate = EstimateConfig::from_json(e);
    });
    filter.get("max_attempts", c.max_attempts_per_sample);
  }
  for (double v : c.c_grid) {
    if (!(v > 0.0 && v <= 1.0)) errors.push_back("c must be in (0, 1]");
  }
  if (c.max_attempts_per_sample < 1) {
    errors.push_back("filter.max_attempts must be >= 1");
  }

  if (top.has("sweep")) {
    const Section sweep(j["sweep"], "sweep", errors,
                        {"temperatures", "metrics", "samples", "bleu_order",
                         "embedding", "embedding_dim", "classifier"});
    sweep.get("temperatures", c.temperatures);
    sweep.get("metrics", c.metrics);
    sweep.get("samples", c.samples);
    sweep.get("bleu_order", c.bleu_order);
    sweep.get("embedding", c.embedding);
    sweep.get("embedding_dim", c.embedding_dim);
    sweep.nested("classifier", [&](const json& d) {
      c.classifier = TextCNNConfig::from_json(d);
    });
  }
  if (c.temperatures.empty()) errors.push_back("sweep.temperatures is empty");
  for (double t : c.temperatures) {
    if (!(t > 0.0)) {
      errors.push_back("temperature must be > 0");
      break;
    }
  }
  for (const auto& m : c.metrics) {
    const auto& names = all_metric_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      errors.push_back("unknown metric '" + m + "'");
    }
  }
  if (c.samples < 2) errors.push_back("sweep.samples must be >= 2");
  if (c.samples < kMinReverseSamples &&
      std::find(c.metrics.begin(), c.metrics.end(), "rlm") != c.metrics.end()) {
    errors.push_back("sweep.samples must be >= " +
                     std::to_string(kMinReverseSamples) +
                     " when 'rlm' is requested");
  }
  if (c.bleu_order < 1) errors.push_back("sweep.bleu_order must be >= 1");
  if (c.embedding != "ppmi-svd" && c.embedding != "neural-lm-mean") {
    errors.push_back("sweep.embedding must be 'ppmi-svd' or 'neural-lm-mean'");
  }
  if (c.embedding_dim < 1) errors.push_back("sweep.embedding_dim must be >= 1");

  top.get("out_dir", c.out_dir);
  c.out_dir = resolve(base_dir, c.out_dir);
  top.get("workers", c.workers);
  if (c.workers < 1) errors.push_back("workers must be >= 1");

  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

ExperimentConfig validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read '" + path + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(j, parent.empty() ? "." : parent.string());
}

// ---------------------------------------------------------------------------
// Digests and manifest

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

json RunManifest::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"name", s.name},
                           {"checkpoint_key", s.key},
                           {"resumed", s.resumed},
                           {"wall_clock_seconds", s.seconds}});
  }
  json outputs_json = json::array();
  for (const auto& o : outputs) {
    outputs_json.push_back({{"path", o.path}, {"sha256", o.sha256}});
  }
  return {{"config_hash", config_hash},
          {"versions", versions},
          {"stages", stages_json},
          {"outputs", outputs_json}};
}

StageError::StageError(std::string stage, const std::string& what,
                       RunManifest partial, bool budget)
    : std::runtime_error("stage '" + stage + "' failed: " + what),
      stage_(std::move(stage)),
      partial_(std::move(partial)),
      budget_(budget) {}

// ---------------------------------------------------------------------------
// Oracle report

json oracle_report(const Scenario& s, const ScenarioDiscriminator& disc,
                   double c, uint64_t seed, size_t mc_samples) {
  const auto& d = disc.table;
  const bool optimal = s.spec.discriminator == "optimal";
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool ok, json detail) {
    all = all && ok;
    checks.push_back({{"name", name}, {"passed", ok}, {"detail", detail}});
  };

  const double tv_before = tv_distance(s.p_theta, s.p_r);
  const ExactUc ex = exact_uc(s.p_theta, d, c);
  const ExactFiltered filtered =
      exact_filtered_distribution(s.p_theta, d, c, ex.u_c);
  const double tv_after = tv_distance(filtered.dist, s.p_r);

  check("p_r normalized", std::abs(s.p_r.total() - 1.0) <= 1e-9,
        s.p_r.total());
  check("p_theta normalized", std::abs(s.p_theta.total() - 1.0) <= 1e-6,
        s.p_theta.total());
  check("p_new normalized", std::abs(filtered.dist.total() - 1.0) <= 1e-12,
        filtered.dist.total());
  const double kl = kl_divergence(s.p_r, s.p_theta);
  check("kl(p_r, p_theta) >= 0", kl >= 0.0, std::isfinite(kl) ? json(kl) : json("inf"));

  bool monotone = true;
  double previous = 2.0;
  for (int g = 0; g <= 100; ++g) {
    const double acc = exact_acceptance(s.p_theta, d, c, g / 100.0);
    monotone = monotone && acc <= previous + 1e-12;
    previous = acc;
  }
  check("acceptance non-increasing in u_c", monotone, nullptr);
  const double uc_low = exact_uc(s.p_theta, d, 0.3).u_c;
  const double uc_high = exact_uc(s.p_theta, d, 0.7).u_c;
  check("exact u_c(0.3) >= exact u_c(0.7)", uc_low >= uc_high,
        {{"u_c_0.3", uc_low}, {"u_c_0.7", uc_high}});
  check("tv reduction", tv_after <= tv_before + 1e-12,
        {{"before", tv_before}, {"after", tv_after}});

  // Inside the filtered region p_new is proportional to c * D/(1-D) * p_theta,
  // which equals (c / c_exact) * p_r under D*.
  if (optimal) {
    double worst = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
      if (d[i] >= ex.u_c || filtered.acceptance[i] >= 1.0) continue;
      const double expected = c / filtered.c_exact * s.p_r.probs[i];
      worst = std::max(worst, std::abs(filtered.dist.probs[i] - expected));
    }
    check("filtered region matches p_r up to c / c_exact", worst <= 1e-9,
          worst);
  }

  const TableDiscriminator table(s.p_r, d);
  const FilteredGenerator fg(s.generator,
                             std::make_shared<TableDiscriminator>(table),
                             FilterParams{c, ex.u_c});
  // Grow the sample so multinomial noise alone stays well under 0.01.
  const double floor_target = 0.005;
  const size_t mc_used =
      samples_for_tv_floor(filtered.dist, floor_target, mc_samples);
  const FilteredSamples mc = sample_filtered(
      fg, mc_used,
      SamplerConfig{1.0, s.spec.source.length, derive_seed(seed, "oracle-mc")},
      1, false);
  const double tv_mc = tv_distance(empirical_distribution(s.p_r, mc.accepted),
                                   filtered.dist);
  check("monte carlo matches exact filter (tv <= 0.01)", tv_mc <= 0.01,
        {{"tv", tv_mc},
         {"samples", mc_used},
         {"noise_floor", sampling_tv_floor(filtered.dist, mc_used)}});

  const UcEstimate est = estimate_uc(
      *s.generator, table, c, EstimateConfig{},
      SamplerConfig{1.0, s.spec.source.length, derive_seed(seed, "oracle-est")});
  const double est_acc = exact_acceptance(s.p_theta, d, c, est.u_c);
  check("estimate_uc exact acceptance within 0.05 of c",
        std::abs(est_acc - c) <= 0.05 + 1e-9,
        {{"u_c", est.u_c}, {"exact_acceptance", est_acc}});

  return {{"scenario", s.spec.id},
          {"c", c},
          {"discriminator", optimal ? "optimal" : "textcnn"},
          {"tv_before", tv_before},
          {"tv_after", tv_after},
          {"js_before", js_divergence(s.p_theta, s.p_r)},
          {"js_after", js_divergence(filtered.dist, s.p_r)},
          {"exact_uc", ex.to_json()},
          {"c_exact", filtered.c_exact},
          {"invariants", checks},
          {"passed", all}};
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string fmt_c(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", c);
  return buf;
}

std::string key_of(const std::string& parent, const json& payload) {
  return sha256_hex(parent + "|" + payload.dump()).substr(0, 16);
}

class Pipeline {
 public:
  explicit Pipeline(const ExperimentConfig& cfg)
      : cfg_(cfg), out_(cfg.out_dir) {
    manifest_.config_hash = cfg.hash();
    manifest_.versions = {{"filtergen", "0.1.0"},
                          {"checkpoint_format", kCheckpointVersion}};
  }

  RunManifest run();

 private:
  template <typename F>
  void stage(const std::string& name, const std::string& key, F body) {
    const auto start = std::chrono::steady_clock::now();
    StageRecord rec{name, key, false, 0.0};
    try {
      rec.resumed = body();
    } catch (const BudgetError& e) {
      finish_manifest();
      throw StageError(name, e.what(), manifest_, true);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      finish_manifest();
      throw StageError(name, e.what(), manifest_, false);
    }
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    manifest_.stages.push_back(rec);
  }

  fs::path path(const std::string& rel) const { return out_ / rel; }
  void output(const std::string& rel) { outputs_.insert(rel); }
  bool exists(const std::string& rel) const {
    return fs::is_regular_file(path(rel));
  }
  void write_text(const std::string& rel, const std::string& text) {
    fs::create_directories(path(rel).parent_path());
    std::ofstream f(path(rel), std::ios::binary);
    if (!f) throw InputError("cannot write '" + path(rel).string() + "'");
    f << text;
    output(rel);
  }
  void write_json(const std::string& rel, const json& j) {
    write_text(rel, j.dump(1) + "\n");
  }
  json read_json(const std::string& rel) {
    output(rel);
    return load_json(path(rel).string());
  }
  void write_corpus_file(const std::string& rel, const Corpus& c) {
    fs::create_directories(path(rel).parent_path());
    write_corpus(path(rel).string(), c);
    output(rel);
  }
  Corpus read_corpus_file(const std::string& rel, Split split) {
    output(rel);
    return read_corpus(path(rel).string(), vocab_, max_len_, split);
  }

  void finish_manifest() {
    manifest_.outputs.clear();
    for (const auto& rel : outputs_) {
      if (exists(rel)) {
        manifest_.outputs.push_back({rel, file_sha256(path(rel).string())});
      }
    }
    try {
      fs::create_directories(out_);
      save_json(path("manifest.json").string(), manifest_.to_json());
    } catch (const std::exception&) {
    }
  }

  void stage_data();
  void stage_generator();
  void stage_discriminator();
  void stage_estimate();
  void stage_sample();
  void stage_oracle();
  void stage_sweep();

  const ExperimentConfig& cfg_;
  fs::path out_;
  RunManifest manifest_;
  std::set<std::string> outputs_;

  std::optional<ScenarioSpec> spec_;
  VocabPtr vocab_;
  int max_len_ = kDefaultMaxLen;
  GenConfig gen_config_;
  TextCNNConfig disc_config_;
  Corpus train_, valid_, test_, real_;
  GenModelPtr gen_;
  std::optional<Scenario> scenario_;
  ScenarioDiscriminator disc_;
  json disc_report_;
  std::vector<UcEstimate> estimates_;
  json sample_stats_ = json::array();

  std::string key_data_, key_gen_, key_disc_, key_uc_;
};

void Pipeline::stage_data() {
  json payload = {{"seed", cfg_.seed}};
  if (spec_) {
    payload["scenario"] = spec_->to_json();
    payload["test_samples"] = cfg_.test_samples;
    payload["real_samples"] = cfg_.real_samples;
  } else {
    payload["train"] = file_sha256(cfg_.train_path);
    payload["valid"] = cfg_.valid_path.empty() ? "" : file_sha256(cfg_.valid_path);
    payload["test"] = file_sha256(cfg_.test_path);
    payload["max_len"] = cfg_.max_len;
    payload["vocab_size"] = gen_config_.vocab_size;
  }
  key_data_ = key_of("data", payload);
  const std::string stamp = "checkpoints/data-" + key_data_ + ".json";

  stage("data", key_data_, [&] {
    if (exists(stamp) && exists("data/vocab.json")) {
      read_json(stamp);
      vocab_ = std::make_shared<const Vocab>(
          Vocab::from_json(read_json("data/vocab.json")));
      train_ = read_corpus_file("data/train.txt", Split::kTrain);
      if (exists("data/valid.txt")) {
        valid_ = read_corpus_file("data/valid.txt", Split::kValid);
      } else {
        valid_ = Corpus{vocab_, {}, Split::kValid};
      }
      test_ = read_corpus_file("data/test.txt", Split::kTest);
      real_ = read_corpus_file("data/real.txt", Split::kTrain);
      return true;
    }
    if (spec_) {
      vocab_ = std::make_shared<const Vocab>(spec_->source.make_vocab());
      train_ = scenario_train_corpus(*spec_, vocab_, cfg_.seed);
      valid_ = Corpus{vocab_, {}, Split::kValid};
      test_ = synth_markov(spec_->source, cfg_.test_samples,
                           derive_seed(cfg_.seed, "pipeline-real-test"), vocab_);
      real_ = synth_markov(spec_->source, cfg_.real_samples,
                           derive_seed(cfg_.seed, "pipeline-real-train"), vocab_);
    } else {
      const auto lines = read_lines(cfg_.train_path);
      vocab_ = std::make_shared<const Vocab>(
          build_vocab(lines, gen_config_.vocab_size));
      train_ = read_corpus(cfg_.train_path, vocab_, max_len_, Split::kTrain);
      valid_ = cfg_.valid_path.empty()
                   ? Corpus{vocab_, {}, Split::kValid}
                   : read_corpus(cfg_.valid_path, vocab_, max_len_, Split::kValid);
      test_ = read_corpus(cfg_.test_path, vocab_, max_len_, Split::kTest);
      real_ = train_;
    }
    write_json("data/vocab.json", vocab_->to_json());
    write_corpus_file("data/train.txt", train_);
    if (!valid_.empty()) write_corpus_file("data/valid.txt", valid_);
    write_corpus_file("data/test.txt", test_);
    write_corpus_file("data/real.txt", real_);
    write_json(stamp, payload);
    return false;
  });
}

void Pipeline::stage_generator() {
  key_gen_ = key_of(key_data_, spec_ && spec_->generator_source
                                   ? spec_->generator_source->to_json()
                                   : gen_config_.to_json());
  const std::string ckpt = "checkpoints/generator-" + key_gen_ + ".json";
  stage("train-gen", key_gen_, [&] {
    bool resumed = false;
    if (exists(ckpt)) {
      gen_ = gen_from_checkpoint(read_json(ckpt));
      resumed = true;
    } else {
      if (spec_) {
        gen_ = scenario_generator(*spec_, train_, vocab_, cfg_.seed);
      } else {
        gen_ = train_mle(train_, valid_, gen_config_,
                         derive_seed(cfg_.seed, "train-gen"));
      }
      write_json(ckpt, gen_checkpoint(*gen_));
    }
    if (spec_) scenario_ = assemble_scenario(*spec_, vocab_, gen_, train_);
    return resumed;
  });
}

void Pipeline::stage_discriminator() {
  json payload = spec_ && spec_->discriminator == "optimal"
                     ? json("optimal")
                     : disc_config_.to_json();
  if (spec_) payload = {payload, spec_->disc_real_samples};
  key_disc_ = key_of(key_gen_, payload);
  const std::string ckpt = "checkpoints/discriminator-" + key_disc_ + ".json";
  stage("train-disc", key_disc_, [&] {
    if (exists(ckpt)) {
      const json j = read_json(ckpt);
      if (j.value("kind", "") == "optimal") {
        disc_.table = scenario_->optimal_d();
        disc_.disc = std::make_shared<TableDiscriminator>(scenario_->p_r,
                                                          disc_.table);
      } else {
        auto cnn = std::make_shared<TextCNN>(TextCNN::from_checkpoint(j));
        if (scenario_) disc_.table = tabulate(*cnn, scenario_->p_r);
        disc_.disc = cnn;
      }
      if (exists("disc_report.json")) disc_report_ = read_json("disc_report.json");
      return true;
    }
    if (spec_) {
      disc_ = scenario_discriminator(*scenario_, cfg_.seed);
    } else {
      auto [cnn, report] = train_discriminator(
          train_, *gen_, disc_config_, derive_seed(cfg_.seed, "train-disc"),
          valid_.empty() ? nullptr : &valid_);
      disc_.disc = std::make_shared<TextCNN>(std::move(cnn));
      disc_.report = std::move(report);
    }
    if (auto cnn = std::dynamic_pointer_cast<const TextCNN>(disc_.disc)) {
      write_json(ckpt, cnn->to_checkpoint());
    } else {
      write_json(ckpt, {{"kind", "optimal"}});
    }
    disc_report_ = disc_.report ? disc_.report->to_json() : json(nullptr);
    write_json("disc_report.json", disc_report_);
    return false;
  });
}

void Pipeline::stage_estimate() {
  key_uc_ = key_of(key_disc_, {cfg_.c_grid, cfg_.estimate.to_json()});
  const std::string ckpt = "checkpoints/estimate-" + key_uc_ + ".json";
  stage("estimate-uc", key_uc_, [&] {
    if (exists(ckpt)) {
      for (const auto& e : read_json(ckpt)) {
        UcEstimate est;
        est.c = e.at("c");
        est.u_c = e.at("u_c");
        est.final_acceptance = e.at("final_acceptance");
        for (const auto& t : e.at("trace")) {
          est.trace_uc.push_back(t.at("u_c"));
          est.trace_acceptance.push_back(t.at("acceptance"));
        }
        estimates_.push_back(est);
      }
      return true;
    }
    json all = json::array();
    for (size_t i = 0; i < cfg_.c_grid.size(); ++i) {
      estimates_.push_back(estimate_uc(
          *gen_, *disc_.disc, cfg_.c_grid[i], cfg_.estimate,
          SamplerConfig{1.0, max_len_, derive_seed(cfg_.seed, "estimate-uc", i)}));
      all.push_back(estimates_.back().to_json());
    }
    write_json(ckpt, all);
    return false;
  });
}

void Pipeline::stage_sample() {
  const std::string key = key_of(
      key_uc_, {cfg_.samples, cfg_.max_attempts_per_sample, cfg_.workers});
  const std::string ckpt = "checkpoints/sample-" + key + ".json";
  stage("sample", key, [&] {
    if (exists(ckpt)) {
      sample_stats_ = read_json(ckpt);
      output("samples/baseline.txt");
      for (double c : cfg_.c_grid) {
        output("samples/accepted_c" + fmt_c(c) + ".txt");
        output("samples/rejected_c" + fmt_c(c) + ".txt");
      }
      return true;
    }
    {
      Corpus baseline{vocab_, {}, Split::kUnspecified};
      Rng rng(derive_seed(cfg_.seed, "sample-baseline"));
      const SamplerConfig sampling{1.0, max_len_, 0};
      for (size_t i = 0; i < cfg_.samples; ++i) {
        baseline.sequences.push_back(gen_->sample(sampling, rng));
      }
      write_corpus_file("samples/baseline.txt", baseline);
    }
    for (size_t i = 0; i < cfg_.c_grid.size(); ++i) {
      const double c = cfg_.c_grid[i];
      const FilteredGenerator fg(gen_, disc_.disc,
                                 FilterParams{c, estimates_[i].u_c},
                                 cfg_.max_attempts_per_sample);
      const FilteredSamples fs_out = sample_filtered(
          fg, cfg_.samples,
          SamplerConfig{1.0, max_len_, derive_seed(cfg_.seed, "sample", i)},
          cfg_.workers, true);
      write_corpus_file("samples/accepted_c" + fmt_c(c) + ".txt", fs_out.accepted);
      write_corpus_file("samples/rejected_c" + fmt_c(c) + ".txt", fs_out.rejected);
      json st = fs_out.stats.to_json();
      st["u_c"] = estimates_[i].u_c;
      sample_stats_.push_back(st);
    }
    write_json(ckpt, sample_stats_);
    return false;
  });
}

void Pipeline::stage_oracle() {
  const std::string key = key_of(key_disc_, cfg_.c_grid);
  const std::string stamp = "checkpoints/oracle-" + key + ".json";
  stage("oracle", key, [&] {
    if (exists(stamp) && exists("oracle_report.json")) {
      read_json(stamp);
      output("oracle_report.json");
      return true;
    }
    json reports = json::array();
    bool passed = true;
    for (size_t i = 0; i < cfg_.c_grid.size(); ++i) {
      reports.push_back(oracle_report(*scenario_, disc_, cfg_.c_grid[i],
                                      derive_seed(cfg_.seed, "oracle", i)));
      passed = passed && reports.back()["passed"].get<bool>();
    }
    write_json("oracle_report.json", {{"passed", passed}, {"reports", reports}});
    write_json(stamp, {{"passed", passed}});
    return false;
  });
}

void Pipeline::stage_sweep() {
  json payload = cfg_.to_json();
  payload.erase("out_dir");
  payload.erase("workers");
  const std::string key = key_of(key_uc_, payload);
  const std::string stamp = "checkpoints/sweep-" + key + ".json";
  stage("sweep", key, [&] {
    if (exists(stamp) && exists("sweep.csv") && exists("report.json")) {
      read_json(stamp);
      output("sweep.csv");
      output("report.json");
      return true;
    }
    SweepConfig sc;
    sc.temperatures = cfg_.temperatures;
    sc.c_grid = cfg_.c_grid;
    sc.metrics = cfg_.metrics;
    sc.samples_per_point = cfg_.samples;
    sc.max_len = max_len_;
    sc.bleu.order = cfg_.bleu_order;
    sc.estimate = cfg_.estimate;
    sc.max_attempts_per_sample = cfg_.max_attempts_per_sample;
    sc.seed = derive_seed(cfg_.seed, "sweep");

    std::shared_ptr<const GenModel> oracle;
    if (spec_) {
      MarkovSource src = spec_->source;
      oracle = std::make_shared<SourceModel>(src, vocab_);
    } else if (sc.wants("lm")) {
      oracle = train_mle(train_, valid_, gen_config_,
                         derive_seed(cfg_.seed, "oracle-lm"));
    }
    std::optional<EmbeddingModel> em;
    if (sc.wants("fed")) {
      if (cfg_.embedding == "neural-lm-mean") {
        auto lm = std::dynamic_pointer_cast<const NeuralLM>(gen_);
        if (!lm) throw InputError("neural-lm-mean embedding needs a neural generator");
        em = EmbeddingModel::from_neural_lm(*lm);
      } else {
        em = EmbeddingModel::fit_ppmi_svd(real_, cfg_.embedding_dim);
      }
    }
    SweepInputs in;
    in.gen = gen_;
    in.disc = disc_.disc;
    in.real_train = &real_;
    in.real_test = &test_;
    in.oracle_lm = oracle.get();
    in.embedding = em ? &*em : nullptr;
    in.reverse_lm = gen_config_;
    in.classifier = cfg_.classifier.value_or(disc_config_);
    const SweepReport report = temperature_sweep(in, sc);

    json estimates = json::array();
    for (const auto& e : estimates_) {
      estimates.push_back({{"c", e.c},
                           {"u_c", e.u_c},
                           {"final_acceptance", e.final_acceptance}});
    }
    write_text("sweep.csv", report.to_csv());
    write_json("report.json", {{"config_hash", manifest_.config_hash},
                               {"estimates", estimates},
                               {"samples", sample_stats_},
                               {"discriminator", disc_report_},
                               {"sweep", report.to_json()}});
    write_json(stamp, {{"rows", report.rows.size()}});
    return false;
  });
}

RunManifest Pipeline::run() {
  fs::create_directories(out_);
  max_len_ = cfg_.max_len;
  if (!cfg_.scenario.empty()) {
    spec_ = load_scenario(cfg_.scenario);
    if (cfg_.generator) {
      spec_->generator = *cfg_.generator;
      spec_->generator.ngram.mode = LengthMode::kFixed;
      spec_->generator.ngram.max_len = spec_->source.length;
      spec_->generator.neural.mode = LengthMode::kFixed;
      spec_->generator.neural.max_len = spec_->source.length;
      spec_->generator_source.reset();
    }
    if (cfg_.discriminator) {
      spec_->discriminator = "textcnn";
      spec_->disc = *cfg_.discriminator;
    }
    max_len_ = spec_->source.length;
    gen_config_ = spec_->generator;
    disc_config_ = spec_->disc;
  } else {
    if (cfg_.generator) gen_config_ = *cfg_.generator;
    gen_config_.ngram.max_len = gen_config_.neural.max_len = cfg_.max_len;
    if (cfg_.discriminator) disc_config_ = *cfg_.discriminator;
  }

  stage_data();
  stage_generator();
  stage_discriminator();
  stage_estimate();
  stage_sample();
  if (scenario_) stage_oracle();
  stage_sweep();
  finish_manifest();
  return manifest_;
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& config) {
  return Pipeline(config).run();
}

}  // namespace filtergen

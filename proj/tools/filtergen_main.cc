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

// Command-line front end. Exit codes: 0 success, 2 configuration or input
// error, 3 stage failure, 4 sampling budget exhausted.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "filtergen/experiment.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace filtergen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitBudget = 4;

struct Globals {
  uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1;
  std::string out_dir;
};

std::string out_path(const Globals& g, const std::string& p) {
  if (p.empty() || g.out_dir.empty() || fs::path(p).is_absolute()) return p;
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / p).string();
}

void write_output(const Globals& g, const std::string& path, const json& j) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    const std::string p = out_path(g, path);
    if (fs::path(p).has_parent_path()) {
      fs::create_directories(fs::path(p).parent_path());
    }
    save_json(p, j);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- train-gen ------------------------------------------------------------

struct TrainGenArgs {
  std::string train, valid, config, out;
  int vocab_size = 0;
  int max_len = kDefaultMaxLen;
};

int run_train_gen(const Globals& g, const TrainGenArgs& a) {
  GenConfig cfg;
  if (!a.config.empty()) cfg = GenConfig::from_json(load_json(a.config));
  if (a.vocab_size > 0) cfg.vocab_size = a.vocab_size;
  cfg.ngram.max_len = cfg.neural.max_len = a.max_len;
  const auto lines = read_lines(a.train);
  auto vocab = std::make_shared<const Vocab>(build_vocab(lines, cfg.vocab_size));
  const Corpus train = read_corpus(a.train, vocab, a.max_len, Split::kTrain);
  const Corpus valid = a.valid.empty()
                           ? Corpus{vocab, {}, Split::kValid}
                           : read_corpus(a.valid, vocab, a.max_len, Split::kValid);
  auto model = train_mle(train, valid, cfg, derive_seed(g.seed, "train-gen"));
  save_gen_model(out_path(g, a.out), *model);
  json summary = {{"kind", model->kind()},
                  {"parameters", model->parameter_count()},
                  {"train_perplexity", perplexity(*model, train)}};
  if (!valid.empty()) summary["valid_perplexity"] = perplexity(*model, valid);
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

// --- train-disc -----------------------------------------------------------

struct TrainDiscArgs {
  std::string real, valid, gen, config, out, report;
  int max_len = kDefaultMaxLen;
};

int run_train_disc(const Globals& g, const TrainDiscArgs& a) {
  auto gen = load_gen_model(a.gen);
  TextCNNConfig cfg;
  if (!a.config.empty()) cfg = TextCNNConfig::from_json(load_json(a.config));
  const Corpus real = read_corpus(a.real, gen->vocab_ptr(), a.max_len, Split::kTrain);
  std::optional<Corpus> valid;
  if (!a.valid.empty()) {
    valid = read_corpus(a.valid, gen->vocab_ptr(), a.max_len, Split::kValid);
  }
  auto [disc, report] = train_discriminator(
      real, *gen, cfg, derive_seed(g.seed, "train-disc"),
      valid ? &*valid : nullptr);
  save_discriminator(out_path(g, a.out), disc);
  write_output(g, a.report, report.to_json());
  return kExitOk;
}

// --- estimate-uc ----------------------------------------------------------

struct EstimateArgs {
  std::string gen, disc, config, out;
  double c = 0.5;
  double temperature = 1.0;
  int max_len = kDefaultMaxLen;
};

int run_estimate(const Globals& g, const EstimateArgs& a) {
  auto gen = load_gen_model(a.gen);
  auto disc = load_discriminator(a.disc);
  EstimateConfig cfg;
  if (!a.config.empty()) cfg = EstimateConfig::from_json(load_json(a.config));
  const UcEstimate est = estimate_uc(
      *gen, *disc, a.c, cfg,
      SamplerConfig{a.temperature, a.max_len, derive_seed(g.seed, "estimate-uc")});
  write_output(g, a.out, est.to_json());
  if (!a.out.empty()) std::cout << json{{"c", est.c}, {"u_c", est.u_c}}.dump() << '\n';
  return kExitOk;
}

// --- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string gen, disc, out, rejected_out, stats_out;
  double c = 1.0;
  double uc = -1.0;
  double temperature = 1.0;
  size_t n = 1000;
  size_t max_attempts = 10000;
  int max_len = kDefaultMaxLen;
};

int run_sample(const Globals& g, const SampleArgs& a) {
  GenModelPtr gen = load_gen_model(a.gen);
  const SamplerConfig sampling{a.temperature, a.max_len, derive_seed(g.seed, "sample")};
  if (a.disc.empty()) {
    Corpus out{gen->vocab_ptr(), {}, Split::kUnspecified};
    Rng rng(sampling.seed);
    for (size_t i = 0; i < a.n; ++i) out.sequences.push_back(gen->sample(sampling, rng));
    write_corpus(out_path(g, a.out), out);
    return kExitOk;
  }
  DiscriminatorPtr disc = load_discriminator(a.disc);
  double uc = a.uc;
  if (uc < 0.0) {
    SamplerConfig est = sampling;
    est.seed = derive_seed(g.seed, "estimate-uc");
    uc = estimate_uc(*gen, *disc, a.c, EstimateConfig{}, est).u_c;
  }
  const FilteredGenerator fg(gen, disc, FilterParams{a.c, uc}, a.max_attempts);
  const FilteredSamples result =
      sample_filtered(fg, a.n, sampling, g.workers, !a.rejected_out.empty());
  write_corpus(out_path(g, a.out), result.accepted);
  if (!a.rejected_out.empty()) {
    write_corpus(out_path(g, a.rejected_out), result.rejected);
  }
  json stats = result.stats.to_json();
  stats["u_c"] = uc;
  write_output(g, a.stats_out, stats);
  return kExitOk;
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string real, samples, gen, disc, metrics = "bleu,selfbleu,lm,rlm,fed,err";
  std::string out, classifier_config;
  int bleu_order = 5;
  int embedding_dim = 64;
  int max_len = kDefaultMaxLen;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
  auto gen = load_gen_model(a.gen);
  const Corpus real = read_corpus(a.real, gen->vocab_ptr(), a.max_len, Split::kTest);
  const Corpus samples =
      read_corpus(a.samples, gen->vocab_ptr(), a.max_len, Split::kUnspecified);
  const auto metrics = split_list(a.metrics);
  const auto& names = all_metric_names();
  for (const auto& m : metrics) {
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      throw InputError("unknown metric '" + m + "'");
    }
  }
  auto wants = [&](const char* m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
  };
  BleuConfig bc;
  bc.order = a.bleu_order;
  json report = {{"samples", samples.size()}, {"references", real.size()}};
  if (wants("bleu")) report["bleu"] = bleu(samples, real, bc);
  if (wants("selfbleu")) report["self_bleu"] = self_bleu(samples, bc);
  if (wants("lm")) report["lm_score"] = lm_score(*gen, samples);
  if (wants("rlm")) {
    report["rev_lm_score"] = reverse_lm_score(samples, real, gen_config_of(*gen),
                                              derive_seed(g.seed, "rlm"));
  }
  if (wants("fed")) {
    const auto em = EmbeddingModel::fit_ppmi_svd(real, a.embedding_dim);
    report["fed"] = fed(embed(real, em), embed(samples, em));
  }
  if (wants("err")) {
    if (!a.disc.empty()) {
      report["error_rate"] = error_rate(*load_discriminator(a.disc), real, samples);
    } else {
      TextCNNConfig cc;
      if (!a.classifier_config.empty()) {
        cc = TextCNNConfig::from_json(load_json(a.classifier_config));
      }
      auto [head, tail] = split_tail(real, real.size() / 2);
      const SampleSource pick = [&samples](Rng& rng) {
        return samples.sequences[rng.below(samples.size())];
      };
      report["error_rate"] =
          classification_error(head, tail, pick, cc, derive_seed(g.seed, "err"))
              .error_rate;
    }
  }
  write_output(g, a.out, report);
  return kExitOk;
}

// --- sweep / pipeline -----------------------------------------------------

ExperimentConfig load_experiment(const Globals& g, const std::string& path) {
  ExperimentConfig cfg = validate_config(path);
  if (g.seed_given) cfg.seed = g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.workers = g.workers;
  return cfg;
}

int run_pipeline_cmd(const Globals& g, const std::string& config,
                     const std::string& sweep_out) {
  const ExperimentConfig cfg = load_experiment(g, config);
  const RunManifest manifest = run_pipeline(cfg);
  if (!sweep_out.empty()) {
    fs::copy_file(fs::path(cfg.out_dir) / "sweep.csv", sweep_out,
                  fs::copy_options::overwrite_existing);
  }
  for (const auto& s : manifest.stages) {
    std::cerr << s.name << (s.resumed ? " (resumed)" : "") << ": "
              << s.seconds << " s\n";
  }
  std::cout << (fs::path(cfg.out_dir) / "manifest.json").string() << '\n';
  return kExitOk;
}

// --- oracle-check ---------------------------------------------------------

struct OracleArgs {
  std::string scenario, out;
  double c = 0.5;
  size_t mc_samples = 200000;
};

int run_oracle(const Globals& g, const OracleArgs& a) {
  const Scenario s = build_scenario(load_scenario(a.scenario), g.seed);
  const ScenarioDiscriminator disc = scenario_discriminator(s, g.seed);
  const json report = oracle_report(s, disc, a.c, g.seed, a.mc_samples);
  write_output(g, a.out, report);
  for (const auto& inv : report["invariants"]) {
    std::cerr << (inv["passed"].get<bool>() ? "PASS " : "FAIL ")
              << inv["name"].get<std::string>() << '\n';
  }
  return report["passed"].get<bool>() ? kExitOk : kExitStage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminator-filtered sequence generation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--workers", g.workers, "Worker threads for sampling")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs");

  TrainGenArgs tg;
  auto* train_gen = app.add_subcommand("train-gen", "Train a generator by MLE");
  train_gen->add_option("--train", tg.train)->required()->check(CLI::ExistingFile);
  train_gen->add_option("--valid", tg.valid)->check(CLI::ExistingFile);
  train_gen->add_option("--config", tg.config, "Generator config JSON")
      ->check(CLI::ExistingFile);
  train_gen->add_option("--vocab-size", tg.vocab_size);
  train_gen->add_option("--max-len", tg.max_len);
  train_gen->add_option("--out", tg.out)->required();

  TrainDiscArgs td;
  auto* train_disc = app.add_subcommand("train-disc", "Train a discriminator");
  train_disc->add_option("--real", td.real)->required()->check(CLI::ExistingFile);
  train_disc->add_option("--valid", td.valid)->check(CLI::ExistingFile);
  train_disc->add_option("--gen", td.gen)->required()->check(CLI::ExistingFile);
  train_disc->add_option("--config", td.config)->check(CLI::ExistingFile);
  train_disc->add_option("--max-len", td.max_len);
  train_disc->add_option("--out", td.out)->required();
  train_disc->add_option("--report", td.report);

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate-uc", "Estimate the sampling boundary");
  estimate->add_option("--gen", ea.gen)->required()->check(CLI::ExistingFile);
  estimate->add_option("--disc", ea.disc)->required()->check(CLI::ExistingFile);
  estimate->add_option("--c", ea.c)->required();
  estimate->add_option("--temperature", ea.temperature);
  estimate->add_option("--config", ea.config)->check(CLI::ExistingFile);
  estimate->add_option("--max-len", ea.max_len);
  estimate->add_option("--out", ea.out);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw (optionally filtered) samples");
  sample->add_option("--gen", sa.gen)->required()->check(CLI::ExistingFile);
  sample->add_option("--disc", sa.disc)->check(CLI::ExistingFile);
  sample->add_option("--c", sa.c);
  sample->add_option("--uc", sa.uc, "Boundary; estimated when omitted");
  sample->add_option("--n", sa.n);
  sample->add_option("--temperature", sa.temperature);
  sample->add_option("--max-attempts", sa.max_attempts);
  sample->add_option("--max-len", sa.max_len);
  sample->add_option("--out", sa.out)->required();
  sample->add_option("--rejected-out", sa.rejected_out);
  sample->add_option("--stats-out", sa.stats_out);

  EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Score a sample file");
  evaluate->add_option("--real", va.real)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--samples", va.samples)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gen", va.gen)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--disc", va.disc)->check(CLI::ExistingFile);
  evaluate->add_option("--metrics", va.metrics);
  evaluate->add_option("--bleu-order", va.bleu_order);
  evaluate->add_option("--embedding-dim", va.embedding_dim);
  evaluate->add_option("--classifier-config", va.classifier_config)
      ->check(CLI::ExistingFile);
  evaluate->add_option("--max-len", va.max_len);
  evaluate->add_option("--out", va.out);

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run the pipeline and write sweep.csv");
  sweep->add_option("--config", sweep_config)->required();
  sweep->add_option("--out", sweep_out)->required();

  std::string pipeline_config;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  pipeline->add_option("--config", pipeline_config)->required();

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "Exact checks on a scenario");
  oracle->add_option("--scenario", oa.scenario)->required();
  oracle->add_option("--c", oa.c);
  oracle->add_option("--mc-samples", oa.mc_samples);
  oracle->add_option("--out", oa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_gen) return run_train_gen(g, tg);
    if (*train_disc) return run_train_disc(g, td);
    if (*estimate) return run_estimate(g, ea);
    if (*sample) return run_sample(g, sa);
    if (*evaluate) return run_evaluate(g, va);
    if (*sweep) return run_pipeline_cmd(g, sweep_config, sweep_out);
    if (*pipeline) return run_pipeline_cmd(g, pipeline_config, "");
    if (*oracle) return run_oracle(g, oa);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << e.what() << '\n';
    return e.budget_exhausted() ? kExitBudget : kExitStage;
  } catch (const BudgetError& e) {
    std::cerr << e.what() << '\n';
    return kExitBudget;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return kExitConfig;
}

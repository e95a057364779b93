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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "filtergen/experiment.h"

namespace py = pybind11;
using namespace filtergen;

namespace {

// Whitespace-tokenized sentences over one shared vocabulary.
std::pair<Corpus, Corpus> encode_pair(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
  std::vector<std::string> lines(a);
  lines.insert(lines.end(), b.begin(), b.end());
  auto vocab = std::make_shared<const Vocab>(
      build_vocab(lines, static_cast<int>(lines.size()) * 64 + 1));
  auto encode_all = [&](const std::vector<std::string>& src) {
    Corpus c{vocab, {}, Split::kUnspecified};
    for (const auto& s : src) c.sequences.push_back(encode(s, *vocab, 1 << 20));
    return c;
  };
  return {encode_all(a), encode_all(b)};
}

std::string scenario_oracle(const std::string& scenario, double c,
                            uint64_t seed, size_t mc_samples) {
  const Scenario s = build_scenario(load_scenario(scenario), seed);
  const ScenarioDiscriminator disc = scenario_discriminator(s, seed);
  return oracle_report(s, disc, c, seed, mc_samples).dump();
}

std::string scenario_estimate(const std::string& scenario, double c,
                              uint64_t seed) {
  const Scenario s = build_scenario(load_scenario(scenario), seed);
  const ScenarioDiscriminator disc = scenario_discriminator(s, seed);
  const UcEstimate est = estimate_uc(
      *s.generator, *disc.disc, c, EstimateConfig{},
      SamplerConfig{1.0, s.spec.source.length, derive_seed(seed, "estimate-uc")});
  nlohmann::json j = est.to_json();
  j["exact_acceptance"] = exact_acceptance(s.p_theta, disc.table, c, est.u_c);
  j["exact"] = exact_uc(s.p_theta, disc.table, c).to_json();
  return j.dump();
}

std::string pipeline(const std::string& config_path, const std::string& out_dir,
                     int workers) {
  ExperimentConfig cfg = validate_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.workers = workers;
  return run_pipeline(cfg).to_json().dump();
}

std::string check_config(const std::string& path) {
  return validate_config(path).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the filtergen package.";

  static py::exception<ConfigError> config_error(m, "ConfigError",
                                                 PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::object errors = py::cast(e.errors());
      PyErr_SetObject(config_error.ptr(), errors.ptr());
    } catch (const InputError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DegenerateError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  m.def("filter_prob", &filter_prob, py::arg("d"), py::arg("c"),
        py::arg("u_c"));
  m.def(
      "acceptance_probability",
      [](double d, double c, double u_c) {
        FilterParams p{c, u_c};
        p.validate();
        return acceptance_probability(d, p);
      },
      py::arg("d"), py::arg("c"), py::arg("u_c"));
  m.def(
      "bleu",
      [](const std::vector<std::string>& hyps,
         const std::vector<std::string>& refs, int order) {
        auto [h, r] = encode_pair(hyps, refs);
        return bleu(h, r, BleuConfig{order});
      },
      py::arg("hypotheses"), py::arg("references"), py::arg("order") = 5);
  m.def(
      "self_bleu",
      [](const std::vector<std::string>& samples, int order) {
        auto [s, unused] = encode_pair(samples, {});
        return self_bleu(s, BleuConfig{order});
      },
      py::arg("samples"), py::arg("order") = 5);
  m.def(
      "fed",
      [](const RowMatrix& a, const RowMatrix& b) { return fed(a, b); },
      py::arg("real"), py::arg("generated"));
  m.def("scenario_ids", &bundled_scenario_ids);
  m.def("scenario_json",
        [](const std::string& id) { return load_scenario(id).to_json().dump(); },
        py::arg("scenario"));
  m.def("oracle_check", &scenario_oracle, py::arg("scenario"),
        py::arg("c") = 0.5, py::arg("seed") = 0,
        py::arg("mc_samples") = 200000,
        py::call_guard<py::gil_scoped_release>());
  m.def("estimate_uc", &scenario_estimate, py::arg("scenario"), py::arg("c"),
        py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("validate_config", &check_config, py::arg("path"));
  m.def("run_pipeline", &pipeline, py::arg("config"),
        py::arg("out_dir") = "", py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
}

// Copyright 2026 The qtomo authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtomo/harness.hpp"
#include "qtomo/moments.hpp"
#include "qtomo/rng.hpp"
#include "qtomo/spectral.hpp"

using namespace qtomo;

namespace {

double val(const ResultRow& row, const std::string& name) {
  for (const auto& [key, value] : row.values)
    if (key == name) return value;
  FAIL("missing column ", name);
  return 0.0;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

ExperimentConfig small_multi_quench() {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::random_tfim, 3, Boundary::open, 5, {}};
  cfg.ensemble = EnsembleKind::bloch_product;
  cfg.protocol = Protocol::multi_quench;
  cfg.times = {0.7, 1.3};
  cfg.pair_counts = {8};
  cfg.epsilons = {0.0, 0.1};
  cfg.realizations = 3;
  cfg.master_seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("config survives a json round trip with every field non-default") {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::tfim_yy, 5, Boundary::periodic, 13,
                        CouplingRange{-0.5, 2.0}};
  cfg.ensemble = EnsembleKind::haar;
  cfg.protocol = Protocol::robustness;
  cfg.times = {0.25, 4.0};
  cfg.pair_counts = {3, 9, 27};
  cfg.epsilons = {0.01};
  cfg.realizations = 7;
  cfg.master_seed = 4242;
  cfg.output_path = "somewhere.csv";
  cfg.format = "json";
  cfg.orders = {2, 4};
  cfg.starts = 77;
  cfg.extra_ratio = 0.125;
  cfg.bins = 12;
  cfg.histogram_lo = 0.125;
  cfg.histogram_hi = 0.75;

  const ExperimentConfig back =
      ExperimentConfig::from_json_text(cfg.to_json_text());
  CHECK(back == cfg);

  const std::string path = "harness_config_test.json";
  {
    std::ofstream out(path);
    out << cfg.to_json_text();
  }
  CHECK(ExperimentConfig::load(path) == cfg);
  std::remove(path.c_str());
  CHECK_THROWS_AS(ExperimentConfig::load("no_such_config.json"), ValidationError);
}

TEST_CASE("config template documents a runnable example") {
  const std::string text = config_template();
  CHECK(text.find("//") != std::string::npos);
  const ExperimentConfig cfg = ExperimentConfig::from_json_text(text);
  CHECK(cfg.model.site_count >= 2);
  CHECK(!cfg.times.empty());
  CHECK(!cfg.pair_counts.empty());
  CHECK(cfg.realizations >= 1);
  // The template round trips through the canonical serializer.
  CHECK(ExperimentConfig::from_json_text(cfg.to_json_text()) == cfg);
}

TEST_CASE("config parsing rejects malformed input with clear errors") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("[1,2]"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{\"protocol\":\"nope\"}"),
                  ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{\"modell\":{}}"),
                  ValidationError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text("{\"model\":{\"sites\":\"three\"}}"),
      ValidationError);
  // Partial configs keep defaults for absent keys.
  const ExperimentConfig partial =
      ExperimentConfig::from_json_text("{\"model\":{\"sites\":3}}");
  CHECK(partial.model.site_count == 3);
  CHECK(partial.realizations == 1);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{\"times\":\"soon\"}"),
                  ValidationError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text("{\"model\":{\"range\":{\"low\":0}}}"),
      ValidationError);
}

TEST_CASE("protocol names round trip and reject unknowns") {
  for (const Protocol p :
       {Protocol::multi_quench, Protocol::time_slice, Protocol::single_quench,
        Protocol::robustness, Protocol::gap_sweep, Protocol::spectrum})
    CHECK(protocol_from_string(to_string(p)) == p);
  CHECK_THROWS_AS(protocol_from_string("quench"), ValidationError);
}

TEST_CASE("multi quench rows match the direct reconstruction oracle") {
  const ExperimentConfig cfg = small_multi_quench();
  const RunOutput out = run_experiment(cfg);
  REQUIRE(out.rows.size() == 4);

  // Sweep order: times outermost, then pair counts, then epsilons.
  CHECK(out.rows[0].time == 0.7);
  CHECK(out.rows[0].epsilon == 0.0);
  CHECK(out.rows[1].time == 0.7);
  CHECK(out.rows[1].epsilon == 0.1);
  CHECK(out.rows[2].time == 1.3);
  CHECK(out.rows[3].epsilon == 0.1);
  for (const ResultRow& row : out.rows) {
    CHECK(row.pairs == 8);
    CHECK(row.realizations == 3);
  }

  // Sweep point 1 is (t = 0.7, p = 8, eps = 0.1); replay it by hand.
  double fid = 0.0, err = 0.0, gap = 0.0, amb = 0.0;
  for (int r = 0; r < 3; ++r) {
    ModelSpec rspec = cfg.model;
    rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings,
                                      std::uint64_t(r));
    const HamiltonianSpec ham = instantiate_model(rspec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const EnsembleSpec ens{cfg.ensemble, 3,
                           derive_seed(cfg.master_seed, kStreamSplit,
                                       std::uint64_t(r))};
    std::vector<QuenchPair> pairs;
    for (int i = 0; i < 8; ++i)
      pairs.push_back(make_quench_pair(sample_state(ens, std::uint64_t(i)), eig, 0.7));
    ConstraintMatrix m = build_constraint_matrix(ham.basis, pairs);
    m = inject_error(m, {0.1, derive_seed(cfg.master_seed, 1, std::uint64_t(r))});
    ReconstructionResult res = solve_kernel(m);
    score_against(res, ham.couplings);
    fid += res.fidelity;
    err += res.error;
    gap += res.gap;
    amb += res.ambiguous_kernel ? 1.0 : 0.0;
  }
  CHECK(std::abs(val(out.rows[1], "fidelity") - fid / 3.0) < 1e-13);
  CHECK(std::abs(val(out.rows[1], "error") - err / 3.0) < 1e-13);
  CHECK(std::abs(val(out.rows[1], "gap") - gap / 3.0) < 1e-13);
  CHECK(std::abs(val(out.rows[1], "ambiguous") - amb / 3.0) < 1e-13);

  // Noiseless sweep points reconstruct essentially exactly.
  CHECK(val(out.rows[0], "error") < 1e-7);
  CHECK(val(out.rows[0], "fidelity") > 1.0 - 1e-10);
}

TEST_CASE("worker count never changes the rows") {
  const ExperimentConfig cfg = small_multi_quench();
  const RunOutput one = run_experiment(cfg, 1);
  const RunOutput four = run_experiment(cfg, 4);
  REQUIRE(one.rows.size() == four.rows.size());
  for (std::size_t k = 0; k < one.rows.size(); ++k) {
    REQUIRE(one.rows[k].values.size() == four.rows[k].values.size());
    for (std::size_t c = 0; c < one.rows[k].values.size(); ++c) {
      CHECK(one.rows[k].values[c].first == four.rows[k].values[c].first);
      CHECK(one.rows[k].values[c].second == four.rows[k].values[c].second);
    }
  }
  CHECK_THROWS_AS(run_experiment(cfg, 0), ValidationError);
}

TEST_CASE("run rejects configs with empty sweeps or bad counts") {
  ExperimentConfig cfg = small_multi_quench();
  cfg.realizations = 0;
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
  cfg = small_multi_quench();
  cfg.times.clear();
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
  cfg = small_multi_quench();
  cfg.pair_counts = {0};
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
  cfg = small_multi_quench();
  cfg.epsilons = {-0.1};
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
}

TEST_CASE("time slice rows match the trajectory baseline oracle") {
  ExperimentConfig cfg = small_multi_quench();
  cfg.protocol = Protocol::time_slice;
  cfg.times = {0.5};
  cfg.pair_counts = {6};
  cfg.epsilons = {0.0};
  cfg.realizations = 2;
  const RunOutput out = run_experiment(cfg);
  REQUIRE(out.rows.size() == 1);

  double fid = 0.0, gap = 0.0;
  for (int r = 0; r < 2; ++r) {
    ModelSpec rspec = cfg.model;
    rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings,
                                      std::uint64_t(r));
    const HamiltonianSpec ham = instantiate_model(rspec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const EnsembleSpec ens{cfg.ensemble, 3,
                           derive_seed(cfg.master_seed, kStreamSplit,
                                       std::uint64_t(r))};
    const ConstraintMatrix m = time_slice_baseline(
        ham.basis, eig, sample_state(ens, 0), 0.5, 6);
    ReconstructionResult res = solve_kernel(m);
    score_against(res, ham.couplings);
    fid += res.fidelity;
    gap += res.gap;
  }
  CHECK(std::abs(val(out.rows[0], "fidelity") - fid / 2.0) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "gap") - gap / 2.0) < 1e-13);
  CHECK(val(out.rows[0], "error") < 1e-6);
}

TEST_CASE("single quench rows match the moment solver oracle") {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::random_tfim, 3, Boundary::open, 7, {}};
  cfg.protocol = Protocol::single_quench;
  cfg.times = {1.0};
  cfg.pair_counts = {1};
  cfg.epsilons = {0.0};
  cfg.realizations = 1;
  cfg.master_seed = 3;
  cfg.orders = {1, 2, 3, 4, 5};
  cfg.starts = 80;
  const RunOutput out = run_experiment(cfg);
  REQUIRE(out.rows.size() == 1);

  ModelSpec rspec = cfg.model;
  rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings, 0);
  const HamiltonianSpec ham = instantiate_model(rspec);
  const EigenSystem eig = diagonalize(assemble(ham));
  const EnsembleSpec ens{cfg.ensemble, 3,
                         derive_seed(cfg.master_seed, kStreamSplit, 0)};
  const QuenchPair pair = make_quench_pair(sample_state(ens, 0), eig, 1.0);
  const ObservableSet obs = ObservableSet::from_basis(ham.basis);
  std::vector<MomentTensor> tensors;
  for (const int order : cfg.orders)
    tensors.push_back(build_moment_tensor(order, obs, pair));
  SolveOptions opt;
  opt.starts = cfg.starts;
  opt.seed = derive_seed(cfg.master_seed, 0, 0);
  const Eigen::VectorXd truth = ham.couplings.normalized();
  SolveDiagnostics diag;
  const std::vector<SolutionCluster> clusters = generic_clusters(
      solve_system(tensors, opt, nullptr, &diag), tensors, obs, {}, &truth);
  REQUIRE(!clusters.empty());

  CHECK(val(out.rows[0], "clusters") == double(clusters.size()));
  CHECK(val(out.rows[0], "top_multiplicity") == double(clusters[0].multiplicity));
  CHECK(std::abs(val(out.rows[0], "truth_error") -
                 score(clusters[0].representative, truth).error) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "converged") -
                 double(diag.converged_starts) / double(diag.total_starts)) <
        1e-13);
  CHECK(val(out.rows[0], "truth_error") < 1e-4);
  CHECK(val(out.rows[0], "converged") > 0.0);
}

TEST_CASE("single quench on a uniform family solves the grouped system") {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::ising_lt, 4, Boundary::open, 19, {}};
  cfg.protocol = Protocol::single_quench;
  cfg.times = {0.9};
  cfg.pair_counts = {1};
  cfg.epsilons = {0.0};
  cfg.realizations = 1;
  cfg.master_seed = 8;
  cfg.orders = {1, 2, 3};
  cfg.starts = 60;
  const RunOutput out = run_experiment(cfg);
  REQUIRE(out.rows.size() == 1);
  CHECK(val(out.rows[0], "clusters") >= 1.0);
  CHECK(val(out.rows[0], "converged") > 0.0);
  CHECK(val(out.rows[0], "truth_error") < 1e-4);

  // Oracle: grouped observables and a translation-invariant probe.
  ModelSpec rspec = cfg.model;
  rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings, 0);
  const EigenSystem eig = diagonalize(assemble(instantiate_model(rspec)));
  const std::uint64_t state_seed = derive_seed(cfg.master_seed, kStreamSplit, 0);
  const QuenchPair pair = make_quench_pair(
      translation_invariant_bloch_state(4, state_seed, 0), eig, 0.9);
  const ObservableSet obs = ObservableSet::from_groups(translated_sum_basis(rspec));
  std::vector<MomentTensor> tensors;
  for (const int order : cfg.orders)
    tensors.push_back(build_moment_tensor(order, obs, pair));
  SolveOptions opt;
  opt.starts = cfg.starts;
  opt.seed = derive_seed(cfg.master_seed, 0, 0);
  const Eigen::VectorXd truth = family_couplings(rspec).normalized();
  const std::vector<SolutionCluster> clusters =
      generic_clusters(solve_system(tensors, opt), tensors, obs, {}, &truth);
  REQUIRE(!clusters.empty());
  CHECK(std::abs(val(out.rows[0], "truth_error") -
                 score(clusters[0].representative, truth).error) < 1e-13);
}

TEST_CASE("robustness rows match the split experiment oracle") {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::random_tfim, 4, Boundary::open, 11, {}};
  cfg.protocol = Protocol::robustness;
  cfg.times = {0.8};
  cfg.pair_counts = {20};
  cfg.epsilons = {0.0};
  cfg.realizations = 2;
  cfg.master_seed = 17;
  cfg.extra_ratio = 0.05;
  const RunOutput out = run_experiment(cfg);
  REQUIRE(out.rows.size() == 1);

  double err = 0.0, bound = 0.0, within = 0.0, extra_norm = 0.0, total_gap = 0.0;
  for (int r = 0; r < 2; ++r) {
    ModelSpec rspec = cfg.model;
    rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings,
                                      std::uint64_t(r));
    const HamiltonianSpec kept = instantiate_model(rspec);

    std::vector<PauliString> triples;
    for (int i = 0; i + 2 < 4; ++i)
      triples.push_back(PauliString::single(4, i, PauliLetter::Z) *
                        PauliString::single(4, i + 1, PauliLetter::X) *
                        PauliString::single(4, i + 2, PauliLetter::Z));
    RandomStream extra_rng(rspec.coupling_seed, kStreamCouplings, 1);
    Eigen::VectorXd extra_c(Eigen::Index(triples.size()));
    for (Eigen::Index k = 0; k < extra_c.size(); ++k)
      extra_c[k] = extra_rng.uniform(-1.0, 1.0);
    extra_c *= cfg.extra_ratio * kept.couplings.norm() / extra_c.norm();
    const AnsatzSplit split{kept,
                            {OperatorBasis::from_strings(triples), extra_c}};

    const EigenSystem combined =
        diagonalize(assemble(split.kept) + assemble(split.extra));
    const EnsembleSpec ens{cfg.ensemble, 4,
                           derive_seed(cfg.master_seed, kStreamSplit,
                                       std::uint64_t(r))};
    std::vector<QuenchPair> pairs;
    for (int i = 0; i < 20; ++i)
      pairs.push_back(make_quench_pair(sample_state(ens, std::uint64_t(i)),
                                       combined, 0.8));
    const RobustnessRecord rec = robustness_experiment(split, pairs);
    err += rec.error;
    bound += rec.bound;
    within += rec.within_bound ? 1.0 : 0.0;
    extra_norm += rec.extra_norm;
    total_gap += rec.total_gap;
  }
  CHECK(std::abs(val(out.rows[0], "error") - err / 2.0) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "bound") - bound / 2.0) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "within_bound") - within / 2.0) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "extra_norm") - extra_norm / 2.0) < 1e-13);
  CHECK(std::abs(val(out.rows[0], "total_gap") - total_gap / 2.0) < 1e-13);
  CHECK(val(out.rows[0], "extra_norm") <= 2.0 / std::sqrt(3.0) + 1e-12);
}

TEST_CASE("gap sweep and spectrum rows match their library oracles") {
  ExperimentConfig cfg;
  cfg.model = ModelSpec{ModelFamily::random_tfim, 3, Boundary::open, 21, {}};
  cfg.protocol = Protocol::gap_sweep;
  cfg.times = {1.0};
  cfg.pair_counts = {32};
  cfg.epsilons = {0.0};
  cfg.realizations = 2;
  cfg.master_seed = 31;
  const RunOutput gaps = run_experiment(cfg);
  REQUIRE(gaps.rows.size() == 1);

  cfg.protocol = Protocol::spectrum;
  cfg.pair_counts = {64};
  cfg.bins = 4;
  cfg.histogram_lo = 0.0;
  cfg.histogram_hi = 0.5;
  const RunOutput spec = run_experiment(cfg);
  REQUIRE(spec.rows.size() == 1);

  double gap_sum = 0.0, smin_sum = 0.0;
  double lmin = 0.0, lsecond = 0.0, lmax = 0.0;
  Eigen::VectorXd bin_sum = Eigen::VectorXd::Zero(4);
  double below = 0.0, above = 0.0;
  const int n = 5;
  for (int r = 0; r < 2; ++r) {
    ModelSpec rspec = cfg.model;
    rspec.coupling_seed = derive_seed(cfg.model.coupling_seed, kStreamCouplings,
                                      std::uint64_t(r));
    const HamiltonianSpec ham = instantiate_model(rspec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const EnsembleSpec ens{cfg.ensemble, 3,
                           derive_seed(cfg.master_seed, kStreamSplit,
                                       std::uint64_t(r))};

    std::vector<QuenchPair> pairs;
    for (int i = 0; i < 32; ++i)
      pairs.push_back(make_quench_pair(sample_state(ens, std::uint64_t(i)), eig, 1.0));
    const ConstraintMatrix m = build_constraint_matrix(ham.basis, pairs);
    gap_sum += singular_gap(m);
    smin_sum += solve_kernel(m).singular_values[n - 1];

    const Eigen::MatrixXd cov = covariance_estimate(ham.basis, eig, 1.0, ens, 64);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    lmin += es.eigenvalues()[0];
    lsecond += es.eigenvalues()[1];
    lmax += es.eigenvalues()[n - 1];
    const Histogram h = make_histogram(es.eigenvalues(), 4, 0.0, 0.5);
    for (int b = 0; b < 4; ++b) bin_sum[b] += h.counts[std::size_t(b)];
    below += h.below;
    above += h.above;
  }
  CHECK(std::abs(val(gaps.rows[0], "gap") - gap_sum / 2.0) < 1e-13);
  CHECK(std::abs(val(gaps.rows[0], "s_min") - smin_sum / 2.0) < 1e-13);
  CHECK(val(gaps.rows[0], "s_second") >= val(gaps.rows[0], "s_min"));

  CHECK(std::abs(val(spec.rows[0], "lambda_min") - lmin / 2.0) < 1e-13);
  CHECK(std::abs(val(spec.rows[0], "lambda_second") - lsecond / 2.0) < 1e-13);
  CHECK(std::abs(val(spec.rows[0], "lambda_max") - lmax / 2.0) < 1e-13);
  for (int b = 0; b < 4; ++b)
    CHECK(std::abs(val(spec.rows[0], "bin_" + std::to_string(b)) -
                   bin_sum[b] / 2.0) < 1e-13);
  const double total = val(spec.rows[0], "below") + val(spec.rows[0], "above") +
                       val(spec.rows[0], "bin_0") + val(spec.rows[0], "bin_1") +
                       val(spec.rows[0], "bin_2") + val(spec.rows[0], "bin_3");
  CHECK(std::abs(total - double(n)) < 1e-12);
}

TEST_CASE("rendered csv is stable except for the generated line") {
  const ExperimentConfig cfg = small_multi_quench();
  const RunOutput out = run_experiment(cfg);

  const std::string first = render_rows(cfg, out, "csv");
  const std::string second = render_rows(cfg, out, "csv");
  const std::vector<std::string> a = lines_of(first);
  const std::vector<std::string> b = lines_of(second);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k == 2) continue;  // timestamp line
    CHECK(a[k] == b[k]);
  }
  CHECK(a[0].rfind("# qtomo ", 0) == 0);
  CHECK(a[1].rfind("# config ", 0) == 0);
  CHECK(a[2].rfind("# generated ", 0) == 0);
  CHECK(a[3] == "time,pairs,epsilon,realizations,fidelity,error,gap,ambiguous");
  REQUIRE(a.size() == 4 + out.rows.size());

  std::istringstream row(a[4]);
  std::string cell;
  std::getline(row, cell, ',');
  CHECK(std::stod(cell) == 0.7);
  std::getline(row, cell, ',');
  CHECK(std::stoi(cell) == 8);

  CHECK_THROWS_AS(render_rows(cfg, out, "xml"), ValidationError);
}

TEST_CASE("rendered json is stable and carries the config") {
  const ExperimentConfig cfg = small_multi_quench();
  const RunOutput out = run_experiment(cfg);

  nlohmann::json a = nlohmann::json::parse(render_rows(cfg, out, "json"));
  nlohmann::json b = nlohmann::json::parse(render_rows(cfg, out, "json"));
  for (nlohmann::json* j : {&a, &b}) {
    REQUIRE(j->contains("generated"));
    REQUIRE(j->contains("elapsed_seconds"));
    j->erase("generated");
    j->erase("elapsed_seconds");
  }
  CHECK(a == b);
  CHECK(a["rows"].size() == 4);
  CHECK(a["rows"][1]["values"]["fidelity"].get<double>() ==
        doctest::Approx(val(out.rows[1], "fidelity")).epsilon(1e-12));
  CHECK(ExperimentConfig::from_json_text(a["config"].dump()) == cfg);
}

TEST_CASE("emit writes the configured file and reports the path") {
  const ExperimentConfig cfg = small_multi_quench();
  const RunOutput out = run_experiment(cfg);
  const std::string path = "harness_emit_test.csv";
  CHECK(emit_rows(cfg, out, path, "csv") == path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# qtomo ", 0) == 0);
  in.close();
  std::remove(path.c_str());
}

TEST_CASE("ingest reads back emitted matrices and reorders columns") {
  const ModelSpec spec{ModelFamily::random_tfim, 3, Boundary::open, 5, {}};
  const HamiltonianSpec ham = instantiate_model(spec);
  const EigenSystem eig = diagonalize(assemble(ham));
  const EnsembleSpec ens{EnsembleKind::bloch_product, 3, 77};
  std::vector<QuenchPair> pairs;
  for (int i = 0; i < 4; ++i)
    pairs.push_back(make_quench_pair(sample_state(ens, std::uint64_t(i)), eig, 1.0));
  const ConstraintMatrix m = build_constraint_matrix(ham.basis, pairs);

  const std::string path = "harness_ingest_test.csv";
  write_constraint_csv(m, ham.basis, path);
  const ConstraintMatrix back = ingest_external(path, ham.basis);
  REQUIRE(back.entries.rows() == 4);
  REQUIRE(back.entries.cols() == ham.basis.size());
  CHECK((back.entries - m.entries).cwiseAbs().maxCoeff() < 1e-11);
  std::remove(path.c_str());

  // Column order in the file need not match the basis order.
  {
    std::ofstream out(path);
    out.precision(17);
    out << ham.basis.term(1).str() << "," << ham.basis.term(0).str();
    for (int a = 2; a < ham.basis.size(); ++a) out << "," << ham.basis.term(a).str();
    out << "\n";
    for (int i = 0; i < 2; ++i) {
      out << m.entries(i, 1) << "," << m.entries(i, 0);
      for (int a = 2; a < ham.basis.size(); ++a) out << "," << m.entries(i, a);
      out << "\n";
    }
  }
  const ConstraintMatrix swapped = ingest_external(path, ham.basis);
  CHECK((swapped.entries - m.entries.topRows(2)).cwiseAbs().maxCoeff() < 1e-12);
  std::remove(path.c_str());
}

TEST_CASE("ingest errors carry row and column coordinates") {
  const ModelSpec spec{ModelFamily::random_tfim, 3, Boundary::open, 5, {}};
  const OperatorBasis basis = model_basis(spec);
  const std::string path = "harness_ingest_bad.csv";
  const auto write = [&](const std::string& text) {
    std::ofstream out(path);
    out << text;
  };
  const auto message_of = [&]() -> std::string {
    try {
      ingest_external(path, basis);
      return "";
    } catch (const ValidationError& e) {
      return e.what();
    }
  };

  write("");
  CHECK_THROWS_AS(ingest_external(path, basis), ValidationError);

  // Missing column: the error names the absent operator.
  write("X0,X1,X2,Z0 Z1\n0,0,0,0\n");
  CHECK(message_of().find("Z1 Z2") != std::string::npos);

  // Unknown extra column.
  write("X0,X1,X2,Z0 Z1,Z1 Z2,Y0\n0,0,0,0,0,0\n");
  CHECK(message_of().find("Y0") != std::string::npos);

  // Header only, no data.
  write("X0,X1,X2,Z0 Z1,Z1 Z2\n");
  CHECK_THROWS_AS(ingest_external(path, basis), ValidationError);

  // Unparseable cell: coordinates use 1-based data rows and name the column.
  write("X0,X1,X2,Z0 Z1,Z1 Z2\n0,0,0,0,0\n0,0,oops,0,0\n");
  {
    const std::string msg = message_of();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("X2") != std::string::npos);
  }

  // Implausible magnitude for an expectation difference.
  write("X0,X1,X2,Z0 Z1,Z1 Z2\n0,0,0,0,9000\n");
  {
    const std::string msg = message_of();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("Z1 Z2") != std::string::npos);
  }

  // Short row.
  write("X0,X1,X2,Z0 Z1,Z1 Z2\n0,0,0\n");
  CHECK(message_of().find("row 1") != std::string::npos);

  std::remove(path.c_str());
  CHECK_THROWS_AS(ingest_external("no_such_file.csv", basis), ValidationError);
}

TEST_CASE("verify battery reports every property as passing") {
  std::ostringstream log;
  const int failures = run_verify_battery(log);
  CHECK(failures == 0);
  const std::string text = log.str();
  CHECK(text.find("[ ok ]") != std::string::npos);
  CHECK(text.find("[FAIL]") == std::string::npos);
  // At least six independent properties are exercised.
  int count = 0;
  for (std::size_t at = text.find("[ ok ]"); at != std::string::npos;
       at = text.find("[ ok ]", at + 1))
    ++count;
  CHECK(count >= 6);
}

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

#include "qtomo/harness.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qtomo/moments.hpp"
#include "qtomo/rng.hpp"
#include "qtomo/spectral.hpp"

namespace qtomo {

namespace {

bool uniform_family(ModelFamily family) {
  switch (family) {
    case ModelFamily::tfim_yy:
    case ModelFamily::ising_lt:
    case ModelFamily::heisenberg:
      return true;
    case ModelFamily::random_tfim:
    case ModelFamily::random_local:
      return false;
  }
  throw ValidationError("unknown model family");
}

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError("unknown key '" + item.key() + "' in " + where);
  }
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["model"] = {{"family", to_string(cfg.model.family)},
                {"sites", cfg.model.site_count},
                {"boundary", to_string(cfg.model.boundary)},
                {"coupling_seed", cfg.model.coupling_seed},
                {"range", {{"lo", cfg.model.range.lo}, {"hi", cfg.model.range.hi}}}};
  j["ensemble"] = to_string(cfg.ensemble);
  j["protocol"] = to_string(cfg.protocol);
  j["times"] = cfg.times;
  j["pair_counts"] = cfg.pair_counts;
  j["epsilons"] = cfg.epsilons;
  j["realizations"] = cfg.realizations;
  j["master_seed"] = cfg.master_seed;
  j["output_path"] = cfg.output_path;
  j["format"] = cfg.format;
  j["orders"] = cfg.orders;
  j["starts"] = cfg.starts;
  j["extra_ratio"] = cfg.extra_ratio;
  j["bins"] = cfg.bins;
  j["histogram_lo"] = cfg.histogram_lo;
  j["histogram_hi"] = cfg.histogram_hi;
  return j;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.times.empty()) throw ValidationError("times must be non-empty");
  if (cfg.pair_counts.empty())
    throw ValidationError("pair_counts must be non-empty");
  if (cfg.epsilons.empty()) throw ValidationError("epsilons must be non-empty");
  for (const int p : cfg.pair_counts)
    if (p < 1) throw ValidationError("pair counts must be >= 1");
  for (const double e : cfg.epsilons)
    if (!(e >= 0.0)) throw ValidationError("epsilons must be >= 0");
  for (const double t : cfg.times)
    if (!std::isfinite(t)) throw ValidationError("times must be finite");
  if (cfg.realizations < 1)
    throw ValidationError("realizations must be >= 1");
  if (cfg.starts < 1) throw ValidationError("starts must be >= 1");
  if (cfg.orders.empty()) throw ValidationError("orders must be non-empty");
  for (const int m : cfg.orders)
    if (m < 1) throw ValidationError("orders must be >= 1");
  if (!(cfg.extra_ratio >= 0.0))
    throw ValidationError("extra_ratio must be >= 0");
  if (cfg.bins < 1) throw ValidationError("bins must be >= 1");
  if (!(cfg.histogram_lo < cfg.histogram_hi))
    throw ValidationError("histogram range must be ascending");
}

std::vector<std::string> protocol_columns(const ExperimentConfig& cfg) {
  switch (cfg.protocol) {
    case Protocol::multi_quench:
    case Protocol::time_slice:
      return {"fidelity", "error", "gap", "ambiguous"};
    case Protocol::single_quench:
      return {"clusters", "top_multiplicity", "truth_error", "converged"};
    case Protocol::robustness:
      return {"error", "bound", "within_bound", "extra_norm", "total_gap"};
    case Protocol::gap_sweep:
      return {"gap", "s_min", "s_second"};
    case Protocol::spectrum: {
      std::vector<std::string> cols{"lambda_min", "lambda_second", "lambda_max",
                                    "below", "above"};
      for (int b = 0; b < cfg.bins; ++b)
        cols.push_back("bin_" + std::to_string(b));
      return cols;
    }
  }
  throw ValidationError("unknown protocol");
}

std::vector<QuenchPair> draw_pairs(const EnsembleSpec& ensemble,
                                   const EigenSystem& eig, double time,
                                   int count) {
  std::vector<QuenchPair> pairs;
  pairs.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i)
    pairs.push_back(
        make_quench_pair(sample_state(ensemble, std::uint64_t(i)), eig, time));
  return pairs;
}

/// One realization of one sweep point. Seeding contract: couplings derive
/// from (model.coupling_seed, couplings stream, r); states from a
/// realization-scoped ensemble seed (master_seed, split stream, r) indexed
/// by pair number; noise and solver starts from (master_seed, sweep, r).
std::vector<double> evaluate_realization(const ExperimentConfig& cfg,
                                         double time, int pair_count,
                                         double epsilon, int sweep_index,
                                         int realization,
                                         const NumericsPolicy& policy) {
  const std::uint64_t r = std::uint64_t(realization);
  ModelSpec rspec = cfg.model;
  rspec.coupling_seed =
      derive_seed(cfg.model.coupling_seed, kStreamCouplings, r);
  const HamiltonianSpec ham = instantiate_model(rspec);
  const EnsembleSpec ensemble{cfg.ensemble, cfg.model.site_count,
                              derive_seed(cfg.master_seed, kStreamSplit, r)};
  const std::uint64_t point_seed =
      derive_seed(cfg.master_seed, std::uint64_t(sweep_index), r);

  switch (cfg.protocol) {
    case Protocol::multi_quench:
    case Protocol::time_slice: {
      const EigenSystem eig = diagonalize(assemble(ham, policy), policy);
      ConstraintMatrix m =
          cfg.protocol == Protocol::multi_quench
              ? build_constraint_matrix(
                    ham.basis, draw_pairs(ensemble, eig, time, pair_count),
                    policy)
              : time_slice_baseline(ham.basis, eig, sample_state(ensemble, 0),
                                    time, pair_count, policy);
      if (epsilon > 0.0) m = inject_error(m, {epsilon, point_seed});
      ReconstructionResult res = solve_kernel(m);
      score_against(res, ham.couplings);
      return {res.fidelity, res.error, res.gap,
              res.ambiguous_kernel ? 1.0 : 0.0};
    }

    case Protocol::single_quench: {
      const EigenSystem eig = diagonalize(assemble(ham, policy), policy);
      const bool grouped = uniform_family(cfg.model.family);
      const StateVector probe =
          grouped ? translation_invariant_bloch_state(cfg.model.site_count,
                                                      ensemble.seed, 0)
                  : sample_state(ensemble, 0);
      const QuenchPair pair = make_quench_pair(probe, eig, time);
      const ObservableSet obs =
          grouped ? ObservableSet::from_groups(translated_sum_basis(rspec))
                  : ObservableSet::from_basis(ham.basis);
      std::vector<MomentTensor> tensors;
      for (const int order : cfg.orders)
        tensors.push_back(build_moment_tensor(order, obs, pair, policy));
      SolveOptions options;
      options.starts = cfg.starts;
      options.seed = point_seed;
      const Eigen::VectorXd truth =
          (grouped ? family_couplings(rspec) : ham.couplings).normalized();
      SolveDiagnostics diag;
      // Reported clusters are the spectrally generic ones; block-degenerate
      // directions solve the moment system for any data and carry no signal.
      const std::vector<SolutionCluster> clusters = generic_clusters(
          solve_system(tensors, options, nullptr, &diag), tensors, obs, {},
          &truth);
      // An empty cluster list scores the worst possible direction error.
      return {double(clusters.size()),
              clusters.empty() ? 0.0 : double(clusters[0].multiplicity),
              clusters.empty()
                  ? 1.0
                  : score(clusters[0].representative, truth).error,
              diag.total_starts > 0
                  ? double(diag.converged_starts) / double(diag.total_starts)
                  : 0.0};
    }

    case Protocol::robustness: {
      const int sites = cfg.model.site_count;
      if (sites < 3)
        throw ValidationError("robustness extras need >= 3 sites");
      std::vector<PauliString> triples;
      for (int i = 0; i + 2 < sites; ++i)
        triples.push_back(PauliString::single(sites, i, PauliLetter::Z) *
                          PauliString::single(sites, i + 1, PauliLetter::X) *
                          PauliString::single(sites, i + 2, PauliLetter::Z));
      RandomStream extra_rng(rspec.coupling_seed, kStreamCouplings, 1);
      Eigen::VectorXd extra_c(Eigen::Index(triples.size()));
      for (Eigen::Index k = 0; k < extra_c.size(); ++k)
        extra_c[k] = extra_rng.uniform(-1.0, 1.0);
      if (extra_c.norm() > 0.0)
        extra_c *= cfg.extra_ratio * ham.couplings.norm() / extra_c.norm();
      const AnsatzSplit split{
          ham, {OperatorBasis::from_strings(triples), extra_c}};

      const EigenSystem combined = diagonalize(
          assemble(split.kept, policy) + assemble(split.extra, policy), policy);
      std::optional<ErrorModel> em;
      if (epsilon > 0.0) em = ErrorModel{epsilon, point_seed};
      const RobustnessRecord rec = robustness_experiment(
          split, draw_pairs(ensemble, combined, time, pair_count), em, policy);
      return {rec.error, rec.bound, rec.within_bound ? 1.0 : 0.0,
              rec.extra_norm, rec.total_gap};
    }

    case Protocol::gap_sweep: {
      // Clean-spectrum sweep; the epsilon axis is ignored by design.
      const EigenSystem eig = diagonalize(assemble(ham, policy), policy);
      const ConstraintMatrix m = build_constraint_matrix(
          ham.basis, draw_pairs(ensemble, eig, time, pair_count), policy);
      const ReconstructionResult res = solve_kernel(m);
      const Eigen::Index n = res.singular_values.size();
      return {singular_gap(m), res.singular_values[n - 1],
              res.singular_values[n - 2]};
    }

    case Protocol::spectrum: {
      const EigenSystem eig = diagonalize(assemble(ham, policy), policy);
      const Eigen::MatrixXd cov = covariance_estimate(
          ham.basis, eig, time, ensemble, pair_count, policy);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
      const Eigen::VectorXd& ev = es.eigenvalues();
      const Histogram h =
          make_histogram(ev, cfg.bins, cfg.histogram_lo, cfg.histogram_hi);
      std::vector<double> out{ev[0], ev[1], ev[ev.size() - 1],
                              double(h.below), double(h.above)};
      for (const int count : h.counts) out.push_back(double(count));
      return out;
    }
  }
  throw ValidationError("unknown protocol");
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trimmed(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trimmed(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::multi_quench: return "multi_quench";
    case Protocol::time_slice: return "time_slice";
    case Protocol::single_quench: return "single_quench";
    case Protocol::robustness: return "robustness";
    case Protocol::gap_sweep: return "gap_sweep";
    case Protocol::spectrum: return "spectrum";
  }
  throw ValidationError("unknown protocol");
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "multi_quench") return Protocol::multi_quench;
  if (s == "time_slice") return Protocol::time_slice;
  if (s == "single_quench") return Protocol::single_quench;
  if (s == "robustness") return Protocol::robustness;
  if (s == "gap_sweep") return Protocol::gap_sweep;
  if (s == "spectrum") return Protocol::spectrum;
  throw ValidationError("unknown protocol '" + s + "'");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a json object");
  check_keys(j,
             {"model", "ensemble", "protocol", "times", "pair_counts",
              "epsilons", "realizations", "master_seed", "output_path",
              "format", "orders", "starts", "extra_ratio", "bins",
              "histogram_lo", "histogram_hi"},
             "config");

  ExperimentConfig cfg;
  try {
    if (j.contains("model")) {
      const nlohmann::json& m = j["model"];
      if (!m.is_object()) throw ValidationError("model must be an object");
      check_keys(m, {"family", "sites", "boundary", "coupling_seed", "range"},
                 "model");
      if (m.contains("family"))
        cfg.model.family = model_family_from_string(m["family"].get<std::string>());
      if (m.contains("sites")) cfg.model.site_count = m["sites"].get<int>();
      if (m.contains("boundary"))
        cfg.model.boundary = boundary_from_string(m["boundary"].get<std::string>());
      if (m.contains("coupling_seed"))
        cfg.model.coupling_seed = m["coupling_seed"].get<std::uint64_t>();
      if (m.contains("range")) {
        const nlohmann::json& range = m["range"];
        check_keys(range, {"lo", "hi"}, "model.range");
        if (range.contains("lo")) cfg.model.range.lo = range["lo"].get<double>();
        if (range.contains("hi")) cfg.model.range.hi = range["hi"].get<double>();
      }
    }
    if (j.contains("ensemble"))
      cfg.ensemble = ensemble_kind_from_string(j["ensemble"].get<std::string>());
    if (j.contains("protocol"))
      cfg.protocol = protocol_from_string(j["protocol"].get<std::string>());
    if (j.contains("times")) cfg.times = j["times"].get<std::vector<double>>();
    if (j.contains("pair_counts"))
      cfg.pair_counts = j["pair_counts"].get<std::vector<int>>();
    if (j.contains("epsilons"))
      cfg.epsilons = j["epsilons"].get<std::vector<double>>();
    if (j.contains("realizations"))
      cfg.realizations = j["realizations"].get<int>();
    if (j.contains("master_seed"))
      cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("output_path"))
      cfg.output_path = j["output_path"].get<std::string>();
    if (j.contains("format")) cfg.format = j["format"].get<std::string>();
    if (j.contains("orders")) cfg.orders = j["orders"].get<std::vector<int>>();
    if (j.contains("starts")) cfg.starts = j["starts"].get<int>();
    if (j.contains("extra_ratio"))
      cfg.extra_ratio = j["extra_ratio"].get<double>();
    if (j.contains("bins")) cfg.bins = j["bins"].get<int>();
    if (j.contains("histogram_lo"))
      cfg.histogram_lo = j["histogram_lo"].get<double>();
    if (j.contains("histogram_hi"))
      cfg.histogram_hi = j["histogram_hi"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config field has the wrong type: ") +
                          e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return from_json_text(text.str());
}

std::string ExperimentConfig::to_json_text() const {
  return config_json(*this).dump(2);
}

std::string config_template() {
  return R"({
  // Model family: tfim_yy | ising_lt | heisenberg | random_tfim | random_local.
  // Couplings are drawn uniformly from range; realization r reseeds them.
  "model": {
    "family": "random_tfim",
    "sites": 6,
    "boundary": "open",
    "coupling_seed": 1,
    "range": { "lo": -1.0, "hi": 1.0 }
  },
  // Initial-state ensemble: bloch_product | xyz_product | haar.
  "ensemble": "bloch_product",
  // multi_quench | time_slice | single_quench | robustness | gap_sweep | spectrum.
  "protocol": "multi_quench",
  // Sweep axes: every (time, pairs, epsilon) combination is one output row.
  "times": [1.0],
  "pair_counts": [40],
  "epsilons": [0.0, 0.05],
  // Model instances averaged per sweep point.
  "realizations": 20,
  // States and noise derive from this seed; coupling draws do not.
  "master_seed": 7,
  // Empty path prints to stdout. Formats: csv | json.
  "output_path": "",
  "format": "csv",
  // single_quench only: moment tensor orders and solver starts.
  "orders": [1, 2, 3],
  "starts": 500,
  // robustness only: out-of-ansatz coupling norm relative to the kept one.
  "extra_ratio": 0.05,
  // spectrum only: eigenvalue histogram shape.
  "bins": 50,
  "histogram_lo": 0.0,
  "histogram_hi": 0.5
})";
}

RunOutput run_experiment(const ExperimentConfig& config, int workers,
                         const NumericsPolicy& policy) {
  validate_config(config);
  if (workers < 1) throw ValidationError("worker count must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const std::vector<std::string> columns = protocol_columns(config);
  RunOutput out;
  int sweep_index = 0;
  for (const double time : config.times) {
    for (const int pair_count : config.pair_counts) {
      for (const double epsilon : config.epsilons) {
        std::vector<std::vector<double>> slots(
            std::size_t(config.realizations));
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const auto work = [&] {
          while (true) {
            const int r = next.fetch_add(1);
            if (r >= config.realizations) break;
            try {
              slots[std::size_t(r)] = evaluate_realization(
                  config, time, pair_count, epsilon, sweep_index, r, policy);
            } catch (...) {
              const std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
              break;
            }
          }
        };
        const int pool_size = std::min(workers, config.realizations);
        if (pool_size <= 1) {
          work();
        } else {
          std::vector<std::thread> pool;
          pool.reserve(std::size_t(pool_size));
          for (int w = 0; w < pool_size; ++w) pool.emplace_back(work);
          for (std::thread& t : pool) t.join();
        }
        if (first_error) std::rethrow_exception(first_error);

        ResultRow row;
        row.time = time;
        row.pairs = pair_count;
        row.epsilon = epsilon;
        row.realizations = config.realizations;
        for (std::size_t c = 0; c < columns.size(); ++c) {
          double sum = 0.0;
          for (const std::vector<double>& slot : slots) sum += slot[c];
          row.values.emplace_back(columns[c],
                                  sum / double(config.realizations));
        }
        out.rows.push_back(std::move(row));
        ++sweep_index;
      }
    }
  }
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

std::string render_rows(const ExperimentConfig& config, const RunOutput& out,
                        const std::string& format) {
  if (format != "csv" && format != "json")
    throw ValidationError("unknown output format '" + format + "'");

  if (format == "json") {
    nlohmann::json j;
    j["version"] = QTOMO_VERSION;
    j["generated"] = timestamp_utc();
    j["elapsed_seconds"] = out.elapsed_seconds;
    j["config"] = config_json(config);
    nlohmann::json rows = nlohmann::json::array();
    for (const ResultRow& row : out.rows) {
      nlohmann::json r;
      r["time"] = row.time;
      r["pairs"] = row.pairs;
      r["epsilon"] = row.epsilon;
      r["realizations"] = row.realizations;
      nlohmann::json values;
      for (const auto& [name, value] : row.values) values[name] = value;
      r["values"] = values;
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
  }

  std::ostringstream csv;
  char buf[64];
  csv << "# qtomo " << QTOMO_VERSION << " run\n";
  csv << "# config " << config_json(config).dump() << "\n";
  std::snprintf(buf, sizeof(buf), "%.6f", out.elapsed_seconds);
  csv << "# generated " << timestamp_utc() << " elapsed " << buf << "s\n";
  csv << "time,pairs,epsilon,realizations";
  if (!out.rows.empty())
    for (const auto& [name, value] : out.rows.front().values)
      csv << "," << name;
  csv << "\n";
  for (const ResultRow& row : out.rows) {
    std::snprintf(buf, sizeof(buf), "%.12g", row.time);
    csv << buf << "," << row.pairs << ",";
    std::snprintf(buf, sizeof(buf), "%.12g", row.epsilon);
    csv << buf << "," << row.realizations;
    for (const auto& [name, value] : row.values) {
      std::snprintf(buf, sizeof(buf), "%.12g", value);
      csv << "," << buf;
    }
    csv << "\n";
  }
  return csv.str();
}

std::string emit_rows(const ExperimentConfig& config, const RunOutput& out,
                      const std::string& path_override,
                      const std::string& format_override) {
  const std::string path =
      path_override.empty() ? config.output_path : path_override;
  const std::string format =
      format_override.empty() ? config.format : format_override;
  const std::string text = render_rows(config, out, format);
  if (path.empty()) {
    std::cout << text;
    return "";
  }
  std::ofstream file(path);
  if (!file) throw ValidationError("cannot open " + path + " for writing");
  file << text;
  return path;
}

ConstraintMatrix ingest_external(const std::string& csv_path,
                                 const OperatorBasis& basis) {
  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open " + csv_path);

  std::string line;
  if (!std::getline(in, line) || trimmed(line).empty())
    throw ValidationError(csv_path + " has no header row");
  const std::vector<std::string> header = split_csv_line(line);

  std::map<std::string, int> position;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!position.emplace(header[c], int(c)).second)
      throw ValidationError("duplicate column '" + header[c] + "'");

  std::set<std::string> known;
  std::vector<int> order(std::size_t(basis.size()), -1);
  for (int a = 0; a < basis.size(); ++a) {
    const std::string name = basis.term(a).str();
    known.insert(name);
    const auto hit = position.find(name);
    if (hit == position.end())
      throw ValidationError("column for " + name + " missing from " + csv_path);
    order[std::size_t(a)] = hit->second;
  }
  for (const std::string& name : header)
    if (!known.count(name))
      throw ValidationError("unknown column '" + name + "' in " + csv_path);

  std::vector<std::vector<double>> rows;
  int data_row = 0;
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(data_row) + " has " +
                            std::to_string(cells.size()) +
                            " cells; expected " +
                            std::to_string(header.size()));
    std::vector<double> parsed(std::size_t(basis.size()));
    for (int a = 0; a < basis.size(); ++a) {
      const std::string& cell = cells[std::size_t(order[std::size_t(a)])];
      const std::string where = "row " + std::to_string(data_row) +
                                ", column " + basis.term(a).str();
      char* end = nullptr;
      const double value = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw ValidationError(where + ": cannot parse '" + cell + "'");
      // Expectation differences of Pauli sums of unit weight live in
      // [-2, 2]; allow headroom for additive measurement noise.
      if (!std::isfinite(value) || std::abs(value) > 3.0)
        throw ValidationError(where + ": entry " + cell +
                              " outside the plausible range [-3, 3]");
      parsed[std::size_t(a)] = value;
    }
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw ValidationError(csv_path + " has no data rows");

  ConstraintMatrix m;
  m.entries.resize(Eigen::Index(rows.size()), basis.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int a = 0; a < basis.size(); ++a)
      m.entries(Eigen::Index(i), a) = rows[i][std::size_t(a)];
  return m;
}

int run_verify_battery(std::ostream& log) {
  int failures = 0;
  const auto item = [&](const char* name, auto&& property) {
    bool ok = false;
    try {
      ok = property();
    } catch (...) {
      ok = false;
    }
    log << (ok ? "[ ok ] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  item("pauli products carry exact phases", [] {
    const PauliString x = PauliString::single(1, 0, PauliLetter::X);
    const PauliString y = PauliString::single(1, 0, PauliLetter::Y);
    const PauliString z = PauliString::single(1, 0, PauliLetter::Z);
    return (x * y) == z.with_phase(1) && (y * x) == z.with_phase(3) &&
           (x * x) == PauliString::identity(1);
  });

  item("unitary evolution preserves the norm", [] {
    const ModelSpec spec{ModelFamily::random_tfim, 3, Boundary::open, 1, {}};
    const EigenSystem eig = diagonalize(assemble(instantiate_model(spec)));
    const StateVector state = sample_state({EnsembleKind::haar, 3, 2}, 0);
    return std::abs(evolve(state, eig, 1.7).norm() - 1.0) < 1e-10;
  });

  item("noiseless quenches pin the coupling kernel", [] {
    const ModelSpec spec{ModelFamily::random_tfim, 3, Boundary::open, 2, {}};
    const HamiltonianSpec ham = instantiate_model(spec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const EnsembleSpec ens{EnsembleKind::bloch_product, 3, 5};
    std::vector<QuenchPair> pairs;
    for (int i = 0; i < 2 * ham.basis.size(); ++i)
      pairs.push_back(
          make_quench_pair(sample_state(ens, std::uint64_t(i)), eig, 1.0));
    ReconstructionResult res = solve_kernel(build_constraint_matrix(ham.basis, pairs));
    score_against(res, ham.couplings);
    return res.error < 1e-7 && res.gap > 0.0;
  });

  item("noisy reconstruction stays within its error bound", [] {
    const ModelSpec spec{ModelFamily::random_tfim, 3, Boundary::open, 6, {}};
    const HamiltonianSpec ham = instantiate_model(spec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const EnsembleSpec ens{EnsembleKind::bloch_product, 3, 8};
    const int pair_count = 4 * ham.basis.size();
    std::vector<QuenchPair> pairs;
    for (int i = 0; i < pair_count; ++i)
      pairs.push_back(
          make_quench_pair(sample_state(ens, std::uint64_t(i)), eig, 1.0));
    const ConstraintMatrix clean = build_constraint_matrix(ham.basis, pairs);
    const ErrorModel em{0.02, 9};
    ReconstructionResult res = solve_kernel(inject_error(clean, em));
    score_against(res, ham.couplings);
    const ErrorBoundReport report = error_bound_report(
        res.error, singular_gap(clean), em, ham.basis.size(), pair_count);
    return report.applicable && res.error <= report.bound;
  });

  item("moment closure accepts genuine evolution", [] {
    const ModelSpec spec{ModelFamily::random_local, 3, Boundary::open, 3, {}};
    const Eigen::MatrixXcd h = assemble(instantiate_model(spec));
    const QuenchPair pair = make_quench_pair(
        sample_state({EnsembleKind::bloch_product, 3, 7}, 0), diagonalize(h),
        1.1);
    return moment_closure_check(h, pair);
  });

  item("heisenberg expansion conserves weight", [] {
    const ModelSpec spec{ModelFamily::random_tfim, 2, Boundary::open, 4, {}};
    const HamiltonianSpec ham = instantiate_model(spec);
    const OperatorExpansion e =
        expand_operator(0, ham.basis, diagonalize(assemble(ham)), 0.9);
    return std::abs(e.completeness - 1.0) < 1e-8;
  });

  item("scale recovery inverts a known magnitude", [] {
    const ModelSpec spec{ModelFamily::random_local, 3, Boundary::open, 5, {}};
    const HamiltonianSpec ham = instantiate_model(spec);
    const EigenSystem eig = diagonalize(assemble(ham));
    const QuenchPair pair = make_quench_pair(
        sample_state({EnsembleKind::bloch_product, 3, 9}, 0), eig, 0.1);
    const ScaleRecovery rec =
        recover_scale(ham.couplings.normalized(), ham.basis, pair);
    return rec.ok &&
           std::abs(rec.scale - ham.couplings.norm()) <
               1e-6 * ham.couplings.norm();
  });

  item("histograms conserve their sample count", [] {
    Eigen::VectorXd values(5);
    values << -1.0, 0.1, 0.5, 0.97, 2.0;
    const Histogram h = make_histogram(values, 8, 0.0, 1.0);
    int total = h.below + h.above;
    for (const int c : h.counts) total += c;
    return total == 5;
  });

  return failures;
}

}  // namespace qtomo

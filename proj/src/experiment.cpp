/*
 * Copyright 2026 The Fedsniff Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace fs = std::filesystem;

namespace fedsniff::exp {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kTagAlloc = 0xA110C;
constexpr std::uint64_t kTagInit = 0x1217;
constexpr std::uint64_t kTagBankRound = 0xA0B;

// --- small string / number helpers -----------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& part : split(v, ',')) out.push_back(parse_int(key, trim(part)));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& part : split(v, ',')) out.push_back(parse_double(key, trim(part)));
  return out;
}

std::string fmt_double(double v) {  // round-trips exactly
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_csv(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += fmt_double(v[i]);
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  return f;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& expected_header) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty CSV: " + path);
  if (trim(line) != expected_header) throw DataError("unexpected CSV header in " + path);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(trim(line), ','));
  }
  return rows;
}

}  // namespace

// --- config -----------------------------------------------------------------

std::string DatasetSpec::id() const {
  if (kind == Kind::Synthetic) {
    return "synthetic(k=" + std::to_string(synthetic_k) + ",dim=" + std::to_string(synthetic_dim) +
           ",per_class=" + std::to_string(synthetic_per_class) +
           ",spread=" + fmt_double(synthetic_spread) + ")";
  }
  return "mnist(" + mnist_images + ")";
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  sim::FLConfig& fl = cfg.fl;
  DatasetSpec& ds = cfg.dataset;
  if (key == "dataset") {
    if (value == "synthetic") {
      ds.kind = DatasetSpec::Kind::Synthetic;
    } else if (value == "mnist") {
      ds.kind = DatasetSpec::Kind::Mnist;
    } else {
      throw ConfigError("dataset: must be synthetic or mnist, got '" + value + "'");
    }
  } else if (key == "synthetic_k") {
    ds.synthetic_k = parse_int(key, value);
  } else if (key == "synthetic_dim") {
    ds.synthetic_dim = parse_int(key, value);
  } else if (key == "synthetic_per_class") {
    ds.synthetic_per_class = parse_int(key, value);
  } else if (key == "synthetic_spread") {
    ds.synthetic_spread = parse_double(key, value);
  } else if (key == "mnist_images") {
    ds.mnist_images = value;
  } else if (key == "mnist_labels") {
    ds.mnist_labels = value;
  } else if (key == "model") {
    cfg.model = value;
  } else if (key == "n_participants") {
    fl.n_participants = parse_int(key, value);
  } else if (key == "selection_fraction") {
    fl.selection_fraction = parse_double(key, value);
  } else if (key == "local_batch_size") {
    fl.local_batch_size = parse_int(key, value);
  } else if (key == "local_lr") {
    fl.local_lr = parse_double(key, value);
  } else if (key == "local_epochs") {
    fl.local_epochs = parse_int(key, value);
  } else if (key == "avg_labels_per_client") {
    fl.avg_labels_per_client = parse_double(key, value);
  } else if (key == "rounds") {
    fl.rounds = parse_int(key, value);
  } else if (key == "seed") {
    fl.seed = parse_u64(key, value);
  } else if (key == "compression_rate") {
    fl.compression_rate = parse_double(key, value);
  } else if (key == "main_labels_choices") {
    fl.main_labels_choices = parse_int_list(key, value);
  } else if (key == "samples_per_main_label") {
    fl.samples_per_main_label = parse_int(key, value);
  } else if (key == "samples_per_minor_label") {
    fl.samples_per_minor_label = parse_int(key, value);
  } else if (key == "allocation") {
    if (value == "mains") {
      fl.allocation = sim::AllocationMode::Mains;
    } else if (value == "planted") {
      fl.allocation = sim::AllocationMode::Planted;
    } else {
      throw ConfigError("allocation: must be mains or planted, got '" + value + "'");
    }
  } else if (key == "planted_base") {
    fl.planted_base = parse_int(key, value);
  } else if (key == "planted_factors") {
    fl.planted_factors = parse_double_list(key, value);
  } else if (key == "attacker_id") {
    fl.attacker_id = parse_int(key, value);
  } else if (key == "allow_replacement") {
    fl.allow_replacement = parse_bool(key, value);
  } else if (key == "test_samples_per_label") {
    fl.test_samples_per_label = parse_int(key, value);
  } else if (key == "aux_samples_per_label") {
    fl.aux_samples_per_label = parse_int(key, value);
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

namespace {

ExperimentConfig parse_config_lines(std::istream& in, bool allow_meta,
                                    std::map<std::string, std::string>* meta) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (allow_meta && (key == "version" || key == "dataset_id" || key == "used_replacement" ||
                       key == "planted_partition")) {
      if (meta) (*meta)[key] = value;
      continue;
    }
    apply_override(cfg, key, value);
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config_lines(in, false, nullptr);
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_config_lines(f, false, nullptr);
}

std::string config_to_text(const ExperimentConfig& cfg) {
  const sim::FLConfig& fl = cfg.fl;
  const DatasetSpec& ds = cfg.dataset;
  std::ostringstream o;
  o << "dataset = " << (ds.kind == DatasetSpec::Kind::Synthetic ? "synthetic" : "mnist") << "\n";
  o << "synthetic_k = " << ds.synthetic_k << "\n";
  o << "synthetic_dim = " << ds.synthetic_dim << "\n";
  o << "synthetic_per_class = " << ds.synthetic_per_class << "\n";
  o << "synthetic_spread = " << fmt_double(ds.synthetic_spread) << "\n";
  if (!ds.mnist_images.empty()) o << "mnist_images = " << ds.mnist_images << "\n";
  if (!ds.mnist_labels.empty()) o << "mnist_labels = " << ds.mnist_labels << "\n";
  o << "model = " << cfg.model << "\n";
  o << "n_participants = " << fl.n_participants << "\n";
  o << "selection_fraction = " << fmt_double(fl.selection_fraction) << "\n";
  o << "local_batch_size = " << fl.local_batch_size << "\n";
  o << "local_lr = " << fmt_double(fl.local_lr) << "\n";
  o << "local_epochs = " << fl.local_epochs << "\n";
  o << "avg_labels_per_client = " << fmt_double(fl.avg_labels_per_client) << "\n";
  o << "rounds = " << fl.rounds << "\n";
  o << "seed = " << fl.seed << "\n";
  o << "compression_rate = " << fmt_double(fl.compression_rate) << "\n";
  o << "main_labels_choices = " << join_ints(fl.main_labels_choices, ',') << "\n";
  o << "samples_per_main_label = " << fl.samples_per_main_label << "\n";
  o << "samples_per_minor_label = " << fl.samples_per_minor_label << "\n";
  o << "allocation = " << (fl.allocation == sim::AllocationMode::Mains ? "mains" : "planted") << "\n";
  o << "planted_base = " << fl.planted_base << "\n";
  o << "planted_factors = " << join_doubles(fl.planted_factors, ',') << "\n";
  o << "attacker_id = " << fl.attacker_id << "\n";
  o << "allow_replacement = " << (fl.allow_replacement ? "true" : "false") << "\n";
  o << "test_samples_per_label = " << fl.test_samples_per_label << "\n";
  o << "aux_samples_per_label = " << fl.aux_samples_per_label << "\n";
  return o.str();
}

data::LabeledDataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == DatasetSpec::Kind::Synthetic) {
    Rng rng(Rng::mix({cfg.fl.seed, 0xDA7A}));
    return data::gen_synthetic(cfg.dataset.synthetic_k, cfg.dataset.synthetic_dim,
                               cfg.dataset.synthetic_per_class, cfg.dataset.synthetic_spread, rng);
  }
  if (cfg.dataset.mnist_images.empty() || cfg.dataset.mnist_labels.empty()) {
    throw ConfigError("mnist dataset requires mnist_images and mnist_labels");
  }
  return data::load_mnist(cfg.dataset.mnist_images, cfg.dataset.mnist_labels);
}

// --- Simulation ---------------------------------------------------------------

Simulation::Simulation(ExperimentConfig cfg, int threads)
    : cfg_(std::move(cfg)), threads_(threads), ds_(build_dataset(cfg_)) {
  cfg_.fl.validate(ds_.k);
  Rng arng(Rng::mix({cfg_.fl.seed, kTagAlloc}));
  alloc_ = sim::allocate(ds_, cfg_.fl, arng);
  Rng irng(Rng::mix({cfg_.fl.seed, kTagInit}));
  global_ = nn::make_preset(cfg_.model, ds_.feature_dim(), ds_.k, irng);
  previous_ = global_;
  test_idx_ = alloc_.flat_test();
}

sim::RoundTruth Simulation::step() {
  sim::RoundResult res = sim::run_round(global_, ds_, alloc_, cfg_.fl, round_, threads_);
  previous_ = std::move(global_);
  global_ = std::move(res.next_global);
  attacker_delta_ = std::move(res.attacker_delta);
  ++round_;
  return std::move(res.truth);
}

double Simulation::test_accuracy() const {
  if (test_idx_.empty()) return -1.0;
  return nn::accuracy(global_, ds_.samples, ds_.labels, test_idx_);
}

attack::AuxiliaryData Simulation::auxiliary() const {
  return attack::draw_auxiliary(ds_, alloc_.aux_indices);
}

attack::AttackPriors Simulation::priors() const {
  return attack::AttackPriors{cfg_.fl.n_participants, cfg_.fl.selection_fraction,
                              cfg_.fl.avg_labels_per_client};
}

// --- attack driver ------------------------------------------------------------

std::uint64_t bank_seed_for_round(std::uint64_t experiment_seed, int round) {
  return Rng::mix({experiment_seed, kTagBankRound, static_cast<std::uint64_t>(round)});
}

RoundAttackResult attack_round(const nn::Network& g_t, const nn::Network& g_t1,
                               const attack::AuxiliaryData& aux, const attack::AttackPriors& priors,
                               const nn::TrainParams& params, std::uint64_t bank_seed,
                               const AttackOptions& opts, bool want_quantity, int threads) {
  const attack::LocalDeltaBank bank =
      attack::build_delta_bank(g_t, aux, params, bank_seed, -1, threads);
  const attack::SniffThresholds th = attack::sniff_thresholds(bank, priors, opts.margin);
  const nn::UpdateDelta gd = nn::delta(g_t1, g_t);

  RoundAttackResult out;
  const int k = bank.classes();
  out.verdicts.reserve(k);
  for (int label = 0; label < k; ++label) {
    const attack::Verdict v = attack::class_sniff(gd, th, label);
    out.verdicts.push_back(v);
    if (!want_quantity) continue;
    if (v == attack::Verdict::Present) {
      out.estimates.push_back(
          attack::quantity_infer(gd, bank, priors, label, opts.th_r, opts.abort_k));
    } else {
      attack::QuantityEstimate zero;
      zero.label = label;  // sniffed absent: estimate 0 without running the inversion
      out.estimates.push_back(zero);
    }
  }
  return out;
}

// --- run directories ------------------------------------------------------------

std::string RunPaths::model(int index) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "/round_%04d.fsnn", index);
  return models() + buf;
}

std::string format_partition(const eval::Partition& p) {
  const eval::Partition n = eval::normalize_partition(p);
  std::string out;
  for (std::size_t g = 0; g < n.size(); ++g) {
    if (g) out += '|';
    out += join_ints(n[g], ' ');
  }
  return out;
}

eval::Partition parse_partition(const std::string& s) {
  eval::Partition p;
  for (const std::string& group : split(s, '|')) {
    std::vector<int> g;
    for (const std::string& tok : split(trim(group), ' ')) {
      if (!trim(tok).empty()) g.push_back(parse_int("partition", trim(tok)));
    }
    if (!g.empty()) p.push_back(g);
  }
  return eval::normalize_partition(p);
}

eval::Partition planted_partition(const std::vector<int>& planted_group) {
  int n_groups = 0;
  for (int g : planted_group) n_groups = std::max(n_groups, g + 1);
  eval::Partition p(n_groups);
  for (std::size_t l = 0; l < planted_group.size(); ++l) {
    p[planted_group[l]].push_back(static_cast<int>(l));
  }
  return eval::normalize_partition(p);
}

std::optional<int> stage_round(const std::vector<double>& accuracies, const std::string& stage) {
  double threshold;
  bool strict;
  if (stage == "middle") {
    threshold = 0.5;
    strict = false;
  } else if (stage == "late") {
    threshold = 0.85;
    strict = true;
  } else {
    throw ConfigError("unknown stage: '" + stage + "' (middle or late)");
  }
  for (std::size_t r = 0; r < accuracies.size(); ++r) {
    if (strict ? accuracies[r] > threshold : accuracies[r] >= threshold) {
      return static_cast<int>(r);
    }
  }
  return std::nullopt;
}

void cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  Simulation sim(cfg, threads);
  RunPaths paths{out_dir};
  fs::create_directories(paths.models());

  {
    std::ofstream m = open_out(paths.manifest());
    m << "# fedsniff run manifest\n";
    m << "version = " << kVersion << "\n";
    m << "dataset_id = " << sim.config().dataset.id() << "\n";
    m << "used_replacement = " << (sim.allocation().used_replacement ? 1 : 0) << "\n";
    if (sim.config().fl.allocation == sim::AllocationMode::Planted) {
      m << "planted_partition = " << format_partition(planted_partition(sim.allocation().planted_group))
        << "\n";
    }
    m << config_to_text(sim.config());
  }
  {
    std::ofstream a = open_out(paths.aux());
    a << "label,index\n";
    for (std::size_t l = 0; l < sim.allocation().aux_indices.size(); ++l) {
      for (int idx : sim.allocation().aux_indices[l]) a << l << ',' << idx << "\n";
    }
  }

  std::ofstream log = open_out(paths.round_log());
  log << "round,selected_ids,test_accuracy\n";
  std::ofstream truth = open_out(paths.truth());
  truth << "round,label,owner_count\n";

  nn::save(sim.global(), paths.model(0));
  const bool attacker_active = cfg.fl.attacker_id >= 0;
  for (int r = 0; r < cfg.fl.rounds; ++r) {
    const sim::RoundTruth t = sim.step();
    nn::save(sim.global(), paths.model(r + 1));
    log << r << ',' << join_ints(t.selected, ';') << ',' << fmt_csv(sim.test_accuracy()) << "\n";
    for (int l = 0; l < static_cast<int>(t.owner_counts.size()); ++l) {
      truth << r << ',' << l << ',' << t.owner_counts[l] << "\n";
    }
    if (attacker_active && sim.last_attacker_delta()) {
      // What the attacker itself uploaded, recorded on the attacker's side so
      // the attack replay can subtract its own contribution.
      char buf[48];
      std::snprintf(buf, sizeof buf, "/attacker_%04d.fsnd", r);
      nn::save_delta(*sim.last_attacker_delta(), paths.models() + buf);
    }
  }
}

namespace {

struct LoadedRun {
  ExperimentConfig cfg;
  std::map<std::string, std::string> meta;
  RunPaths paths;
};

LoadedRun load_run(const std::string& run_dir) {
  LoadedRun run;
  run.paths = RunPaths{run_dir};
  std::ifstream f(run.paths.manifest());
  if (!f) throw DataError("not a run directory (missing manifest): " + run_dir);
  run.cfg = parse_config_lines(f, true, &run.meta);
  return run;
}

std::vector<std::vector<int>> load_aux_indices(const RunPaths& paths, int k) {
  std::vector<std::vector<int>> out(k);
  for (const auto& row : read_csv(paths.aux(), "label,index")) {
    if (row.size() != 2) throw DataError("bad aux_indices row");
    const int l = parse_int("label", row[0]);
    if (l < 0 || l >= k) throw DataError("aux label out of range");
    out[l].push_back(parse_int("index", row[1]));
  }
  return out;
}

// owner_counts[round][label]
std::vector<std::vector<int>> load_truth(const RunPaths& paths, int rounds, int k) {
  std::vector<std::vector<int>> counts(rounds, std::vector<int>(k, 0));
  for (const auto& row : read_csv(paths.truth(), "round,label,owner_count")) {
    if (row.size() != 3) throw DataError("bad truth row");
    const int r = parse_int("round", row[0]);
    const int l = parse_int("label", row[1]);
    if (r < 0 || r >= rounds || l < 0 || l >= k) throw DataError("truth row out of range");
    counts[r][l] = parse_int("owner_count", row[2]);
  }
  return counts;
}

std::vector<double> load_accuracies(const RunPaths& paths, int rounds) {
  std::vector<double> acc(rounds, -1.0);
  for (const auto& row : read_csv(paths.round_log(), "round,selected_ids,test_accuracy")) {
    if (row.size() != 3) throw DataError("bad round_log row");
    const int r = parse_int("round", row[0]);
    if (r < 0 || r >= rounds) throw DataError("round_log row out of range");
    acc[r] = parse_double("test_accuracy", row[2]);
  }
  return acc;
}

// The attacker's own uploaded update for a round, if it was selected and the
// simulation recorded one.
std::optional<nn::UpdateDelta> load_attacker_delta(const RunPaths& paths, int round) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "/attacker_%04d.fsnd", round);
  const std::string path = paths.models() + buf;
  if (!fs::exists(path)) return std::nullopt;
  return nn::load_delta(path);
}

}  // namespace

void cmd_attack(const std::string& run_dir, const std::string& kind, const AttackOptions& opts,
                const std::string& stage, int threads) {
  const LoadedRun run = load_run(run_dir);
  const data::LabeledDataset ds = build_dataset(run.cfg);
  const int k = ds.k;
  const attack::AuxiliaryData aux = attack::draw_auxiliary(ds, load_aux_indices(run.paths, k));
  const attack::AttackPriors priors{run.cfg.fl.n_participants, run.cfg.fl.selection_fraction,
                                    run.cfg.fl.avg_labels_per_client};
  const int rounds = run.cfg.fl.rounds;

  if (kind == "whole") {
    if (run.cfg.fl.allocation != sim::AllocationMode::Planted) {
      throw UsageError("whole attack reporting requires a planted-allocation run");
    }
    const auto pp = run.meta.find("planted_partition");
    if (pp == run.meta.end()) throw DataError("manifest lacks planted_partition");
    const eval::Partition planted = parse_partition(pp->second);
    const std::vector<double> acc = load_accuracies(run.paths, rounds);

    std::vector<std::string> stages;
    if (stage == "both") {
      stages = {"middle", "late"};
    } else {
      stages = {stage};
    }
    std::ofstream out = open_out(run.paths.whole_report());
    out << "run,stage,planted_partition,found_partition,success\n";
    const std::string run_name = fs::path(run_dir).filename().string();
    for (const std::string& st : stages) {
      const std::optional<int> r = stage_round(acc, st);
      if (!r) {
        throw DataError("accuracy curve never reaches the " + st +
                        " stage; cannot run the whole attack");
      }
      // The model that crossed the stage threshold is the post-round model.
      const nn::Network g = nn::load(run.paths.model(*r + 1));
      const attack::LocalDeltaBank bank = attack::build_delta_bank(
          g, aux, run.cfg.fl.local_params(), bank_seed_for_round(run.cfg.fl.seed, *r), *r, threads);
      const eval::Partition found = attack::whole_determination(bank, opts.linkage, opts.cut);
      out << run_name << ',' << st << ',' << format_partition(planted) << ','
          << format_partition(found) << ',' << (eval::whole_success(found, planted) ? 1 : 0)
          << "\n";
    }
    return;
  }

  if (kind != "sniff" && kind != "quantity") {
    throw ConfigError("unknown attack kind: '" + kind + "' (sniff, quantity or whole)");
  }
  const bool want_quantity = kind == "quantity";
  const std::vector<std::vector<int>> truth = load_truth(run.paths, rounds, k);

  std::ofstream out =
      open_out(want_quantity ? run.paths.quantity_report() : run.paths.sniff_report());
  out << (want_quantity ? "round,label,truth_count,estimate,stddev,aborted\n"
                        : "round,label,truth_present,detected\n");

  nn::Network g_t = nn::load(run.paths.model(0));
  for (int r = 0; r < rounds; ++r) {
    nn::Network g_t1 = nn::load(run.paths.model(r + 1));
    nn::UpdateDelta gd = nn::delta(g_t1, g_t);
    if (const auto own = load_attacker_delta(run.paths, r)) {
      gd = attack::remove_own_contribution(gd, *own, priors);
    }
    const attack::LocalDeltaBank bank = attack::build_delta_bank(
        g_t, aux, run.cfg.fl.local_params(), bank_seed_for_round(run.cfg.fl.seed, r), r, threads);
    const attack::SniffThresholds th = attack::sniff_thresholds(bank, priors, opts.margin);
    for (int label = 0; label < k; ++label) {
      const attack::Verdict v = attack::class_sniff(gd, th, label);
      if (!want_quantity) {
        out << r << ',' << label << ',' << (truth[r][label] > 0 ? 1 : 0) << ','
            << (v == attack::Verdict::Present ? 1 : 0) << "\n";
        continue;
      }
      attack::QuantityEstimate est;
      est.label = label;
      if (v == attack::Verdict::Present) {
        est = attack::quantity_infer(gd, bank, priors, label, opts.th_r, opts.abort_k);
      }
      out << r << ',' << label << ',' << truth[r][label] << ',' << fmt_csv(est.estimate) << ','
          << fmt_csv(est.stddev) << ',' << (est.aborted ? 1 : 0) << "\n";
    }
    g_t = std::move(g_t1);
  }
}

void cmd_sweep(const ExperimentConfig& base, const std::string& axis,
               const std::vector<double>& values, const std::string& out_csv,
               const AttackOptions& opts, const eval::MetricConfig& mc, int threads) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::ofstream out = open_out(out_csv);
  out << "axis,value,sniff_success_rate,quantity_success_rate,aborting_rate,rounds,seed\n";

  for (double value : values) {
    ExperimentConfig cfg = base;
    if (axis == "batch_size") {
      cfg.fl.local_batch_size = static_cast<int>(std::lround(value));
    } else if (axis == "local_epochs") {
      cfg.fl.local_epochs = static_cast<int>(std::lround(value));
    } else if (axis == "selection_fraction") {
      cfg.fl.selection_fraction = value;
    } else if (axis == "n_participants") {
      cfg.fl.n_participants = static_cast<int>(std::lround(value));
    } else if (axis == "compression_rate") {
      cfg.fl.compression_rate = value;
    } else {
      throw ConfigError("unknown sweep axis: '" + axis + "'");
    }

    Simulation sim(cfg, threads);
    const attack::AuxiliaryData aux = sim.auxiliary();
    const attack::AttackPriors priors = sim.priors();
    std::vector<eval::SniffRecord> sniff;
    std::vector<eval::QuantityRecord> quantity;
    for (int r = 0; r < cfg.fl.rounds; ++r) {
      const sim::RoundTruth t = sim.step();
      const RoundAttackResult ar =
          attack_round(sim.previous(), sim.global(), aux, priors, cfg.fl.local_params(),
                       bank_seed_for_round(cfg.fl.seed, r), opts, true, threads);
      for (int l = 0; l < sim.dataset().k; ++l) {
        sniff.push_back({r, l, t.owner_counts[l] > 0,
                         ar.verdicts[l] == attack::Verdict::Present});
        quantity.push_back({r, l, t.owner_counts[l], ar.estimates[l].estimate,
                            ar.estimates[l].stddev, ar.estimates[l].aborted});
      }
    }
    const double s = eval::sniff_success_rate(sniff);
    const eval::QuantityRates q =
        eval::quantity_success_rate(quantity, mc, cfg.fl.selected_count());
    out << axis << ',' << fmt_csv(value) << ',' << fmt_csv(s) << ','
        << (q.success_rate ? fmt_csv(*q.success_rate) : std::string("na")) << ','
        << fmt_csv(q.aborting_rate) << ',' << cfg.fl.rounds << ',' << cfg.fl.seed << "\n";
  }
}

std::string cmd_report(const std::string& run_dir, const eval::MetricConfig& mc) {
  const LoadedRun run = load_run(run_dir);
  const int rounds = run.cfg.fl.rounds;
  const int k = run.cfg.dataset.kind == DatasetSpec::Kind::Synthetic
                    ? run.cfg.dataset.synthetic_k
                    : 10;
  const int m = run.cfg.fl.selected_count();

  std::vector<std::vector<eval::SniffRecord>> sniff_by_label(k);
  std::vector<std::vector<eval::QuantityRecord>> qty_by_label(k);
  bool have_sniff = false;
  bool have_qty = false;

  if (fs::exists(run.paths.sniff_report())) {
    have_sniff = true;
    for (const auto& row : read_csv(run.paths.sniff_report(), "round,label,truth_present,detected")) {
      if (row.size() != 4) throw DataError("bad sniff_report row");
      const int label = parse_int("label", row[1]);
      sniff_by_label.at(label).push_back({parse_int("round", row[0]), label, row[2] == "1",
                                          row[3] == "1"});
    }
  }
  if (fs::exists(run.paths.quantity_report())) {
    have_qty = true;
    for (const auto& row :
         read_csv(run.paths.quantity_report(), "round,label,truth_count,estimate,stddev,aborted")) {
      if (row.size() != 6) throw DataError("bad quantity_report row");
      const int label = parse_int("label", row[1]);
      qty_by_label.at(label).push_back({parse_int("round", row[0]), label,
                                        parse_int("truth_count", row[2]),
                                        parse_double("estimate", row[3]),
                                        parse_double("stddev", row[4]), row[5] == "1"});
    }
  }
  if (!have_sniff && !have_qty) {
    throw DataError("no attack reports in " + run_dir + "; run the attack command first");
  }

  std::ostringstream text;
  std::ofstream csv = open_out(run.paths.report_summary());
  csv << "label,sniff_success_rate,quantity_success_rate,aborting_rate,quantity_evaluated\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-14s %-18s %-14s %s\n", "label", "sniff_success",
                "quantity_success", "aborting_rate", "evaluated");
  text << "run: " << run_dir << " (rounds=" << rounds << ", metric="
       << (mc.mode == eval::MetricConfig::Mode::Absolute ? "abs" : "rel")
       << ", alpha=" << fmt_csv(mc.alpha(m)) << ")\n"
       << "aborted rounds are excluded from the quantity success denominator\n"
       << line;

  auto emit = [&](const std::string& name, const std::vector<eval::SniffRecord>& sr,
                  const std::vector<eval::QuantityRecord>& qr) {
    std::string s_str = "-";
    std::string q_str = "-";
    std::string a_str = "-";
    std::string n_str = "-";
    if (have_sniff && !sr.empty()) {
      char b[32];
      std::snprintf(b, sizeof b, "%.4f", eval::sniff_success_rate(sr));
      s_str = b;
    }
    if (have_qty && !qr.empty()) {
      const eval::QuantityRates rates = eval::quantity_success_rate(qr, mc, m);
      char b[32];
      if (rates.success_rate) {
        std::snprintf(b, sizeof b, "%.4f", *rates.success_rate);
        q_str = b;
      } else {
        q_str = "na";
      }
      std::snprintf(b, sizeof b, "%.4f", rates.aborting_rate);
      a_str = b;
      n_str = std::to_string(rates.evaluated);
    }
    std::snprintf(line, sizeof line, "%-6s %-14s %-18s %-14s %s\n", name.c_str(), s_str.c_str(),
                  q_str.c_str(), a_str.c_str(), n_str.c_str());
    text << line;
    csv << name << ',' << s_str << ',' << q_str << ',' << a_str << ',' << n_str << "\n";
  };

  std::vector<eval::SniffRecord> all_sniff;
  std::vector<eval::QuantityRecord> all_qty;
  for (int l = 0; l < k; ++l) {
    emit(std::to_string(l), sniff_by_label[l], qty_by_label[l]);
    all_sniff.insert(all_sniff.end(), sniff_by_label[l].begin(), sniff_by_label[l].end());
    all_qty.insert(all_qty.end(), qty_by_label[l].begin(), qty_by_label[l].end());
  }
  emit("all", all_sniff, all_qty);
  return text.str();
}

}  // namespace fedsniff::exp

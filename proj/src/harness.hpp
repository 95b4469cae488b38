#pragma once

#include <string>
#include <vector>

#include "adversary.hpp"
#include "net.hpp"
#include "protocol.hpp"

namespace subqba {

enum class InputPreset : uint8_t { All0, All1, Random, Split };

const char* input_preset_name(InputPreset p);

struct ExperimentConfig {
  ProtocolKind protocol = ProtocolKind::Sync12;
  Mode mode = Mode::Committee;
  uint32_t n = 300;
  double epsilon = 0.1;
  uint32_t lambda = 40;
  uint32_t R = 0;       // 0 = default (lambda)
  uint32_t delta = 8;   // psync only
  StrategyKind adversary = StrategyKind::Passive;
  std::vector<NodeId> silence_set;
  bool bit_specific = true;
  bool strongly_adaptive = false;
  bool bb_wrapper = false;
  NodeId bb_sender = 0;
  Bit bb_input = 1;
  InputPreset inputs = InputPreset::Random;
  uint32_t trials = 1;
  uint64_t base_seed = 1;
  Round max_rounds = 0;  // 0 = 50 * lambda * (delta or 1)
  int64_t trace_seed = -1;
  uint32_t threads = 1;

  uint32_t f() const;
  uint32_t effective_R() const { return R == 0 ? lambda : R; }
  Round effective_max_rounds() const;
  void validate() const;  // throws SimError(ConfigError) naming the field
};

enum class Outcome : uint8_t {
  ConsistentValid = 0,
  ConsistencyViolation,
  ValidityViolation,
  NonTermination,
  AttackFailed,
};

const char* outcome_name(Outcome o);

struct TrialReport {
  uint64_t seed = 0;
  Outcome outcome = Outcome::ConsistentValid;
  uint64_t honest_multicasts = 0;
  uint64_t corrupt_sends = 0;
  uint64_t retractions = 0;
  uint32_t rounds = 0;
  uint32_t iterations = 0;
  uint32_t audit_double_cert = 0;
  uint32_t audit_double_commit = 0;
  uint32_t audit_forged_eligibility = 0;
  uint32_t audit_input_forge = 0;
  uint32_t audit_vote_shortfall = 0;
  uint32_t audit_commit_shortfall = 0;
  bool hit_max_rounds = false;
};

struct ExperimentResult {
  std::vector<TrialReport> reports;  // seed order
  std::string trials_csv;
  std::string summary_json;
  std::string trace_jsonl;  // populated when trace_seed was run
  uint64_t violation_count = 0;
};

// Per-node input bits for one trial.
std::vector<Bit> assign_inputs(const ExperimentConfig& cfg, uint64_t seed);

// One world, fully configured from the experiment config.
RunStats run_trial_raw(const ExperimentConfig& cfg, uint64_t seed,
                       bool record_deliveries = false, bool trace = false);

TrialReport classify_trial(const ExperimentConfig& cfg, uint64_t seed, const RunStats& stats);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Protocol-round -> iteration, accounting for the BB wrapper shift.
uint32_t iteration_of_world_round(const ExperimentConfig& cfg, Round r);

// Flat key=value config text. '#' starts a comment.
ExperimentConfig parse_config_text(const std::string& text);
void apply_config_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Wilson 95% score interval.
double wilson_low(uint64_t successes, uint64_t total);
double wilson_high(uint64_t successes, uint64_t total);

}  // namespace subqba

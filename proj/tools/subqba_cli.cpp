// Experiment runner CLI. Talks to the simulator exclusively through the
// public C API in subqba.h.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subqba.h"

namespace {

struct ConfigHandle {
  sq_config* cfg = sq_config_new();
  ~ConfigHandle() { sq_config_free(cfg); }
};

struct ResultHandle {
  sq_result* res = nullptr;
  ~ResultHandle() { sq_result_free(res); }
};

int fail(const char* what, const char* detail) {
  std::fprintf(stderr, "error: %s: %s\n", what, detail);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subqba: committee-sampling Byzantine agreement simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a Monte Carlo experiment");
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  bool quiet = false;
  run->add_option("--config", config_path, "config file (flat key = value)");
  run->add_option("--out", out_dir, "output directory for trials.csv / summary.json");
  run->add_flag("--quiet", quiet, "suppress the summary on stdout");
  // Every config key doubles as a flag of the same name.
  const char* keys[] = {"protocol",   "mode",       "n",          "epsilon",
                        "lambda",     "R",          "delta",      "adversary",
                        "silence_set", "bit_specific", "strongly_adaptive", "bb_wrapper",
                        "bb_sender",  "bb_input",   "inputs",     "trials",
                        "base_seed",  "max_rounds", "trace_seed", "threads"};
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> holders(std::size(keys));
  for (size_t i = 0; i < std::size(keys); ++i) {
    run->add_option(std::string("--") + keys[i], holders[i], "");
  }

  CLI11_PARSE(app, argc, argv);

  char err[512] = {0};
  ConfigHandle cfg;
  if (!config_path.empty()) {
    if (sq_config_load_file(cfg.cfg, config_path.c_str(), err, sizeof err) != SQ_OK) {
      return fail("config", err);
    }
  }
  for (size_t i = 0; i < std::size(keys); ++i) {
    if (!holders[i].empty()) {
      if (sq_config_set(cfg.cfg, keys[i], holders[i].c_str(), err, sizeof err) != SQ_OK) {
        return fail("config", err);
      }
    }
  }
  if (sq_config_validate(cfg.cfg, err, sizeof err) != SQ_OK) return fail("config", err);

  ResultHandle result;
  if (sq_run_experiment(cfg.cfg, &result.res, err, sizeof err) != SQ_OK) {
    return fail("run", err);
  }
  if (sq_result_write(result.res, out_dir.c_str(), err, sizeof err) != SQ_OK) {
    return fail("write", err);
  }
  if (!quiet) std::fputs(sq_result_summary_json(result.res), stdout);

  return sq_result_violation_count(result.res) == 0 ? 0 : 1;
}

#include "subqba.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "harness.hpp"

using namespace subqba;

struct sq_config {
  ExperimentConfig cfg;
};

struct sq_result {
  ExperimentResult res;
  int64_t trace_seed = -1;
};

namespace {

void set_err(char* errbuf, size_t errlen, const char* msg) {
  if (!errbuf || errlen == 0) return;
  std::strncpy(errbuf, msg, errlen - 1);
  errbuf[errlen - 1] = '\0';
}

sq_status status_of(const SimError& e) {
  switch (e.code()) {
    case SimErrc::ConfigError: return SQ_ERR_CONFIG;
    case SimErrc::InvalidArgument: return SQ_ERR_INVALID_ARG;
    case SimErrc::CapabilityDisabled: return SQ_ERR_CAPABILITY;
    case SimErrc::IoError: return SQ_ERR_IO;
    default: return SQ_ERR_INTERNAL;
  }
}

template <typename Fn>
sq_status guarded(char* errbuf, size_t errlen, Fn&& fn) {
  try {
    fn();
    return SQ_OK;
  } catch (const SimError& e) {
    set_err(errbuf, errlen, e.what());
    return status_of(e);
  } catch (const std::exception& e) {
    set_err(errbuf, errlen, e.what());
    return SQ_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* sq_version(void) { return "subqba 1.0.0"; }

sq_config* sq_config_new(void) { return new sq_config(); }

void sq_config_free(sq_config* cfg) { delete cfg; }

sq_status sq_config_load_file(sq_config* cfg, const char* path, char* errbuf, size_t errlen) {
  if (!cfg || !path) {
    set_err(errbuf, errlen, "null argument");
    return SQ_ERR_INVALID_ARG;
  }
  return guarded(errbuf, errlen, [&] {
    std::ifstream in(path);
    if (!in) throw SimError(SimErrc::IoError, std::string("cannot open ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg->cfg = parse_config_text(ss.str());
  });
}

sq_status sq_config_set(sq_config* cfg, const char* key, const char* value, char* errbuf,
                        size_t errlen) {
  if (!cfg || !key || !value) {
    set_err(errbuf, errlen, "null argument");
    return SQ_ERR_INVALID_ARG;
  }
  return guarded(errbuf, errlen, [&] { apply_config_kv(cfg->cfg, key, value); });
}

sq_status sq_config_validate(const sq_config* cfg, char* errbuf, size_t errlen) {
  if (!cfg) {
    set_err(errbuf, errlen, "null argument");
    return SQ_ERR_INVALID_ARG;
  }
  return guarded(errbuf, errlen, [&] { cfg->cfg.validate(); });
}

sq_status sq_run_experiment(const sq_config* cfg, sq_result** out, char* errbuf, size_t errlen) {
  if (!cfg || !out) {
    set_err(errbuf, errlen, "null argument");
    return SQ_ERR_INVALID_ARG;
  }
  *out = nullptr;
  return guarded(errbuf, errlen, [&] {
    auto res = std::make_unique<sq_result>();
    res->res = run_experiment(cfg->cfg);
    res->trace_seed = cfg->cfg.trace_seed;
    *out = res.release();
  });
}

void sq_result_free(sq_result* res) { delete res; }

const char* sq_result_trials_csv(const sq_result* res) {
  return res ? res->res.trials_csv.c_str() : "";
}

const char* sq_result_summary_json(const sq_result* res) {
  return res ? res->res.summary_json.c_str() : "";
}

const char* sq_result_trace_jsonl(const sq_result* res) {
  return res ? res->res.trace_jsonl.c_str() : "";
}

uint64_t sq_result_trial_count(const sq_result* res) {
  return res ? res->res.reports.size() : 0;
}

uint64_t sq_result_violation_count(const sq_result* res) {
  return res ? res->res.violation_count : 0;
}

sq_status sq_result_write(const sq_result* res, const char* out_dir, char* errbuf, size_t errlen) {
  if (!res || !out_dir) {
    set_err(errbuf, errlen, "null argument");
    return SQ_ERR_INVALID_ARG;
  }
  return guarded(errbuf, errlen, [&] {
    const std::string dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    auto write = [&](const std::string& name, const std::string& content) {
      const std::string path = dir + "/" + name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw SimError(SimErrc::IoError, "cannot write " + path);
      out << content;
    };
    write("trials.csv", res->res.trials_csv);
    write("summary.json", res->res.summary_json);
    if (res->trace_seed >= 0 && !res->res.trace_jsonl.empty()) {
      write("trace-" + std::to_string(res->trace_seed) + ".jsonl", res->res.trace_jsonl);
    }
  });
}

}  // extern "C"

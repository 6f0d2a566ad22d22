#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifemine/core.hpp"
#include "lifemine/factorize.hpp"
#include "lifemine/lifestyle.hpp"
#include "lifemine/preprocess.hpp"
#include "lifemine/synth.hpp"

namespace lifemine {

// Raised for malformed or out-of-range configuration; the CLI maps it to
// exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  std::string out_dir;

  // Exactly one of the two inputs.
  std::string dataset_dir;
  std::string synth_spec_path;
  std::string synth_spec_inline;  // JSON text, used when path empty

  ExtensionConfig preprocess;
  bool extend_before_filters = false;

  int stats_top_n = 10;
  bool stats_dedupe = true;

  struct NmfStage {
    int k = 3;
    double tol = 1e-5;
    int max_iter = 500;
  };
  NmfStage temporal;          // k=3 by default
  NmfStage spatial{10, 1e-5, 500};

  struct TensorStage {
    bool enabled = true;
    int k = 12;
    double tol = 1e-5;
    bool relative_tol = false;
    int max_iter = 100;
    CpInit init = CpInit::random;
    int top_p = 100;
    int prune_h = 5;
  };
  TensorStage tensor_hour;
  TensorStage tensor_dow{true, 5, 1e-5, false, 100, CpInit::random, 100, 5};

  ClusterOptions clusters;
  bool emit_svg = false;
  int threads = 1;

  void validate() const;  // throws ConfigError

  // Strict parse: unknown keys are rejected. Accepts either a bare config
  // object or a run manifest (the embedded "config" object is used).
  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct PipelineResult {
  int exit_code = 0;
  std::string failed_stage;
  std::string message;
};

// Runs ingest -> preprocess -> stats -> factorizations -> lifestyle reports
// into cfg.out_dir, writing run_manifest.json last. On a stage failure the
// partial outputs stay in place next to a FAILED marker file.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace lifemine

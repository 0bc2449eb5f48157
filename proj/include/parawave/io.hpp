#pragma once
// File formats: experiment configs (JSON), decomposition / tube-family
// documents (JSON), report emission (CSV + JSON), plot-data merging, and the
// run manifest.
//
// Contracts:
//   - Config parsing is strict and complete: every recognized field is
//     schema-checked before any work begins; unknown keys, type mismatches,
//     and domain violations raise InvalidConfig with a
//     "<source>:<line>:<column>" position.
//   - Decomposition documents store tubes and coefficients only; packet
//     spectra are rebuilt on load as the canonical unit packet of each tube
//     (exact for documents produced from canonical packets; for windowed
//     general data the document preserves tubes, coefficients, and
//     parameters, which is all downstream consumers read).
//   - All numeric CSV fields are printed with %.17g so doubles survive a
//     round-trip and identical inputs yield byte-identical files.  The run
//     timestamp appears only in the manifest, never in data files.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parawave/combinatorics.hpp"
#include "parawave/estimator.hpp"
#include "parawave/wavepacket.hpp"

namespace parawave {

// ------------------------------------------------------------ configuration

// Floating tolerances used by the verification subcommand; all of them live
// in the config so runs are self-describing.
struct Tolerances {
  double reconstruction = 1e-6;       // relative full-sum reconstruction error
  double probability_drift = 1e-6;    // relative slice-mass drift across times
  double slope_window = 0.10;         // |fitted slope - predicted| bound
  double subcritical_slope_min = 0.05;  // minimum slope below the critical q
  double drift_factor = 4.0;          // max/min ratio allowed across scales
  double support_energy = 0.99;       // product-spectrum energy share
};

// Work budgets for the experiment subcommands.
struct Budgets {
  std::size_t samples = 100000;  // stratified L^q sample count
  int refine = 8;                // window refinement M = refine * ceil(...)
  int iterations = 12;           // adversarial search perturbation steps
  std::size_t trials = 20;       // random data draws per scale in `verify`
  std::size_t tubes = 48;        // per-side tube count for `incidence`
};

struct RunConfig {
  ExperimentConfig experiment;  // n, R_list, q, delta, family, seed, workers
  Tolerances tolerances;
  Budgets budgets;
};

// The shipped defaults; `verify` under this config must pass every row.
RunConfig default_run_config();

// Parse and fully validate a config document.  `source` names the document in
// error messages (typically the file path).  The "q" field accepts a number,
// a rational string "a/b" (kept exact, e.g. "5/3"), or "critical" for
// (n+3)/(n+1).  Budgets fill ExperimentConfig::samples / ::refine; "seed" and
// "workers" are optional top-level fields that flags may override later.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

// read_text_file + parse_config.  A missing or unreadable file raises
// InvalidConfig naming the path.
RunConfig load_config(const std::string& path);

// ------------------------------------------------- decomposition documents

// {n, R, delta, side, bump:{rho, refine}, tubes:[{x0:[...], v:[...]}],
//  coefficients:[[re, im], ...]} -- spectra are not stored.
std::string decomposition_to_json(const WavePacketDecomposition& d);

// Inverse of decomposition_to_json up to the stored fields: tubes snap back
// onto their grids exactly (coordinates are printed round-trip exact), packet
// spectra are rebuilt canonically, and the coefficient summary scalars are
// recomputed from the stored coefficients.  input_mass is not part of the
// document and reads back as 0.  A document may omit "coefficients" (a tube
// configuration, as the incidence machinery consumes); packets then carry
// unit coefficients.
WavePacketDecomposition decomposition_from_json(const std::string& text,
                                                const std::string& source = "<doc>");

// Tube configurations round-trip through the same schema, minus coefficients.
std::string tube_family_to_json(int n, double R, double delta, int side,
                                const std::vector<Tube>& tubes);

// ----------------------------------------------------------------- reports

// %.17g, the pinned CSV number format.
std::string format_double(double x);

// Flat per-scale CSV: header n,R,q,family,lhs,normalizer,ratio,slope,residual,seed
// with one row per measured R (slope/residual repeated; nan when unfitted).
std::string estimate_csv(const EstimateReport& report);

// Full report as JSON (points plus fit).
std::string estimate_json(const EstimateReport& report);

// Chain reports: one CSV row per inequality per configuration.
// Columns: config,inequality,value,pass.
std::string chain_csv(const std::vector<std::pair<std::string, ChainReport>>& reports);

// ---------------------------------------------------------------- plot data

struct PlotRow {
  std::string experiment;
  double R = 0.0;
  double q = 0.0;
  double ratio = 0.0;
  double slope = 0.0;
};

// Parse an estimate CSV (exact header required; otherwise InvalidConfig
// "schema mismatch").  A malformed row raises InvalidConfig naming its line
// number.  The family column becomes the experiment label.
std::vector<PlotRow> parse_estimate_csv(const std::string& text,
                                        const std::string& source = "<csv>");

// Merge rows into one long-format CSV (experiment,R,q,ratio,slope), stable
// sorted by (experiment, R).
std::string plotdata_csv(std::vector<PlotRow> rows);

// ----------------------------------------------------------------- manifest

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::string output_dir;
  std::string timestamp;  // ISO 8601 UTC; the only time-dependent output
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // every emitted file, relative to output_dir
};

// Manifest document including per-module version stamps.  The caller writes
// this last, after every file in `outputs` exists.
std::string manifest_json(const RunManifest& manifest);

// ------------------------------------------------------------------- files

// Read a whole file; InvalidConfig naming the path when it cannot be opened.
std::string read_text_file(const std::string& path);

// Write a whole file (parent directory must exist); std::runtime_error on
// failure.
void write_text_file(const std::string& path, const std::string& content);

// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace parawave

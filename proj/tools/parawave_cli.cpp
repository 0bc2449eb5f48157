// parawave: reproducible experiment runs over the library modules.
//
// Subcommands:
//   extend     field evaluation dump for the configured family
//   decompose  wave packet build + reconstruction verification report
//   incidence  incidence index + Kakeya chain report per scale
//   estimate   scaling experiment (ratio vs R, fitted exponent)
//   plate      extremal example suite at q = 2, critical, and 1.5
//   verify     full property suite; exit 0 iff every invariant row passes
//   plotdata   merge estimate CSVs into one long-format table
//
// Flags: --config <path> --out <dir> --seed <u64> --workers <k>.
// Exit codes: 0 success, 2 configuration errors (including a missing config
// file), 1 numeric failures (violated preconditions, failed invariants).
// Every run writes its outputs plus a manifest.json naming them; the manifest
// is written last and is the only file carrying the timestamp, so repeated
// runs with the same config and seed produce byte-identical data files.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "parawave/bump.hpp"
#include "parawave/combinatorics.hpp"
#include "parawave/errors.hpp"
#include "parawave/estimator.hpp"
#include "parawave/extension.hpp"
#include "parawave/geometry.hpp"
#include "parawave/io.hpp"
#include "parawave/wavepacket.hpp"

using namespace parawave;
using nlohmann::json;

namespace {

struct RunContext {
  RunConfig cfg;
  std::string config_path = "<defaults>";
  std::string out_dir;
  std::vector<std::string> outputs;

  void emit(const std::string& name, const std::string& content) {
    write_text_file(out_dir + "/" + name, content);
    outputs.push_back(name);
  }

  // The manifest is written last, after every listed file exists, and is the
  // only output carrying the wall-clock timestamp.
  void finish(const std::string& subcommand) {
    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.config_path = config_path;
    manifest.output_dir = out_dir;
    manifest.seed = cfg.experiment.seed;
    manifest.timestamp = utc_timestamp();
    manifest.outputs = outputs;
    write_text_file(out_dir + "/manifest.json", manifest_json(manifest));
  }
};

RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        bool has_seed, std::uint64_t seed, bool has_workers, int workers) {
  RunContext ctx;
  if (!config_path.empty()) {
    ctx.cfg = load_config(config_path);
    ctx.config_path = config_path;
  } else {
    ctx.cfg = default_run_config();
  }
  if (has_seed) ctx.cfg.experiment.seed = seed;
  if (has_workers) {
    if (workers < 1) throw InvalidConfig("--workers must be at least 1");
    ctx.cfg.experiment.workers = workers;
  }
  ctx.out_dir = out_dir;
  std::filesystem::create_directories(out_dir);
  return ctx;
}

// The two-sided cap data a subcommand operates on, by configured family.
std::pair<CapFunction, CapFunction> family_pair(const RunConfig& cfg, double R) {
  const ExperimentConfig& e = cfg.experiment;
  if (e.family == "plate") {
    PlateExample p = plate_example(e.n, R);
    return {std::move(p.f1), std::move(p.f2)};
  }
  if (e.family == "packet") {
    const std::array<int, kMaxDim> shift{
        static_cast<int>(std::lround(1.5 * std::sqrt(R))), 0, 0};
    return {canonical_packet(e.n, R, e.refine, 1).spectrum,
            canonical_packet(e.n, R, e.refine, 2, {0, 0, 0}, shift).spectrum};
  }
  return {random_cap_function(make_patch_refined(e.n, 1, PatchTier::enlarged, R, e.refine),
                              e.seed, 1),
          random_cap_function(make_patch_refined(e.n, 2, PatchTier::enlarged, R, e.refine),
                              e.seed, 2)};
}

// ------------------------------------------------------------------ extend

int run_extend(RunContext& ctx) {
  const ExperimentConfig& e = ctx.cfg.experiment;
  const double R = e.R_list.front();
  const auto [f1, f2] = family_pair(ctx.cfg, R);

  // Three time slices across the slab, spatial lattice of step sqrt(R)/2.
  const double s = std::sqrt(R) / 2.0;
  const int per_dim = static_cast<int>(std::lround(4.0 * std::sqrt(R))) + 1;
  std::array<int, kMaxDim> counts{1, 1, 1};
  Vec origin = zero(e.n);
  for (int i = 0; i < e.n; ++i) {
    counts[i] = per_dim;
    origin[i] = -R;
  }
  const SamplingGrid grid = SamplingGrid::time_slices(
      e.n, {R / 2.0, 0.75 * R, R}, origin, s, counts, std::pow(s, e.n));

  const Field u1 = extend(f1, grid, e.workers);
  const Field u2 = extend(f2, grid, e.workers);

  std::string csv = "t";
  for (int i = 0; i < e.n; ++i) csv += ",x" + std::to_string(i + 1);
  csv += ",re1,im1,re2,im2,product_abs\n";
  for (std::size_t s_idx = 0; s_idx < u1.points.size(); ++s_idx) {
    const SamplePoint& p = u1.points[s_idx];
    csv += format_double(p.t);
    for (int i = 0; i < e.n; ++i) csv += "," + format_double(p.x[i]);
    csv += "," + format_double(u1.values[s_idx].real());
    csv += "," + format_double(u1.values[s_idx].imag());
    csv += "," + format_double(u2.values[s_idx].real());
    csv += "," + format_double(u2.values[s_idx].imag());
    csv += "," + format_double(std::abs(u1.values[s_idx] * u2.values[s_idx]));
    csv += "\n";
  }
  ctx.emit("extend.csv", csv);
  std::cout << "extend: family=" << e.family << " R=" << R << " samples=" << u1.points.size()
            << "\n";
  ctx.finish("extend");
  return 0;
}

// --------------------------------------------------------------- decompose

int run_decompose(RunContext& ctx) {
  const ExperimentConfig& e = ctx.cfg.experiment;
  const double R = e.R_list.front();
  const CapFunction f =
      random_cap_function(make_patch_refined(e.n, 1, PatchTier::base, R, e.refine), e.seed, 1);
  const WavePacketDecomposition d = decompose(f, R, e.delta, Bump(), e.workers);

  const SamplingGrid grid = stratified_cylinder(e.n, R, 1000, e.seed);
  const ReconstructionError rec =
      reconstruct_error(d, f, grid, 8.0 * std::sqrt(R), e.workers);
  const DecayReport decay = verify_packet_bounds(d, {2.0, 4.0}, 20000, e.seed);

  ctx.emit("decomposition.json", decomposition_to_json(d));

  json report;
  report["n"] = d.n;
  report["R"] = d.R;
  report["delta"] = d.delta;
  report["refine"] = d.refine;
  report["side"] = d.side;
  report["packets"] = d.packets.size();
  report["dropped"] = d.dropped;
  report["input_mass"] = d.input_mass;
  report["coefficient_l2_ratio"] = d.l2_ratio();
  report["max_coefficient"] = d.max_coefficient;
  report["reconstruction"] = {{"full", rec.full},
                              {"truncated", rec.truncated},
                              {"field_max", rec.field_max},
                              {"input_norm", rec.input_norm}};
  report["decay"] = {{"orders", decay.orders},
                     {"envelope_constants", decay.envelope_constants},
                     {"on_axis_constant", decay.on_axis_constant},
                     {"off_tube_max", decay.off_tube_max},
                     {"drop_at_8", decay.drop_at_8},
                     {"drop_measured", decay.drop_measured},
                     {"decay_fit_order", decay.decay_fit_order},
                     {"spectrum_support_constant", decay.spectrum_support_constant},
                     {"packets_sampled", decay.packets_sampled}};
  ctx.emit("decompose_report.json", report.dump(2) + "\n");

  std::cout << "decompose: packets=" << d.packets.size() << " l2_ratio=" << d.l2_ratio()
            << " reconstruction=" << rec.full << "\n";
  ctx.finish("decompose");
  return 0;
}

// --------------------------------------------------------------- incidence

int run_incidence(RunContext& ctx) {
  const ExperimentConfig& e = ctx.cfg.experiment;
  const Budgets& budget = ctx.cfg.budgets;
  std::vector<std::pair<std::string, ChainReport>> rows;
  json summary = json::array();

  for (std::size_t i = 0; i < e.R_list.size(); ++i) {
    const double R = e.R_list[i];
    std::vector<Tube> tubes = random_tube_family(e.n, R, 1, budget.tubes, e.seed, 2 * i);
    const std::vector<Tube> side2 = random_tube_family(e.n, R, 2, budget.tubes, e.seed, 2 * i + 1);
    tubes.insert(tubes.end(), side2.begin(), side2.end());

    const auto [coarse, fine] = build_covers(e.n, R, e.delta);
    const IncidenceIndex index = incidences(tubes, fine, e.delta);
    const ExclusionRelation excl = assign_exclusions(index, coarse);
    const ChainReport chain = check_kakeya_chain(index, excl, coarse);

    const std::string label = "R" + std::to_string(static_cast<long>(R));
    rows.emplace_back(label, chain);
    summary.push_back({{"R", R},
                       {"tubes", tubes.size()},
                       {"fine_balls", fine.size()},
                       {"coarse_balls", coarse.size()},
                       {"triples", chain.triples},
                       {"classed_balls", chain.classed_balls},
                       {"max_nu", chain.max_nu},
                       {"fubini_exact", chain.fubini_exact},
                       {"class_bounds_exact", chain.class_bounds_exact},
                       {"t_b_ratio", chain.t_b_ratio}});
    std::cout << "incidence: " << label << " tubes=" << tubes.size()
              << " fubini=" << (chain.fubini_exact ? "pass" : "fail")
              << " t_b_ratio=" << chain.t_b_ratio << "\n";
  }

  ctx.emit("chain.csv", chain_csv(rows));
  ctx.emit("incidence.json", summary.dump(2) + "\n");
  ctx.finish("incidence");
  return 0;
}

// ---------------------------------------------------------------- estimate

int run_estimate(RunContext& ctx) {
  const EstimateReport report = scaling_experiment(ctx.cfg.experiment);
  ctx.emit("estimate.csv", estimate_csv(report));
  ctx.emit("estimate.json", estimate_json(report));
  std::cout << "estimate: family=" << report.family << " n=" << report.n << " q=" << report.q;
  if (report.fitted)
    std::cout << " slope=" << report.slope << " residual=" << report.residual;
  std::cout << "\n";
  ctx.finish("estimate");
  return 0;
}

// ------------------------------------------------------------------- plate

int run_plate(RunContext& ctx) {
  ExperimentConfig e = ctx.cfg.experiment;
  e.family = "plate";
  const int n = e.n;
  const struct {
    const char* label;
    double q;
  } sweeps[] = {{"L2", 2.0}, {"critical", critical_exponent(n)}, {"subcritical", 1.5}};

  json suite = json::array();
  for (const auto& sweep : sweeps) {
    e.q = sweep.q;
    const EstimateReport report = scaling_experiment(e);
    ctx.emit(std::string("plate_") + sweep.label + ".csv", estimate_csv(report));
    suite.push_back({{"label", sweep.label},
                     {"q", sweep.q},
                     {"predicted_slope", plate_exponent(n, sweep.q)},
                     {"fitted_slope", report.fitted ? json(report.slope) : json()},
                     {"residual", report.fitted ? json(report.residual) : json()}});
    std::cout << "plate: q=" << sweep.q << " predicted=" << plate_exponent(n, sweep.q);
    if (report.fitted) std::cout << " fitted=" << report.slope;
    std::cout << "\n";
  }
  ctx.emit("plate_suite.json", suite.dump(2) + "\n");
  ctx.finish("plate");
  return 0;
}

// ------------------------------------------------------------------ verify

struct VerifyRow {
  std::string invariant;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

int run_verify(RunContext& ctx) {
  const ExperimentConfig& e = ctx.cfg.experiment;
  const Tolerances& tol = ctx.cfg.tolerances;
  const Budgets& budget = ctx.cfg.budgets;
  const double R = e.R_list.front();
  std::vector<VerifyRow> rows;

  // Slice-mass conservation across times, worst case over random draws.
  {
    double worst = 0.0;
    const SurfacePatch patch = make_patch_refined(e.n, 1, PatchTier::enlarged, R, e.refine);
    for (std::size_t k = 0; k < budget.trials; ++k) {
      const CapFunction f = random_cap_function(patch, e.seed, 100 + k);
      double lo = 0.0, hi = 0.0;
      for (int j = 0; j < 10; ++j) {
        const double t = R / 2.0 + (R / 2.0) * (j / 9.0);
        const double mass = slice_mass(f, t, 48);
        if (j == 0) lo = hi = mass;
        lo = std::min(lo, mass);
        hi = std::max(hi, mass);
      }
      if (hi > 0.0) worst = std::max(worst, (hi - lo) / hi);
    }
    rows.push_back({"probability_conservation", worst, tol.probability_drift,
                    worst <= tol.probability_drift});
  }

  // Wave packet resummation against the direct extension.
  const CapFunction f =
      random_cap_function(make_patch_refined(e.n, 1, PatchTier::base, R, e.refine), e.seed, 1);
  const WavePacketDecomposition d = decompose(f, R, e.delta, Bump(), e.workers);
  {
    const SamplingGrid grid = stratified_cylinder(e.n, R, 500, e.seed);
    const ReconstructionError rec =
        reconstruct_error(d, f, grid, 8.0 * std::sqrt(R), e.workers);
    rows.push_back(
        {"packet_reconstruction", rec.full, tol.reconstruction, rec.full <= tol.reconstruction});
    const double ratio = d.l2_ratio();
    rows.push_back({"coefficient_l2_bounded", ratio, tol.drift_factor,
                    ratio <= tol.drift_factor && ratio >= 1.0 / tol.drift_factor});
  }

  // Packet decay envelope, measured where the criterion pins it: n = 1,
  // R = 256, canonical packets on a window wide enough to reach 16 sqrt(R)
  // before the lattice period folds the field back.
  {
    const double Rd = 256.0;
    const int M = 64;
    WavePacketDecomposition d1;
    d1.n = 1;
    d1.side = 1;
    d1.R = Rd;
    d1.delta = e.delta;
    d1.refine = M;
    d1.rho = Bump().rho();
    for (int k = -32; k < 32; k += 8) {
      d1.packets.push_back(canonical_packet(1, Rd, M, 1, {0, 0, 0}, {k, 0, 0}));
      d1.gamma_class.push_back(0);
      d1.coefficient_l2 += 1.0;
    }
    d1.max_coefficient = 1.0;
    d1.input_mass = d1.coefficient_l2;
    const DecayReport decay = verify_packet_bounds(d1, {4.0}, 100000, e.seed);
    rows.push_back({"packet_decay_drop", decay.drop_at_8, 1e3,
                    decay.drop_measured && decay.drop_at_8 >= 1e3});
    rows.push_back(
        {"packet_decay_order", decay.decay_fit_order, 4.0, decay.decay_fit_order >= 4.0});
  }

  // Product-spectrum localization for caps at the packet scale.
  {
    const double cap = 1.0 / std::sqrt(R);
    const Vec c1 = basis(e.n, 0);
    Vec c2 = basis(e.n, 0);
    c2[0] = -1.0;
    const CapFunction g1 = random_cap_function(make_custom_patch(c1, cap, cap / 2.0), e.seed, 3);
    const CapFunction g2 = random_cap_function(make_custom_patch(c2, cap, cap / 2.0), e.seed, 4);
    const double share = product_spectrum_support(g1, g2, R, 8.0);
    rows.push_back({"product_support_energy", share, tol.support_energy,
                    share >= tol.support_energy});
  }

  // Plate example: family-normalized bilinear ratio is finite and positive.
  {
    const PlateExample plate = plate_example(e.n, R);
    const LqPlan plan = plate_plan(e.n, R, budget.samples, e.seed);
    const BilinearMeasurement m =
        bilinear_constant(plate.f1, plate.f2, e.q, SpacetimeRegion::cylinder(e.n, R), plan,
                          plate.family_normalizer(), e.workers);
    rows.push_back({"plate_ratio_finite", m.ratio, 0.0, std::isfinite(m.ratio) && m.ratio > 0.0});
  }

  // Kakeya chain: exact identities plus accelerated == brute incidences.
  {
    std::vector<Tube> tubes = random_tube_family(e.n, R, 1, budget.tubes, e.seed, 1);
    const std::vector<Tube> side2 = random_tube_family(e.n, R, 2, budget.tubes, e.seed, 2);
    tubes.insert(tubes.end(), side2.begin(), side2.end());
    const auto [coarse, fine] = build_covers(e.n, R, e.delta);
    const IncidenceIndex fast = incidences(tubes, fine, e.delta, true);
    const IncidenceIndex slow = incidences(tubes, fine, e.delta, false);
    const bool oracle_match =
        fast.tube_balls == slow.tube_balls && fast.ball_classes == slow.ball_classes;
    const ExclusionRelation excl = assign_exclusions(fast, coarse);
    const ChainReport chain = check_kakeya_chain(fast, excl, coarse);
    const bool pass =
        oracle_match && chain.fubini_exact && chain.class_bounds_exact && chain.pigeonhole_ok;
    rows.push_back({"kakeya_chain_exact", pass ? 1.0 : 0.0, 1.0, pass});
  }

  std::string csv = "invariant,value,threshold,pass\n";
  json report = json::array();
  bool all_pass = true;
  std::string failed;
  for (const VerifyRow& row : rows) {
    csv += row.invariant + "," + format_double(row.value) + "," + format_double(row.threshold) +
           "," + (row.pass ? "pass" : "fail") + "\n";
    report.push_back({{"invariant", row.invariant},
                      {"value", row.value},
                      {"threshold", row.threshold},
                      {"pass", row.pass}});
    std::cout << "  [" << (row.pass ? "pass" : "FAIL") << "] " << row.invariant
              << " value=" << row.value << "\n";
    if (!row.pass) {
      all_pass = false;
      failed += (failed.empty() ? "" : ", ") + row.invariant;
    }
  }
  ctx.emit("verify.csv", csv);
  ctx.emit("verify.json", report.dump(2) + "\n");
  ctx.finish("verify");
  if (!all_pass) {
    std::cerr << "verify: violated precondition(s): " << failed << "\n";
    return 1;
  }
  std::cout << "verify: all " << rows.size() << " invariants pass\n";
  return 0;
}

// ---------------------------------------------------------------- plotdata

int run_plotdata(const std::vector<std::string>& reports, const std::string& out_dir) {
  std::vector<PlotRow> rows;
  for (const std::string& path : reports) {
    const std::vector<PlotRow> parsed = parse_estimate_csv(read_text_file(path), path);
    rows.insert(rows.end(), parsed.begin(), parsed.end());
  }
  std::filesystem::create_directories(out_dir);
  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.config_path = "<reports>";
  ctx.emit("plotdata.csv", plotdata_csv(std::move(rows)));
  std::cout << "plotdata: merged " << reports.size() << " report(s)\n";
  ctx.finish("plotdata");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parawave: paraboloid extension and wave packet laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  int workers = 0;
  auto* config_opt = app.add_option("--config", config_path, "JSON experiment config");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (default: runs)");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");
  auto* workers_opt = app.add_option("--workers", workers, "worker-thread override");
  (void)config_opt;
  (void)out_opt;

  std::vector<std::string> report_files;
  CLI::App* sub_extend = app.add_subcommand("extend", "field evaluation dump");
  CLI::App* sub_decompose =
      app.add_subcommand("decompose", "wave packet build + verification report");
  CLI::App* sub_incidence = app.add_subcommand("incidence", "incidence + Kakeya chain report");
  CLI::App* sub_estimate = app.add_subcommand("estimate", "scaling experiment");
  CLI::App* sub_plate = app.add_subcommand("plate", "extremal example suite");
  CLI::App* sub_verify = app.add_subcommand("verify", "full property suite");
  CLI::App* sub_plotdata = app.add_subcommand("plotdata", "merge estimate CSVs for plotting");
  sub_plotdata->alias("emit-plotdata");
  sub_plotdata->add_option("reports", report_files, "estimate CSV files")->required();
  for (CLI::App* sub :
       {sub_extend, sub_decompose, sub_incidence, sub_estimate, sub_plate, sub_verify,
        sub_plotdata})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(sub_plotdata)) return run_plotdata(report_files, out_dir);

    RunContext ctx = make_context(config_path, out_dir, seed_opt->count() > 0, seed,
                                  workers_opt->count() > 0, workers);
    if (app.got_subcommand(sub_extend)) return run_extend(ctx);
    if (app.got_subcommand(sub_decompose)) return run_decompose(ctx);
    if (app.got_subcommand(sub_incidence)) return run_incidence(ctx);
    if (app.got_subcommand(sub_estimate)) return run_estimate(ctx);
    if (app.got_subcommand(sub_plate)) return run_plate(ctx);
    if (app.got_subcommand(sub_verify)) return run_verify(ctx);
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const DegenerateGeometry& e) {
    std::cerr << "degenerate geometry: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

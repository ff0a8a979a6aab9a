// qtrack: simulate | reconstruct | evaluate | plotdata
//
// Exit codes: 0 ok, 1 usage/configuration, 2 data, 3 invariant violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qtrack/config.hpp"
#include "qtrack/errors.hpp"
#include "qtrack/io.hpp"
#include "qtrack/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qtrack;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInvariant = 3 };

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

struct SolverFlags {
  std::optional<std::string> solver;
  std::optional<std::size_t> subqubo_size;
  std::optional<int> iterations;
  std::optional<std::size_t> shots;
};

RunConfig load_config(const std::string& file, const fs::path& fallback_metadata) {
  if (!file.empty()) return parse_run_config(read_text_file(file));
  if (!fallback_metadata.empty() && fs::exists(fallback_metadata)) {
    const json meta = json::parse(read_text_file(fallback_metadata));
    return parse_run_config(meta.at("config").dump());
  }
  return RunConfig{};
}

void finalize(RunConfig& c, const Common& common, const SolverFlags* flags) {
  if (common.seed) c.seed = *common.seed;
  c.sim.rng_seed = c.seed;
  c.reco.seed = c.seed;
  if (flags) {
    if (flags->solver) c.reco.solver.kind = parse_solver(*flags->solver);
    if (flags->subqubo_size) c.reco.solver.iterative.subqubo_size = *flags->subqubo_size;
    if (flags->iterations) c.reco.solver.iterative.max_iterations = *flags->iterations;
    if (flags->shots) c.reco.solver.vqe.shots = *flags->shots;
  }
  c.validate();
}

Stamp stamp_of(const RunConfig& c) { return {config_hash(c), c.seed}; }

void write_metadata(const fs::path& dir, const RunConfig& c, const std::string& command, json extra) {
  json meta = {{"command", command},
               {"config", json::parse(to_json_text(c))},
               {"config_hash", config_hash(c)},
               {"seed", c.seed}};
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_text_file(dir / "metadata.json", meta.dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_text_file(path, ss.str());
}

int cmd_simulate(const Common& common, int n_events, std::optional<double> xi, const fs::path& out) {
  if (n_events < 0) throw ConfigError("--events must be >= 0");
  RunConfig c = load_config(common.config_file, {});
  if (xi) apply_xi_preset(c, *xi);
  finalize(c, common, nullptr);
  const auto geometry = build_geometry(c.geometry);
  ensure_dir(out);

  std::vector<Event> events(static_cast<std::size_t>(n_events));
  parallel_for(events.size(), common.jobs, [&](std::size_t k) {
    events[k] = generate_event(c.sim, geometry, static_cast<EventId>(k));
  });
  for (const auto& e : events) {
    const auto problems = validate_event(e, geometry);
    if (!problems.empty()) throw InvariantFailure("event " + std::to_string(e.event_id) + ": " + problems.front());
  }

  const Stamp stamp = stamp_of(c);
  const auto files = DataFiles::in(out);
  write_csv(files.events, [&](std::ostream& s) { write_events_csv(s, events, stamp); });
  write_csv(files.hits, [&](std::ostream& s) { write_hits_csv(s, events, stamp); });
  write_csv(files.particles, [&](std::ostream& s) { write_particles_csv(s, events, stamp); });
  write_metadata(out, c, "simulate",
                 {{"n_events", n_events}, {"mean_multiplicity", c.sim.mean_multiplicity}, {"xi_label", c.sim.xi_label}});
  std::cout << "simulated " << n_events << " events into " << out.string() << '\n';
  return kOk;
}

int cmd_reconstruct(const Common& common, const SolverFlags& flags, const fs::path& in, const fs::path& out,
                    const std::string& counts_csv, const std::string& features_csv) {
  RunConfig c = load_config(common.config_file, in / "metadata.json");
  finalize(c, common, &flags);
  const auto geometry = build_geometry(c.geometry);
  const auto events = load_events(DataFiles::in(in));
  ensure_dir(out);

  const Calibration cal = calibrate(events, c.reco);
  const auto results = reconstruct_events(events, geometry, cal, c.reco.solver, c.seed, common.jobs);
  std::vector<RecoTrack> tracks;
  bool warning = false;
  for (const auto& r : results) {
    tracks.insert(tracks.end(), r.tracks.begin(), r.tracks.end());
    warning = warning || (r.solve && r.solve->warning);
  }

  const Stamp stamp = stamp_of(c);
  write_csv(out / "tracks.csv", [&](std::ostream& s) { write_tracks_csv(s, tracks, stamp); });
  write_text_file(out / "solve_report.json", solve_report_json(results, cal, c.reco.solver, stamp));
  write_metadata(out, c, "reconstruct", {{"n_events", events.size()}, {"n_tracks", tracks.size()}});

  if (!features_csv.empty()) {
    write_csv(features_csv, [&](std::ostream& s) {
      for (std::size_t k = 0; k < events.size(); ++k) {
        write_features_csv(s, events[k], build_problem(events[k], cal.window, cal.scaling), k == 0, stamp);
      }
      if (events.empty()) write_features_csv(s, Event{}, EventProblem{}, true, stamp);
    });
  }
  if (!counts_csv.empty()) {
    // First event with a QUBO: VQE histogram of its first sub-problem.
    for (const auto& e : events) {
      const auto problem = build_problem(e, cal.window, cal.scaling);
      if (!problem.qubo) continue;
      const auto vqe = first_subqubo_vqe(*problem.qubo, c.reco.solver, event_solver_seed(c.seed, e.event_id));
      write_csv(counts_csv, [&](std::ostream& s) { write_counts_csv(s, vqe.counts, stamp); });
      break;
    }
  }
  std::cout << "reconstructed " << tracks.size() << " tracks from " << events.size() << " events ("
            << to_string(c.reco.solver.kind) << ", subqubo size " << c.reco.solver.iterative.subqubo_size
            << ", shots " << c.reco.solver.vqe.shots << ")\n";
  if (warning) std::cerr << "warning: a sub-solver failed in at least one event; see solve_report.json\n";
  return kOk;
}

int cmd_evaluate(const Common& common, const fs::path& tracks_file, const fs::path& truth, const fs::path& out) {
  RunConfig c = load_config(common.config_file, truth / "metadata.json");
  finalize(c, common, nullptr);
  const auto events = load_events(DataFiles::in(truth));
  const auto tracks = load_tracks(tracks_file);

  std::set<EventId> known;
  for (const auto& e : events) known.insert(e.event_id);
  std::set<EventId> missing;
  for (const auto& t : tracks) {
    if (!known.contains(t.event_id)) missing.insert(t.event_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (auto id : missing) list += (list.empty() ? "" : ", ") + std::to_string(id);
    throw DataError("tracks reference events missing from the truth files: " + list);
  }

  const auto edges = default_energy_bins();
  const MetricsReport report = evaluate(events, tracks, edges);
  ensure_dir(out);
  const Stamp stamp = stamp_of(c);
  write_text_file(out / "metrics.json", metrics_report_json(report, stamp));
  write_csv(out / "efficiency_vs_energy.csv",
            [&](std::ostream& s) { write_curve_csv(s, report.overall.efficiency_vs_energy, stamp); });
  write_csv(out / "fake_rate_vs_energy.csv",
            [&](std::ostream& s) { write_curve_csv(s, report.overall.fake_rate_vs_energy, stamp); });

  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
  const auto& m = report.overall.scalars;
  std::cout << "efficiency " << show(m.efficiency) << ", fake rate " << show(m.fake_rate) << ", duplication "
            << show(m.duplication_rate) << ", energy resolution " << show(m.energy_resolution) << '\n';

  const auto violations = check_report(report);
  if (!violations.empty()) throw InvariantFailure("metrics report: " + violations.front());
  return kOk;
}

int cmd_plotdata(const std::vector<std::string>& reports, const std::string& counts_csv, const fs::path& out) {
  if (reports.empty()) throw ConfigError("plotdata needs at least one --report");
  std::vector<MetricsReport> parsed;
  for (const auto& r : reports) parsed.push_back(parse_metrics_report(read_text_file(r), r));
  std::optional<std::map<std::string, std::size_t>> counts;
  if (!counts_csv.empty()) {
    std::ifstream in(counts_csv);
    if (!in) throw DataError("cannot open " + counts_csv);
    counts = read_counts_csv(in, counts_csv);
  }
  write_csv(out, [&](std::ostream& s) { write_plotdata_csv(s, parsed, counts ? &*counts : nullptr); });
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", common.seed, "Run seed (overrides the config)");
  app->add_option("--jobs", common.jobs, "Worker threads for event-parallel work")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QUBO-based track reconstruction for a four-layer tracker"};
  app.require_subcommand(1);

  Common common;
  SolverFlags flags;

  auto* sim = app.add_subcommand("simulate", "Generate events and write hits/particles CSV");
  add_common(sim, common);
  int n_events = 10;
  std::optional<double> xi;
  std::string sim_out = "data";
  sim->add_option("--events", n_events, "Number of events");
  sim->add_option("--xi-label", xi, "Laser intensity preset (3 to 7) setting label and multiplicity");
  sim->add_option("--out", sim_out, "Output directory");

  auto* reco = app.add_subcommand("reconstruct", "Reconstruct tracks from simulated hits");
  add_common(reco, common);
  std::string reco_in = "data", reco_out = "reco", counts_csv, features_csv;
  reco->add_option("--in", reco_in, "Directory with events/hits/particles CSV")->check(CLI::ExistingDirectory);
  reco->add_option("--out", reco_out, "Output directory");
  reco->add_option("--solver", flags.solver, "exact | anneal | vqe");
  reco->add_option("--subqubo-size", flags.subqubo_size, "Sub-QUBO size");
  reco->add_option("--iterations", flags.iterations, "Maximum decomposition iterations");
  reco->add_option("--shots", flags.shots, "VQE shots per energy estimate (0 = exact expectation)");
  reco->add_option("--counts-csv", counts_csv, "Write the VQE histogram of the first sub-QUBO here");
  reco->add_option("--dump-features", features_csv, "Write doublet/triplet pre-selection features here");

  auto* eval = app.add_subcommand("evaluate", "Compare tracks with truth");
  add_common(eval, common);
  std::string eval_tracks = "reco/tracks.csv", eval_truth = "data", eval_out = "eval";
  eval->add_option("--tracks", eval_tracks, "Tracks CSV")->check(CLI::ExistingFile);
  eval->add_option("--truth", eval_truth, "Directory with the truth CSV files")->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_out, "Output directory");

  auto* plot = app.add_subcommand("plotdata", "Flatten metrics reports into one long-format CSV");
  std::vector<std::string> plot_reports;
  std::string plot_counts, plot_out = "plotdata.csv";
  plot->add_option("--report", plot_reports, "metrics.json file (repeatable)")->required()->check(CLI::ExistingFile);
  plot->add_option("--counts-csv", plot_counts, "VQE counts CSV to append")->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(common, n_events, xi, sim_out);
    if (*reco) return cmd_reconstruct(common, flags, reco_in, reco_out, counts_csv, features_csv);
    if (*eval) return cmd_evaluate(common, eval_tracks, eval_truth, eval_out);
    if (*plot) return cmd_plotdata(plot_reports, plot_counts, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const RangeError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvariantFailure& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const ContractViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

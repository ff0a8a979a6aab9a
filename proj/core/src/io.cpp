#include "qtrack/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qtrack/errors.hpp"

namespace qtrack {

using nlohmann::json;

namespace {

constexpr const char* kEventsHeader = "event_id,xi_label,n_particles,n_hits";
constexpr const char* kHitsHeader = "event_id,hit_id,layer,x,y,z,truth_particle_id,truth_energy";
constexpr const char* kParticlesHeader = "event_id,particle_id,energy,ox,oy,oz,dx,dy,dz";
constexpr const char* kTracksHeader = "event_id,track_id,hit_ids,chi2,ndf,energy,matched_particle_id";
constexpr const char* kCountsHeader = "bitstring,count";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Event-data precision.
std::string num9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void stamp_line(std::ostream& out, const Stamp& s) {
  out << "# config_hash=" << s.config_hash << ",seed=" << s.seed << '\n';
}

/// Line-oriented CSV reader with position-aware errors.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string name, const char* header) : in_(in), name_(std::move(name)) {
    std::vector<std::string> row;
    if (!next(row)) fail("missing header");
    std::string joined;
    for (std::size_t k = 0; k < row.size(); ++k) joined += (k ? "," : "") + row[k];
    if (joined != header) fail("unexpected header '" + joined + "', expected '" + header + "'");
    columns_ = row.size();
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      fields.clear();
      std::size_t start = 0;
      for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (columns_ && fields.size() != columns_) {
        fail("expected " + std::to_string(columns_) + " fields, got " + std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(name_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  template <typename T>
  T integer(const std::string& s, const char* column) const {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      fail(std::string("bad integer in column ") + column + ": '" + s + "'");
    }
    return v;
  }

  double real(const std::string& s, const char* column) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
      fail(std::string("bad number in column ") + column + ": '" + s + "'");
    }
    return v;
  }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
  std::size_t columns_ = 0;
};

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_get(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json counts_json(const Counts& c) {
  return {{"generated", c.generated},
          {"matched_particles", c.matched_particles},
          {"duplicated_particles", c.duplicated_particles},
          {"reconstructed", c.reconstructed},
          {"matched", c.matched},
          {"fake", c.fake},
          {"combinatorial_fake", c.combinatorial_fake}};
}

Counts counts_from(const json& j) {
  Counts c;
  c.generated = j.at("generated").get<std::size_t>();
  c.matched_particles = j.at("matched_particles").get<std::size_t>();
  c.duplicated_particles = j.at("duplicated_particles").get<std::size_t>();
  c.reconstructed = j.at("reconstructed").get<std::size_t>();
  c.matched = j.at("matched").get<std::size_t>();
  c.fake = j.at("fake").get<std::size_t>();
  c.combinatorial_fake = j.at("combinatorial_fake").get<std::size_t>();
  return c;
}

json curve_json(const std::vector<BinnedValue>& curve) {
  json arr = json::array();
  for (const auto& b : curve) {
    arr.push_back({{"lo", b.lo},
                   {"hi", b.hi},
                   {"passed", b.passed},
                   {"total", b.total},
                   {"value", opt(b.value)},
                   {"err_lo", b.err_lo},
                   {"err_hi", b.err_hi}});
  }
  return arr;
}

std::vector<BinnedValue> curve_from(const json& arr) {
  std::vector<BinnedValue> out;
  for (const auto& j : arr) {
    BinnedValue b;
    b.lo = j.at("lo").get<double>();
    b.hi = j.at("hi").get<double>();
    b.passed = j.at("passed").get<std::size_t>();
    b.total = j.at("total").get<std::size_t>();
    b.value = opt_get<double>(j.at("value"));
    b.err_lo = j.at("err_lo").get<double>();
    b.err_hi = j.at("err_hi").get<double>();
    out.push_back(b);
  }
  return out;
}

json slice_json(const SliceMetrics& m) {
  return {{"efficiency", opt(m.scalars.efficiency)},
          {"fake_rate", opt(m.scalars.fake_rate)},
          {"duplication_rate", opt(m.scalars.duplication_rate)},
          {"energy_resolution", opt(m.scalars.energy_resolution)},
          {"counts", counts_json(m.scalars.counts)},
          {"efficiency_vs_energy", curve_json(m.efficiency_vs_energy)},
          {"fake_rate_vs_energy", curve_json(m.fake_rate_vs_energy)}};
}

SliceMetrics slice_from(const json& j) {
  SliceMetrics m;
  m.scalars.efficiency = opt_get<double>(j.at("efficiency"));
  m.scalars.fake_rate = opt_get<double>(j.at("fake_rate"));
  m.scalars.duplication_rate = opt_get<double>(j.at("duplication_rate"));
  m.scalars.energy_resolution = opt_get<double>(j.at("energy_resolution"));
  m.scalars.counts = counts_from(j.at("counts"));
  m.efficiency_vs_energy = curve_from(j.at("efficiency_vs_energy"));
  m.fake_rate_vs_energy = curve_from(j.at("fake_rate_vs_energy"));
  return m;
}

}  // namespace

void write_events_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp) {
  stamp_line(out, stamp);
  out << kEventsHeader << '\n';
  for (const auto& e : events) {
    out << e.event_id << ',' << num9(e.xi_label) << ',' << e.particles.size() << ',' << e.hits.size() << '\n';
  }
}

void write_hits_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp) {
  stamp_line(out, stamp);
  out << kHitsHeader << '\n';
  for (const auto& e : events) {
    for (const auto& h : e.hits) {
      out << e.event_id << ',' << h.hit_id << ',' << h.layer << ',' << num9(h.position.x) << ','
          << num9(h.position.y) << ',' << num9(h.position.z) << ',';
      if (h.truth_particle_id) {
        out << *h.truth_particle_id << ',';
        const auto* p = e.find_particle(*h.truth_particle_id);
        if (p) out << num9(p->energy);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

void write_particles_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp) {
  stamp_line(out, stamp);
  out << kParticlesHeader << '\n';
  for (const auto& e : events) {
    for (const auto& p : e.particles) {
      out << e.event_id << ',' << p.particle_id << ',' << num9(p.energy) << ',' << num9(p.origin.x) << ','
          << num9(p.origin.y) << ',' << num9(p.origin.z) << ',' << num9(p.direction.x) << ','
          << num9(p.direction.y) << ',' << num9(p.direction.z) << '\n';
    }
  }
}

void write_tracks_csv(std::ostream& out, std::span<const RecoTrack> tracks, const Stamp& stamp) {
  stamp_line(out, stamp);
  out << kTracksHeader << '\n';
  for (const auto& t : tracks) {
    out << t.event_id << ',' << t.track_id << ',';
    for (int l = 0; l < kNumLayers; ++l) out << (l ? ";" : "") << t.hit_ids[l];
    out << ',' << num(t.chi2) << ',' << t.ndf << ',';
    if (t.energy) out << num(*t.energy);
    out << ',';
    if (t.matched_particle_id) out << *t.matched_particle_id;
    out << '\n';
  }
}

std::vector<Event> read_events(std::istream& events_csv, const std::string& events_name,
                               std::istream& hits_csv, const std::string& hits_name,
                               std::istream& particles_csv, const std::string& particles_name) {
  std::map<EventId, Event> events;
  std::map<EventId, std::pair<std::size_t, std::size_t>> declared;
  std::vector<std::string> f;

  CsvReader er(events_csv, events_name, kEventsHeader);
  while (er.next(f)) {
    const auto id = er.integer<EventId>(f[0], "event_id");
    if (events.contains(id)) er.fail("duplicate event_id " + f[0]);
    Event& e = events[id];
    e.event_id = id;
    e.xi_label = er.real(f[1], "xi_label");
    declared[id] = {er.integer<std::size_t>(f[2], "n_particles"), er.integer<std::size_t>(f[3], "n_hits")};
  }

  CsvReader pr(particles_csv, particles_name, kParticlesHeader);
  while (pr.next(f)) {
    const auto id = pr.integer<EventId>(f[0], "event_id");
    auto it = events.find(id);
    if (it == events.end()) pr.fail("event_id " + f[0] + " not listed in " + events_name);
    TruthParticle p;
    p.particle_id = pr.integer<ParticleId>(f[1], "particle_id");
    p.energy = pr.real(f[2], "energy");
    p.origin = {pr.real(f[3], "ox"), pr.real(f[4], "oy"), pr.real(f[5], "oz")};
    p.direction = {pr.real(f[6], "dx"), pr.real(f[7], "dy"), pr.real(f[8], "dz")};
    it->second.particles.push_back(p);
  }

  CsvReader hr(hits_csv, hits_name, kHitsHeader);
  while (hr.next(f)) {
    const auto id = hr.integer<EventId>(f[0], "event_id");
    auto it = events.find(id);
    if (it == events.end()) hr.fail("event_id " + f[0] + " not listed in " + events_name);
    Hit h;
    h.hit_id = hr.integer<HitId>(f[1], "hit_id");
    h.layer = hr.integer<int>(f[2], "layer");
    if (h.layer < 0 || h.layer >= kNumLayers) hr.fail("layer out of range: " + f[2]);
    h.position = {hr.real(f[3], "x"), hr.real(f[4], "y"), hr.real(f[5], "z")};
    if (!f[6].empty()) h.truth_particle_id = hr.integer<ParticleId>(f[6], "truth_particle_id");
    it->second.hits.push_back(h);
  }

  std::vector<Event> out;
  out.reserve(events.size());
  for (auto& [id, e] : events) {
    const auto [np, nh] = declared[id];
    if (np != e.particles.size() || nh != e.hits.size()) {
      throw DataError(events_name + ": event " + std::to_string(id) + " declares " + std::to_string(np) +
                      " particles and " + std::to_string(nh) + " hits, found " +
                      std::to_string(e.particles.size()) + " and " + std::to_string(e.hits.size()));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<RecoTrack> read_tracks(std::istream& in, const std::string& name) {
  std::vector<RecoTrack> out;
  CsvReader r(in, name, kTracksHeader);
  std::vector<std::string> f;
  while (r.next(f)) {
    RecoTrack t;
    t.event_id = r.integer<EventId>(f[0], "event_id");
    t.track_id = r.integer<std::int64_t>(f[1], "track_id");
    std::size_t start = 0;
    for (int l = 0; l < kNumLayers; ++l) {
      const auto semi = f[2].find(';', start);
      if ((l < kNumLayers - 1) == (semi == std::string::npos)) r.fail("hit_ids must hold 4 ids separated by ';'");
      t.hit_ids[l] = r.integer<HitId>(f[2].substr(start, semi - start), "hit_ids");
      start = semi + 1;
    }
    t.chi2 = r.real(f[3], "chi2");
    t.ndf = r.integer<int>(f[4], "ndf");
    if (!f[5].empty()) t.energy = r.real(f[5], "energy");
    if (!f[6].empty()) t.matched_particle_id = r.integer<ParticleId>(f[6], "matched_particle_id");
    out.push_back(t);
  }
  return out;
}

DataFiles DataFiles::in(const std::filesystem::path& dir) {
  return {dir / "events.csv", dir / "hits.csv", dir / "particles.csv"};
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<Event> load_events(const DataFiles& files) {
  auto e = open_in(files.events);
  auto h = open_in(files.hits);
  auto p = open_in(files.particles);
  return read_events(e, files.events.string(), h, files.hits.string(), p, files.particles.string());
}

std::vector<RecoTrack> load_tracks(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tracks(in, path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string solve_report_json(std::span<const EventReconstruction> events, const Calibration& calibration,
                              const SolverConfig& solver, const Stamp& stamp) {
  json per_event = json::array();
  for (const auto& e : events) {
    json j = {{"event_id", e.event_id},
              {"n_doublets", e.n_doublets},
              {"n_triplets", e.n_triplets},
              {"n_selected", e.n_selected},
              {"n_tracks", e.tracks.size()},
              {"skipped_zero_x0", e.skipped_zero_x0}};
    if (e.solve) {
      j["iterations_run"] = e.solve->iterations_run;
      j["subqubo_count"] = e.solve->subqubo_count;
      j["best_objective"] = e.solve->best_objective;
      j["objective_trace"] = e.solve->objective_trace;
      j["warning"] = e.solve->warning;
      j["message"] = e.solve->message;
    } else {
      j["iterations_run"] = 0;
      j["warning"] = false;
    }
    per_event.push_back(std::move(j));
  }
  const json root = {
      {"config_hash", stamp.config_hash},
      {"seed", stamp.seed},
      {"solver",
       {{"name", to_string(solver.kind)},
        {"subqubo_size", solver.iterative.subqubo_size},
        {"max_iterations", solver.iterative.max_iterations},
        {"shots", solver.vqe.shots},
        {"max_evaluations", solver.vqe.max_evaluations}}},
      {"calibration",
       {{"dx_mean", calibration.window.dx_mean},
        {"dx_sigma", calibration.window.dx_sigma},
        {"n_sigma", calibration.window.n_sigma},
        {"max_delta_theta", calibration.window.max_delta_theta},
        {"theta_scale", calibration.scaling.theta_scale},
        {"spread_max", calibration.scaling.spread_max},
        {"truth_doublets", calibration.truth_doublets},
        {"truth_chains", calibration.truth_chains}}},
      {"events", per_event},
  };
  return root.dump(2) + "\n";
}

std::string metrics_report_json(const MetricsReport& report, const Stamp& stamp) {
  json per_xi = json::array();
  for (const auto& [xi, m] : report.per_xi) {
    json j = slice_json(m);
    j["xi_label"] = xi;
    per_xi.push_back(std::move(j));
  }
  const json root = {{"config_hash", stamp.config_hash},
                     {"seed", stamp.seed},
                     {"overall", slice_json(report.overall)},
                     {"per_xi", per_xi}};
  return root.dump(2) + "\n";
}

MetricsReport parse_metrics_report(const std::string& json_text, const std::string& name) {
  try {
    const json root = json::parse(json_text);
    MetricsReport r;
    r.overall = slice_from(root.at("overall"));
    for (const auto& j : root.at("per_xi")) r.per_xi[j.at("xi_label").get<double>()] = slice_from(j);
    return r;
  } catch (const json::exception& e) {
    throw DataError(name + ": malformed metrics report: " + e.what());
  }
}

void write_curve_csv(std::ostream& out, std::span<const BinnedValue> bins, const Stamp& stamp) {
  stamp_line(out, stamp);
  out << "bin_lo,bin_hi,value,err_lo,err_hi\n";
  for (const auto& b : bins) {
    out << num(b.lo) << ',' << num(b.hi) << ',';
    if (b.value) out << num(*b.value);
    out << ',' << num(b.err_lo) << ',' << num(b.err_hi) << '\n';
  }
}

void write_features_csv(std::ostream& out, const Event& event, const EventProblem& problem, bool header,
                        const Stamp& stamp) {
  if (header) {
    stamp_line(out, stamp);
    out << "event_id,id,kind,layer,dx_over_x0,theta_xz,theta_yz,delta_theta,truth_matched\n";
  }
  for (std::size_t k = 0; k < problem.doublets.size(); ++k) {
    const auto& d = problem.doublets[k];
    out << event.event_id << ',' << k << ",doublet," << d.inner_layer << ',' << num(d.dx_over_x0) << ','
        << num(d.theta_xz) << ',' << num(d.theta_yz) << ",," << (is_truth_doublet(event.hits, d) ? 1 : 0) << '\n';
  }
  for (std::size_t k = 0; k < problem.triplets.size(); ++k) {
    const auto& t = problem.triplets[k];
    out << event.event_id << ',' << k << ",triplet," << t.first_layer() << ",,,," << num(t.delta_theta) << ','
        << (is_truth_triplet(event.hits, t) ? 1 : 0) << '\n';
  }
}

void write_counts_csv(std::ostream& out, const std::map<std::string, std::size_t>& counts,
                      const Stamp& stamp) {
  stamp_line(out, stamp);
  out << kCountsHeader << '\n';
  for (const auto& [bits, n] : counts) out << bits << ',' << n << '\n';
}

std::map<std::string, std::size_t> read_counts_csv(std::istream& in, const std::string& name) {
  std::map<std::string, std::size_t> out;
  CsvReader r(in, name, kCountsHeader);
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f[0].empty() || f[0].find_first_not_of("01") != std::string::npos) r.fail("bad bitstring '" + f[0] + "'");
    out[f[0]] += r.integer<std::size_t>(f[1], "count");
  }
  return out;
}

void write_plotdata_csv(std::ostream& out, std::span<const MetricsReport> reports,
                        const std::map<std::string, std::size_t>* counts) {
  out << "metric,xi_label,bin,value,err_lo,err_hi\n";
  auto scalar = [&out](const char* metric, const std::string& label, const std::optional<double>& v) {
    out << metric << ',' << label << ",,";
    if (v) out << num(*v);
    out << ",0,0\n";
  };
  auto curve = [&out](const char* metric, const std::string& label, const std::vector<BinnedValue>& bins) {
    for (const auto& b : bins) {
      out << metric << ',' << label << ',' << num(b.lo) << '-' << num(b.hi) << ',';
      if (b.value) out << num(*b.value);
      out << ',' << num(b.err_lo) << ',' << num(b.err_hi) << '\n';
    }
  };
  auto slice = [&](const std::string& label, const SliceMetrics& m) {
    scalar("efficiency", label, m.scalars.efficiency);
    scalar("fake_rate", label, m.scalars.fake_rate);
    scalar("duplication_rate", label, m.scalars.duplication_rate);
    scalar("energy_resolution", label, m.scalars.energy_resolution);
    curve("efficiency_vs_energy", label, m.efficiency_vs_energy);
    curve("fake_rate_vs_energy", label, m.fake_rate_vs_energy);
  };
  for (const auto& r : reports) {
    // A single-label report is fully described by its label slice.
    if (r.per_xi.size() != 1) slice("all", r.overall);
    for (const auto& [xi, m] : r.per_xi) slice(num(xi), m);
  }
  if (counts) {
    for (const auto& [bits, n] : *counts) out << "vqe_counts,," << bits << ',' << n << ",0,0\n";
  }
}

}  // namespace qtrack

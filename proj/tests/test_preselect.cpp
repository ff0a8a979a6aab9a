#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qtrack/errors.hpp"
#include "qtrack/fastsim.hpp"
#include "qtrack/pipeline.hpp"
#include "qtrack/preselect.hpp"
#include "test_util.hpp"

using namespace qtrack;

namespace {

Doublet angled(std::size_t inner, std::size_t outer, int layer, double txz, double tyz) {
  Doublet d;
  d.inner = inner;
  d.outer = outer;
  d.inner_layer = layer;
  d.theta_xz = txz;
  d.theta_yz = tyz;
  return d;
}

std::vector<Event> smeared_events(int n, double mean = 100.0) {
  const auto g = build_geometry();
  SimConfig s;
  s.mean_multiplicity = mean;
  std::vector<Event> out;
  for (int k = 0; k < n; ++k) out.push_back(generate_event(s, g, k));
  return out;
}

PreselectionWindow calibrated_window(const std::vector<Event>& events) {
  std::vector<Doublet> truth;
  for (const auto& e : events) {
    auto d = truth_doublets(e);
    truth.insert(truth.end(), d.begin(), d.end());
  }
  return window_from_calibration(calibrate_dx_window(truth));
}

}  // namespace

TEST_CASE("doublet window boundaries") {
  const auto g = build_geometry();
  std::vector<Hit> hits{testutil::hit(0, 0, 0.2, 0.0, 0, g), testutil::hit(1, 1, 0.234, 0.0, 0, g)};
  const auto d = make_doublet(hits, 0, 1);
  REQUIRE(d);
  CHECK(d->dx_over_x0 == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(d->theta_xz == doctest::Approx(std::atan(0.034 / 0.1)).epsilon(1e-12));

  PreselectionWindow w;
  w.dx_sigma = 0.01;
  w.dx_mean = d->dx_over_x0;
  CHECK(build_doublets(hits, w).doublets.size() == 1);

  w.dx_mean = d->dx_over_x0 - 3.0001 * w.dx_sigma;
  CHECK(build_doublets(hits, w).doublets.empty());
  w.dx_mean = d->dx_over_x0 + 3.0001 * w.dx_sigma;
  CHECK(build_doublets(hits, w).doublets.empty());
  w.dx_mean = d->dx_over_x0 - 2.9999 * w.dx_sigma;
  CHECK(build_doublets(hits, w).doublets.size() == 1);
}

TEST_CASE("zero x0 is skipped and counted") {
  const auto g = build_geometry();
  std::vector<Hit> hits{testutil::hit(0, 0, 0.0, 0.0, {}, g), testutil::hit(1, 1, 0.1, 0.0, {}, g),
                        testutil::hit(2, 1, 0.2, 0.0, {}, g)};
  const auto set = build_doublets(hits, PreselectionWindow{});
  CHECK(set.doublets.empty());
  CHECK(set.skipped_zero_x0 == 2);
  CHECK_FALSE(make_doublet(hits, 0, 1));
}

TEST_CASE("single noiseless particle") {
  const auto g = build_geometry();
  const auto e = generate_event(testutil::noiseless_sim(1), g, 0);
  REQUIRE(e.hits.size() == 4);
  PreselectionWindow w;
  const auto d0 = *make_doublet(e.hits, 0, 1);
  w.dx_mean = d0.dx_over_x0;
  w.dx_sigma = 0.05;
  const auto doublets = build_doublets(e.hits, w).doublets;
  REQUIRE(doublets.size() == 3);
  for (int l = 0; l < 3; ++l) CHECK(doublets[l].inner_layer == l);
  const auto triplets = build_triplets(doublets, w);
  REQUIRE(triplets.size() == 2);
  CHECK(triplets[0].first_layer() == 0);
  CHECK(triplets[0].last_layer() == 2);
  CHECK(triplets[1].first_layer() == 1);
  CHECK(triplets[1].last_layer() == 3);
  for (const auto& t : triplets) CHECK(t.delta_theta < 1e-12);
}

TEST_CASE("triplet kink angle") {
  const auto a = angled(0, 1, 0, 0.1, 0.2);
  CHECK(triplet_delta_theta(a, angled(1, 2, 1, 0.1, 0.2)) == 0.0);
  CHECK(triplet_delta_theta(a, angled(1, 2, 1, 0.1 + 3e-4, 0.2 + 4e-4)) == doctest::Approx(5e-4).epsilon(1e-9));
  CHECK_THROWS_AS(triplet_delta_theta(a, angled(3, 2, 1, 0.1, 0.2)), ContractViolation);

  PreselectionWindow w;
  std::vector<Doublet> ds{a, angled(1, 2, 1, 0.1 + 1.0001e-3, 0.2), angled(1, 3, 1, 0.1 + 0.9999e-3, 0.2)};
  const auto t = build_triplets(ds, w);
  REQUIRE(t.size() == 1);
  CHECK(t[0].second.outer == 3);
}

TEST_CASE("dx calibration") {
  std::vector<Doublet> v(2);
  v[0].dx_over_x0 = 0.1;
  v[1].dx_over_x0 = 0.3;
  CHECK(calibrate_dx_window(v).mean == doctest::Approx(0.2));
  CHECK(calibrate_dx_window(v).sigma == doctest::Approx(std::sqrt(0.02)));

  v[1].dx_over_x0 = 0.1;
  const auto c = calibrate_dx_window(v);
  CHECK(c.sigma == 0.0);
  CHECK_THROWS_AS(validate(PreselectionWindow{c.mean, c.sigma}), ConfigError);
  CHECK(window_from_calibration(c).dx_sigma == kMinDxSigma);

  v.resize(1);
  CHECK_THROWS_AS(calibrate_dx_window(v), ConfigError);
}

TEST_CASE("calibrated width matches the hit smearing") {
  // Identical particles, smearing only: the layer 0-1 dx/x0 spread is pure
  // measurement error, sigma sqrt(1/x0^2 + x1^2/x0^4) to first order.
  const auto g = build_geometry();
  auto s = testutil::noiseless_sim(1000);
  s.smear_hits = true;
  const auto clean = generate_event(testutil::noiseless_sim(1), g, 0);
  REQUIRE(clean.hits.size() == 4);
  const double x0 = clean.hits[0].position.x;
  const double x1 = clean.hits[1].position.x;
  const double expected = g.hit_resolution * std::sqrt(1.0 / (x0 * x0) + x1 * x1 / (x0 * x0 * x0 * x0));

  const auto e = generate_event(s, g, 0);
  std::vector<Doublet> first;
  for (const auto& d : truth_doublets(e)) {
    if (d.inner_layer == 0) first.push_back(d);
  }
  REQUIRE(first.size() == 1000);
  CHECK(calibrate_dx_window(first).sigma == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("pre-selection only uses input hits") {
  const auto events = smeared_events(3);
  const auto w = calibrated_window(events);
  for (const auto& e : events) {
    const auto ds = build_doublets(e.hits, w).doublets;
    for (const auto& d : ds) {
      REQUIRE(d.inner < e.hits.size());
      REQUIRE(d.outer < e.hits.size());
      CHECK(e.hits[d.outer].layer == e.hits[d.inner].layer + 1);
      CHECK(d.dx_over_x0 >= w.dx_low());
      CHECK(d.dx_over_x0 <= w.dx_high());
    }
    for (const auto& t : build_triplets(ds, w)) {
      CHECK(t.second.inner == t.first.outer);
      CHECK((t.first_layer() == 0 || t.first_layer() == 1));
      CHECK(t.last_layer() == t.first_layer() + 2);
      CHECK(t.delta_theta <= w.max_delta_theta);
    }
  }
}

TEST_CASE("truth efficiency of the pre-selection") {
  const auto events = smeared_events(10);
  const auto w = calibrated_window(events);

  std::size_t particles = 0, kept = 0;
  std::map<double, double> doublet_eff;
  for (double ns : {1.0, 2.0, 3.0}) {
    PreselectionWindow wn = w;
    wn.n_sigma = ns;
    std::size_t found = 0, total = 0;
    for (const auto& e : events) {
      total += truth_doublets(e).size();
      for (const auto& d : build_doublets(e.hits, wn).doublets) found += is_truth_doublet(e.hits, d);
    }
    doublet_eff[ns] = static_cast<double>(found) / total;
  }
  CHECK(doublet_eff[1.0] <= doublet_eff[2.0]);
  CHECK(doublet_eff[2.0] <= doublet_eff[3.0]);

  for (const auto& e : events) {
    const auto triplets = build_triplets(build_doublets(e.hits, w).doublets, w);
    std::map<ParticleId, std::set<int>> truth_spans;
    for (const auto& t : triplets) {
      if (auto p = common_particle(e.hits, t.hits())) truth_spans[*p].insert(t.first_layer());
    }
    for (const auto& p : e.particles) {
      if (p.energy <= 3.0) continue;
      int layers = 0;
      for (const auto& h : e.hits) layers += h.truth_particle_id == p.particle_id;
      if (layers != 4) continue;
      ++particles;
      kept += truth_spans[p.particle_id].size() == 2;
    }
  }
  REQUIRE(particles > 100);
  CHECK(static_cast<double>(kept) / particles >= 0.99);
}

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "facetrace/oracle.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/synth.hpp"
#include "test_support.hpp"

using namespace facetrace;
using namespace facetrace::raytrace;

namespace {

// Plane x = x0, square y, z in [-h, h].
Facet square_x(double x0, double h, std::uint32_t id = 0) {
  return make_facet(id, {{x0, -h, -h}, {x0, h, -h}, {x0, h, h}, {x0, -h, h}});
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

Vec3 sky(const Vec3& receiver, double az_deg, double el_deg, double range = 2.02e7) {
  const double az = az_deg * kDegToRad, el = el_deg * kDegToRad;
  return receiver + range * Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
}

}  // namespace

TEST(Crossing, SymmetricSegmentThroughSquare) {
  const Facet f = square_x(0, 1);
  const auto q = direct_blocked({-10, 0, 0}, {10, 0, 0}, f);
  ASSERT_TRUE(q.has_value());
  EXPECT_LT(q->norm(), 1e-12);
}

TEST(Crossing, SameSideNotBlocked) {
  const Facet f = square_x(0, 1);
  EXPECT_FALSE(direct_blocked({-10, 0, 0}, {-5, 0, 0}, f).has_value());
  EXPECT_FALSE(direct_blocked({-10, 5, 0}, {10, 5, 0}, f).has_value());  // misses the square
}

TEST(Crossing, MatchesTriangulatedOracle) {
  test_support::Rng rng(31);
  int compared = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    synth::SceneTruth truth;
    const double yaw = rng.uniform(0, 2 * kPi);
    truth.planes.push_back(synth::make_wall(0, rng.uniform(-5, 5), rng.uniform(-5, 5), yaw, rng.uniform(2, 10),
                                            rng.uniform(2, 10), rng.uniform(-3, 0)));
    const PlanarMap map = truth.to_map();
    const Vec3 s = rng.vec(-20, 20), r = rng.vec(-20, 20);
    const auto verdict = oracle::oracle_classify(s, r, truth);
    if (verdict.grazing) continue;
    ++compared;
    const bool blocked = direct_blocked(s, r, map.facets[0]).has_value();
    ASSERT_EQ(blocked, !verdict.blocking.empty()) << "trial " << trial;
  }
  EXPECT_GT(compared, 9900);
}

TEST(PointInFacet, UnitSquare) {
  const Facet f = make_facet(0, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
  EXPECT_TRUE(point_in_facet({0.5, 0.5, 0}, f));
  EXPECT_FALSE(point_in_facet({2, 0.5, 0}, f));
  EXPECT_TRUE(point_in_facet({1, 0.5, 0}, f));  // on the boundary
  EXPECT_TRUE(point_in_facet({0, 0, 0}, f));    // on a vertex
}

TEST(PointInFacet, MatchesHalfPlaneOracle) {
  test_support::Rng rng(32);
  int checked = 0;
  for (int poly = 0; poly < 100; ++poly) {
    // Random convex polygon: vertices on a circle at sorted angles.
    std::vector<double> angles;
    const int n = rng.integer(3, 9);
    for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0, 2 * kPi));
    std::sort(angles.begin(), angles.end());
    std::vector<Vec2> uv;
    for (double a : angles) uv.emplace_back(5 * std::cos(a), 5 * std::sin(a));
    const Vec3 normal = rng.unit();
    const Vec3 origin = rng.vec(-50, 50);
    Vec3 u = normal.unitOrthogonal();
    Vec3 v = normal.cross(u);
    std::vector<Vec3> poly3;
    for (const auto& p : uv) poly3.push_back(origin + p.x() * u + p.y() * v);
    const Facet f = make_facet(0, poly3);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 q(rng.uniform(-6, 6), rng.uniform(-6, 6));
      bool inside = true;
      double min_edge = 1e300;
      for (int i = 0; i < n; ++i) {
        const Vec2 e = uv[(i + 1) % n] - uv[i];
        const Vec2 w = q - uv[i];
        const double signed_dist = (e.x() * w.y() - e.y() * w.x()) / e.norm();
        inside &= signed_dist >= 0;
        min_edge = std::min(min_edge, std::abs(signed_dist));
      }
      if (min_edge < 1e-7) continue;
      ++checked;
      ASSERT_EQ(point_in_facet(origin + q.x() * u + q.y() * v, f), inside) << "polygon " << poly;
    }
  }
  EXPECT_GT(checked, 99000);
}

TEST(Mirror, PlaneAtTwenty) {
  const Facet f = square_x(20, 100);
  const Vec3 r(3, -4, 1.5);
  EXPECT_LT((mirror_point(r, f) - Vec3(37, -4, 1.5)).norm(), 1e-12);
  const Vec3 on(20, 5, 5);
  EXPECT_LT((mirror_point(on, f) - on).norm(), 1e-12);
}

TEST(Mirror, IsAnInvolution) {
  test_support::Rng rng(33);
  for (int i = 0; i < 1000; ++i) {
    const Facet f = make_facet(0, {rng.vec(-10, 10), rng.vec(-10, 10), rng.vec(-10, 10)});
    const Vec3 r = rng.vec(-100, 100);
    EXPECT_LT((mirror_point(mirror_point(r, f), f) - r).norm(), 1e-12);
  }
}

TEST(Reflection, HandCheckedGeometry) {
  const Facet f = square_x(20, 100);
  const auto g = reflection_path({0, 40, 0}, {0, 0, 0}, f);
  ASSERT_TRUE(g.has_value());
  EXPECT_LT((g->mirror - Vec3(40, 0, 0)).norm(), 1e-12);
  EXPECT_LT((g->point - Vec3(20, 20, 0)).norm(), 1e-12);
  EXPECT_NEAR(g->delay, std::sqrt(3200.0) - 40.0, 1e-12);
  EXPECT_NEAR(g->delay, 16.5685, 1e-4);
}

TEST(Reflection, ReceiverOnThePlane) {
  const Facet f = square_x(20, 100);
  const Vec3 r(20, 0, 0);
  const auto g = reflection_path({0, 40, 0}, r, f);
  ASSERT_TRUE(g.has_value());
  EXPECT_LT((g->point - r).norm(), 1e-12);
  EXPECT_NEAR(g->delay, 0.0, 1e-12);
}

TEST(Reflection, OppositeSidesGiveNoPath) {
  const Facet f = square_x(20, 100);
  EXPECT_FALSE(reflection_path({40, 40, 0}, {0, 0, 0}, f).has_value());
  EXPECT_FALSE(reflection_path({0, 400, 0}, {0, 0, 0}, f).has_value());  // hits outside the square
}

TEST(Reflection, SpecularLawAndPathIdentity) {
  test_support::Rng rng(34);
  const Facet f = square_x(20, 1e6);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 r(rng.uniform(-20, 19), rng.uniform(-50, 50), rng.uniform(0, 3));
    const double range = i % 2 ? 2.02e7 : rng.uniform(50, 5000);
    const Vec3 dir(-std::abs(rng.normal(1.0)), rng.normal(1.0), std::abs(rng.normal(1.0)));
    const Vec3 s = r + range * dir.normalized();
    const auto g = reflection_path(s, r, f);
    if (!g) continue;
    ++checked;
    const Vec3 n = f.plane.normal;
    const double incidence = angle_between(s - g->point, n.dot(s - g->point) > 0 ? n : Vec3(-n));
    const double reflection = angle_between(r - g->point, n.dot(r - g->point) > 0 ? n : Vec3(-n));
    if ((r - g->point).norm() > 1e-3) EXPECT_NEAR(incidence, reflection, 1e-9);
    const long double excess = test_support::wide_distance(s, g->mirror) - test_support::wide_distance(s, r);
    EXPECT_NEAR(static_cast<double>(excess), g->delay, 1e-6);
  }
  EXPECT_GT(checked, 1000);
}

TEST(Reflection, ExcessPathAtSatelliteRange) {
  const Vec3 r(0, 0, 1.5);
  const Vec3 s = sky(r, 90, 30);
  EXPECT_NEAR(excess_path(s, r, r), 0.0, 1e-9);
  const Vec3 q(20, 5, 10);
  const auto ld = test_support::wide_distance;
  const long double reference = ld(q, s) + ld(r, q) - ld(r, s);
  EXPECT_NEAR(excess_path(s, q, r), static_cast<double>(reference), 1e-7);
}

TEST(Classify, EmptyMapIsLos) {
  const auto path = classify({0, 0, 2e7}, {0, 0, 0}, PlanarMap{});
  EXPECT_EQ(path.classification, SignalClass::kLos);
  EXPECT_EQ(path.applied_delay, 0.0);
  EXPECT_TRUE(path.reflections.empty());
}

TEST(Classify, SingleWallBetweenIsBlocked) {
  PlanarMap map;
  map.facets.push_back(make_facet(0, {{20, -50, 0}, {20, 50, 0}, {20, 50, 18}, {20, -50, 18}}));
  const Vec3 r(0, 0, 1.5);
  const auto path = classify(sky(r, 90, 20), r, map);
  EXPECT_EQ(path.classification, SignalClass::kBlocked);
  EXPECT_EQ(path.blocking_facets, std::vector<std::uint32_t>{0});
  EXPECT_EQ(path.applied_delay, 0.0);
}

TEST(Classify, DirectAndReflectedIsMixed) {
  PlanarMap map;
  map.facets.push_back(make_facet(0, {{20, -500, 0}, {20, 500, 0}, {20, 500, 60}, {20, -500, 60}}));
  const Vec3 r(0, 0, 1.5);
  const auto path = classify(sky(r, 270, 40), r, map);
  EXPECT_EQ(path.classification, SignalClass::kLosPlusNlos);
  ASSERT_EQ(path.reflections.size(), 1u);
  EXPECT_GT(path.reflections[0].delay, 0.0);
  EXPECT_EQ(path.applied_delay, 0.0);
}

TEST(Classify, DelayPolicies) {
  // Search canyon scenes for a blocked satellite seen through two facades.
  bool found = false;
  for (std::uint64_t scene = 0; scene < 200 && !found; ++scene) {
    synth::CanyonParams params;
    params.seed = 500 + scene;
    params.sample_points = false;
    const auto canyon = synth::generate_canyon(params);
    const PlanarMap map = canyon.truth.to_map();
    const Vec3 r = synth::random_street_receiver(params, canyon.truth, scene);
    for (const Vec3& s : synth::random_satellites(50, 5.0, scene, r)) {
      const auto lo = classify(s, r, map, DelayPolicy::kMin);
      if (lo.classification != SignalClass::kNlos || lo.visible_reflections() < 2) continue;
      std::vector<double> visible;
      for (const auto& refl : lo.reflections)
        if (!refl.occluded) visible.push_back(refl.delay);
      const double mean = std::accumulate(visible.begin(), visible.end(), 0.0) / visible.size();
      EXPECT_DOUBLE_EQ(lo.applied_delay, *std::min_element(visible.begin(), visible.end()));
      EXPECT_DOUBLE_EQ(classify(s, r, map, DelayPolicy::kMax).applied_delay,
                       *std::max_element(visible.begin(), visible.end()));
      EXPECT_NEAR(classify(s, r, map, DelayPolicy::kAll).applied_delay, mean, 1e-9);
      found = true;
      break;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Classify, OccludedReflectionDoesNotCount) {
  PlanarMap map;
  map.facets.push_back(make_facet(0, {{-20, -500, 0}, {-20, 500, 0}, {-20, 500, 40}, {-20, -500, 40}}));
  map.facets.push_back(make_facet(1, {{20, -500, 0}, {20, 500, 0}, {20, 500, 80}, {20, -500, 80}}));
  // A screen between the receiver and the east wall.
  map.facets.push_back(make_facet(2, {{10, -500, 0}, {10, 500, 0}, {10, 500, 100}, {10, -500, 100}}));
  const Vec3 r(0, 0, 1.5);
  const auto path = classify(sky(r, 270, 40), r, map);
  EXPECT_EQ(path.classification, SignalClass::kBlocked);
  for (const auto& refl : path.reflections)
    if (refl.facet_id == 1) EXPECT_TRUE(refl.occluded);
}

TEST(Classify, AgreesWithOracleOnRandomCanyons) {
  int compared = 0, grazing = 0;
  for (std::uint64_t scene = 0; scene < 100; ++scene) {
    synth::CanyonParams params;
    params.seed = 1000 + scene;
    params.sample_points = false;
    const auto canyon = synth::generate_canyon(params);
    const PlanarMap map = canyon.truth.to_map();
    const Vec3 r = synth::random_street_receiver(params, canyon.truth, scene);
    for (const Vec3& s : synth::random_satellites(20, 5.0, 77 + scene, r)) {
      const auto verdict = oracle::oracle_classify(s, r, canyon.truth);
      if (verdict.grazing) {
        ++grazing;
        continue;
      }
      ++compared;
      const auto path = classify(s, r, map);
      ASSERT_EQ(path.classification, verdict.classification) << "scene " << scene;
      ASSERT_EQ(path.blocking_facets, verdict.blocking);
      ASSERT_EQ(path.reflections.size(), verdict.reflections.size());
      for (std::size_t i = 0; i < path.reflections.size(); ++i) {
        EXPECT_EQ(path.reflections[i].facet_id, verdict.reflections[i].facet);
        EXPECT_EQ(path.reflections[i].occluded, verdict.reflections[i].occluded);
        EXPECT_NEAR(path.reflections[i].delay, verdict.reflections[i].delay, 1e-6);
        EXPECT_LT((path.reflections[i].point - verdict.reflections[i].point).norm(), 1e-6);
      }
    }
  }
  EXPECT_EQ(compared + grazing, 2000);
  EXPECT_LT(grazing, 20);
}

TEST(TraceRun, SingleSatelliteEmptyMap) {
  const std::vector<SatEpoch> sats{{0.0, 5, {0, 0, 2e7}}};
  const std::vector<ReceiverEpoch> route{{0.0, {0, 0, 0}}};
  const auto result = trace_run(sats, route, PlanarMap{});
  ASSERT_EQ(result.rows.size(), 1u);
  EXPECT_EQ(result.rows[0].prn, 5);
  EXPECT_EQ(result.rows[0].classification, SignalClass::kLos);
  EXPECT_EQ(result.skipped, 0u);
}

TEST(TraceRun, OrdersRowsAndCountsMissingEpochs) {
  const std::vector<SatEpoch> sats{{1.0, 9, {0, 0, 2e7}}, {0.0, 3, {0, 1, 2e7}}, {1.0, 2, {1, 0, 2e7}},
                                   {0.0, 1, {1, 1, 2e7}}, {2.0, 4, {1, 1, 2e7}}};
  const std::vector<ReceiverEpoch> route{{1.0, {0, 0, 0}}, {0.0, {0, 0, 0}}};
  const auto result = trace_run(sats, route, PlanarMap{});
  ASSERT_EQ(result.rows.size(), 4u);
  EXPECT_EQ(result.skipped, 1u);
  const std::vector<std::pair<double, int>> expected{{0.0, 1}, {0.0, 3}, {1.0, 2}, {1.0, 9}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(result.rows[i].epoch, expected[i].first);
    EXPECT_EQ(result.rows[i].prn, expected[i].second);
  }
}

TEST(TraceRun, ScriptedScenarioDelaysMatchInjections) {
  synth::NlosScenarioParams params;
  params.epochs = 120;
  const auto scenario = synth::nlos_scenario(params);
  const auto result = trace_run(scenario.sats, scenario.route, scenario.truth.to_map(), DelayPolicy::kMin, 3);
  std::map<std::pair<double, int>, const RayPath*> by_key;
  for (const auto& row : result.rows) by_key[{row.epoch, row.prn}] = &row;
  ASSERT_FALSE(scenario.truth.injections.empty());
  for (const auto& inj : scenario.truth.injections) {
    const RayPath* row = by_key.at({inj.epoch, inj.prn});
    EXPECT_EQ(row->classification, SignalClass::kNlos);
    EXPECT_NEAR(row->applied_delay, inj.delay, 1e-6);
    ASSERT_FALSE(row->reflections.empty());
  }
  std::size_t nlos = 0;
  for (const auto& row : result.rows) nlos += row.classification == SignalClass::kNlos;
  EXPECT_EQ(nlos, scenario.truth.injections.size());
}

TEST(TraceRun, WorkerCountDoesNotChangeRows) {
  synth::NlosScenarioParams params;
  params.epochs = 50;
  const auto scenario = synth::nlos_scenario(params);
  const auto map = scenario.truth.to_map();
  const auto a = trace_run(scenario.sats, scenario.route, map, DelayPolicy::kMin, 1);
  const auto b = trace_run(scenario.sats, scenario.route, map, DelayPolicy::kMin, 4);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].classification, b.rows[i].classification);
    EXPECT_EQ(a.rows[i].applied_delay, b.rows[i].applied_delay);
  }
}

TEST(SignalClassText, RoundTrip) {
  for (auto c : {SignalClass::kLos, SignalClass::kBlocked, SignalClass::kNlos, SignalClass::kLosPlusNlos})
    EXPECT_EQ(parse_signal_class(to_string(c)), c);
  for (auto p : {DelayPolicy::kMin, DelayPolicy::kMax, DelayPolicy::kAll})
    EXPECT_EQ(parse_delay_policy(to_string(p)), p);
  EXPECT_THROW(parse_signal_class("los"), std::invalid_argument);
  EXPECT_THROW(parse_delay_policy("median"), std::invalid_argument);
}

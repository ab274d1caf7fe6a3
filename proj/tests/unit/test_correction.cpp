#include <gtest/gtest.h>

#include <cmath>

#include "facetrace/correction.hpp"
#include "facetrace/synth.hpp"
#include "test_support.hpp"

using namespace facetrace;
using namespace facetrace::correction;

namespace {

std::vector<SatEpoch> ring_of_satellites(int count, double epoch = 0.0) {
  std::vector<SatEpoch> sats;
  for (int i = 0; i < count; ++i) {
    const double az = 2 * kPi * i / count;
    const double el = (20.0 + 60.0 * (i % 3) / 2.0) * kDegToRad;
    sats.push_back({epoch, i + 1, 2.02e7 * Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el))});
  }
  return sats;
}

std::vector<Observation> exact_ranges(std::span<const SatEpoch> sats, const Vec3& rx, double bias) {
  std::vector<Observation> obs;
  for (const auto& s : sats) obs.push_back({s.epoch, s.prn, (s.position - rx).norm() + bias});
  return obs;
}

RayPath path(double epoch, int prn, SignalClass c, double delay = 0.0) {
  RayPath p;
  p.epoch = epoch;
  p.prn = prn;
  p.classification = c;
  p.applied_delay = delay;
  return p;
}

}  // namespace

TEST(Correct, LosUnchangedNlosReducedBlockedDropped) {
  const std::vector<Observation> obs{{0, 1, 2.1e7}, {0, 2, 2.2e7}, {0, 3, 2.3e7}, {0, 4, 2.4e7}};
  const std::vector<RayPath> paths{path(0, 1, SignalClass::kLos), path(0, 2, SignalClass::kNlos, 16.5685),
                                   path(0, 3, SignalClass::kBlocked), path(0, 4, SignalClass::kLosPlusNlos, 3.0)};
  const auto out = correct_observations(obs, paths);
  ASSERT_EQ(out.observations.size(), 3u);
  EXPECT_EQ(out.observations[0].pseudorange, 2.1e7);
  EXPECT_EQ(out.observations[1].pseudorange, 2.2e7 - 16.5685);
  EXPECT_EQ(out.observations[2].prn, 4);
  EXPECT_EQ(out.observations[2].pseudorange, 2.4e7);
  EXPECT_EQ(out.corrected, 1u);
  EXPECT_EQ(out.dropped_blocked, 1u);
  EXPECT_EQ(out.unmatched, 0u);
}

TEST(Correct, MixedPolicySwitch) {
  const std::vector<Observation> obs{{0, 4, 100.0}};
  const std::vector<RayPath> paths{path(0, 4, SignalClass::kLosPlusNlos, 3.0)};
  Policy policy;
  policy.correct_mixed = true;
  EXPECT_EQ(correct_observations(obs, paths, policy).observations[0].pseudorange, 100.0);
  RayPath mixed = paths[0];
  mixed.reflections.push_back({0, Vec3::Zero(), Vec3::Zero(), 3.0, false});
  EXPECT_EQ(correct_observations(obs, std::vector<RayPath>{mixed}, policy).observations[0].pseudorange, 97.0);
}

TEST(Correct, UnmatchedRowsPassThrough) {
  const std::vector<Observation> obs{{0, 1, 10.0}, {1, 1, 11.0}};
  const std::vector<RayPath> paths{path(0, 1, SignalClass::kNlos, 2.0)};
  const auto out = correct_observations(obs, paths);
  ASSERT_EQ(out.observations.size(), 2u);
  EXPECT_EQ(out.observations[1].pseudorange, 11.0);
  EXPECT_EQ(out.unmatched, 1u);
}

TEST(Correct, NeverIncreasesPseudorange) {
  test_support::Rng rng(61);
  std::vector<Observation> obs;
  std::vector<RayPath> paths;
  const SignalClass classes[] = {SignalClass::kLos, SignalClass::kNlos, SignalClass::kBlocked, SignalClass::kLosPlusNlos};
  for (int i = 0; i < 500; ++i) {
    obs.push_back({double(i / 10), i % 10, rng.uniform(2e7, 2.5e7)});
    paths.push_back(path(double(i / 10), i % 10, classes[rng.integer(0, 3)], rng.uniform(0, 30)));
  }
  const auto out = correct_observations(obs, paths);
  std::size_t j = 0;
  for (const auto& o : obs) {
    if (j < out.observations.size() && out.observations[j].epoch == o.epoch && out.observations[j].prn == o.prn) {
      EXPECT_LE(out.observations[j].pseudorange, o.pseudorange);
      ++j;
    }
  }
  EXPECT_EQ(j, out.observations.size());
}

TEST(Spp, NoiseFreeEightSatellites) {
  const auto sats = ring_of_satellites(8);
  const Vec3 truth(12.0, -7.0, 1.5);
  const auto fix = spp_solve(exact_ranges(sats, truth, 120.0), sats);
  ASSERT_TRUE(fix.has_value());
  EXPECT_TRUE(fix->converged);
  EXPECT_LT((fix->position - truth).norm(), 1e-3);
  EXPECT_NEAR(fix->clock_bias, 120.0, 1e-3);
  EXPECT_EQ(fix->used, 8u);
}

TEST(Spp, CommonModeGoesToClock) {
  const auto sats = ring_of_satellites(8);
  const Vec3 truth(3.0, 4.0, 1.5);
  auto obs = exact_ranges(sats, truth, 50.0);
  const auto base = spp_solve(obs, sats);
  for (auto& o : obs) o.pseudorange += 10.0;
  const auto shifted = spp_solve(obs, sats);
  ASSERT_TRUE(base && shifted);
  EXPECT_LT((base->position - shifted->position).norm(), 1e-6);
  EXPECT_NEAR(shifted->clock_bias - base->clock_bias, 10.0, 1e-6);
}

TEST(Spp, FewerThanFourSatellites) {
  const auto sats = ring_of_satellites(3);
  EXPECT_FALSE(spp_solve(exact_ranges(sats, Vec3::Zero(), 0.0), sats).has_value());
  // Observations without a matching satellite do not count.
  auto obs = exact_ranges(sats, Vec3::Zero(), 0.0);
  obs.push_back({0.0, 99, 2e7});
  EXPECT_FALSE(spp_solve(obs, sats).has_value());
}

TEST(Spp, DuplicateGeometryIsFlagged) {
  std::vector<SatEpoch> sats;
  for (int i = 0; i < 6; ++i) sats.push_back({0.0, i + 1, Vec3(1e7, 1e7, 1.5e7)});
  const auto fix = spp_solve(exact_ranges(sats, Vec3::Zero(), 0.0), sats);
  ASSERT_TRUE(fix.has_value());
  EXPECT_FALSE(fix->converged);
  EXPECT_TRUE(fix->position.allFinite());
}

TEST(Spp, TranslationEquivariant) {
  auto sats = ring_of_satellites(7);
  const Vec3 truth(-5.0, 20.0, 2.0);
  const Vec3 offset(250.0, -80.0, 30.0);
  test_support::Rng rng(62);
  auto obs = exact_ranges(sats, truth, 3.0);
  for (auto& o : obs) o.pseudorange += rng.normal(2.0);
  const auto a = spp_solve(obs, sats);
  for (auto& s : sats) s.position += offset;
  SolverOptions opts;
  opts.initial_position = offset;
  const auto b = spp_solve(obs, sats, opts);
  ASSERT_TRUE(a && b);
  EXPECT_LT((b->position - a->position - offset).norm(), 1e-3);
}

TEST(Spp, WeightHookIsApplied) {
  const auto sats = ring_of_satellites(8);
  const Vec3 truth(1.0, 2.0, 1.5);
  auto obs = exact_ranges(sats, truth, 0.0);
  obs[0].pseudorange += 50.0;  // one bad range
  SolverOptions down;
  down.weight = [](const Observation& o, const Vec3&) { return o.prn == 1 ? 1e-8 : 1.0; };
  const auto plain = spp_solve(obs, sats);
  const auto weighted = spp_solve(obs, sats, down);
  ASSERT_TRUE(plain && weighted);
  EXPECT_LT((weighted->position - truth).norm(), 1e-3);
  EXPECT_GT((plain->position - truth).norm(), 1.0);
}

TEST(Spp, EpochsSolvedInOrderAndWorkerIndependent) {
  std::vector<SatEpoch> sats;
  std::vector<Observation> obs;
  for (int e = 4; e >= 0; --e) {
    const auto ring = ring_of_satellites(6, e);
    sats.insert(sats.end(), ring.begin(), ring.end());
    const auto o = exact_ranges(ring, Vec3(e, 0, 1.5), 7.0);
    obs.insert(obs.end(), o.begin(), o.end());
  }
  const auto a = solve_epochs(obs, sats, {}, 1);
  const auto b = solve_epochs(obs, sats, {}, 3);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].epoch, double(i));
    EXPECT_LT((a[i].position - Vec3(double(i), 0, 1.5)).norm(), 1e-3);
    EXPECT_EQ(a[i].position, b[i].position);
  }
}

TEST(Errors, ExactFixesGiveZero) {
  std::vector<PositionFix> fixes;
  std::vector<ReceiverEpoch> truth;
  for (int e = 0; e < 10; ++e) {
    PositionFix f;
    f.epoch = e;
    f.position = Vec3(e, 2 * e, 1.5);
    fixes.push_back(f);
    truth.push_back({double(e), f.position});
  }
  const auto s = error_series(fixes, truth);
  ASSERT_EQ(s.rows.size(), 10u);
  EXPECT_EQ(s.summary.rms3d, 0.0);
  EXPECT_EQ(s.summary.max3d, 0.0);
}

TEST(Errors, ConstantOffsetAndMissingEpochs) {
  std::vector<PositionFix> fixes;
  std::vector<ReceiverEpoch> truth;
  for (int e = 0; e < 10; ++e) {
    PositionFix f;
    f.epoch = e;
    f.position = Vec3(e + 1.0, 0, 0);
    fixes.push_back(f);
    if (e < 8) truth.push_back({double(e), Vec3(e, 0, 0)});
  }
  const auto s = error_series(fixes, truth);
  ASSERT_EQ(s.rows.size(), 8u);
  for (const auto& r : s.rows) EXPECT_DOUBLE_EQ(r.horizontal, 1.0);
  EXPECT_DOUBLE_EQ(s.summary.rms3d, 1.0);
  EXPECT_DOUBLE_EQ(s.summary.rms_horizontal, 1.0);
  EXPECT_EQ(s.summary.missing, 2u);
}

TEST(EndToEnd, ExactInjectedCorrectionRestoresFix) {
  synth::NlosScenarioParams params;
  params.epochs = 100;
  const auto sc = synth::nlos_scenario(params);
  std::vector<RayPath> paths;
  for (const auto& inj : sc.truth.injections) paths.push_back(path(inj.epoch, inj.prn, SignalClass::kNlos, inj.delay));
  const auto corrected = correct_observations(sc.observations, paths);
  const auto fixes = solve_epochs(corrected.observations, sc.sats);
  const auto raw = solve_epochs(sc.observations, sc.sats);
  const auto err = error_series(fixes, sc.route);
  const auto raw_err = error_series(raw, sc.route);
  EXPECT_LT(err.summary.max3d, 1e-3);
  EXPECT_GT(raw_err.summary.rms3d, 1.0);
}

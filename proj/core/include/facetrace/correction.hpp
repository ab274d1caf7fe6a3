#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "facetrace/raytrace.hpp"
#include "facetrace/types.hpp"

namespace facetrace {

struct Observation {
  double epoch = 0.0;
  int prn = 0;
  double pseudorange = 0.0;  // meters
};

enum class FrameLabel { kEnu, kEcef };
std::string_view to_string(FrameLabel f);

struct PositionFix {
  double epoch = 0.0;
  Vec3 position = Vec3::Zero();
  FrameLabel frame = FrameLabel::kEnu;
  double clock_bias = 0.0;  // meters
  std::size_t used = 0;
  bool converged = false;
  int iterations = 0;
  double residual_rms = 0.0;
};

namespace correction {

struct Policy {
  // LOS+NLOS signals are assumed tracked on the direct path and left untouched unless set.
  bool correct_mixed = false;
};

struct CorrectionResult {
  std::vector<Observation> observations;
  std::size_t corrected = 0;
  std::size_t dropped_blocked = 0;
  std::size_t unmatched = 0;
};

/// NLOS pseudoranges lose their applied delay, Blocked rows are dropped, everything else
/// passes through. Observations without a ray path pass through and are counted.
CorrectionResult correct_observations(std::span<const Observation> obs,
                                      std::span<const RayPath> paths, const Policy& policy = {});

/// Optional per-observation weight; identity when empty.
using WeightFn = std::function<double(const Observation&, const Vec3& sat)>;

struct SolverOptions {
  int max_iterations = 20;
  double convergence_m = 1e-4;
  Vec3 initial_position = Vec3::Zero();
  FrameLabel frame = FrameLabel::kEnu;
  WeightFn weight;
};

/// Gauss-Newton single-epoch position and clock solution. Observations whose prn has no
/// satellite are ignored. Empty with fewer than four usable satellites; a rank-deficient
/// or non-converging geometry returns a fix with converged = false.
std::optional<PositionFix> spp_solve(std::span<const Observation> epoch_obs,
                                     std::span<const SatEpoch> epoch_sats,
                                     const SolverOptions& options = {});

/// spp_solve for every epoch present in the observations, in epoch order.
std::vector<PositionFix> solve_epochs(std::span<const Observation> obs,
                                      std::span<const SatEpoch> sats,
                                      const SolverOptions& options = {}, unsigned workers = 1);

struct ErrorRow {
  double epoch = 0.0;
  Vec3 error = Vec3::Zero();  // fix - truth, in the fix frame
  double horizontal = 0.0;
  double norm3d = 0.0;
};

struct ErrorSummary {
  std::size_t count = 0;
  std::size_t missing = 0;  // fixes without a truth epoch
  double mean3d = 0.0;
  double rms3d = 0.0;
  double max3d = 0.0;
  double rms_horizontal = 0.0;
};

struct ErrorSeries {
  std::vector<ErrorRow> rows;
  ErrorSummary summary;
};

ErrorSeries error_series(std::span<const PositionFix> fixes, std::span<const ReceiverEpoch> truth);

}  // namespace correction
}  // namespace facetrace

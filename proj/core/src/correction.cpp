#include "facetrace/correction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "facetrace/parallel.hpp"

namespace facetrace {

std::string_view to_string(FrameLabel f) { return f == FrameLabel::kEnu ? "enu" : "ecef"; }

namespace correction {

CorrectionResult correct_observations(std::span<const Observation> obs,
                                      std::span<const RayPath> paths, const Policy& policy) {
  std::map<std::pair<double, int>, const RayPath*> by_key;
  for (const auto& p : paths) by_key[{p.epoch, p.prn}] = &p;

  CorrectionResult out;
  out.observations.reserve(obs.size());
  for (const auto& o : obs) {
    auto it = by_key.find({o.epoch, o.prn});
    if (it == by_key.end()) {
      ++out.unmatched;
      out.observations.push_back(o);
      continue;
    }
    const RayPath& path = *it->second;
    Observation corrected = o;
    switch (path.classification) {
      case SignalClass::kBlocked:
        ++out.dropped_blocked;
        continue;
      case SignalClass::kNlos:
        corrected.pseudorange -= path.applied_delay;
        ++out.corrected;
        break;
      case SignalClass::kLosPlusNlos:
        if (policy.correct_mixed) {
          double best = -1.0;
          for (const auto& r : path.reflections) {
            if (!r.occluded && (best < 0.0 || r.delay < best)) best = r.delay;
          }
          if (best > 0.0) {
            corrected.pseudorange -= best;
            ++out.corrected;
          }
        }
        break;
      case SignalClass::kLos:
        break;
    }
    out.observations.push_back(corrected);
  }
  return out;
}

std::optional<PositionFix> spp_solve(std::span<const Observation> epoch_obs,
                                     std::span<const SatEpoch> epoch_sats,
                                     const SolverOptions& options) {
  std::map<int, Vec3> sat_by_prn;
  for (const auto& s : epoch_sats) sat_by_prn[s.prn] = s.position;

  std::vector<std::pair<Observation, Vec3>> used;
  for (const auto& o : epoch_obs) {
    auto it = sat_by_prn.find(o.prn);
    if (it != sat_by_prn.end() && std::isfinite(o.pseudorange)) used.emplace_back(o, it->second);
  }
  if (used.size() < 4) return std::nullopt;

  PositionFix fix;
  fix.epoch = used.front().first.epoch;
  fix.frame = options.frame;
  fix.used = used.size();

  const auto m = static_cast<Eigen::Index>(used.size());
  Eigen::Vector4d state;
  state << options.initial_position, 0.0;
  Eigen::MatrixXd design(m, 4);
  Eigen::VectorXd residual(m);
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(m);
  if (options.weight) {
    for (Eigen::Index i = 0; i < m; ++i) {
      weights[i] = std::sqrt(std::max(0.0, options.weight(used[i].first, used[i].second)));
    }
  }

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Vec3 pos = state.head<3>();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec3 los = used[i].second - pos;
      const double range = los.norm();
      residual[i] = weights[i] * (used[i].first.pseudorange - (range + state[3]));
      design.row(i) << -weights[i] * los.transpose() / range, weights[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    fix.iterations = iter;
    if (qr.rank() < 4) {
      fix.converged = false;
      break;
    }
    const Eigen::Vector4d step = qr.solve(residual);
    if (!step.allFinite()) {
      fix.converged = false;
      break;
    }
    state += step;
    if (step.head<3>().norm() < options.convergence_m) {
      fix.converged = true;
      break;
    }
  }

  fix.position = state.head<3>();
  fix.clock_bias = state[3];
  double sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = used[i].first.pseudorange - ((used[i].second - fix.position).norm() + fix.clock_bias);
    sq += r * r;
  }
  fix.residual_rms = std::sqrt(sq / static_cast<double>(m));
  if (!std::isfinite(fix.residual_rms)) fix.converged = false;
  return fix;
}

std::vector<PositionFix> solve_epochs(std::span<const Observation> obs,
                                      std::span<const SatEpoch> sats, const SolverOptions& options,
                                      unsigned workers) {
  std::map<double, std::vector<Observation>> obs_by_epoch;
  for (const auto& o : obs) obs_by_epoch[o.epoch].push_back(o);
  std::map<double, std::vector<SatEpoch>> sats_by_epoch;
  for (const auto& s : sats) sats_by_epoch[s.epoch].push_back(s);

  std::vector<double> epochs;
  for (const auto& [epoch, _] : obs_by_epoch) epochs.push_back(epoch);
  std::vector<std::optional<PositionFix>> solved(epochs.size());
  parallel_for(epochs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto it = sats_by_epoch.find(epochs[i]);
      if (it == sats_by_epoch.end()) continue;
      solved[i] = spp_solve(obs_by_epoch.at(epochs[i]), it->second, options);
    }
  });
  std::vector<PositionFix> fixes;
  for (auto& f : solved) {
    if (f) fixes.push_back(*f);
  }
  return fixes;
}

ErrorSeries error_series(std::span<const PositionFix> fixes, std::span<const ReceiverEpoch> truth) {
  std::map<double, Vec3> truth_at;
  for (const auto& t : truth) truth_at[t.epoch] = t.position;

  ErrorSeries out;
  double sum = 0.0, sq = 0.0, sq_h = 0.0;
  for (const auto& f : fixes) {
    auto it = truth_at.find(f.epoch);
    if (it == truth_at.end()) {
      ++out.summary.missing;
      continue;
    }
    ErrorRow row;
    row.epoch = f.epoch;
    row.error = f.position - it->second;
    row.horizontal = std::hypot(row.error.x(), row.error.y());
    row.norm3d = row.error.norm();
    sum += row.norm3d;
    sq += row.norm3d * row.norm3d;
    sq_h += row.horizontal * row.horizontal;
    out.summary.max3d = std::max(out.summary.max3d, row.norm3d);
    out.rows.push_back(row);
  }
  out.summary.count = out.rows.size();
  if (out.summary.count > 0) {
    const auto n = static_cast<double>(out.summary.count);
    out.summary.mean3d = sum / n;
    out.summary.rms3d = std::sqrt(sq / n);
    out.summary.rms_horizontal = std::sqrt(sq_h / n);
  }
  return out;
}

}  // namespace correction
}  // namespace facetrace

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "facetrace/correction.hpp"
#include "facetrace/margins.hpp"
#include "facetrace/planar_map.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/synth.hpp"
#include "facetrace/types.hpp"

namespace facetrace::io {

namespace fs = std::filesystem;

/// Parse or format failure; `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes through a sibling temporary file and renames, so readers never see partial output.
void write_text_atomic(const fs::path& path, std::string_view content);
std::string read_text(const fs::path& path);

// ---- point clouds ----------------------------------------------------------

enum class CloudFormat { kPly, kXyz };

/// ASCII PLY (by magic line) or delimited xyz text. Ids follow file order.
Cloud read_cloud(const fs::path& path);
Cloud parse_cloud(std::string_view text, const std::string& source = "<memory>");
std::string format_cloud(const Cloud& cloud, CloudFormat format);
/// Format chosen from the extension: .ply -> PLY, anything else -> xyz.
void write_cloud(const fs::path& path, const Cloud& cloud);

// ---- delimited tables --------------------------------------------------------

/// sats: epoch,prn,x,y,z in earth-fixed meters. Rows sorted by (epoch, prn).
std::vector<SatEpoch> read_sats(const fs::path& path);
std::vector<SatEpoch> parse_sats(std::string_view text, const std::string& source = "<memory>");
std::string format_sats(std::span<const SatEpoch> sats);

/// obs: epoch,prn,pseudorange_m.
std::vector<Observation> read_obs(const fs::path& path);
std::vector<Observation> parse_obs(std::string_view text, const std::string& source = "<memory>");
std::string format_obs(std::span<const Observation> obs);

/// route: epoch,x,y,z in the local east-north-up frame.
std::vector<ReceiverEpoch> read_route(const fs::path& path);
std::vector<ReceiverEpoch> parse_route(std::string_view text, const std::string& source = "<memory>");
std::string format_route(std::span<const ReceiverEpoch> route);

/// Earth-fixed satellite rows to the map's local frame, and back.
std::vector<SatEpoch> sats_to_enu(std::span<const SatEpoch> ecef, const frames::FrameOrigin& origin);
std::vector<SatEpoch> sats_to_ecef(std::span<const SatEpoch> enu, const frames::FrameOrigin& origin);

/// Ray path table: epoch,prn,classification,applied_delay_m,n_reflections,blocking_facets,
/// reflectors,delays,occluded.
/// List cells are ';'-separated.
std::string format_paths(std::span<const RayPath> paths);
std::vector<RayPath> parse_paths(std::string_view text, const std::string& source = "<memory>");
std::vector<RayPath> read_paths(const fs::path& path);

/// Fix table: epoch,x,y,z,bias,n_sats,converged,frame.
std::string format_fixes(std::span<const PositionFix> fixes);
std::vector<PositionFix> parse_fixes(std::string_view text, const std::string& source = "<memory>");

/// Error table: epoch,dx,dy,dz,horizontal,norm3d, with the summary as trailing comments.
std::string format_errors(const correction::ErrorSeries& errors);

/// Histogram table: lo,hi,count,fraction; open bins use -inf / inf.
std::string format_histogram(const margins::Histogram& histogram);
margins::Histogram parse_histogram(std::string_view text, const std::string& source = "<memory>");

/// Margin table, one row per (sample, wall); tilt columns in degrees.
std::string format_margins(std::span<const margins::MarginSample> samples);

// ---- structured documents ------------------------------------------------------

std::string format_map(const PlanarMap& map);
PlanarMap parse_map(std::string_view text, const std::string& source = "<memory>");
PlanarMap read_map(const fs::path& path);
void write_map(const fs::path& path, const PlanarMap& map);

/// Scene truth: the planar map schema plus generating planes, labels and injections.
std::string format_truth(const synth::SceneTruth& truth);
synth::SceneTruth parse_truth(std::string_view text, const std::string& source = "<memory>");

std::string format_spacing(const SpacingStats& stats);

/// Per-point slice labels: point,slice with -1 for unassigned points.
std::string format_labels(std::span<const std::int64_t> labels);
std::vector<std::int64_t> parse_labels(std::string_view text, const std::string& source = "<memory>");

/// Groups labeled points into clusters ordered by label; negative labels are skipped.
std::vector<IndexList> clusters_from_labels(std::span<const std::int64_t> labels);

}  // namespace facetrace::io

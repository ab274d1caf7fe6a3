#include "facetrace/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace facetrace {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) bad_value(key, value);
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "origin") {
    origin = frames::parse_origin(value);
  } else if (key == "k") {
    k = parse_int<std::size_t>(key, value);
  } else if (key == "min_slice_size") {
    min_slice_size = parse_int<std::size_t>(key, value);
  } else if (key == "center_sigma") {
    center_sigma = parse_real(key, value);
  } else if (key == "consistency_threshold") {
    consistency_threshold = parse_real(key, value);
  } else if (key == "merge_angle_deg") {
    merge_angle_deg = parse_real(key, value);
  } else if (key == "band_lo") {
    band_lo = parse_real(key, value);
  } else if (key == "band_hi") {
    band_hi = parse_real(key, value);
  } else if (key == "street_width") {
    street_width = parse_real(key, value);
  } else if (key == "elevation_mask_deg") {
    elevation_mask_deg = parse_real(key, value);
  } else if (key == "tolerance_l") {
    tolerance_l = parse_real(key, value);
  } else if (key == "policy") {
    policy = parse_delay_policy(value);
  } else if (key == "seed") {
    seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "workers") {
    workers = parse_int<unsigned>(key, value);
  } else {
    throw std::invalid_argument("unknown config key: " + std::string(key));
  }
}

void RunConfig::validate() const {
  frames::validate(origin);
  if (k < 3) throw std::invalid_argument("k must be at least 3");
  if (min_slice_size < 1) throw std::invalid_argument("min_slice_size must be at least 1");
  if (!(center_sigma >= 0.0)) throw std::invalid_argument("center_sigma must be non-negative");
  if (!(consistency_threshold > 0.0)) throw std::invalid_argument("consistency_threshold must be positive");
  if (!(merge_angle_deg > 0.0 && merge_angle_deg < 90.0)) {
    throw std::invalid_argument("merge_angle_deg must be in (0, 90)");
  }
  if (!(band_lo <= band_hi)) throw std::invalid_argument("band_lo must not exceed band_hi");
  if (!(street_width > 0.0)) throw std::invalid_argument("street_width must be positive");
  if (!(elevation_mask_deg >= 0.0 && elevation_mask_deg < 90.0)) {
    throw std::invalid_argument("elevation_mask_deg must be in [0, 90)");
  }
  if (!(tolerance_l >= 0.0)) throw std::invalid_argument("tolerance_l must be non-negative");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "origin = " << fmt(origin.latitude_deg) << ',' << fmt(origin.longitude_deg) << ','
      << fmt(origin.height_m) << '\n'
      << "k = " << k << '\n'
      << "min_slice_size = " << min_slice_size << '\n'
      << "center_sigma = " << fmt(center_sigma) << '\n'
      << "consistency_threshold = " << fmt(consistency_threshold) << '\n'
      << "merge_angle_deg = " << fmt(merge_angle_deg) << '\n'
      << "band_lo = " << fmt(band_lo) << '\n'
      << "band_hi = " << fmt(band_hi) << '\n'
      << "street_width = " << fmt(street_width) << '\n'
      << "elevation_mask_deg = " << fmt(elevation_mask_deg) << '\n'
      << "tolerance_l = " << fmt(tolerance_l) << '\n'
      << "policy = " << to_string(policy) << '\n'
      << "seed = " << seed << '\n'
      << "workers = " << workers << '\n';
  return out.str();
}

planar::BuildParams RunConfig::build_params() const {
  planar::BuildParams p;
  p.segmentation.k = k;
  p.segmentation.min_slice_size = min_slice_size;
  p.segmentation.center_sigma = center_sigma;
  p.segmentation.consistency_threshold = consistency_threshold;
  p.segmentation.workers = workers;
  p.merge_angle_rad = merge_angle_deg * kDegToRad;
  return p;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace facetrace

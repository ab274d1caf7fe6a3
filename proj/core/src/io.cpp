#include "facetrace/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>

namespace facetrace::io {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_any(std::string_view s, std::string_view seps) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && seps.find(s[i]) != std::string_view::npos) ++i;
    const std::size_t start = i;
    while (i < s.size() && seps.find(s[i]) == std::string_view::npos) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Iterates lines, tracking 1-based numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

struct Row {
  std::size_t line;
  std::vector<std::string_view> cells;
};

// Comma-separated table with a header row; '#' lines and blank lines are skipped.
class Table {
 public:
  Table(std::string_view text, std::string source) : source_(std::move(source)) {
    LineReader reader(text);
    std::string_view line;
    bool have_header = false;
    while (reader.next(line)) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto cells = split(t, ',');
      if (!have_header) {
        header_line_ = reader.number();
        for (std::size_t i = 0; i < cells.size(); ++i) columns_[std::string(cells[i])] = i;
        have_header = true;
        continue;
      }
      rows_.push_back({reader.number(), std::move(cells)});
    }
    if (!have_header) throw ParseError(source_, 0, "missing header row");
  }

  std::size_t column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw ParseError(source_, header_line_, "missing required column '" + name + "'");
    return it->second;
  }
  void require(std::initializer_list<const char*> names) const {
    for (const char* n : names) column(n);
  }
  bool has(const std::string& name) const { return columns_.count(name) > 0; }
  const std::vector<Row>& rows() const { return rows_; }

  std::string_view cell(const Row& row, std::size_t col, const std::string& name) const {
    if (col >= row.cells.size()) throw ParseError(source_, row.line, "missing value for column '" + name + "'");
    return row.cells[col];
  }
  double number(const Row& row, const std::string& name) const {
    const auto text = cell(row, column(name), name);
    auto v = to_double(text);
    if (!v) throw ParseError(source_, row.line, "invalid number in column '" + name + "': '" + std::string(text) + "'");
    return *v;
  }
  template <typename Int>
  Int integer(const Row& row, const std::string& name) const {
    const auto text = cell(row, column(name), name);
    auto v = to_int<Int>(text);
    if (!v) throw ParseError(source_, row.line, "invalid integer in column '" + name + "': '" + std::string(text) + "'");
    return *v;
  }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::size_t header_line_ = 0;
  std::map<std::string, std::size_t> columns_;
  std::vector<Row> rows_;
};

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json map_json(const PlanarMap& map) {
  json doc;
  const auto& a = map.origin.anchor();
  doc["origin"] = {{"lat", a.latitude_deg}, {"lon", a.longitude_deg}, {"h", a.height_m}};
  doc["provenance"] = json::object();
  for (const auto& [k, v] : map.provenance) doc["provenance"][k] = v;
  doc["facets"] = json::array();
  for (const auto& f : map.facets) {
    json jf;
    jf["id"] = f.id;
    jf["normal"] = vec_json(f.plane.normal);
    jf["anchor"] = vec_json(f.plane.anchor);
    jf["tau"] = f.plane.tau;
    jf["boundary"] = json::array();
    for (const auto& v : f.boundary) jf["boundary"].push_back(vec_json(v));
    jf["height_range"] = json::array({f.z_min, f.z_max});
    jf["source_slice"] = f.source_slice;
    doc["facets"].push_back(std::move(jf));
  }
  return doc;
}

PlanarMap json_map(const json& doc) {
  PlanarMap map;
  const auto& o = doc.at("origin");
  map.origin = frames::FrameOrigin(
      frames::GeodeticPoint{o.at("lat").get<double>(), o.at("lon").get<double>(), o.at("h").get<double>()});
  if (doc.contains("provenance")) {
    for (const auto& [k, v] : doc["provenance"].items()) map.provenance[k] = v.get<std::string>();
  }
  for (const auto& jf : doc.at("facets")) {
    Facet f;
    f.id = jf.at("id").get<std::uint32_t>();
    f.plane.normal = json_vec(jf.at("normal"));
    f.plane.anchor = json_vec(jf.at("anchor"));
    f.plane.tau = jf.at("tau").get<double>();
    for (const auto& v : jf.at("boundary")) f.boundary.push_back(json_vec(v));
    if (jf.contains("source_slice")) f.source_slice = jf["source_slice"].get<std::int64_t>();
    f.refresh_bounds();
    validate_facet(f);
    map.facets.push_back(std::move(f));
  }
  validate_map(map);
  return map;
}

template <typename Fn>
auto parse_json_doc(std::string_view text, const std::string& source, Fn&& fn) {
  try {
    return fn(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, e.what());
  }
}

bool epoch_prn_less(double ea, int pa, double eb, int pb) { return ea < eb || (ea == eb && pa < pb); }

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed writing " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- point clouds ----------------------------------------------------------

namespace {

Cloud parse_ply(std::string_view text, const std::string& source) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
    bool has_list = false;
  };
  LineReader reader(text);
  std::string_view line;
  reader.next(line);  // magic, checked by caller
  std::vector<Element> elements;
  bool ended = false;
  while (reader.next(line)) {
    const auto tokens = split_any(trim(line), " \t");
    if (tokens.empty()) continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2 || tokens[1] != "ascii") {
        throw ParseError(source, reader.number(), "only ASCII PLY is supported");
      }
    } else if (tokens[0] == "comment" || tokens[0] == "obj_info") {
      continue;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) throw ParseError(source, reader.number(), "malformed element line");
      auto count = to_int<std::size_t>(tokens[2]);
      if (!count) throw ParseError(source, reader.number(), "invalid element count");
      elements.push_back({std::string(tokens[1]), *count, {}, false});
    } else if (tokens[0] == "property") {
      if (elements.empty() || tokens.size() < 3) throw ParseError(source, reader.number(), "malformed property line");
      if (tokens[1] == "list") elements.back().has_list = true;
      elements.back().properties.emplace_back(tokens.back());
    } else if (tokens[0] == "end_header") {
      ended = true;
      break;
    } else {
      throw ParseError(source, reader.number(), "unexpected header line '" + std::string(tokens[0]) + "'");
    }
  }
  if (!ended) throw ParseError(source, reader.number(), "missing end_header");

  Cloud cloud;
  bool saw_vertex = false;
  for (const auto& el : elements) {
    std::size_t xi = 0, yi = 0, zi = 0;
    const bool is_vertex = el.name == "vertex";
    if (is_vertex) {
      saw_vertex = true;
      if (el.has_list) throw ParseError(source, 0, "list properties on vertex are not supported");
      auto find = [&](const char* name) {
        auto it = std::find(el.properties.begin(), el.properties.end(), name);
        if (it == el.properties.end()) throw ParseError(source, 0, std::string("vertex has no property ") + name);
        return static_cast<std::size_t>(it - el.properties.begin());
      };
      xi = find("x");
      yi = find("y");
      zi = find("z");
      cloud.reserve(el.count);
    }
    for (std::size_t r = 0; r < el.count; ++r) {
      if (!reader.next(line)) throw ParseError(source, reader.number(), "unexpected end of data in element " + el.name);
      if (!is_vertex) continue;
      const auto tokens = split_any(line, " \t");
      if (tokens.size() != el.properties.size()) {
        throw ParseError(source, reader.number(),
                         "expected " + std::to_string(el.properties.size()) + " values, found " +
                             std::to_string(tokens.size()));
      }
      Vec3 p;
      const std::size_t idx[3] = {xi, yi, zi};
      for (int c = 0; c < 3; ++c) {
        auto v = to_double(tokens[idx[c]]);
        if (!v) throw ParseError(source, reader.number(), "invalid number '" + std::string(tokens[idx[c]]) + "'");
        p[c] = *v;
      }
      cloud.push_back({static_cast<PointIndex>(cloud.size()), p});
    }
  }
  if (!saw_vertex) throw ParseError(source, 0, "no vertex element");
  return cloud;
}

Cloud parse_xyz(std::string_view text, const std::string& source) {
  Cloud cloud;
  LineReader reader(text);
  std::string_view line;
  bool first = true;
  while (reader.next(line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tokens = split_any(t, " \t,;");
    if (first && (tokens[0] == "x" || tokens[0] == "X")) {
      first = false;
      continue;
    }
    first = false;
    if (tokens.size() < 3) throw ParseError(source, reader.number(), "expected at least 3 columns");
    Vec3 p;
    for (int c = 0; c < 3; ++c) {
      auto v = to_double(tokens[c]);
      if (!v) throw ParseError(source, reader.number(), "invalid number '" + std::string(tokens[c]) + "'");
      p[c] = *v;
    }
    cloud.push_back({static_cast<PointIndex>(cloud.size()), p});
  }
  return cloud;
}

}  // namespace

Cloud parse_cloud(std::string_view text, const std::string& source) {
  if (trim(text.substr(0, text.find('\n'))) == "ply") return parse_ply(text, source);
  return parse_xyz(text, source);
}

Cloud read_cloud(const fs::path& path) { return parse_cloud(read_text(path), path.string()); }

std::string format_cloud(const Cloud& cloud, CloudFormat format) {
  std::string out;
  out.reserve(cloud.size() * 64);
  if (format == CloudFormat::kPly) {
    out += "ply\nformat ascii 1.0\ncomment facetrace point cloud\nelement vertex " +
           std::to_string(cloud.size()) + "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  }
  for (const auto& p : cloud) {
    out += format_double(p.position.x());
    out += ' ';
    out += format_double(p.position.y());
    out += ' ';
    out += format_double(p.position.z());
    out += '\n';
  }
  return out;
}

void write_cloud(const fs::path& path, const Cloud& cloud) {
  const auto format = path.extension() == ".ply" ? CloudFormat::kPly : CloudFormat::kXyz;
  write_text_atomic(path, format_cloud(cloud, format));
}

// ---- delimited tables --------------------------------------------------------

std::vector<SatEpoch> parse_sats(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"epoch", "prn", "x", "y", "z"});
  std::vector<SatEpoch> out;
  out.reserve(t.rows().size());
  for (const auto& row : t.rows()) {
    out.push_back({t.number(row, "epoch"), t.integer<int>(row, "prn"),
                   Vec3(t.number(row, "x"), t.number(row, "y"), t.number(row, "z"))});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return epoch_prn_less(a.epoch, a.prn, b.epoch, b.prn); });
  return out;
}

std::vector<SatEpoch> read_sats(const fs::path& path) { return parse_sats(read_text(path), path.string()); }

std::string format_sats(std::span<const SatEpoch> sats) {
  std::string out = "epoch,prn,x,y,z\n";
  for (const auto& s : sats) {
    out += format_double(s.epoch) + ',' + std::to_string(s.prn) + ',' + format_double(s.position.x()) + ',' +
           format_double(s.position.y()) + ',' + format_double(s.position.z()) + '\n';
  }
  return out;
}

std::vector<Observation> parse_obs(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"epoch", "prn", "pseudorange_m"});
  std::vector<Observation> out;
  out.reserve(t.rows().size());
  for (const auto& row : t.rows()) {
    out.push_back({t.number(row, "epoch"), t.integer<int>(row, "prn"), t.number(row, "pseudorange_m")});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return epoch_prn_less(a.epoch, a.prn, b.epoch, b.prn); });
  return out;
}

std::vector<Observation> read_obs(const fs::path& path) { return parse_obs(read_text(path), path.string()); }

std::string format_obs(std::span<const Observation> obs) {
  std::string out = "epoch,prn,pseudorange_m\n";
  for (const auto& o : obs) {
    out += format_double(o.epoch) + ',' + std::to_string(o.prn) + ',' + format_double(o.pseudorange) + '\n';
  }
  return out;
}

std::vector<ReceiverEpoch> parse_route(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"epoch", "x", "y", "z"});
  std::vector<ReceiverEpoch> out;
  out.reserve(t.rows().size());
  for (const auto& row : t.rows()) {
    out.push_back({t.number(row, "epoch"), Vec3(t.number(row, "x"), t.number(row, "y"), t.number(row, "z"))});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  return out;
}

std::vector<ReceiverEpoch> read_route(const fs::path& path) { return parse_route(read_text(path), path.string()); }

std::string format_route(std::span<const ReceiverEpoch> route) {
  std::string out = "epoch,x,y,z\n";
  for (const auto& r : route) {
    out += format_double(r.epoch) + ',' + format_double(r.position.x()) + ',' + format_double(r.position.y()) +
           ',' + format_double(r.position.z()) + '\n';
  }
  return out;
}

std::vector<SatEpoch> sats_to_enu(std::span<const SatEpoch> ecef, const frames::FrameOrigin& origin) {
  std::vector<SatEpoch> out(ecef.begin(), ecef.end());
  for (auto& s : out) s.position = frames::ecef_to_enu(s.position, origin);
  return out;
}

std::vector<SatEpoch> sats_to_ecef(std::span<const SatEpoch> enu, const frames::FrameOrigin& origin) {
  std::vector<SatEpoch> out(enu.begin(), enu.end());
  for (auto& s : out) s.position = frames::enu_to_ecef(s.position, origin);
  return out;
}

std::string format_paths(std::span<const RayPath> paths) {
  std::string out =
      "epoch,prn,classification,applied_delay_m,n_reflections,blocking_facets,reflectors,delays,occluded\n";
  for (const auto& p : paths) {
    std::vector<std::string> blocking, reflectors, delays, occluded;
    for (auto id : p.blocking_facets) blocking.push_back(std::to_string(id));
    for (const auto& r : p.reflections) {
      reflectors.push_back(std::to_string(r.facet_id));
      delays.push_back(format_double(r.delay));
      occluded.push_back(r.occluded ? "1" : "0");
    }
    out += format_double(p.epoch) + ',' + std::to_string(p.prn) + ',' + std::string(to_string(p.classification)) +
           ',' + format_double(p.applied_delay) + ',' + std::to_string(p.reflections.size()) + ',' +
           join(blocking, ';') + ',' + join(reflectors, ';') + ',' + join(delays, ';') + ',' +
           join(occluded, ';') + '\n';
  }
  return out;
}

std::vector<RayPath> parse_paths(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"epoch", "prn", "classification", "applied_delay_m", "blocking_facets", "reflectors", "delays"});
  const auto c_class = t.column("classification");
  const auto c_block = t.column("blocking_facets");
  const auto c_refl = t.column("reflectors");
  const auto c_delay = t.column("delays");
  const bool with_occluded = t.has("occluded");
  std::vector<RayPath> out;
  for (const auto& row : t.rows()) {
    RayPath p;
    p.epoch = t.number(row, "epoch");
    p.prn = t.integer<int>(row, "prn");
    try {
      p.classification = parse_signal_class(t.cell(row, c_class, "classification"));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, row.line, e.what());
    }
    p.applied_delay = t.number(row, "applied_delay_m");
    auto list = [&](std::size_t col, const char* name) {
      const auto cell = t.cell(row, col, name);
      return cell.empty() ? std::vector<std::string_view>{} : split(cell, ';');
    };
    for (auto id : list(c_block, "blocking_facets")) {
      auto v = to_int<std::uint32_t>(id);
      if (!v) throw ParseError(source, row.line, "invalid facet id in blocking_facets");
      p.blocking_facets.push_back(*v);
    }
    const auto ids = list(c_refl, "reflectors");
    const auto delays = list(c_delay, "delays");
    const auto occl = with_occluded ? list(t.column("occluded"), "occluded") : std::vector<std::string_view>{};
    if (delays.size() != ids.size() || (with_occluded && occl.size() != ids.size())) {
      throw ParseError(source, row.line, "reflection list lengths differ");
    }
    if (t.has("n_reflections") && t.integer<std::size_t>(row, "n_reflections") != ids.size()) {
      throw ParseError(source, row.line, "n_reflections does not match the reflectors list");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Reflection r;
      auto id = to_int<std::uint32_t>(ids[i]);
      auto d = to_double(delays[i]);
      if (!id || !d) throw ParseError(source, row.line, "invalid reflection entry");
      r.facet_id = *id;
      r.delay = *d;
      r.occluded = with_occluded && occl[i] == "1";
      p.reflections.push_back(r);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RayPath> read_paths(const fs::path& path) { return parse_paths(read_text(path), path.string()); }

std::string format_fixes(std::span<const PositionFix> fixes) {
  std::string out = "epoch,x,y,z,bias,n_sats,converged,frame\n";
  for (const auto& f : fixes) {
    out += format_double(f.epoch) + ',' + format_double(f.position.x()) + ',' + format_double(f.position.y()) +
           ',' + format_double(f.position.z()) + ',' + format_double(f.clock_bias) + ',' + std::to_string(f.used) +
           ',' + (f.converged ? "1" : "0") + ',' + std::string(to_string(f.frame)) + '\n';
  }
  return out;
}

std::vector<PositionFix> parse_fixes(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"epoch", "x", "y", "z", "bias", "n_sats", "converged"});
  std::vector<PositionFix> out;
  for (const auto& row : t.rows()) {
    PositionFix f;
    f.epoch = t.number(row, "epoch");
    f.position = Vec3(t.number(row, "x"), t.number(row, "y"), t.number(row, "z"));
    f.clock_bias = t.number(row, "bias");
    f.used = t.integer<std::size_t>(row, "n_sats");
    f.converged = t.integer<int>(row, "converged") != 0;
    if (t.has("frame")) f.frame = t.cell(row, t.column("frame"), "frame") == "ecef" ? FrameLabel::kEcef : FrameLabel::kEnu;
    out.push_back(f);
  }
  return out;
}

std::string format_errors(const correction::ErrorSeries& errors) {
  std::string out = "epoch,dx,dy,dz,horizontal,norm3d\n";
  for (const auto& r : errors.rows) {
    out += format_double(r.epoch) + ',' + format_double(r.error.x()) + ',' + format_double(r.error.y()) + ',' +
           format_double(r.error.z()) + ',' + format_double(r.horizontal) + ',' + format_double(r.norm3d) + '\n';
  }
  const auto& s = errors.summary;
  out += "# count=" + std::to_string(s.count) + "\n# missing=" + std::to_string(s.missing) +
         "\n# mean3d=" + format_double(s.mean3d) + "\n# rms3d=" + format_double(s.rms3d) +
         "\n# max3d=" + format_double(s.max3d) + "\n# rms_horizontal=" + format_double(s.rms_horizontal) + '\n';
  return out;
}

std::string format_histogram(const margins::Histogram& histogram) {
  std::string out = "lo,hi,count,fraction\n";
  for (std::size_t i = 0; i < histogram.bins.size(); ++i) {
    const auto& b = histogram.bins[i];
    out += format_double(b.lo) + ',' + format_double(b.hi) + ',' + std::to_string(b.count) + ',' +
           format_double(histogram.fraction(i)) + '\n';
  }
  return out;
}

margins::Histogram parse_histogram(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"lo", "hi", "count"});
  margins::Histogram h;
  for (const auto& row : t.rows()) {
    h.bins.push_back({t.number(row, "lo"), t.number(row, "hi"), t.integer<std::size_t>(row, "count")});
    h.total += h.bins.back().count;
  }
  return h;
}

std::string format_margins(std::span<const margins::MarginSample> samples) {
  std::string out =
      "epoch,prn,wall,height,tolerance,translation_outward,translation_inward,translation_total,"
      "translation_closed_form,tilt_toward_deg,tilt_away_deg,tilt_total_deg,tilt_closed_form_deg\n";
  auto opt = [](const std::optional<double>& v, double scale) {
    return v ? format_double(*v * scale) : std::string();
  };
  for (const auto& s : samples) {
    out += format_double(s.epoch) + ',' + std::to_string(s.prn) + ',' +
           (s.side == margins::WallSide::kPositive ? "+" : "-") + ',' + format_double(s.height) + ',' +
           format_double(s.tolerance) + ',' + format_double(s.translation.outward) + ',' +
           format_double(s.translation.inward) + ',' + format_double(s.translation.total()) + ',' +
           opt(s.translation.closed_form, 1.0) + ',' + format_double(s.tilt.toward * kRadToDeg) + ',' +
           format_double(s.tilt.away * kRadToDeg) + ',' + format_double(s.tilt.total() * kRadToDeg) + ',' +
           opt(s.tilt.closed_form, kRadToDeg) + '\n';
  }
  return out;
}

// ---- structured documents ------------------------------------------------------

std::string format_map(const PlanarMap& map) { return map_json(map).dump(2) + '\n'; }

PlanarMap parse_map(std::string_view text, const std::string& source) {
  return parse_json_doc(text, source, [](const json& doc) { return json_map(doc); });
}

PlanarMap read_map(const fs::path& path) { return parse_map(read_text(path), path.string()); }

void write_map(const fs::path& path, const PlanarMap& map) { write_text_atomic(path, format_map(map)); }

std::string format_truth(const synth::SceneTruth& truth) {
  json doc = map_json(truth.to_map());
  doc["planes"] = json::array();
  for (const auto& p : truth.planes) {
    json jp;
    jp["id"] = p.id;
    jp["normal"] = vec_json(p.normal);
    jp["anchor"] = vec_json(p.anchor);
    jp["width"] = p.width;
    jp["height"] = p.height;
    jp["polygon"] = json::array();
    for (const auto& v : p.polygon) jp["polygon"].push_back(vec_json(v));
    doc["planes"].push_back(std::move(jp));
  }
  doc["labels"] = truth.labels;
  doc["injections"] = json::array();
  for (const auto& inj : truth.injections) {
    doc["injections"].push_back({{"epoch", inj.epoch}, {"prn", inj.prn}, {"facet", inj.facet}, {"delay", inj.delay}});
  }
  return doc.dump(2) + '\n';
}

synth::SceneTruth parse_truth(std::string_view text, const std::string& source) {
  return parse_json_doc(text, source, [](const json& doc) {
    synth::SceneTruth truth;
    for (const auto& jp : doc.at("planes")) {
      synth::GeneratingPlane p;
      p.id = jp.at("id").get<std::uint32_t>();
      p.normal = json_vec(jp.at("normal"));
      p.anchor = json_vec(jp.at("anchor"));
      p.width = jp.at("width").get<double>();
      p.height = jp.at("height").get<double>();
      for (const auto& v : jp.at("polygon")) p.polygon.push_back(json_vec(v));
      truth.planes.push_back(std::move(p));
    }
    truth.labels = doc.at("labels").get<std::vector<std::int32_t>>();
    for (const auto& ji : doc.at("injections")) {
      truth.injections.push_back({ji.at("epoch").get<double>(), ji.at("prn").get<int>(),
                                  ji.at("facet").get<std::uint32_t>(), ji.at("delay").get<double>()});
    }
    return truth;
  });
}

std::string format_spacing(const SpacingStats& stats) {
  json doc = {{"mean_all", stats.mean_all},
              {"median_all", stats.median_all},
              {"mean_of_cluster_means", stats.mean_of_cluster_means},
              {"median_of_cluster_means", stats.median_of_cluster_means},
              {"point_count", stats.point_count},
              {"cluster_count", stats.cluster_count}};
  return doc.dump(2) + '\n';
}

std::string format_labels(std::span<const std::int64_t> labels) {
  std::string out = "point,slice\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i) + ',' + std::to_string(labels[i]) + '\n';
  return out;
}

std::vector<std::int64_t> parse_labels(std::string_view text, const std::string& source) {
  Table t(text, source);
  t.require({"point", "slice"});
  std::vector<std::int64_t> out;
  for (const auto& row : t.rows()) {
    const auto point = t.integer<std::size_t>(row, "point");
    if (point != out.size()) throw ParseError(source, row.line, "points must be listed in order");
    out.push_back(t.integer<std::int64_t>(row, "slice"));
  }
  return out;
}

std::vector<IndexList> clusters_from_labels(std::span<const std::int64_t> labels) {
  std::map<std::int64_t, IndexList> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) by_label[labels[i]].push_back(static_cast<PointIndex>(i));
  }
  std::vector<IndexList> out;
  for (auto& [_, members] : by_label) out.push_back(std::move(members));
  return out;
}

}  // namespace facetrace::io

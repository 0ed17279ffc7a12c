#include "uvkit/geomesh/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace {

std::string header_line(const char* tag, const Frame& f) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %d %d %.17g %.17g %.17g\n", tag, f.width, f.height, f.origin.x,
                f.origin.y, f.resolution);
  return buf;
}

Frame parse_header(std::istream& in, const std::string& expected_tag) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("raster: missing header line");
  std::istringstream hs(line);
  std::string tag;
  Frame f;
  if (!(hs >> tag >> f.width >> f.height >> f.origin.x >> f.origin.y >> f.resolution)) {
    throw ValidationError("raster: malformed header '" + line + "'");
  }
  if (tag != expected_tag) throw ValidationError("raster: expected " + expected_tag + " header, got " + tag);
  f.validate();
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing input file: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  return out;
}

}  // namespace

void write_mask(std::ostream& out, const BinaryMask& mask) {
  out << header_line("GRID", mask.frame());
  out.write(reinterpret_cast<const char*>(mask.data().data()), static_cast<std::streamsize>(mask.data().size()));
}

BinaryMask read_mask(std::istream& in) {
  const Frame f = parse_header(in, "GRID");
  std::vector<std::uint8_t> data(f.size());
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) throw ValidationError("raster: truncated GRID payload");
  return BinaryMask(f, std::move(data));
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  auto out = open_out(path);
  write_mask(out, mask);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mask(in);
}

Frame read_frame(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string tag;
  in >> tag;
  in.seekg(0);
  return parse_header(in, tag == "PGRID" ? "PGRID" : "GRID");
}

void write_probabilities(const std::filesystem::path& path, const ProbabilityGrid& grid) {
  auto out = open_out(path);
  out << header_line("PGRID", grid.frame);
  for (float v : grid.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    const char le[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                        static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(le, 4);
  }
}

ProbabilityGrid read_probabilities(const std::filesystem::path& path) {
  auto in = open_in(path);
  ProbabilityGrid g;
  g.frame = parse_header(in, "PGRID");
  g.values.resize(g.frame.size());
  std::vector<unsigned char> raw(g.values.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ValidationError("raster: truncated PGRID payload");
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) | (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    std::memcpy(&g.values[i], &bits, sizeof bits);
  }
  g.validate();
  return g;
}

std::vector<RegionPolygon> FeatureCollection::polygons() const {
  std::vector<RegionPolygon> out;
  for (const Feature& f : features) out.insert(out.end(), f.parts.begin(), f.parts.end());
  return out;
}

std::vector<RegionPolygon> FeatureCollection::polygons_where(const std::string& key, const std::string& value) const {
  std::vector<RegionPolygon> out;
  for (const Feature& f : features) {
    const auto it = f.properties.find(key);
    if (it != f.properties.end() && it->is_string() && it->get<std::string>() == value) {
      out.insert(out.end(), f.parts.begin(), f.parts.end());
    }
  }
  return out;
}

namespace {

Ring parse_ring(const nlohmann::json& coords) {
  if (!coords.is_array()) throw ValidationError("GeoJSON: ring is not an array");
  Ring r;
  r.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw ValidationError("GeoJSON: malformed position");
    }
    r.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  if (r.size() >= 2 && r.front() == r.back()) r.pop_back();
  if (r.size() < 3) throw ValidationError("GeoJSON: ring has fewer than 3 distinct vertices");
  if (!is_simple(r)) throw ValidationError("GeoJSON: ring is not simple");
  return r;
}

RegionPolygon parse_polygon(const nlohmann::json& coords) {
  if (!coords.is_array() || coords.empty()) throw ValidationError("GeoJSON: empty polygon");
  Ring ext = parse_ring(coords[0]);
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < coords.size(); ++i) holes.push_back(parse_ring(coords[i]));
  try {
    return RegionPolygon(std::move(ext), std::move(holes));
  } catch (const GeometryError& e) {
    throw ValidationError(std::string("GeoJSON: ") + e.what());
  }
}

nlohmann::json ring_coordinates(const Ring& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const Point& p : r) out.push_back({p.x, p.y});
  out.push_back({r.front().x, r.front().y});
  return out;
}

}  // namespace

nlohmann::json polygon_coordinates(const RegionPolygon& poly) {
  nlohmann::json rings = nlohmann::json::array();
  rings.push_back(ring_coordinates(poly.exterior()));
  for (const Ring& h : poly.holes()) rings.push_back(ring_coordinates(h));
  return rings;
}

FeatureCollection parse_geojson(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw ValidationError("GeoJSON: expected a FeatureCollection");
  }
  FeatureCollection fc;
  for (const auto& [key, value] : doc.items()) {
    if (key == "type" || key == "features") continue;
    if (key == "crs_epsg") {
      if (!value.is_number_integer()) throw ValidationError("GeoJSON: crs_epsg must be an integer");
      fc.crs_epsg = value.get<int>();
    } else {
      fc.members[key] = value;
    }
  }
  const auto feats = doc.find("features");
  if (feats == doc.end() || !feats->is_array()) throw ValidationError("GeoJSON: missing features array");
  for (const auto& jf : *feats) {
    Feature f;
    if (jf.contains("properties") && jf["properties"].is_object()) f.properties = jf["properties"];
    const auto& g = jf.at("geometry");
    const std::string type = g.value("type", "");
    const auto& coords = g.at("coordinates");
    if (type == "Polygon") {
      f.parts.push_back(parse_polygon(coords));
    } else if (type == "MultiPolygon") {
      for (const auto& pc : coords) f.parts.push_back(parse_polygon(pc));
    } else {
      throw ValidationError("GeoJSON: unsupported geometry type '" + type + "'");
    }
    fc.features.push_back(std::move(f));
  }
  return fc;
}

FeatureCollection read_geojson(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("GeoJSON: " + path.string() + ": " + e.what());
  }
  try {
    return parse_geojson(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("GeoJSON: " + path.string() + ": " + e.what());
  }
}

nlohmann::json to_geojson(const FeatureCollection& fc) {
  nlohmann::json doc = nlohmann::json::object();
  doc["type"] = "FeatureCollection";
  doc["crs_epsg"] = fc.crs_epsg;
  for (const auto& [key, value] : fc.members.items()) doc[key] = value;
  nlohmann::json feats = nlohmann::json::array();
  for (const Feature& f : fc.features) {
    nlohmann::json jf = {{"type", "Feature"}, {"properties", f.properties}};
    if (f.parts.size() == 1) {
      jf["geometry"] = {{"type", "Polygon"}, {"coordinates", polygon_coordinates(f.parts[0])}};
    } else {
      nlohmann::json multi = nlohmann::json::array();
      for (const RegionPolygon& p : f.parts) multi.push_back(polygon_coordinates(p));
      jf["geometry"] = {{"type", "MultiPolygon"}, {"coordinates", multi}};
    }
    feats.push_back(std::move(jf));
  }
  doc["features"] = std::move(feats);
  return doc;
}

void write_geojson(const std::filesystem::path& path, const FeatureCollection& fc) {
  write_file(path, to_geojson(fc).dump() + "\n");
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  auto out = open_out(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace uvkit::geomesh

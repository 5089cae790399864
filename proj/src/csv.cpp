#include "sphkrig/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sphkrig/errors.hpp"

namespace sphkrig {

double deg2rad(double d) { return d * (M_PI / 180.0); }
double rad2deg(double r) { return r * (180.0 / M_PI); }

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset read_points_csv(const std::string& path, CsvReadReport* report,
                        const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  CsvReadReport local;
  CsvReadReport& rep = report ? *report : local;

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_fields(line);
  std::ptrdiff_t i_lon = -1, i_lat = -1, i_val = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "lon") i_lon = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == "lat") i_lat = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == value_column) i_val = static_cast<std::ptrdiff_t>(c);
    else rep.warnings.push_back("ignoring column '" + header[c] + "'");
  }
  if (i_lon < 0 || i_lat < 0 || i_val < 0)
    throw DataError(path + ": header must name lon, lat and " + value_column + " columns");

  Dataset data;
  std::size_t row = 1;  // header was row 1
  std::size_t total = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    ++total;
    const std::vector<std::string> f = split_fields(line);
    double lon_deg, lat_deg, value;
    if (f.size() < header.size() ||
        !parse_double(f[static_cast<std::size_t>(i_lon)], lon_deg) ||
        !parse_double(f[static_cast<std::size_t>(i_lat)], lat_deg) ||
        !parse_double(f[static_cast<std::size_t>(i_val)], value)) {
      rep.rejected.emplace_back(row, "unparseable fields");
      continue;
    }
    if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg) || !std::isfinite(value)) {
      rep.rejected.emplace_back(row, "non-finite value");
      continue;
    }
    if (std::fabs(lat_deg) > 90.0) {
      rep.rejected.emplace_back(row, "|lat| > 90");
      continue;
    }
    data.locations.push_back(from_lonlat(deg2rad(lon_deg), deg2rad(lat_deg)));
    data.values.push_back(value);
  }
  if (total == 0) throw DataError(path + ": no data rows");
  if (static_cast<double>(rep.rejected.size()) > 0.01 * static_cast<double>(total)) {
    std::ostringstream msg;
    msg << path << ": " << rep.rejected.size() << " of " << total << " rows rejected (>1%).";
    for (std::size_t i = 0; i < std::min<std::size_t>(rep.rejected.size(), 10); ++i)
      msg << " row " << rep.rejected[i].first << ": " << rep.rejected[i].second << ";";
    throw DataError(msg.str());
  }
  return data;
}

std::vector<SphereLocation> read_coords_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_fields(line);
  std::ptrdiff_t i_lon = -1, i_lat = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "lon") i_lon = static_cast<std::ptrdiff_t>(c);
    if (header[c] == "lat") i_lat = static_cast<std::ptrdiff_t>(c);
  }
  if (i_lon < 0 || i_lat < 0) throw DataError(path + ": header must name lon and lat columns");
  std::vector<SphereLocation> locs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    double lon_deg, lat_deg;
    if (!parse_double(f[static_cast<std::size_t>(i_lon)], lon_deg) ||
        !parse_double(f[static_cast<std::size_t>(i_lat)], lat_deg) ||
        std::fabs(lat_deg) > 90.0)
      throw DataError(path + ": bad coordinates at row " + std::to_string(row));
    locs.push_back(from_lonlat(deg2rad(lon_deg), deg2rad(lat_deg)));
  }
  if (locs.empty()) throw DataError(path + ": no data rows");
  return locs;
}

void write_points_csv(const std::string& path, const std::vector<SphereLocation>& locs,
                      const Vector& values) {
  std::ostringstream out;
  out << "lon,lat,value\n";
  for (std::size_t i = 0; i < locs.size(); ++i)
    out << fmt17(rad2deg(locs[i].lon)) << ',' << fmt17(rad2deg(locs[i].lat)) << ','
        << fmt17(values[i]) << '\n';
  write_text_atomic(path, out.str());
}

void write_field_csv(const std::string& path, const SimulatedField& field,
                     const SplitIndices& split) {
  const std::size_t n = field.y_true.size();
  std::vector<const char*> tag(n, "train");
  for (std::size_t i : split.val) tag[i] = "val";
  for (std::size_t i : split.test) tag[i] = "test";
  std::ostringstream out;
  out << "lon,lat,y_true,z_obs,is_outlier,split_tag\n";
  for (std::size_t i = 0; i < n; ++i)
    out << fmt17(rad2deg(field.locations[i].lon)) << ',' << fmt17(rad2deg(field.locations[i].lat))
        << ',' << fmt17(field.y_true[i]) << ',' << fmt17(field.z_obs[i]) << ','
        << (field.outlier_mask[i] ? 1 : 0) << ',' << tag[i] << '\n';
  write_text_atomic(path, out.str());
}

std::vector<SphereLocation> make_lonlat_grid(std::size_t n_lon, std::size_t n_lat) {
  if (n_lon < 1 || n_lat < 1) throw std::invalid_argument("grid: resolution must be >= 1");
  std::vector<SphereLocation> grid;
  grid.reserve(n_lon * n_lat);
  for (std::size_t i = 0; i < n_lat; ++i) {
    const double lat =
        n_lat == 1 ? 0.0 : -90.0 + 180.0 * static_cast<double>(i) / static_cast<double>(n_lat - 1);
    for (std::size_t j = 0; j < n_lon; ++j) {
      const double lon = -180.0 + 360.0 * static_cast<double>(j) / static_cast<double>(n_lon);
      grid.push_back(from_lonlat(deg2rad(lon), deg2rad(lat)));
    }
  }
  return grid;
}

void write_grid_csv(const std::string& path, const std::vector<SphereLocation>& grid,
                    const Vector& predictions) {
  if (grid.size() != predictions.size())
    throw std::invalid_argument("write_grid_csv: size mismatch");
  std::ostringstream out;
  out << "lon,lat,pred\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    out << fmt17(rad2deg(grid[i].lon)) << ',' << fmt17(rad2deg(grid[i].lat)) << ','
        << fmt17(predictions[i]) << '\n';
  write_text_atomic(path, out.str());
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw DataError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename " + tmp + " to " + path + ": " + std::strerror(errno));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sphkrig

#ifndef SPHKRIG_CSV_HPP
#define SPHKRIG_CSV_HPP

#include <string>
#include <utility>
#include <vector>

#include "sphkrig/dataset.hpp"
#include "sphkrig/sim.hpp"

namespace sphkrig {

// File boundary is degrees; everything in memory is radians.
double deg2rad(double d);
double rad2deg(double r);

struct CsvReadReport {
  std::vector<std::string> warnings;
  std::vector<std::pair<std::size_t, std::string>> rejected;  // (1-based row, reason)
};

// Reads a points file with header columns lon, lat, value (degrees; extra
// columns are ignored with a warning). Rows with unparseable or non-finite
// fields or |lat| > 90 are rejected and reported; more than 1% rejections
// aborts with a DataError summary. value_column lets callers read files
// whose value column carries another name (e.g. "pred").
Dataset read_points_csv(const std::string& path, CsvReadReport* report = nullptr,
                        const std::string& value_column = "value");

// Coordinates only; any value columns are ignored.
std::vector<SphereLocation> read_coords_csv(const std::string& path);

void write_points_csv(const std::string& path, const std::vector<SphereLocation>& locs,
                      const Vector& values);

// Writes lon,lat,y_true,z_obs,is_outlier,split_tag for a simulated field.
void write_field_csv(const std::string& path, const SimulatedField& field,
                     const SplitIndices& split);

// Regular grid: n_lon points on [-180, 180) (half-open), n_lat points on
// [-90, 90] (inclusive). Row order is lat-major: all longitudes of the first
// latitude, then the next latitude.
std::vector<SphereLocation> make_lonlat_grid(std::size_t n_lon, std::size_t n_lat);

void write_grid_csv(const std::string& path, const std::vector<SphereLocation>& grid,
                    const Vector& predictions);

// All file writes go through a temp-file-and-rename so readers never see a
// partial file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace sphkrig

#endif

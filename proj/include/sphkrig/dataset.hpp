#ifndef SPHKRIG_DATASET_HPP
#define SPHKRIG_DATASET_HPP

#include <cstddef>
#include <vector>

#include "sphkrig/matrix.hpp"
#include "sphkrig/sphere.hpp"

namespace sphkrig {

// Observations at spherical locations, with optional per-location covariates
// (appended to the basis features when present).
struct Dataset {
  std::vector<SphereLocation> locations;
  Vector values;
  Matrix covariates;  // n x c, possibly 0 columns

  std::size_t size() const { return locations.size(); }
};

// Disjoint train/validation/test partition of {0, ..., n-1}.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

}  // namespace sphkrig

#endif

#pragma once

#include "mmvad/detect.hpp"

namespace mmvad::detail {

/// Validates (measurements, sensing) and returns (M, N, T). Throws
/// DimensionError on any inconsistency or when k is outside [1, N).
struct Dims {
  int m;
  int n;
  int t;
};

Dims check_inputs(const MeasurementSet& measurements, const SensingSequence& sensing, int k);

}  // namespace mmvad::detail

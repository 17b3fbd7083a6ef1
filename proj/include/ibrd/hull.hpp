#pragma once

#include <cstddef>
#include <vector>

namespace ibrd {

struct CurvePoint {
  double rate = 0.0;
  double distortion = 0.0;
};

// Indices of the lower-left convex hull of a (rate, distortion) cloud,
// ordered by ascending rate and truncated at the first vertex attaining the
// minimum distortion, so the result is convex and nonincreasing.  Collinear
// interior points are dropped.  Every input point lies on or above the hull.
std::vector<std::size_t> lower_hull_indices(const std::vector<double>& rate,
                                            const std::vector<double>& distortion);

std::vector<CurvePoint> convex_hull_lower(const std::vector<CurvePoint>& points);

// Piecewise-linear evaluation of a hull (or any rate-sorted curve) at a rate
// value, clamped to the end distortions outside the covered range.
double interpolate_distortion(const std::vector<CurvePoint>& curve, double rate);

}  // namespace ibrd

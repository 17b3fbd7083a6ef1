#include "ibrd/hull.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ibrd {

std::vector<std::size_t> lower_hull_indices(const std::vector<double>& rate,
                                            const std::vector<double>& distortion) {
  if (rate.size() != distortion.size())
    throw std::invalid_argument("lower_hull_indices: length mismatch");
  const std::size_t n = rate.size();
  if (n == 0) return {};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rate[a] != rate[b]) return rate[a] < rate[b];
    return distortion[a] < distortion[b];
  });

  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (rate[a] - rate[o]) * (distortion[b] - distortion[o]) -
           (distortion[a] - distortion[o]) * (rate[b] - rate[o]);
  };

  std::vector<std::size_t> hull;
  for (std::size_t idx : order) {
    if (!hull.empty() && rate[hull.back()] == rate[idx] &&
        distortion[hull.back()] == distortion[idx])
      continue;  // exact duplicate
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull[hull.size() - 1], idx) <= 0.0)
      hull.pop_back();
    hull.push_back(idx);
  }

  // Truncate at the first vertex attaining the minimum distortion; beyond it
  // the boundary climbs back up toward the rightmost point.
  std::size_t best = 0;
  for (std::size_t i = 1; i < hull.size(); ++i)
    if (distortion[hull[i]] < distortion[hull[best]]) best = i;
  hull.resize(best + 1);
  return hull;
}

std::vector<CurvePoint> convex_hull_lower(const std::vector<CurvePoint>& points) {
  std::vector<double> rate(points.size()), distortion(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    rate[i] = points[i].rate;
    distortion[i] = points[i].distortion;
  }
  std::vector<CurvePoint> out;
  for (std::size_t idx : lower_hull_indices(rate, distortion))
    out.push_back(points[idx]);
  return out;
}

double interpolate_distortion(const std::vector<CurvePoint>& curve, double rate) {
  if (curve.empty())
    throw std::invalid_argument("interpolate_distortion: empty curve");
  if (rate <= curve.front().rate) return curve.front().distortion;
  if (rate >= curve.back().rate) return curve.back().distortion;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (rate <= curve[i].rate) {
      const CurvePoint& a = curve[i - 1];
      const CurvePoint& b = curve[i];
      if (b.rate == a.rate) return std::min(a.distortion, b.distortion);
      double w = (rate - a.rate) / (b.rate - a.rate);
      return a.distortion + w * (b.distortion - a.distortion);
    }
  }
  return curve.back().distortion;
}

}  // namespace ibrd

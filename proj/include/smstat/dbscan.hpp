#pragma once

// Order-independent DBSCAN.
//
// Core points (at least min_points neighbours within eps, the point itself
// included) are joined into clusters by eps-connectivity. A border point
// (non-core, within eps of some core point) joins the adjacent cluster whose
// smallest core key is smallest; classical DBSCAN would hand it to whichever
// cluster reached it first. Everything else is noise.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "smstat/error.hpp"

namespace smstat {

struct DbscanLabels {
  /// Cluster index per input point, or nullopt for noise. Clusters are
  /// numbered by ascending smallest core key.
  std::vector<std::optional<std::size_t>> label;
  std::vector<bool> core;
  std::size_t n_clusters = 0;
};

/// `distance(a, b)` and `key(a)` are callables over Point; keys must be
/// totally ordered and unique across points.
template <class Point, class Distance, class Key>
DbscanLabels dbscan(std::span<const Point> points, double eps, std::size_t min_points, Distance distance, Key key) {
  if (!(eps > 0.0)) throw ParameterError("DBSCAN eps must be positive");
  if (min_points < 1) throw ParameterError("DBSCAN min_points must be at least 1");

  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbours[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(points[i], points[j]) <= eps) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
  }

  DbscanLabels out;
  out.core.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.core[i] = neighbours[i].size() >= min_points;

  // union-find over core points
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.core[i]) continue;
    for (std::size_t j : neighbours[i])
      if (out.core[j]) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  }

  // smallest core key per component
  std::vector<std::optional<std::size_t>> rep_of_root(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.core[i]) continue;
    auto& rep = rep_of_root[find(i)];
    if (!rep || key(points[i]) < key(points[*rep])) rep = i;
  }
  std::vector<std::size_t> roots;
  for (std::size_t r = 0; r < n; ++r)
    if (rep_of_root[r]) roots.push_back(r);
  std::sort(roots.begin(), roots.end(),
            [&](std::size_t a, std::size_t b) { return key(points[*rep_of_root[a]]) < key(points[*rep_of_root[b]]); });
  std::vector<std::size_t> cluster_of_root(n, 0);
  for (std::size_t c = 0; c < roots.size(); ++c) cluster_of_root[roots[c]] = c;
  out.n_clusters = roots.size();

  out.label.assign(n, std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.core[i]) {
      out.label[i] = cluster_of_root[find(i)];
      continue;
    }
    // cluster numbering follows smallest core key, so the minimum index wins
    for (std::size_t j : neighbours[i])
      if (out.core[j]) {
        const std::size_t c = cluster_of_root[find(j)];
        if (!out.label[i] || c < *out.label[i]) out.label[i] = c;
      }
  }
  return out;
}

}  // namespace smstat

#pragma once

#include <algorithm>
#include <vector>

#include "dpges/scene.hpp"

namespace dpges {

// Raw per-surfel depth margin: 2.5 (sX + sY).
template <typename S>
S raw_margin(const SurfelT<S>& s) {
  return S(2.5) * (s.scale[0] + s.scale[1]);
}

// Median of an even count is the midpoint of the two middle values.
template <typename S>
S median_of(std::vector<S>& vals) {
  const size_t n = vals.size();
  const size_t mid = n / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  S upper = vals[mid];
  if (n % 2 == 1) return upper;
  S lower = *std::max_element(vals.begin(), vals.begin() + mid);
  return (lower + upper) / S(2);
}

// Indices of the k nearest other points to `query` (self excluded), with
// distance ties broken by index so the result is order-independent.
template <typename S>
std::vector<int> knn_indices(const std::vector<Vec3<S>>& points, int query, int k) {
  struct Entry { S d2; int idx; };
  std::vector<Entry> entries;
  entries.reserve(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (i == query) continue;
    entries.push_back({(points[i] - points[query]).squaredNorm(), i});
  }
  const int take = std::min<int>(k, static_cast<int>(entries.size()));
  auto cmp = [](const Entry& a, const Entry& b) {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.idx < b.idx);
  };
  std::partial_sort(entries.begin(), entries.begin() + take, entries.end(), cmp);
  std::vector<int> out(take);
  for (int i = 0; i < take; ++i) out[i] = entries[i].idx;
  return out;
}

// Depth margins: start from 2.5 (sX + sY) per surfel, then replace each by
// the median over its 16 nearest neighbors' raw values. The median smooths
// the local distribution so one oversized surfel cannot carry an oversized
// margin into a fine-structure neighborhood.
template <typename S>
void compute_margins(std::vector<SurfelT<S>>& surfels, int neighbors = 16) {
  const int n = static_cast<int>(surfels.size());
  if (n == 0) return;
  std::vector<S> raw(n);
  std::vector<Vec3<S>> centers(n);
  for (int i = 0; i < n; ++i) {
    raw[i] = raw_margin(surfels[i]);
    centers[i] = surfels[i].position;
  }
  if (n == 1) {
    surfels[0].margin = raw[0];
    return;
  }
  std::vector<S> finals(n);
  for (int i = 0; i < n; ++i) {
    auto nn = knn_indices(centers, i, neighbors);
    std::vector<S> vals;
    vals.reserve(nn.size());
    for (int j : nn) vals.push_back(raw[j]);
    finals[i] = median_of(vals);
  }
  for (int i = 0; i < n; ++i) surfels[i].margin = finals[i];
}

// Ablation variant: keep the raw scale-derived margins unsmoothed.
template <typename S>
void compute_margins_raw(std::vector<SurfelT<S>>& surfels) {
  for (auto& s : surfels) s.margin = raw_margin(s);
}

}  // namespace dpges

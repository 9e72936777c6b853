// Run-length connected-component labelling of a binary mask (8-connected).

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace ledsync::components {

struct Run {
  int y;
  int x0;
  int x1;  // inclusive
};

struct Component {
  std::vector<Run> runs;
  std::int64_t pixels = 0;
  int xmin = 0, xmax = 0, ymin = 0, ymax = 0;
};

// `mask(x, y)` returns true for foreground pixels.
template <typename Mask>
std::vector<Component> Label(int width, int height, Mask&& mask, std::int64_t min_pixels = 1) {
  std::vector<Run> runs;
  std::vector<std::size_t> row_begin(height + 1, 0);
  for (int y = 0; y < height; ++y) {
    row_begin[y] = runs.size();
    int x = 0;
    while (x < width) {
      while (x < width && !mask(x, y)) ++x;
      if (x >= width) break;
      const int start = x;
      while (x < width && mask(x, y)) ++x;
      runs.push_back({y, start, x - 1});
    }
  }
  row_begin[height] = runs.size();

  std::vector<std::size_t> parent(runs.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (int y = 1; y < height; ++y) {
    std::size_t j = row_begin[y - 1];
    const std::size_t j_end = row_begin[y];
    for (std::size_t i = row_begin[y]; i < row_begin[y + 1]; ++i) {
      while (j < j_end && runs[j].x1 < runs[i].x0 - 1) ++j;
      for (std::size_t k = j; k < j_end && runs[k].x0 <= runs[i].x1 + 1; ++k) {
        const std::size_t a = find(i), b = find(k);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  std::vector<std::size_t> slot(runs.size(), SIZE_MAX);
  std::vector<Component> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t root = find(i);
    if (slot[root] == SIZE_MAX) {
      slot[root] = out.size();
      out.push_back({{}, 0, runs[i].x0, runs[i].x1, runs[i].y, runs[i].y});
    }
    Component& c = out[slot[root]];
    c.runs.push_back(runs[i]);
    c.pixels += runs[i].x1 - runs[i].x0 + 1;
    c.xmin = std::min(c.xmin, runs[i].x0);
    c.xmax = std::max(c.xmax, runs[i].x1);
    c.ymin = std::min(c.ymin, runs[i].y);
    c.ymax = std::max(c.ymax, runs[i].y);
  }
  std::erase_if(out, [&](const Component& c) { return c.pixels < min_pixels; });
  return out;
}

}  // namespace ledsync::components

#pragma once

#include <cmath>
#include <numeric>

namespace rydpair {

template <typename Derived>
std::vector<std::vector<int>> connected_blocks(const Eigen::MatrixBase<Derived> &h, double tol) {
  const int n = static_cast<int>(h.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = j + 1; i < n; ++i) {
      if (std::abs(h(i, j)) > tol || std::abs(h(j, i)) > tol) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<int>> blocks;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[r]].push_back(i);
  }
  return blocks;
}

} // namespace rydpair

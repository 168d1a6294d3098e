#pragma once

// Helpers shared by the unit and acceptance tests: random and exhaustive
// tree generation plus an independent region-based reachability check.

#include <functional>
#include <memory>
#include <vector>

#include "rotbart/rng.hpp"
#include "rotbart/tree.hpp"

namespace rotbart::testing {

// Open index bounds per variable: a node may cut var at k when lo < k < hi.
struct Box {
  std::vector<int> lo, hi;

  explicit Box(const CutpointGrid& grid) {
    for (std::size_t v = 0; v < grid.dim(); ++v) {
      lo.push_back(0);
      hi.push_back(grid.count(v) - 1);
    }
  }
};

inline std::unique_ptr<Node> random_node(const CutpointGrid& grid, Box box, int depth,
                                         int max_depth, double p_split, Rng& rng) {
  std::vector<SplitRule> rules;
  for (std::size_t v = 0; v < grid.dim(); ++v)
    for (int k = box.lo[v] + 1; k < box.hi[v]; ++k) rules.push_back({static_cast<int>(v), k});
  if (depth >= max_depth || rules.empty() || rng.uniform() >= p_split)
    return make_leaf(rng.normal());
  const SplitRule r = rules[rng.index(rules.size())];
  Box lbox = box, rbox = box;
  lbox.hi[r.var] = r.cut;
  rbox.lo[r.var] = r.cut;
  auto left = random_node(grid, lbox, depth + 1, max_depth, p_split, rng);
  auto right = random_node(grid, rbox, depth + 1, max_depth, p_split, rng);
  return make_split(r, std::move(left), std::move(right));
}

// Random tree whose every leaf has a nonempty region.
inline RegressionTree random_tree(const CutpointGrid& grid, int max_depth, double p_split,
                                  Rng& rng) {
  return RegressionTree(random_node(grid, Box(grid), 0, max_depth, p_split, rng));
}

inline std::vector<std::unique_ptr<Node>> all_nodes(const CutpointGrid& grid, const Box& box,
                                                    int depth_left) {
  std::vector<std::unique_ptr<Node>> out;
  out.push_back(make_leaf());
  if (depth_left == 0) return out;
  for (std::size_t v = 0; v < grid.dim(); ++v) {
    for (int k = box.lo[v] + 1; k < box.hi[v]; ++k) {
      Box lbox = box, rbox = box;
      lbox.hi[v] = k;
      rbox.lo[v] = k;
      auto lefts = all_nodes(grid, lbox, depth_left - 1);
      auto rights = all_nodes(grid, rbox, depth_left - 1);
      for (const auto& l : lefts)
        for (const auto& r : rights)
          out.push_back(make_split({static_cast<int>(v), k}, clone(*l), clone(*r)));
    }
  }
  return out;
}

// Every tree of depth <= max_depth without unreachable leaves.
inline std::vector<RegressionTree> all_trees(const CutpointGrid& grid, int max_depth) {
  std::vector<RegressionTree> out;
  for (auto& n : all_nodes(grid, Box(grid), max_depth)) out.emplace_back(std::move(n));
  return out;
}

// True when every leaf's region {x : all path constraints hold} is a nonempty
// subset of [0,1]^d, computed from real-valued cut values.
inline bool all_leaves_reachable(const Node& node, const CutpointGrid& grid,
                                 std::vector<double> lo, std::vector<double> hi) {
  for (std::size_t v = 0; v < lo.size(); ++v)
    if (!(lo[v] < hi[v])) return false;
  if (node.is_leaf()) return true;
  const double c = grid.value(node.rule.var, node.rule.cut);
  auto lhi = hi;
  lhi[node.rule.var] = std::min(hi[node.rule.var], c);
  auto rlo = lo;
  rlo[node.rule.var] = std::max(lo[node.rule.var], c);
  return all_leaves_reachable(*node.left, grid, lo, lhi) &&
         all_leaves_reachable(*node.right, grid, rlo, hi);
}

inline bool all_leaves_reachable(const RegressionTree& tree, const CutpointGrid& grid) {
  return all_leaves_reachable(tree.root(), grid, std::vector<double>(grid.dim(), 0.0),
                              std::vector<double>(grid.dim(), 1.0));
}

// Figure 1 of the notation: a depth-2 full tree with leaves 4..7.
inline RegressionTree figure1_tree() {
  return RegressionTree(make_split(
      {0, 50}, make_split({1, 50}, make_leaf(4.0), make_leaf(5.0)),
      make_split({1, 30}, make_leaf(6.0), make_leaf(7.0))));
}

// Worked rotation example on a 4-variable grid with step 0.1 (x1..x4 are
// vars 0..3). The root splits x2<0.5; its left child splits x1<0.5 over T_q
// and T_r; its right child is T_s, which splits x1 at 0.3 and 0.7.
// T_q and T_r avoid x1 and x2; |T_q| = 1, |T_r| = 2 internal nodes.
struct RotationExample {
  RegressionTree tree;
  std::size_t tq_size = 1;
  std::size_t tr_size = 2;
};

inline std::unique_ptr<Node> example_tq() {
  return make_split({3, 5}, make_leaf(1.0), make_leaf(2.0));
}
inline std::unique_ptr<Node> example_tr() {
  return make_split({3, 3}, make_leaf(3.0),
                    make_split({2, 2}, make_leaf(4.0), make_leaf(5.0)));
}

inline RotationExample rotation_example() {
  auto c = make_split({2, 5}, make_leaf(8.0), make_split({2, 7}, make_leaf(9.0), make_leaf(10.0)));
  auto ts = make_split({0, 3}, make_leaf(6.0), make_split({0, 7}, make_leaf(7.0), std::move(c)));
  auto eta = make_split({0, 5}, example_tq(), example_tr());
  return {RegressionTree(make_split({1, 5}, std::move(eta), std::move(ts))), 1, 2};
}

}  // namespace rotbart::testing

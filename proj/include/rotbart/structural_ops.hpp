#pragma once

#include <optional>
#include <vector>

#include "rotbart/rng.hpp"
#include "rotbart/tree.hpp"

namespace rotbart {

// Rotation algebra: setup, directional cuts, merge enumeration and the
// assembly of a full rotation proposal.

RegressionTree rotate_setup_right(const RegressionTree& tree, NodeId node);
RegressionTree rotate_setup_left(const RegressionTree& tree, NodeId node);

// Remove every node that contradicts x_v < c (cut_left) or x_v >= c
// (cut_right) imposed from above, promoting the surviving child. A node on v
// with cutpoint equal to c is removed in both directions.
RegressionTree cut_left(const RegressionTree& tree, int var, int cut);
RegressionTree cut_right(const RegressionTree& tree, int var, int cut);
std::unique_ptr<Node> cut_left(std::unique_ptr<Node> node, int var, int cut);
std::unique_ptr<Node> cut_right(std::unique_ptr<Node> node, int var, int cut);

enum class MergeScope {
  // Every tree whose left/right cuts reproduce (l, r).
  kPreimage,
  // Nontrivial merges may not contain the (v, c) rule anywhere. This is the
  // counting the rotation proposal uses.
  kRuleFree,
};

struct MergeSet {
  // trees[0] is always the trivial merge (v,c; l, r); the rest are the
  // nontrivial merges sorted by canonical structure.
  std::vector<RegressionTree> trees;

  std::size_t nontrivial() const { return trees.size() - 1; }
};

// When l and r are both leaves only the trivial merge is listed; collapsing
// to a single leaf is decided by the rotation proposal.
MergeSet enumerate_merges(const RegressionTree& left, const RegressionTree& right, int var,
                          int cut, MergeScope scope = MergeScope::kPreimage);

struct RandomMerge {
  std::optional<RegressionTree> tree;  // empty when no nontrivial merge exists
  std::size_t count = 0;
};

// Uniform draw among the nontrivial merges (rotation counting).
RandomMerge merge_random(const RegressionTree& left, const RegressionTree& right, int var,
                         int cut, Rng& rng);

// Setup followed by both cuts, before any merge. Prediction-preserving.
RegressionTree rotate_and_cut(const RegressionTree& tree, NodeId node);

struct RotationProposal {
  RegressionTree tree;
  NodeId node = 0;    // rotation node
  NodeId parent = 0;  // its parent; only this subtree changes
  double p_r_forward = 1.0;
  double p_r_inverse = 1.0;
  double p_m1 = 1.0;  // merge at the parent's new child opposite the rotation node
  double p_m2 = 1.0;  // merge at the rotation node's position
  double p_s1 = 1.0;  // inverse merge of the two T_s pieces
  double p_s2 = 1.0;  // inverse merge of T_q, T_r
  bool two_ways = false;
};

// One outcome of rotating at a given node together with its probability
// conditional on that node being chosen.
struct RotationOutcome {
  RegressionTree tree;
  double probability = 0.0;
};

// Full distribution of admissible outcomes when rotating at node. Mass not
// listed corresponds to inadmissible configurations.
std::vector<RotationOutcome> rotation_outcomes(const RegressionTree& tree, NodeId node);

// Probability that a rotation proposal from `from` (node drawn uniformly
// among rotatable nodes) produces a tree structurally equal to `to`.
double rotation_transition_probability(const RegressionTree& from, const RegressionTree& to);

// Draws a rotation at node following the two-stage merge gate. Returns
// nullopt when the drawn configuration is inadmissible: neither child keeps
// the old parent rule, or the sibling subtree repeats the rotation node's
// rule below its root (no merge could restore it).
std::optional<RotationProposal> propose_rotation(const RegressionTree& tree, NodeId node,
                                                 Rng& rng);

}  // namespace rotbart

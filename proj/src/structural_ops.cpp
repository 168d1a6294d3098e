#include "rotbart/structural_ops.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace rotbart {

std::unique_ptr<Node> cut_left(std::unique_ptr<Node> node, int var, int cut) {
  if (node->is_leaf()) return node;
  if (node->rule.var == var && node->rule.cut >= cut)
    return cut_left(std::move(node->left), var, cut);
  node->left = cut_left(std::move(node->left), var, cut);
  node->right = cut_left(std::move(node->right), var, cut);
  return node;
}

std::unique_ptr<Node> cut_right(std::unique_ptr<Node> node, int var, int cut) {
  if (node->is_leaf()) return node;
  if (node->rule.var == var && node->rule.cut <= cut)
    return cut_right(std::move(node->right), var, cut);
  node->left = cut_right(std::move(node->left), var, cut);
  node->right = cut_right(std::move(node->right), var, cut);
  return node;
}

RegressionTree cut_left(const RegressionTree& tree, int var, int cut) {
  return RegressionTree(cut_left(clone(tree.root()), var, cut));
}

RegressionTree cut_right(const RegressionTree& tree, int var, int cut) {
  return RegressionTree(cut_right(clone(tree.root()), var, cut));
}

namespace {

Node& rotation_parent(RegressionTree& tree, NodeId node) {
  if (node == kRootId) throw std::invalid_argument("cannot rotate at the root");
  const Node* n = tree.find(node);
  if (!n) throw std::invalid_argument("no node with id " + std::to_string(node));
  if (n->is_leaf()) throw std::invalid_argument("cannot rotate at a terminal node");
  return *tree.find(parent_id(node));
}

void setup_right_inplace(Node& p) {
  std::unique_ptr<Node> n = std::move(p.left);
  std::unique_ptr<Node> ts = std::move(p.right);
  const SplitRule parent_rule = p.rule;
  p.rule = n->rule;
  auto copy = clone(*ts);
  p.left = make_split(parent_rule, std::move(n->left), std::move(copy));
  p.right = make_split(parent_rule, std::move(n->right), std::move(ts));
}

void setup_left_inplace(Node& p) {
  std::unique_ptr<Node> ts = std::move(p.left);
  std::unique_ptr<Node> n = std::move(p.right);
  const SplitRule parent_rule = p.rule;
  p.rule = n->rule;
  auto copy = clone(*ts);
  p.left = make_split(parent_rule, std::move(copy), std::move(n->left));
  p.right = make_split(parent_rule, std::move(ts), std::move(n->right));
}

using NodeList = std::vector<std::unique_ptr<Node>>;

// Keeps the first tree seen for each canonical structure.
class UniqueTrees {
 public:
  void add(std::unique_ptr<Node> node) {
    std::string key = serialize_structure(*node);
    if (seen_.emplace(std::move(key), node.get()).second) nodes_.push_back(std::move(node));
  }
  NodeList take() { return std::move(nodes_); }

 private:
  std::map<std::string, const Node*> seen_;
  NodeList nodes_;
};

NodeList merge_set(const Node& l, const Node& r, SplitRule rule, MergeScope scope);

// Merges that remove the (v,c) node at this level.
NodeList nontrivial_merges(const Node& l, const Node& r, SplitRule rule, MergeScope scope) {
  UniqueTrees out;
  if (l.is_leaf() && r.is_leaf()) {
    out.add(make_leaf(l.mu));
    return out.take();
  }
  if (!l.is_leaf() && !r.is_leaf() && l.rule == r.rule && l.rule.var != rule.var) {
    const NodeList lefts = merge_set(*l.left, *r.left, rule, scope);
    const NodeList rights = merge_set(*l.right, *r.right, rule, scope);
    for (const auto& a : lefts)
      for (const auto& b : rights) out.add(make_split(l.rule, clone(*a), clone(*b)));
  }
  if (!l.is_leaf() && l.rule.var == rule.var && l.rule.cut < rule.cut) {
    for (auto& b : merge_set(*l.right, r, rule, scope))
      out.add(make_split(l.rule, clone(*l.left), std::move(b)));
  }
  if (!r.is_leaf() && r.rule.var == rule.var && r.rule.cut > rule.cut) {
    for (auto& a : merge_set(l, *r.left, rule, scope))
      out.add(make_split(r.rule, std::move(a), clone(*r.right)));
  }
  return out.take();
}

NodeList merge_set(const Node& l, const Node& r, SplitRule rule, MergeScope scope) {
  NodeList out;
  if (scope == MergeScope::kPreimage) out.push_back(make_split(rule, clone(l), clone(r)));
  for (auto& t : nontrivial_merges(l, r, rule, scope)) out.push_back(std::move(t));
  return out;
}

// Choices available when merging the two children of a node along its rule,
// trivial (keep the node) first. A leaf pair may collapse into one leaf.
std::vector<RegressionTree> merge_options(const Node& node) {
  std::vector<RegressionTree> opts;
  opts.emplace_back(clone(node));
  if (node.left->is_leaf() && node.right->is_leaf()) {
    opts.emplace_back(make_leaf(node.left->mu));
    return opts;
  }
  MergeSet set = enumerate_merges(RegressionTree(clone(*node.left)),
                                  RegressionTree(clone(*node.right)), node.rule.var,
                                  node.rule.cut, MergeScope::kRuleFree);
  for (std::size_t i = 1; i < set.trees.size(); ++i) opts.push_back(std::move(set.trees[i]));
  return opts;
}

std::size_t merge_option_count(const Node& l, const Node& r, SplitRule rule) {
  if (l.is_leaf() && r.is_leaf()) return 2;
  return 1 + nontrivial_merges(l, r, rule, MergeScope::kRuleFree).size();
}

bool carries(const Node& node, SplitRule rule) { return !node.is_leaf() && node.rule == rule; }

bool contains_rule(const Node& node, SplitRule rule) {
  if (node.is_leaf()) return false;
  return node.rule == rule || contains_rule(*node.left, rule) || contains_rule(*node.right, rule);
}

// The sibling subtree is rebuilt by a merge that may not reuse the rotation
// node's rule, so a copy of that rule below its root cannot be restored.
bool sibling_restorable(const RegressionTree& tree, NodeId node) {
  const Node& p = *tree.find(parent_id(node));
  const Node& n = *tree.find(node);
  const Node& ts = is_left_child(node) ? *p.right : *p.left;
  if (ts.is_leaf()) return true;
  return !contains_rule(*ts.left, n.rule) && !contains_rule(*ts.right, n.rule);
}

// The two children of the rotated parent after setup and cuts, each with its
// merge choices. A child that no longer carries the parent's old rule has a
// single (unchanged) option.
struct ChildChoices {
  std::vector<RegressionTree> options;
  bool mergeable = false;
};

struct CutRotation {
  RegressionTree tree;
  NodeId parent = 0;
  SplitRule old_parent_rule;
  SplitRule old_node_rule;
  bool right_rotation = true;
};

CutRotation make_cut_rotation(const RegressionTree& tree, NodeId node) {
  CutRotation cr{RegressionTree(tree), parent_id(node), {}, {}, is_left_child(node)};
  Node& p = rotation_parent(cr.tree, node);
  cr.old_parent_rule = p.rule;
  cr.old_node_rule = (cr.right_rotation ? p.left : p.right)->rule;
  if (cr.right_rotation)
    setup_right_inplace(p);
  else
    setup_left_inplace(p);
  p.left = cut_left(std::move(p.left), p.rule.var, p.rule.cut);
  p.right = cut_right(std::move(p.right), p.rule.var, p.rule.cut);
  return cr;
}

ChildChoices child_choices(const Node& child, SplitRule old_parent_rule) {
  ChildChoices c;
  if (carries(child, old_parent_rule)) {
    c.options = merge_options(child);
    c.mergeable = true;
  } else {
    c.options.emplace_back(clone(child));
  }
  return c;
}

}  // namespace

RegressionTree rotate_setup_right(const RegressionTree& tree, NodeId node) {
  if (node != kRootId && !is_left_child(node))
    throw std::invalid_argument("right rotation needs a left child");
  RegressionTree out(tree);
  setup_right_inplace(rotation_parent(out, node));
  return out;
}

RegressionTree rotate_setup_left(const RegressionTree& tree, NodeId node) {
  if (node != kRootId && is_left_child(node))
    throw std::invalid_argument("left rotation needs a right child");
  RegressionTree out(tree);
  setup_left_inplace(rotation_parent(out, node));
  return out;
}

MergeSet enumerate_merges(const RegressionTree& left, const RegressionTree& right, int var,
                          int cut, MergeScope scope) {
  const SplitRule rule{var, cut};
  const Node& l = left.root();
  const Node& r = right.root();
  MergeSet set;
  set.trees.emplace_back(make_split(rule, clone(l), clone(r)));
  if (l.is_leaf() && r.is_leaf()) return set;

  std::vector<std::pair<std::string, std::unique_ptr<Node>>> keyed;
  for (auto& t : nontrivial_merges(l, r, rule, scope)) {
    std::string key = serialize_structure(*t);
    keyed.emplace_back(std::move(key), std::move(t));
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [key, t] : keyed) set.trees.emplace_back(std::move(t));
  return set;
}

RandomMerge merge_random(const RegressionTree& left, const RegressionTree& right, int var,
                         int cut, Rng& rng) {
  MergeSet set = enumerate_merges(left, right, var, cut, MergeScope::kRuleFree);
  RandomMerge out;
  out.count = set.nontrivial();
  if (out.count > 0) out.tree = std::move(set.trees[1 + rng.index(out.count)]);
  return out;
}

RegressionTree rotate_and_cut(const RegressionTree& tree, NodeId node) {
  return make_cut_rotation(tree, node).tree;
}

std::vector<RotationOutcome> rotation_outcomes(const RegressionTree& tree, NodeId node) {
  if (!sibling_restorable(tree, node)) return {};
  CutRotation cr = make_cut_rotation(tree, node);
  const Node& p = *cr.tree.find(cr.parent);
  const ChildChoices left = child_choices(*p.left, cr.old_parent_rule);
  const ChildChoices right = child_choices(*p.right, cr.old_parent_rule);

  std::vector<RotationOutcome> out;
  const double prob = 1.0 / static_cast<double>(left.options.size() * right.options.size());
  for (std::size_t a = 0; a < left.options.size(); ++a) {
    for (std::size_t b = 0; b < right.options.size(); ++b) {
      const bool left_keeps = carries(left.options[a].root(), cr.old_parent_rule);
      const bool right_keeps = carries(right.options[b].root(), cr.old_parent_rule);
      // The inverse rotation needs the old parent rule on at least one side.
      if (!left_keeps && !right_keeps) continue;
      RegressionTree t(cr.tree);
      Node* tp = t.find(cr.parent);
      tp->left = clone(left.options[a].root());
      tp->right = clone(right.options[b].root());
      out.push_back({std::move(t), prob});
    }
  }
  return out;
}

double rotation_transition_probability(const RegressionTree& from, const RegressionTree& to) {
  const auto nodes = rotatable_nodes(from);
  if (nodes.empty()) return 0.0;
  double total = 0.0;
  for (NodeId node : nodes) {
    const NodeId parent = parent_id(node);
    const Node* target = to.find(parent);
    if (!target) continue;
    // Rotation only rewrites the subtree at the parent; everything else must match.
    if (serialize_structure(replace_subtree(from, parent, RegressionTree(clone(*target)))) !=
        serialize_structure(to))
      continue;
    const std::string want = serialize_structure(*target);
    for (const auto& o : rotation_outcomes(from, node)) {
      if (serialize_structure(*o.tree.find(parent)) == want) total += o.probability;
    }
  }
  return total / static_cast<double>(nodes.size());
}

std::optional<RotationProposal> propose_rotation(const RegressionTree& tree, NodeId node,
                                                 Rng& rng) {
  const auto rotatable = rotatable_nodes(tree);
  if (std::find(rotatable.begin(), rotatable.end(), node) == rotatable.end()) return std::nullopt;
  if (!sibling_restorable(tree, node)) return std::nullopt;

  const Node& orig_node = *tree.find(node);
  CutRotation cr = make_cut_rotation(tree, node);
  Node& p = *cr.tree.find(cr.parent);

  RotationProposal prop;
  prop.node = node;
  prop.parent = cr.parent;
  prop.p_r_forward = 1.0 / static_cast<double>(rotatable.size());

  // Child at the rotation node's side and at the opposite, newly created side.
  std::unique_ptr<Node>& near = cr.right_rotation ? p.left : p.right;
  std::unique_ptr<Node>& far = cr.right_rotation ? p.right : p.left;

  // Inverse-merge counts, taken on the cut configuration.
  if (carries(*near, cr.old_parent_rule)) {
    const Node& ts_lo = cr.right_rotation ? *near->right : *far->left;
    const Node& ts_hi = cr.right_rotation ? *far->right : *near->left;
    prop.p_s1 = 1.0 / static_cast<double>(merge_option_count(ts_lo, ts_hi, cr.old_node_rule));
  }
  prop.p_s2 = 1.0 / static_cast<double>(merge_option_count(*orig_node.left, *orig_node.right,
                                                           cr.old_node_rule));

  auto draw = [&](std::unique_ptr<Node>& slot, double& p_m) {
    if (!carries(*slot, cr.old_parent_rule)) return;
    std::vector<RegressionTree> opts = merge_options(*slot);
    p_m = 1.0 / static_cast<double>(opts.size());
    const std::size_t pick = rng.index(opts.size());
    if (pick != 0) slot = clone(opts[pick].root());
  };
  draw(far, prop.p_m1);
  draw(near, prop.p_m2);

  const bool near_keeps = carries(*near, cr.old_parent_rule);
  const bool far_keeps = carries(*far, cr.old_parent_rule);
  if (!near_keeps && !far_keeps) return std::nullopt;
  prop.two_ways = near_keeps && far_keeps;

  prop.tree = std::move(cr.tree);
  const auto inverse_nodes = rotatable_nodes(prop.tree);
  prop.p_r_inverse =
      (prop.two_ways ? 2.0 : 1.0) / static_cast<double>(inverse_nodes.size());
  return prop;
}

}  // namespace rotbart

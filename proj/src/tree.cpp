#include "rotbart/tree.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace rotbart {

CutpointGrid::CutpointGrid(std::vector<int> counts) : counts_(std::move(counts)) {
  for (int c : counts_) {
    if (c < 2) throw std::invalid_argument("cutpoint grid needs at least 2 points per variable");
  }
}

CutpointGrid CutpointGrid::uniform(std::size_t dim, int count) {
  return CutpointGrid(std::vector<int>(dim, count));
}

std::unique_ptr<Node> make_leaf(double mu) {
  auto n = std::make_unique<Node>();
  n->mu = mu;
  return n;
}

std::unique_ptr<Node> make_split(SplitRule rule, std::unique_ptr<Node> left,
                                 std::unique_ptr<Node> right) {
  auto n = std::make_unique<Node>();
  n->rule = rule;
  n->left = std::move(left);
  n->right = std::move(right);
  return n;
}

std::unique_ptr<Node> clone(const Node& node) {
  auto n = std::make_unique<Node>();
  n->rule = node.rule;
  n->mu = node.mu;
  if (!node.is_leaf()) {
    n->left = clone(*node.left);
    n->right = clone(*node.right);
  }
  return n;
}

RegressionTree::RegressionTree(std::unique_ptr<Node> root) : root_(std::move(root)) {
  if (!root_) root_ = make_leaf();
}

RegressionTree RegressionTree::split(SplitRule rule, RegressionTree left, RegressionTree right) {
  return RegressionTree(make_split(rule, std::move(left.root_), std::move(right.root_)));
}

int depth_of(NodeId id) { return static_cast<int>(std::bit_width(id)) - 1; }
NodeId left_child_id(NodeId id) { return 2 * id; }
NodeId right_child_id(NodeId id) { return 2 * id + 1; }
NodeId parent_id(NodeId id) { return id / 2; }
bool is_left_child(NodeId id) { return id > 1 && id % 2 == 0; }

namespace {

template <typename NodeT>
NodeT* find_impl(NodeT* root, NodeId id) {
  if (id == 0) return nullptr;
  const int depth = depth_of(id);
  NodeT* cur = root;
  for (int level = depth - 1; level >= 0 && cur; --level) {
    if (cur->is_leaf()) return nullptr;
    const bool go_right = (id >> level) & 1u;
    cur = go_right ? cur->right.get() : cur->left.get();
  }
  return cur;
}

template <typename Fn>
void visit(const Node& node, NodeId id, Fn&& fn) {
  fn(node, id);
  if (!node.is_leaf()) {
    visit(*node.left, left_child_id(id), fn);
    visit(*node.right, right_child_id(id), fn);
  }
}

void collect_cuts(const Node& node, int var, std::vector<int>& out) {
  if (node.is_leaf()) return;
  if (node.rule.var == var) out.push_back(node.rule.cut);
  collect_cuts(*node.left, var, out);
  collect_cuts(*node.right, var, out);
}

bool same_structure_impl(const Node& a, const Node& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return true;
  return a.rule == b.rule && same_structure_impl(*a.left, *b.left) &&
         same_structure_impl(*a.right, *b.right);
}

void serialize_impl(const Node& node, bool with_mu, std::string& out) {
  if (node.is_leaf()) {
    out.push_back('[');
    if (with_mu) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", node.mu);
      out += buf;
    }
    out.push_back(']');
    return;
  }
  out += '(' + std::to_string(node.rule.var + 1) + ':' + std::to_string(node.rule.cut) + ':';
  serialize_impl(*node.left, with_mu, out);
  out.push_back(' ');
  serialize_impl(*node.right, with_mu, out);
  out.push_back(')');
}

class TreeParser {
 public:
  explicit TreeParser(std::string_view text) : text_(text) {}

  std::unique_ptr<Node> parse() {
    auto node = parse_node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("malformed tree at offset " + std::to_string(pos_) + ": " +
                                what);
  }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  long parse_int() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    return std::strtol(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr, 10);
  }
  std::unique_ptr<Node> parse_node() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '[') {
      ++pos_;
      const std::size_t close = text_.find(']', pos_);
      if (close == std::string_view::npos) fail("unterminated leaf");
      std::string body(text_.substr(pos_, close - pos_));
      double mu = 0.0;
      if (body.find_first_not_of(" \t") != std::string::npos) {
        char* end = nullptr;
        mu = std::strtod(body.c_str(), &end);
        while (end && *end == ' ') ++end;
        if (!end || *end != '\0') fail("bad leaf value");
      }
      pos_ = close + 1;
      return make_leaf(mu);
    }
    expect('(');
    const long var = parse_int();
    expect(':');
    const long cut = parse_int();
    expect(':');
    if (var < 1) fail("variable must be >= 1");
    if (cut < 0) fail("cutpoint index must be >= 0");
    auto left = parse_node();
    auto right = parse_node();
    expect(')');
    return make_split({static_cast<int>(var - 1), static_cast<int>(cut)}, std::move(left),
                      std::move(right));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

const Node* RegressionTree::find(NodeId id) const { return find_impl(root_.get(), id); }
Node* RegressionTree::find(NodeId id) { return find_impl(root_.get(), id); }

std::size_t RegressionTree::internal_count() const {
  std::size_t n = 0;
  visit(*root_, kRootId, [&](const Node& node, NodeId) { n += node.is_leaf() ? 0 : 1; });
  return n;
}

std::size_t RegressionTree::leaf_count() const { return internal_count() + 1; }

int RegressionTree::depth() const {
  int d = 0;
  visit(*root_, kRootId, [&](const Node&, NodeId id) { d = std::max(d, depth_of(id)); });
  return d;
}

bool RegressionTree::same_structure(const RegressionTree& other) const {
  return same_structure_impl(*root_, *other.root_);
}

std::vector<NodeId> internal_nodes(const RegressionTree& tree) {
  std::vector<NodeId> out;
  visit(tree.root(), kRootId, [&](const Node& n, NodeId id) {
    if (!n.is_leaf()) out.push_back(id);
  });
  return out;
}

std::vector<NodeId> leaf_nodes(const RegressionTree& tree) {
  std::vector<NodeId> out;
  visit(tree.root(), kRootId, [&](const Node& n, NodeId id) {
    if (n.is_leaf()) out.push_back(id);
  });
  return out;
}

std::vector<NodeId> prunable_nodes(const RegressionTree& tree) {
  std::vector<NodeId> out;
  visit(tree.root(), kRootId, [&](const Node& n, NodeId id) {
    if (!n.is_leaf() && n.left->is_leaf() && n.right->is_leaf()) out.push_back(id);
  });
  return out;
}

std::vector<NodeId> rotatable_nodes(const RegressionTree& tree) {
  std::vector<NodeId> out;
  visit(tree.root(), kRootId, [&](const Node& n, NodeId id) {
    if (!n.is_leaf() && id != kRootId) out.push_back(id);
  });
  return out;
}

NodeId traverse(const RegressionTree& tree, const CutpointGrid& grid, std::span<const double> x) {
  const Node* cur = &tree.root();
  NodeId id = kRootId;
  while (!cur->is_leaf()) {
    if (x[cur->rule.var] < grid.value(cur->rule.var, cur->rule.cut)) {
      cur = cur->left.get();
      id = left_child_id(id);
    } else {
      cur = cur->right.get();
      id = right_child_id(id);
    }
  }
  return id;
}

double evaluate(const Node& node, const CutpointGrid& grid, std::span<const double> x) {
  const Node* cur = &node;
  while (!cur->is_leaf()) {
    cur = x[cur->rule.var] < grid.value(cur->rule.var, cur->rule.cut) ? cur->left.get()
                                                                        : cur->right.get();
  }
  return cur->mu;
}

double evaluate(const RegressionTree& tree, const CutpointGrid& grid, std::span<const double> x) {
  return evaluate(tree.root(), grid, x);
}

std::vector<int> ancestral_cutpoints(const RegressionTree& tree, NodeId node, int var) {
  std::vector<int> out;
  for (NodeId a = parent_id(node); a >= kRootId; a = parent_id(a)) {
    const Node* n = tree.find(a);
    if (n && n->rule.var == var) out.push_back(n->rule.cut);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> left_subtree_cutpoints(const RegressionTree& tree, NodeId node, int var) {
  std::vector<int> out;
  if (const Node* n = tree.find(node); n && !n->is_leaf()) collect_cuts(*n->left, var, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> right_subtree_cutpoints(const RegressionTree& tree, NodeId node, int var) {
  std::vector<int> out;
  if (const Node* n = tree.find(node); n && !n->is_leaf()) collect_cuts(*n->right, var, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CutInterval valid_cut_interval(const RegressionTree& tree, const CutpointGrid& grid, NodeId node,
                               int var) {
  CutInterval iv{0, grid.count(var) - 1};
  // Walk down from the root, tightening by the side the path takes.
  const Node* cur = &tree.root();
  for (int level = depth_of(node) - 1; level >= 0; --level) {
    const bool go_right = (node >> level) & 1u;
    if (cur->rule.var == var) {
      if (go_right)
        iv.lower = std::max(iv.lower, cur->rule.cut);
      else
        iv.upper = std::min(iv.upper, cur->rule.cut);
    }
    cur = go_right ? cur->right.get() : cur->left.get();
  }
  if (const auto l = left_subtree_cutpoints(tree, node, var); !l.empty())
    iv.lower = std::max(iv.lower, l.back());
  if (const auto r = right_subtree_cutpoints(tree, node, var); !r.empty())
    iv.upper = std::min(iv.upper, r.front());
  if (iv.upper < iv.lower) iv.upper = iv.lower;
  return iv;
}

std::vector<std::size_t> partition_counts(const RegressionTree& tree, const CutpointGrid& grid,
                                          const Matrix& x) {
  const auto leaves = leaf_nodes(tree);
  std::vector<std::size_t> counts(leaves.size(), 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const NodeId id = traverse(tree, grid, x.row(i));
    const auto it = std::find(leaves.begin(), leaves.end(), id);
    ++counts[static_cast<std::size_t>(it - leaves.begin())];
  }
  return counts;
}

RegressionTree clone_subtree(const RegressionTree& tree, NodeId node) {
  const Node* n = tree.find(node);
  if (!n) throw std::out_of_range("no node with id " + std::to_string(node));
  return RegressionTree(clone(*n));
}

RegressionTree replace_subtree(const RegressionTree& tree, NodeId node, const RegressionTree& sub) {
  RegressionTree out(tree);
  if (node == kRootId) return RegressionTree(sub);
  Node* parent = out.find(parent_id(node));
  if (!parent || parent->is_leaf()) throw std::out_of_range("no node with id " + std::to_string(node));
  (is_left_child(node) ? parent->left : parent->right) = clone(sub.root());
  return out;
}

std::string serialize(const RegressionTree& tree) {
  std::string out;
  serialize_impl(tree.root(), true, out);
  return out;
}

std::string serialize_structure(const Node& node) {
  std::string out;
  serialize_impl(node, false, out);
  return out;
}

std::string serialize_structure(const RegressionTree& tree) {
  return serialize_structure(tree.root());
}

RegressionTree parse_tree(std::string_view text) { return RegressionTree(TreeParser(text).parse()); }

}  // namespace rotbart

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotbart {

// Heap numbering: root is 1, children of i are 2i and 2i+1.
using NodeId = std::uint64_t;
inline constexpr NodeId kRootId = 1;

// Per-variable cutpoint lattice {0, 1/(n_v-1), ..., 1} on the unit interval.
// Only the interior points can separate data into two nonempty halves, so
// those are the ones rules and proposals draw from.
class CutpointGrid {
 public:
  CutpointGrid() = default;
  explicit CutpointGrid(std::vector<int> counts);

  static CutpointGrid uniform(std::size_t dim, int count = 100);

  std::size_t dim() const { return counts_.size(); }
  int count(std::size_t var) const { return counts_[var]; }
  double value(std::size_t var, int index) const {
    return static_cast<double>(index) / static_cast<double>(counts_[var] - 1);
  }
  // Number of interior (usable) cutpoints for var.
  int usable(std::size_t var) const { return counts_[var] - 2; }

 private:
  std::vector<int> counts_;
};

struct SplitRule {
  int var = -1;
  int cut = 0;  // grid index

  bool operator==(const SplitRule&) const = default;
};

struct Node {
  SplitRule rule;
  double mu = 0.0;
  std::unique_ptr<Node> left;
  std::unique_ptr<Node> right;

  bool is_leaf() const { return !left; }
};

std::unique_ptr<Node> make_leaf(double mu = 0.0);
std::unique_ptr<Node> make_split(SplitRule rule, std::unique_ptr<Node> left,
                                 std::unique_ptr<Node> right);
std::unique_ptr<Node> clone(const Node& node);

// Binary regression tree with constant leaves. Copies are deep.
class RegressionTree {
 public:
  RegressionTree() : root_(make_leaf()) {}
  explicit RegressionTree(double mu) : root_(make_leaf(mu)) {}
  explicit RegressionTree(std::unique_ptr<Node> root);

  RegressionTree(const RegressionTree& other) : root_(clone(*other.root_)) {}
  RegressionTree& operator=(const RegressionTree& other) {
    if (this != &other) root_ = clone(*other.root_);
    return *this;
  }
  RegressionTree(RegressionTree&&) noexcept = default;
  RegressionTree& operator=(RegressionTree&&) noexcept = default;

  static RegressionTree split(SplitRule rule, RegressionTree left, RegressionTree right);

  const Node& root() const { return *root_; }
  Node& root() { return *root_; }
  std::unique_ptr<Node>& root_slot() { return root_; }

  const Node* find(NodeId id) const;
  Node* find(NodeId id);

  std::size_t internal_count() const;
  std::size_t leaf_count() const;
  int depth() const;

  // Structural equality: rules and shape, leaf values ignored.
  bool same_structure(const RegressionTree& other) const;

 private:
  std::unique_ptr<Node> root_;
};

// Open interval of admissible cutpoints for one variable, in grid indices.
// Admissible cutpoints are the indices k with lower < k < upper.
struct CutInterval {
  int lower = 0;
  int upper = 0;

  bool empty() const { return upper - lower < 2; }
  int size() const { return empty() ? 0 : upper - lower - 1; }
  bool contains(int k) const { return lower < k && k < upper; }
};

int depth_of(NodeId id);
NodeId left_child_id(NodeId id);
NodeId right_child_id(NodeId id);
NodeId parent_id(NodeId id);
bool is_left_child(NodeId id);

// Ids of nodes in pre-order.
std::vector<NodeId> internal_nodes(const RegressionTree& tree);
std::vector<NodeId> leaf_nodes(const RegressionTree& tree);
// Internal nodes whose children are both leaves.
std::vector<NodeId> prunable_nodes(const RegressionTree& tree);
// Internal nodes other than the root.
std::vector<NodeId> rotatable_nodes(const RegressionTree& tree);

NodeId traverse(const RegressionTree& tree, const CutpointGrid& grid,
                std::span<const double> x);
double evaluate(const RegressionTree& tree, const CutpointGrid& grid,
                std::span<const double> x);
double evaluate(const Node& node, const CutpointGrid& grid, std::span<const double> x);

// Cutpoint-set queries on var: strict ancestors / left subtree / right subtree.
std::vector<int> ancestral_cutpoints(const RegressionTree& tree, NodeId node, int var);
std::vector<int> left_subtree_cutpoints(const RegressionTree& tree, NodeId node, int var);
std::vector<int> right_subtree_cutpoints(const RegressionTree& tree, NodeId node, int var);

// Interval of cutpoints on var at node that keeps every leaf reachable.
// Ancestors bound the interval according to which side the path took.
CutInterval valid_cut_interval(const RegressionTree& tree, const CutpointGrid& grid,
                               NodeId node, int var);

// Row-major n x d matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t n, std::size_t d) : rows(n), cols(d), data(n * d, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

std::vector<std::size_t> partition_counts(const RegressionTree& tree, const CutpointGrid& grid,
                                          const Matrix& x);

RegressionTree clone_subtree(const RegressionTree& tree, NodeId node);
RegressionTree replace_subtree(const RegressionTree& tree, NodeId node,
                               const RegressionTree& sub);

// Canonical text: internal "(v:c:LEFT RIGHT)", leaf "[mu]"; v is 1-based,
// c a grid index. The structural form prints every leaf as "[]".
std::string serialize(const RegressionTree& tree);
std::string serialize_structure(const RegressionTree& tree);
std::string serialize_structure(const Node& node);
// Throws std::invalid_argument on malformed text.
RegressionTree parse_tree(std::string_view text);

}  // namespace rotbart

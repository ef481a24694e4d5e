#pragma once
// Threshold access trees over attribute strings.
//
// Grammar (whitespace-separated tokens):
//   expr    := and-expr { "or" and-expr }*
//   and-expr:= primary { "and" primary }*
//   primary := attribute | "(" expr ")" | count "of" "(" expr { "," expr }+ ")"
// "and" binds tighter than "or". Runs of the same operator collapse into one
// node ("a and b and c" is a single 3-of-3 node), while parentheses pin the
// tree shape ("(a and b) and c" keeps the inner pair as its own node). A
// digits-only token is a threshold count exactly when the following token is
// "of"; anywhere else it is an ordinary attribute. Attribute tokens draw from
// [A-Za-z0-9_:.-] and may not be the keywords "and", "or", "of".
//
// Every node carries its position in a pre-order walk of the tree (root = 1).
// These positions double as the evaluation points of the secret-sharing
// polynomials, so shares can be recombined knowing only node positions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/result.hpp"

namespace seabrew::policy {

inline constexpr std::size_t kMaxDepth = 64;

struct Node {
  std::uint32_t index = 0;      // pre-order position, root = 1
  std::uint32_t threshold = 1;  // k; satisfied when k children are satisfied
  std::string attribute;        // set exactly for leaves
  std::vector<Node> children;   // empty for leaves
  bool is_leaf() const { return children.empty(); }
  bool operator==(const Node&) const = default;
};

// One secret share, bound to a leaf position and its attribute label.
struct LeafShare {
  std::uint32_t index;
  std::string attribute;
  algebra::Scalar share;
};

// Recombination plan produced by Policy::selection: for every internal node
// that participates, the pre-order positions of the children actually used
// (always the lowest-position satisfiable ones), plus the leaf positions that
// end up contributing shares.
struct SelectionPlan {
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> chosen;
  std::vector<std::uint32_t> leaf_indexes;  // ascending
};

class Policy {
 public:
  Policy() = default;

  static Result<Policy> parse(std::string_view text);
  // Adopt a programmatically built tree (indexes are recomputed). Accepts
  // shapes the grammar cannot spell, e.g. single-child internal nodes.
  static Result<Policy> from_tree(Node root);

  // Canonical rendering; parsing it back reproduces the same tree for any
  // policy that came from parse() (single-child internal nodes produced via
  // from_tree render as their child and so flatten on re-parse).
  std::string to_string() const;

  const Node& root() const { return root_; }
  std::uint32_t node_count() const { return node_count_; }
  std::vector<const Node*> leaves() const;  // pre-order

  bool satisfied_by(std::span<const std::string> attrs) const;
  std::optional<SelectionPlan> selection(std::span<const std::string> attrs) const;

  // Split `secret` along the tree: each internal node at position p with
  // threshold k draws a random degree-(k-1) polynomial q_p with q_p(0) equal
  // to its own share (the root's share is `secret`), and hands each child at
  // position c the value q_p(c).
  std::vector<LeafShare> share_secret(const algebra::Scalar& secret,
                                      algebra::Rng& rng) const;

  // Pre-order (position, threshold, child count, attribute) records.
  void serialize(ByteWriter& w) const;
  static Result<Policy> deserialize(ByteReader& r);

  bool operator==(const Policy&) const = default;

 private:
  Node root_;
  std::uint32_t node_count_ = 0;
};

// Lagrange coefficient of evaluation point `i` within the point set `points`,
// taken at zero: the weight of q(i) when reconstructing q(0).
algebra::Scalar lagrange_coeff(std::uint32_t i,
                               std::span<const std::uint32_t> points);

// True when `token` is usable as an attribute: nonempty, not a keyword, and
// drawn from [A-Za-z0-9_:.-].
bool is_valid_attribute(std::string_view token);

}  // namespace seabrew::policy

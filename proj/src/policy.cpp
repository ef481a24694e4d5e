#include "seabrew/policy.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace seabrew::policy {
namespace {

using algebra::Rng;
using algebra::Scalar;

bool is_attr_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' ||
         c == ':' || c == '.' || c == '-';
}

bool is_keyword(std::string_view t) { return t == "and" || t == "or" || t == "of"; }

bool valid_attribute(std::string_view t) {
  if (t.empty() || t.size() > 0xffff || is_keyword(t)) return false;
  return std::all_of(t.begin(), t.end(), is_attr_char);
}

bool digits_only(std::string_view t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

// ----------------------------------------------------------------------------
// lexer

struct Token {
  enum Kind { kAtom, kLParen, kRParen, kComma, kEnd } kind;
  std::string_view text;
  std::size_t pos;
};

Result<std::vector<Token>> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::kLParen, s.substr(i, 1), i});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::kRParen, s.substr(i, 1), i});
      ++i;
    } else if (c == ',') {
      out.push_back({Token::kComma, s.substr(i, 1), i});
      ++i;
    } else if (is_attr_char(c)) {
      std::size_t start = i;
      while (i < s.size() && is_attr_char(s[i])) ++i;
      out.push_back({Token::kAtom, s.substr(start, i - start), start});
    } else {
      return Error{Errc::parse_error, "unexpected character '" + std::string(1, c) +
                                          "' at position " + std::to_string(i)};
    }
  }
  out.push_back({Token::kEnd, {}, s.size()});
  return out;
}

// ----------------------------------------------------------------------------
// recursive-descent parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Result<Node> run() {
    auto n = parse_or(1);
    if (!n.ok()) return n;
    if (peek().kind != Token::kEnd)
      return err("unexpected trailing input", peek().pos);
    return n;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(at_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& eat() { return toks_[std::min(at_++, toks_.size() - 1)]; }

  static Error err(std::string what, std::size_t pos) {
    return Error{Errc::parse_error, std::move(what) + " at position " + std::to_string(pos)};
  }

  Result<Node> parse_or(std::size_t depth) {
    if (depth > kMaxDepth) return err("policy nested too deeply", peek().pos);
    std::vector<Node> parts;
    for (;;) {
      auto part = parse_and(depth);
      if (!part.ok()) return part;
      parts.push_back(part.take());
      if (peek().kind == Token::kAtom && peek().text == "or") eat();
      else break;
    }
    if (parts.size() == 1) return std::move(parts.front());
    Node n;
    n.threshold = 1;
    n.children = std::move(parts);
    return n;
  }

  Result<Node> parse_and(std::size_t depth) {
    std::vector<Node> parts;
    for (;;) {
      auto part = parse_primary(depth);
      if (!part.ok()) return part;
      parts.push_back(part.take());
      if (peek().kind == Token::kAtom && peek().text == "and") eat();
      else break;
    }
    if (parts.size() == 1) return std::move(parts.front());
    Node n;
    n.threshold = static_cast<std::uint32_t>(parts.size());
    n.children = std::move(parts);
    return n;
  }

  Result<Node> parse_primary(std::size_t depth) {
    const Token& t = peek();
    if (t.kind == Token::kLParen) {
      eat();
      auto inner = parse_or(depth + 1);
      if (!inner.ok()) return inner;
      if (peek().kind != Token::kRParen) return err("expected ')'", peek().pos);
      eat();
      return inner;
    }
    if (t.kind != Token::kAtom) return err("expected attribute or '('", t.pos);
    // a digits-only token is a threshold count exactly when "of" follows
    if (digits_only(t.text) && peek(1).kind == Token::kAtom && peek(1).text == "of")
      return parse_threshold(depth);
    if (!valid_attribute(t.text))
      return err("'" + std::string(t.text) + "' is not a valid attribute", t.pos);
    eat();
    Node leaf;
    leaf.attribute = std::string(t.text);
    return leaf;
  }

  Result<Node> parse_threshold(std::size_t depth) {
    const Token& count_tok = eat();
    if (count_tok.text.size() > 9)
      return err("threshold count out of range", count_tok.pos);
    std::uint32_t k = 0;
    for (char c : count_tok.text) k = k * 10 + std::uint32_t(c - '0');
    eat();  // "of"
    if (peek().kind != Token::kLParen)
      return err("expected '(' after 'of'", peek().pos);
    eat();
    std::vector<Node> parts;
    for (;;) {
      auto part = parse_or(depth + 1);
      if (!part.ok()) return part;
      parts.push_back(part.take());
      if (peek().kind == Token::kComma) { eat(); continue; }
      break;
    }
    if (peek().kind != Token::kRParen) return err("expected ')'", peek().pos);
    eat();
    if (parts.size() < 2)
      return err("threshold group needs at least two alternatives", count_tok.pos);
    if (k == 0 || k > parts.size())
      return err("threshold count must be between 1 and the group size",
                 count_tok.pos);
    Node n;
    n.threshold = k;
    n.children = std::move(parts);
    return n;
  }

  std::vector<Token> toks_;
  std::size_t at_ = 0;
};

// ----------------------------------------------------------------------------
// structural helpers

std::uint32_t assign_indexes(Node& n, std::uint32_t next) {
  n.index = next++;
  for (auto& ch : n.children) next = assign_indexes(ch, next);
  return next;
}

Status validate(const Node& n, std::size_t depth) {
  if (depth > kMaxDepth)
    return Error{Errc::argument_error, "policy nested too deeply"};
  if (n.is_leaf()) {
    if (!valid_attribute(n.attribute))
      return Error{Errc::argument_error, "invalid leaf attribute"};
    if (n.threshold != 1)
      return Error{Errc::argument_error, "leaf threshold must be 1"};
    return {};
  }
  if (!n.attribute.empty())
    return Error{Errc::argument_error, "internal node carries an attribute"};
  if (n.threshold == 0 || n.threshold > n.children.size())
    return Error{Errc::argument_error,
                 "threshold must be between 1 and the number of children"};
  for (const auto& ch : n.children) {
    if (auto s = validate(ch, depth + 1); !s.ok()) return s;
  }
  return {};
}

std::string render(const Node& n);

std::string render_operand(const Node& n) {
  if (n.is_leaf()) return n.attribute;
  return "(" + render(n) + ")";
}

std::string render(const Node& n) {
  if (n.is_leaf()) return n.attribute;
  if (n.children.size() == 1) return render(n.children.front());
  const std::size_t arity = n.children.size();
  if (n.threshold == 1 || n.threshold == arity) {
    const char* sep = n.threshold == 1 ? " or " : " and ";
    std::string out;
    for (std::size_t i = 0; i < arity; ++i) {
      if (i) out += sep;
      out += render_operand(n.children[i]);
    }
    return out;
  }
  std::string out = std::to_string(n.threshold) + " of (";
  for (std::size_t i = 0; i < arity; ++i) {
    if (i) out += ", ";
    out += render(n.children[i]);
  }
  out += ")";
  return out;
}

using AttrSet = std::unordered_set<std::string_view>;

AttrSet to_set(std::span<const std::string> attrs) {
  AttrSet s;
  s.reserve(attrs.size());
  for (const auto& a : attrs) s.insert(a);
  return s;
}

bool satisfied(const Node& n, const AttrSet& attrs) {
  if (n.is_leaf()) return attrs.count(n.attribute) > 0;
  std::uint32_t hits = 0;
  for (const auto& ch : n.children) {
    if (satisfied(ch, attrs) && ++hits >= n.threshold) return true;
  }
  return false;
}

void merge_plans(SelectionPlan& into, SelectionPlan&& from) {
  into.leaf_indexes.insert(into.leaf_indexes.end(), from.leaf_indexes.begin(),
                           from.leaf_indexes.end());
  for (auto& [k, v] : from.chosen) into.chosen[k] = std::move(v);
}

bool build_plan(const Node& n, const AttrSet& attrs, SelectionPlan& plan) {
  if (n.is_leaf()) {
    if (attrs.count(n.attribute) == 0) return false;
    plan.leaf_indexes.push_back(n.index);
    return true;
  }
  std::vector<std::uint32_t> chosen;
  SelectionPlan sub;
  for (const auto& ch : n.children) {
    if (chosen.size() == n.threshold) break;
    SelectionPlan trial;
    if (build_plan(ch, attrs, trial)) {
      chosen.push_back(ch.index);
      merge_plans(sub, std::move(trial));
    }
  }
  if (chosen.size() < n.threshold) return false;
  merge_plans(plan, std::move(sub));
  plan.chosen[n.index] = std::move(chosen);
  return true;
}

void assign_shares(const Node& n, const Scalar& value, Rng& rng,
                   std::vector<LeafShare>& out) {
  if (n.is_leaf()) {
    out.push_back({n.index, n.attribute, value});
    return;
  }
  // random polynomial of degree threshold-1 anchored at q(0) = value
  std::vector<Scalar> coeffs(n.threshold - 1);
  for (auto& c : coeffs) c = Scalar::random(rng);
  for (const auto& ch : n.children) {
    const Scalar x = Scalar::from_u64(ch.index);
    Scalar acc;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    acc = acc * x + value;
    assign_shares(ch, acc, rng, out);
  }
}

void write_node(const Node& n, ByteWriter& w) {
  w.u32(n.index);
  w.u32(n.threshold);
  w.u32(static_cast<std::uint32_t>(n.children.size()));
  w.str(n.attribute);
  for (const auto& ch : n.children) write_node(ch, w);
}

// Hard cap on stored arity: a decoder must not size vectors from hostile input.
constexpr std::uint32_t kMaxArity = 1u << 20;

Result<Node> read_node(ByteReader& r, std::uint32_t& expect_index,
                       std::size_t depth) {
  if (depth > kMaxDepth)
    return Error{Errc::decode_error, "stored policy nested too deeply"};
  Node n;
  n.index = r.u32();
  n.threshold = r.u32();
  const std::uint32_t arity = r.u32();
  n.attribute = r.str();
  if (!r.ok()) return Error{Errc::decode_error, "truncated policy node"};
  if (n.index != expect_index)
    return Error{Errc::decode_error, "policy nodes out of order"};
  ++expect_index;
  if (arity > kMaxArity) return Error{Errc::decode_error, "policy arity too large"};
  n.children.reserve(arity);
  for (std::uint32_t i = 0; i < arity; ++i) {
    auto ch = read_node(r, expect_index, depth + 1);
    if (!ch.ok()) return ch;
    n.children.push_back(ch.take());
  }
  return n;
}

}  // namespace

// ----------------------------------------------------------------------------
// Policy

Result<Policy> Policy::parse(std::string_view text) {
  auto tokens = lex(text);
  if (!tokens.ok()) return tokens.error();
  auto node = Parser(tokens.take()).run();
  if (!node.ok()) return node.error();
  return from_tree(node.take());
}

Result<Policy> Policy::from_tree(Node root) {
  if (auto s = validate(root, 1); !s.ok()) return s.error();
  Policy p;
  p.node_count_ = assign_indexes(root, 1) - 1;
  p.root_ = std::move(root);
  return p;
}

std::string Policy::to_string() const { return render(root_); }

std::vector<const Node*> Policy::leaves() const {
  std::vector<const Node*> out;
  std::vector<const Node*> stack{&root_};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) out.push_back(n);
    else
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
        stack.push_back(&*it);
  }
  return out;
}

bool Policy::satisfied_by(std::span<const std::string> attrs) const {
  return satisfied(root_, to_set(attrs));
}

std::optional<SelectionPlan> Policy::selection(
    std::span<const std::string> attrs) const {
  SelectionPlan plan;
  if (!build_plan(root_, to_set(attrs), plan)) return std::nullopt;
  std::sort(plan.leaf_indexes.begin(), plan.leaf_indexes.end());
  return plan;
}

std::vector<LeafShare> Policy::share_secret(const Scalar& secret,
                                            Rng& rng) const {
  std::vector<LeafShare> out;
  assign_shares(root_, secret, rng, out);
  return out;
}

void Policy::serialize(ByteWriter& w) const { write_node(root_, w); }

Result<Policy> Policy::deserialize(ByteReader& r) {
  std::uint32_t expect = 1;
  auto node = read_node(r, expect, 1);
  if (!node.ok()) return node.error();
  auto policy = from_tree(node.take());
  if (!policy.ok())
    return Error{Errc::decode_error, policy.error().message};
  // from_tree recomputes indexes; stored ones already matched pre-order
  return policy;
}

// ----------------------------------------------------------------------------
// Lagrange interpolation weight

algebra::Scalar lagrange_coeff(std::uint32_t i,
                               std::span<const std::uint32_t> points) {
  Scalar num = Scalar::from_u64(1);
  Scalar den = Scalar::from_u64(1);
  for (std::uint32_t j : points) {
    if (j == i) continue;
    num = num * Scalar::from_u64(j).neg();
    den = den * (i > j ? Scalar::from_u64(i - j) : Scalar::from_u64(j - i).neg());
  }
  return num * den.inverse().value();
}

bool is_valid_attribute(std::string_view token) { return valid_attribute(token); }

}  // namespace seabrew::policy

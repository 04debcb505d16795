#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace recur {

/// Numeric domain of a sequence and of the expressions generating it.
enum class Mode : std::uint8_t { integer, real };

std::string_view mode_name(Mode mode);  // "int" / "float"
Mode parse_mode(std::string_view text);

enum class Op : std::uint8_t {
  abs, sqr, sign, relu, sqrt, inv, log, exp, sin, cos, tan, atan,
  add, sub, mul, intdiv, mod, div,
};

enum class OpDomain : std::uint8_t { integer, real, both };

struct OperatorSpec {
  Op op;
  std::string_view name;
  int arity;
  OpDomain domain;
};

std::span<const OperatorSpec> all_operators();
const OperatorSpec& operator_spec(Op op);
std::optional<Op> find_operator(std::string_view name);
bool allowed_in(Op op, Mode mode);
/// Operators of the given arity available in `mode`, in table order.
std::vector<Op> operators_for(Mode mode, int arity);

enum class NamedConstant : std::uint8_t { e, pi, euler_gamma };

std::string_view constant_symbol(NamedConstant c);
double constant_value(NamedConstant c);

/// Prior-term symbols per dimension: u, v, w.
inline constexpr std::string_view kDimensionLetters = "uvw";
inline constexpr int kMaxDimensions = 3;

struct Leaf {
  enum class Kind : std::uint8_t { integer, named, real, index, term, noise };

  Kind kind = Kind::integer;
  std::uint8_t dim = 0;       // term: which dimension
  std::uint16_t offset = 0;   // term: i in u_{n-i}, i >= 1
  std::int64_t integer = 0;   // integer constant
  NamedConstant named = NamedConstant::e;
  double real = 0.0;          // real-valued prefactor

  static Leaf constant(std::int64_t v) { return {Kind::integer, 0, 0, v, NamedConstant::e, 0.0}; }
  static Leaf named_constant(NamedConstant c) { return {Kind::named, 0, 0, 0, c, 0.0}; }
  static Leaf real_constant(double v) { return {Kind::real, 0, 0, 0, NamedConstant::e, v}; }
  static Leaf index() { return {Kind::index, 0, 0, 0, NamedConstant::e, 0.0}; }
  static Leaf term(int dim, int offset) {
    return {Kind::term, static_cast<std::uint8_t>(dim), static_cast<std::uint16_t>(offset), 0,
            NamedConstant::e, 0.0};
  }
  static Leaf noise() { return {Kind::noise, 0, 0, 0, NamedConstant::e, 0.0}; }

  bool is_constant() const { return kind == Kind::integer || kind == Kind::named || kind == Kind::real; }

  friend bool operator==(const Leaf&, const Leaf&) = default;
};

using Node = std::variant<Op, Leaf>;

class InvalidExpression : public std::runtime_error {
 public:
  enum class Reason : std::uint8_t {
    empty, truncated, trailing_tokens, unknown_symbol, not_in_mode, bad_dimension,
  };

  InvalidExpression(Reason reason, const std::string& detail);
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

std::string_view reason_name(InvalidExpression::Reason reason);

/// Immutable expression tree stored as its prefix (Polish) traversal.
class Expression {
 public:
  static Expression leaf(const Leaf& leaf);
  static Expression unary(Op op, const Expression& child);
  static Expression binary(Op op, const Expression& lhs, const Expression& rhs);
  /// Takes a node list that is already a well-formed prefix traversal.
  static Expression from_prefix_nodes(std::vector<Node> nodes);

  std::span<const Node> nodes() const { return nodes_; }
  int operator_count() const { return ops_; }
  /// Deepest prior-term offset referenced (0 if none).
  int degree() const { return degree_; }
  bool has_noise() const { return has_noise_; }
  /// Highest dimension index referenced by a prior-term leaf, or -1.
  int max_dimension() const { return max_dim_; }

  friend bool operator==(const Expression& a, const Expression& b) { return a.nodes_ == b.nodes_; }

 private:
  explicit Expression(std::vector<Node> nodes);

  std::vector<Node> nodes_;
  int ops_ = 0;
  int degree_ = 0;
  int max_dim_ = -1;
  bool has_noise_ = false;
};

/// One expression per dimension. Dimension i computes sequence `kDimensionLetters[i]`.
class RecurrenceRelation {
 public:
  RecurrenceRelation(Mode mode, std::vector<Expression> expressions);

  Mode mode() const { return mode_; }
  int dimension() const { return static_cast<int>(expressions_.size()); }
  int degree() const { return degree_; }
  int operator_count() const;
  bool has_noise() const;
  const Expression& expression(int dim) const { return expressions_.at(static_cast<std::size_t>(dim)); }
  std::span<const Expression> expressions() const { return expressions_; }

  friend bool operator==(const RecurrenceRelation&, const RecurrenceRelation&) = default;

 private:
  Mode mode_;
  std::vector<Expression> expressions_;
  int degree_ = 0;
};

std::string leaf_symbol(const Leaf& leaf);

Expression parse_prefix(std::span<const std::string> tokens, Mode mode);
Expression parse_prefix(std::string_view text, Mode mode);
std::vector<std::string> to_prefix(const Expression& expr);
/// Canonical text form: prefix tokens separated by single spaces.
std::string to_text(const Expression& expr);
/// Conventional infix rendering for humans, e.g. "u_{n-1} + n".
std::string to_infix(const Expression& expr);

/// Parses "expr | expr | ..." (one prefix expression per dimension).
RecurrenceRelation parse_relation(std::string_view text, Mode mode);
std::string to_text(const RecurrenceRelation& rel);
std::string to_infix(const RecurrenceRelation& rel);

std::vector<std::string> split_tokens(std::string_view text);

}  // namespace recur

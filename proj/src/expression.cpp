#include "recur/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace recur {

namespace {

constexpr std::array<OperatorSpec, 18> kOperators{{
    {Op::abs, "abs", 1, OpDomain::both},
    {Op::sqr, "sqr", 1, OpDomain::both},
    {Op::sign, "sign", 1, OpDomain::integer},
    {Op::relu, "relu", 1, OpDomain::integer},
    {Op::sqrt, "sqrt", 1, OpDomain::real},
    {Op::inv, "inv", 1, OpDomain::real},
    {Op::log, "log", 1, OpDomain::real},
    {Op::exp, "exp", 1, OpDomain::real},
    {Op::sin, "sin", 1, OpDomain::real},
    {Op::cos, "cos", 1, OpDomain::real},
    {Op::tan, "tan", 1, OpDomain::real},
    {Op::atan, "atan", 1, OpDomain::real},
    {Op::add, "add", 2, OpDomain::both},
    {Op::sub, "sub", 2, OpDomain::both},
    {Op::mul, "mul", 2, OpDomain::both},
    {Op::intdiv, "intdiv", 2, OpDomain::integer},
    {Op::mod, "mod", 2, OpDomain::integer},
    {Op::div, "div", 2, OpDomain::real},
}};

bool is_integer_literal(std::string_view s) {
  std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  if (i >= s.size()) {
    return false;
  }
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<double> parse_real_literal(std::string_view s) {
  if (s.empty()) {
    return std::nullopt;
  }
  const std::size_t first = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (first >= s.size() || !(std::isdigit(static_cast<unsigned char>(s[first])) || s[first] == '.')) {
    return std::nullopt;
  }
  if (s[0] == '+') {
    s.remove_prefix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string out(buf.data(), res.ptr);
  if (out.find_first_of(".e") == std::string::npos) {
    out += ".0";
  }
  return out;
}

std::optional<Leaf> parse_leaf(std::string_view tok) {
  if (tok == "n") {
    return Leaf::index();
  }
  if (tok == "xi") {
    return Leaf::noise();
  }
  for (NamedConstant c : {NamedConstant::e, NamedConstant::pi, NamedConstant::euler_gamma}) {
    if (tok == constant_symbol(c)) {
      return Leaf::named_constant(c);
    }
  }
  if (tok.size() >= 2) {
    const auto dim = kDimensionLetters.find(tok[0]);
    if (dim != std::string_view::npos && tok[1] != '0' && is_integer_literal(tok.substr(1)) &&
        tok[1] != '-' && tok[1] != '+' && tok.size() <= 4) {
      int offset = 0;
      std::from_chars(tok.data() + 1, tok.data() + tok.size(), offset);
      return Leaf::term(static_cast<int>(dim), offset);
    }
  }
  if (is_integer_literal(tok)) {
    std::int64_t v = 0;
    const auto* begin = tok.data() + (tok[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(begin, tok.data() + tok.size(), v);
    if (ec == std::errc() && ptr == tok.data() + tok.size()) {
      return Leaf::constant(v);
    }
    return std::nullopt;
  }
  if (auto r = parse_real_literal(tok)) {
    return Leaf::real_constant(*r);
  }
  return std::nullopt;
}

bool leaf_allowed(const Leaf& leaf, Mode mode) {
  if (mode == Mode::real) {
    return true;
  }
  return leaf.kind == Leaf::Kind::integer || leaf.kind == Leaf::Kind::index ||
         leaf.kind == Leaf::Kind::term;
}

// Renders the subtree starting at `pos`; returns the position after it.
std::size_t render_infix(std::span<const Node> nodes, std::size_t pos, std::string& out) {
  const Node& node = nodes[pos];
  if (const auto* leaf = std::get_if<Leaf>(&node)) {
    switch (leaf->kind) {
      case Leaf::Kind::term:
        out += kDimensionLetters[leaf->dim];
        out += "_{n-" + std::to_string(leaf->offset) + "}";
        break;
      case Leaf::Kind::noise:
        out += "xi";
        break;
      default:
        out += leaf_symbol(*leaf);
    }
    return pos + 1;
  }
  const Op op = std::get<Op>(node);
  const auto& spec = operator_spec(op);
  if (spec.arity == 1) {
    std::string inner;
    const std::size_t next = render_infix(nodes, pos + 1, inner);
    if (op == Op::sqr) {
      out += "(" + inner + ")^2";
    } else {
      out += std::string(spec.name) + "(" + inner + ")";
    }
    return next;
  }
  std::string lhs;
  std::string rhs;
  const std::size_t rhs_pos = render_infix(nodes, pos + 1, lhs);
  const std::size_t next = render_infix(nodes, rhs_pos, rhs);
  std::string_view symbol;
  switch (op) {
    case Op::add: symbol = " + "; break;
    case Op::sub: symbol = " - "; break;
    case Op::mul: symbol = " * "; break;
    case Op::div: symbol = " / "; break;
    case Op::intdiv: symbol = " // "; break;
    case Op::mod: symbol = " % "; break;
    default: symbol = " ? "; break;
  }
  auto wrap = [&](std::size_t child_pos, const std::string& s) {
    const auto* child_op = std::get_if<Op>(&nodes[child_pos]);
    return (child_op != nullptr && operator_spec(*child_op).arity == 2) ? "(" + s + ")" : s;
  };
  out += wrap(pos + 1, lhs);
  out += symbol;
  out += wrap(rhs_pos, rhs);
  return next;
}

}  // namespace

std::string_view mode_name(Mode mode) { return mode == Mode::integer ? "int" : "float"; }

Mode parse_mode(std::string_view text) {
  if (text == "int" || text == "integer") {
    return Mode::integer;
  }
  if (text == "float" || text == "real") {
    return Mode::real;
  }
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected int or float)");
}

std::span<const OperatorSpec> all_operators() { return kOperators; }

const OperatorSpec& operator_spec(Op op) { return kOperators[static_cast<std::size_t>(op)]; }

std::optional<Op> find_operator(std::string_view name) {
  for (const auto& spec : kOperators) {
    if (spec.name == name) {
      return spec.op;
    }
  }
  return std::nullopt;
}

bool allowed_in(Op op, Mode mode) {
  const auto domain = operator_spec(op).domain;
  return domain == OpDomain::both || (domain == OpDomain::integer) == (mode == Mode::integer);
}

std::vector<Op> operators_for(Mode mode, int arity) {
  std::vector<Op> out;
  for (const auto& spec : kOperators) {
    if (spec.arity == arity && allowed_in(spec.op, mode)) {
      out.push_back(spec.op);
    }
  }
  return out;
}

std::string_view constant_symbol(NamedConstant c) {
  switch (c) {
    case NamedConstant::e: return "e";
    case NamedConstant::pi: return "pi";
    case NamedConstant::euler_gamma: return "gamma";
  }
  return "?";
}

double constant_value(NamedConstant c) {
  switch (c) {
    case NamedConstant::e: return std::numbers::e;
    case NamedConstant::pi: return std::numbers::pi;
    case NamedConstant::euler_gamma: return std::numbers::egamma;
  }
  return 0.0;
}

InvalidExpression::InvalidExpression(Reason reason, const std::string& detail)
    : std::runtime_error("invalid expression (" + std::string(reason_name(reason)) + "): " + detail),
      reason_(reason) {}

std::string_view reason_name(InvalidExpression::Reason reason) {
  using R = InvalidExpression::Reason;
  switch (reason) {
    case R::empty: return "empty";
    case R::truncated: return "truncated";
    case R::trailing_tokens: return "trailing tokens";
    case R::unknown_symbol: return "unknown symbol";
    case R::not_in_mode: return "not in mode";
    case R::bad_dimension: return "bad dimension";
  }
  return "?";
}

Expression::Expression(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  for (const Node& node : nodes_) {
    if (std::holds_alternative<Op>(node)) {
      ++ops_;
      continue;
    }
    const Leaf& leaf = std::get<Leaf>(node);
    if (leaf.kind == Leaf::Kind::term) {
      degree_ = std::max<int>(degree_, leaf.offset);
      max_dim_ = std::max<int>(max_dim_, leaf.dim);
    } else if (leaf.kind == Leaf::Kind::noise) {
      has_noise_ = true;
    }
  }
}

Expression Expression::leaf(const Leaf& leaf) { return Expression({Node{leaf}}); }

Expression Expression::unary(Op op, const Expression& child) {
  if (operator_spec(op).arity != 1) {
    throw std::invalid_argument("operator is not unary");
  }
  std::vector<Node> nodes;
  nodes.reserve(child.nodes_.size() + 1);
  nodes.emplace_back(op);
  nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
  return Expression(std::move(nodes));
}

Expression Expression::binary(Op op, const Expression& lhs, const Expression& rhs) {
  if (operator_spec(op).arity != 2) {
    throw std::invalid_argument("operator is not binary");
  }
  std::vector<Node> nodes;
  nodes.reserve(lhs.nodes_.size() + rhs.nodes_.size() + 1);
  nodes.emplace_back(op);
  nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return Expression(std::move(nodes));
}

Expression Expression::from_prefix_nodes(std::vector<Node> nodes) {
  int needed = 1;
  for (const Node& node : nodes) {
    if (needed == 0) {
      throw InvalidExpression(InvalidExpression::Reason::trailing_tokens, "extra nodes");
    }
    const auto* op = std::get_if<Op>(&node);
    needed += (op != nullptr ? operator_spec(*op).arity : 0) - 1;
  }
  if (nodes.empty()) {
    throw InvalidExpression(InvalidExpression::Reason::empty, "no nodes");
  }
  if (needed > 0) {
    throw InvalidExpression(InvalidExpression::Reason::truncated, "missing operands");
  }
  return Expression(std::move(nodes));
}

RecurrenceRelation::RecurrenceRelation(Mode mode, std::vector<Expression> expressions)
    : mode_(mode), expressions_(std::move(expressions)) {
  if (expressions_.empty() || expressions_.size() > static_cast<std::size_t>(kMaxDimensions)) {
    throw InvalidExpression(InvalidExpression::Reason::bad_dimension,
                            "relation needs 1.." + std::to_string(kMaxDimensions) + " expressions");
  }
  for (const auto& e : expressions_) {
    if (e.max_dimension() >= dimension()) {
      throw InvalidExpression(InvalidExpression::Reason::bad_dimension,
                              "prior term refers to dimension " + std::to_string(e.max_dimension() + 1) +
                                  " of a " + std::to_string(dimension()) + "-dimensional system");
    }
    degree_ = std::max(degree_, e.degree());
  }
}

int RecurrenceRelation::operator_count() const {
  int total = 0;
  for (const auto& e : expressions_) {
    total += e.operator_count();
  }
  return total;
}

bool RecurrenceRelation::has_noise() const {
  return std::any_of(expressions_.begin(), expressions_.end(), [](const Expression& e) { return e.has_noise(); });
}

std::string leaf_symbol(const Leaf& leaf) {
  switch (leaf.kind) {
    case Leaf::Kind::integer: return std::to_string(leaf.integer);
    case Leaf::Kind::named: return std::string(constant_symbol(leaf.named));
    case Leaf::Kind::real: return format_real(leaf.real);
    case Leaf::Kind::index: return "n";
    case Leaf::Kind::term: return std::string(1, kDimensionLetters[leaf.dim]) + std::to_string(leaf.offset);
    case Leaf::Kind::noise: return "xi";
  }
  return "?";
}

Expression parse_prefix(std::span<const std::string> tokens, Mode mode) {
  using R = InvalidExpression::Reason;
  if (tokens.empty()) {
    throw InvalidExpression(R::empty, "no tokens");
  }
  std::vector<Node> nodes;
  nodes.reserve(tokens.size());
  int needed = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (needed == 0) {
      throw InvalidExpression(R::trailing_tokens, "unexpected '" + tok + "' at position " + std::to_string(i));
    }
    if (auto op = find_operator(tok)) {
      if (!allowed_in(*op, mode)) {
        throw InvalidExpression(R::not_in_mode, "operator '" + tok + "' in " + std::string(mode_name(mode)) + " mode");
      }
      nodes.emplace_back(*op);
      needed += operator_spec(*op).arity - 1;
      continue;
    }
    auto leaf = parse_leaf(tok);
    if (!leaf) {
      throw InvalidExpression(R::unknown_symbol, "'" + tok + "'");
    }
    if (!leaf_allowed(*leaf, mode)) {
      throw InvalidExpression(R::not_in_mode, "leaf '" + tok + "' in " + std::string(mode_name(mode)) + " mode");
    }
    nodes.emplace_back(*leaf);
    --needed;
  }
  if (needed > 0) {
    throw InvalidExpression(R::truncated, std::to_string(needed) + " operand(s) missing");
  }
  return Expression::from_prefix_nodes(std::move(nodes));
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) {
      out.emplace_back(text.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

Expression parse_prefix(std::string_view text, Mode mode) {
  const auto tokens = split_tokens(text);
  return parse_prefix(std::span<const std::string>(tokens), mode);
}

std::vector<std::string> to_prefix(const Expression& expr) {
  std::vector<std::string> out;
  out.reserve(expr.nodes().size());
  for (const Node& node : expr.nodes()) {
    if (const auto* op = std::get_if<Op>(&node)) {
      out.emplace_back(operator_spec(*op).name);
    } else {
      out.push_back(leaf_symbol(std::get<Leaf>(node)));
    }
  }
  return out;
}

std::string to_text(const Expression& expr) {
  std::string out;
  for (const auto& tok : to_prefix(expr)) {
    if (!out.empty()) {
      out += ' ';
    }
    out += tok;
  }
  return out;
}

std::string to_infix(const Expression& expr) {
  std::string out;
  render_infix(expr.nodes(), 0, out);
  return out;
}

RecurrenceRelation parse_relation(std::string_view text, Mode mode) {
  std::vector<Expression> exprs;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    exprs.push_back(parse_prefix(text.substr(start, bar == std::string_view::npos ? bar : bar - start), mode));
    if (bar == std::string_view::npos) {
      break;
    }
    start = bar + 1;
  }
  return RecurrenceRelation(mode, std::move(exprs));
}

std::string to_text(const RecurrenceRelation& rel) {
  std::string out;
  for (int d = 0; d < rel.dimension(); ++d) {
    if (d > 0) {
      out += " | ";
    }
    out += to_text(rel.expression(d));
  }
  return out;
}

std::string to_infix(const RecurrenceRelation& rel) {
  std::string out;
  for (int d = 0; d < rel.dimension(); ++d) {
    if (d > 0) {
      out += ", ";
    }
    out += std::string(1, kDimensionLetters[static_cast<std::size_t>(d)]) + "_n = " + to_infix(rel.expression(d));
  }
  return out;
}

}  // namespace recur

#include "recur/evaluate.hpp"

#include <cmath>
#include <stdexcept>

namespace recur {

namespace {


BigInt leaf_value(const Leaf& leaf, std::int64_t n, std::span<const std::vector<BigInt>> history,
                  std::optional<double> /*noise*/, DomainFault& fault, bool& failed) {
  switch (leaf.kind) {
    case Leaf::Kind::integer: return BigInt(leaf.integer);
    case Leaf::Kind::index: return BigInt(n);
    case Leaf::Kind::term: {
      if (leaf.dim >= history.size() || history[leaf.dim].size() < leaf.offset) {
        fault = DomainFault::missing_history;
        failed = true;
        return BigInt(0);
      }
      const auto& track = history[leaf.dim];
      return track[track.size() - leaf.offset];
    }
    default:
      throw std::logic_error("leaf '" + leaf_symbol(leaf) + "' cannot be evaluated in integer mode");
  }
}

double leaf_value(const Leaf& leaf, std::int64_t n, std::span<const std::vector<double>> history,
                  std::optional<double> noise, DomainFault& fault, bool& failed) {
  switch (leaf.kind) {
    case Leaf::Kind::integer: return static_cast<double>(leaf.integer);
    case Leaf::Kind::named: return constant_value(leaf.named);
    case Leaf::Kind::real: return leaf.real;
    case Leaf::Kind::index: return static_cast<double>(n);
    case Leaf::Kind::noise: return noise.value_or(0.0);
    case Leaf::Kind::term: {
      if (leaf.dim >= history.size() || history[leaf.dim].size() < leaf.offset) {
        fault = DomainFault::missing_history;
        failed = true;
        return 0.0;
      }
      const auto& track = history[leaf.dim];
      return track[track.size() - leaf.offset];
    }
  }
  return 0.0;
}

// Integer operators. Returns false and sets `fault` on a domain error.
bool apply(Op op, const BigInt& a, const BigInt& b, BigInt& out, DomainFault& fault) {
  switch (op) {
    case Op::abs: out = boost::multiprecision::abs(a); break;
    case Op::sqr: out = a * a; break;
    case Op::sign: out = a.sign(); break;
    case Op::relu: out = a.sign() > 0 ? a : BigInt(0); break;
    case Op::add: out = a + b; break;
    case Op::sub: out = a - b; break;
    case Op::mul: out = a * b; break;
    case Op::intdiv:
    case Op::mod:
      if (b.is_zero()) {
        fault = DomainFault::division_by_zero;
        return false;
      }
      out = op == Op::intdiv ? floor_div(a, b) : floor_mod(a, b);
      break;
    default:
      throw std::logic_error("operator '" + std::string(operator_spec(op).name) + "' has no integer semantics");
  }
  if (exceeds_limit(out)) {
    fault = DomainFault::overflow;
    return false;
  }
  return true;
}

bool apply(Op op, double a, double b, double& out, DomainFault& fault) {
  switch (op) {
    case Op::abs: out = std::fabs(a); break;
    case Op::sqr: out = a * a; break;
    case Op::sign: out = static_cast<double>((a > 0) - (a < 0)); break;
    case Op::relu: out = a > 0 ? a : 0.0; break;
    case Op::sqrt:
      if (a < 0) {
        fault = DomainFault::outside_domain;
        return false;
      }
      out = std::sqrt(a);
      break;
    case Op::inv:
      if (a == 0) {
        fault = DomainFault::division_by_zero;
        return false;
      }
      out = 1.0 / a;
      break;
    case Op::log:
      if (a <= 0) {
        fault = DomainFault::outside_domain;
        return false;
      }
      out = std::log(a);
      break;
    case Op::exp: out = std::exp(a); break;
    case Op::sin: out = std::sin(a); break;
    case Op::cos: out = std::cos(a); break;
    case Op::tan: out = std::tan(a); break;
    case Op::atan: out = std::atan(a); break;
    case Op::add: out = a + b; break;
    case Op::sub: out = a - b; break;
    case Op::mul: out = a * b; break;
    case Op::div:
    case Op::intdiv:
    case Op::mod:
      if (b == 0) {
        fault = DomainFault::division_by_zero;
        return false;
      }
      if (op == Op::div) {
        out = a / b;
      } else if (op == Op::intdiv) {
        out = std::floor(a / b);
      } else {
        out = a - b * std::floor(a / b);
      }
      break;
  }
  if (!std::isfinite(out)) {
    fault = DomainFault::not_finite;
    return false;
  }
  if (std::fabs(out) > kRealMagnitudeLimit) {
    fault = DomainFault::overflow;
    return false;
  }
  return true;
}

template <class T>
class Evaluator {
 public:
  Evaluated<T> run(const Expression& expr, std::int64_t n, std::span<const std::vector<T>> history,
                   std::optional<double> noise) {
    stack_.clear();
    const auto nodes = expr.nodes();
    DomainFault fault = DomainFault::not_finite;
    // Prefix order evaluated right to left: operands are on the stack when an operator is reached.
    for (std::size_t i = nodes.size(); i-- > 0;) {
      bool failed = false;
      if (const auto* leaf = std::get_if<Leaf>(&nodes[i])) {
        stack_.push_back(leaf_value(*leaf, n, history, noise, fault, failed));
        if (failed) {
          return {std::nullopt, {fault, n}};
        }
        if constexpr (std::is_same_v<T, double>) {
          if (std::fabs(stack_.back()) > kRealMagnitudeLimit) {
            return {std::nullopt, {DomainFault::overflow, n}};
          }
        } else {
          if (exceeds_limit(stack_.back())) {
            return {std::nullopt, {DomainFault::overflow, n}};
          }
        }
        continue;
      }
      const Op op = std::get<Op>(nodes[i]);
      T out{};
      if (operator_spec(op).arity == 1) {
        if (!apply(op, stack_.back(), stack_.back(), out, fault)) {
          return {std::nullopt, {fault, n}};
        }
        stack_.back() = std::move(out);
      } else {
        const std::size_t top = stack_.size() - 1;
        // Left operand was pushed last.
        if (!apply(op, stack_[top], stack_[top - 1], out, fault)) {
          return {std::nullopt, {fault, n}};
        }
        stack_.pop_back();
        stack_.back() = std::move(out);
      }
    }
    return {std::move(stack_.back()), {}};
  }

 private:
  std::vector<T> stack_;
};

template <class T>
Unrolled<T> unroll_impl(const RecurrenceRelation& rel, Tracks<T> initial, int count, const UnrollOptions& options) {
  const int dims = rel.dimension();
  if (static_cast<int>(initial.size()) != dims) {
    throw std::invalid_argument("initial terms have " + std::to_string(initial.size()) + " dimension(s), relation has " +
                                std::to_string(dims));
  }
  const std::size_t start = initial.front().size();
  for (const auto& track : initial) {
    if (track.size() != start) {
      throw std::invalid_argument("initial terms differ in length across dimensions");
    }
  }
  if (start < static_cast<std::size_t>(rel.degree())) {
    throw std::invalid_argument("relation of degree " + std::to_string(rel.degree()) + " needs that many initial terms");
  }
  Unrolled<T> result;
  result.terms = std::move(initial);
  for (auto& track : result.terms) {
    track.reserve(start + static_cast<std::size_t>(std::max(count, 0)));
  }
  Evaluator<T> evaluator;
  std::vector<T> step(static_cast<std::size_t>(dims));
  for (int k = 0; k < count; ++k) {
    const std::int64_t n = options.first_index + static_cast<std::int64_t>(start) + k;
    for (int d = 0; d < dims; ++d) {
      const Expression& expr = rel.expression(d);
      std::optional<double> draw;
      if (expr.has_noise() && options.noise) {
        draw = options.noise();
      }
      auto value = evaluator.run(expr, n, result.terms, draw);
      if (!value) {
        result.error = value.error;
        return result;
      }
      step[static_cast<std::size_t>(d)] = std::move(*value.value);
    }
    for (int d = 0; d < dims; ++d) {
      result.terms[static_cast<std::size_t>(d)].push_back(std::move(step[static_cast<std::size_t>(d)]));
    }
  }
  return result;
}

}  // namespace

std::string_view fault_name(DomainFault fault) {
  switch (fault) {
    case DomainFault::division_by_zero: return "division by zero";
    case DomainFault::outside_domain: return "argument outside operator domain";
    case DomainFault::overflow: return "magnitude above 1e100";
    case DomainFault::not_finite: return "non-finite value";
    case DomainFault::missing_history: return "missing history";
  }
  return "?";
}

Evaluated<BigInt> eval_step(const Expression& expr, std::int64_t n, std::span<const std::vector<BigInt>> history,
                            std::optional<double> noise) {
  return Evaluator<BigInt>{}.run(expr, n, history, noise);
}

Evaluated<double> eval_step(const Expression& expr, std::int64_t n, std::span<const std::vector<double>> history,
                            std::optional<double> noise) {
  return Evaluator<double>{}.run(expr, n, history, noise);
}

Unrolled<BigInt> unroll(const RecurrenceRelation& rel, IntTracks initial, int count, const UnrollOptions& options) {
  if (rel.mode() != Mode::integer) {
    throw std::invalid_argument("integer unroll of a float relation");
  }
  return unroll_impl<BigInt>(rel, std::move(initial), count, options);
}

Unrolled<double> unroll(const RecurrenceRelation& rel, RealTracks initial, int count, const UnrollOptions& options) {
  return unroll_impl<double>(rel, std::move(initial), count, options);
}

std::optional<double> evaluate_constant(const Expression& expr) {
  auto v = eval_step(expr, 0, std::span<const std::vector<double>>{});
  return v.value;
}

}  // namespace recur

#include "recur/oracle.hpp"

#include <algorithm>

#include "recur/evaluate.hpp"
#include "recur/metrics.hpp"

namespace recur {

namespace {

// W(e, n): labeled ways to fill e pending slots using exactly n operators.
BigInt weighted_count(int ops, const BigInt& leaves, const BigInt& unary, const BigInt& binary) {
  if (ops < 0) {
    return 0;
  }
  const int max_e = ops + 2;
  std::vector<std::vector<BigInt>> w(static_cast<std::size_t>(max_e + 1),
                                     std::vector<BigInt>(static_cast<std::size_t>(ops + 1), BigInt(0)));
  BigInt power = 1;
  for (int e = 0; e <= max_e; ++e) {
    w[static_cast<std::size_t>(e)][0] = power;
    power *= leaves;
  }
  for (int n = 1; n <= ops; ++n) {
    for (int e = 1; e <= max_e; ++e) {
      const auto ue = static_cast<std::size_t>(e);
      const auto un = static_cast<std::size_t>(n);
      BigInt v = leaves * w[ue - 1][un] + unary * w[ue][un - 1];
      if (e + 1 <= max_e) {
        v += binary * w[ue + 1][un - 1];
      }
      w[ue][un] = std::move(v);
    }
  }
  return w[1][static_cast<std::size_t>(ops)];
}

void shapes_rec(int slots, int ops, TreeShape& cur, std::vector<TreeShape>& out) {
  if (slots == 0) {
    if (ops == 0) {
      out.push_back(cur);
    }
    return;
  }
  for (std::uint8_t arity = 0; arity <= 2; ++arity) {
    if (arity > 0 && ops == 0) {
      break;
    }
    cur.push_back(arity);
    shapes_rec(slots - 1 + arity, ops - (arity > 0 ? 1 : 0), cur, out);
    cur.pop_back();
  }
}

template <class T>
std::optional<double> fit_error(const Expression& expr, const std::vector<T>& observed, double tau,
                                std::vector<std::vector<T>>& history) {
  const auto degree = static_cast<std::size_t>(expr.degree());
  history.resize(1);
  history[0].assign(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(degree));
  double worst = 0.0;
  for (std::size_t k = degree; k < observed.size(); ++k) {
    auto v = eval_step(expr, static_cast<std::int64_t>(k), history);
    if (!v) {
      return std::nullopt;
    }
    const double err = relative_error(*v.value, observed[k]);
    if (!(err <= tau)) {
      return std::nullopt;
    }
    worst = std::max(worst, err);
    history[0].push_back(std::move(*v.value));
  }
  return worst;
}

bool fit_less(const FitCandidate& a, const FitCandidate& b) {
  if (a.ops != b.ops) {
    return a.ops < b.ops;
  }
  if (a.max_error != b.max_error) {
    return a.max_error < b.max_error;
  }
  if (a.relation.degree() != b.relation.degree()) {
    return a.relation.degree() < b.relation.degree();
  }
  return a.rank < b.rank;
}

}  // namespace

BigInt count_trees(int ops) { return weighted_count(ops, 1, 1, 1); }

std::vector<TreeShape> enumerate_shapes(int ops) {
  std::vector<TreeShape> out;
  if (ops < 0) {
    return out;
  }
  TreeShape cur;
  shapes_rec(1, ops, cur, out);
  return out;
}

EnumerationSpace EnumerationSpace::standard(Mode mode, int max_ops, int max_degree, int const_low, int const_high) {
  EnumerationSpace s;
  s.mode = mode;
  s.max_ops = max_ops;
  for (int i = 1; i <= max_degree; ++i) {
    s.leaves.push_back(Leaf::term(0, i));
  }
  s.leaves.push_back(Leaf::index());
  for (int c = const_low; c <= const_high; ++c) {
    s.leaves.push_back(Leaf::constant(c));
  }
  if (mode == Mode::real) {
    for (auto c : {NamedConstant::e, NamedConstant::pi, NamedConstant::euler_gamma}) {
      s.leaves.push_back(Leaf::named_constant(c));
    }
  }
  s.unary = operators_for(mode, 1);
  s.binary = operators_for(mode, 2);
  return s;
}

EnumerationSpace EnumerationSpace::from_generator(const GeneratorConfig& cfg) {
  EnumerationSpace s = standard(cfg.mode, cfg.max_ops, cfg.max_degree, cfg.const_low, cfg.const_high);
  if (cfg.mode == Mode::real && !cfg.named_constants) {
    std::erase_if(s.leaves, [](const Leaf& l) { return l.kind == Leaf::Kind::named; });
  }
  s.unary.clear();
  s.binary.clear();
  for (Op op : family_operators(cfg.family, cfg.mode)) {
    (operator_spec(op).arity == 1 ? s.unary : s.binary).push_back(op);
  }
  return s;
}

int EnumerationSpace::max_degree() const {
  int d = 0;
  for (const auto& l : leaves) {
    if (l.kind == Leaf::Kind::term) {
      d = std::max<int>(d, l.offset);
    }
  }
  return d;
}

BigInt count_expressions(const EnumerationSpace& space, int ops) {
  return weighted_count(ops, BigInt(space.leaves.size()), BigInt(space.unary.size()), BigInt(space.binary.size()));
}

BigInt count_expressions(const EnumerationSpace& space) {
  BigInt total = 0;
  for (int o = space.min_ops; o <= space.max_ops; ++o) {
    total += count_expressions(space, o);
  }
  return total;
}

void for_each_expression(const EnumerationSpace& space, const std::function<bool(const Expression&)>& visit,
                         bool force) {
  if (space.leaves.empty()) {
    throw std::invalid_argument("enumeration space has no leaves");
  }
  const BigInt total = count_expressions(space);
  if (!force && total > BigInt(kEnumerationGuard)) {
    throw SpaceTooLarge("space holds " + to_string(total) + " expressions (guard " +
                        std::to_string(kEnumerationGuard) + "); pass force to enumerate anyway");
  }
  for (int o = space.min_ops; o <= space.max_ops; ++o) {
    for (const TreeShape& shape : enumerate_shapes(o)) {
      std::vector<std::size_t> radix;
      bool empty_pool = false;
      for (auto arity : shape) {
        const std::size_t r = arity == 0 ? space.leaves.size() : arity == 1 ? space.unary.size() : space.binary.size();
        empty_pool = empty_pool || r == 0;
        radix.push_back(r);
      }
      if (empty_pool) {
        continue;
      }
      std::vector<std::size_t> digit(shape.size(), 0);
      std::vector<Node> nodes(shape.size());
      while (true) {
        for (std::size_t i = 0; i < shape.size(); ++i) {
          if (shape[i] == 0) {
            nodes[i] = space.leaves[digit[i]];
          } else {
            nodes[i] = shape[i] == 1 ? space.unary[digit[i]] : space.binary[digit[i]];
          }
        }
        if (!visit(Expression::from_prefix_nodes(nodes))) {
          return;
        }
        // Odometer with the first position most significant.
        std::size_t i = shape.size();
        while (i > 0) {
          --i;
          if (++digit[i] < radix[i]) {
            break;
          }
          digit[i] = 0;
          if (i == 0) {
            i = shape.size() + 1;
            break;
          }
        }
        if (i == shape.size() + 1) {
          break;
        }
      }
    }
  }
}

std::vector<Expression> enumerate_expressions(const EnumerationSpace& space, bool force) {
  std::vector<Expression> out;
  for_each_expression(
      space,
      [&](const Expression& e) {
        out.push_back(e);
        return true;
      },
      force);
  return out;
}

std::vector<FitCandidate> fit_by_enumeration(const SequenceData& observed, const EnumerationSpace& space,
                                             const FitOptions& options) {
  if (dimensions(observed) != 1) {
    throw std::invalid_argument("enumeration fitting handles single sequences only");
  }
  if (space.leaves.empty() || count_expressions(space).is_zero()) {
    throw std::invalid_argument("empty enumeration space");
  }
  const std::size_t len = length(observed);
  if (len < 1) {
    throw std::invalid_argument("need at least one observed term");
  }
  const int degree_cap = static_cast<int>(len) - 1;
  std::vector<FitCandidate> best;
  std::uint64_t rank = 0;
  IntTracks int_history;
  RealTracks real_history;
  const auto* ints = std::get_if<IntTracks>(&observed);
  const bool exact = ints != nullptr && space.mode == Mode::integer;
  const std::vector<double> reals = exact ? std::vector<double>{} : to_real(observed).front();
  for_each_expression(
      space,
      [&](const Expression& expr) {
        const std::uint64_t my_rank = rank++;
        if (best.size() >= options.top_k && !best.empty() && best.back().ops < expr.operator_count()) {
          return false;
        }
        if (expr.degree() > degree_cap) {
          return true;
        }
        std::optional<double> err;
        if (exact) {
          err = fit_error(expr, ints->front(), options.tau, int_history);
        } else {
          err = fit_error(expr, reals, options.tau, real_history);
        }
        if (!err) {
          return true;
        }
        FitCandidate cand{RecurrenceRelation(space.mode, {expr}), *err, expr.operator_count(), my_rank};
        auto pos = std::upper_bound(best.begin(), best.end(), cand, fit_less);
        best.insert(pos, std::move(cand));
        if (best.size() > options.top_k) {
          best.pop_back();
        }
        return true;
      },
      options.force);
  return best;
}

}  // namespace recur

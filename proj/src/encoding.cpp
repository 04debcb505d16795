#include "recur/encoding.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "json.hpp"

namespace recur {

namespace {

bool is_sign(std::string_view tok) { return tok == "+" || tok == "-"; }

std::optional<long long> parse_int(std::string_view tok) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<int> parse_digit(std::string_view tok, int base) {
  if (tok.empty() || tok.front() == '-' || tok.front() == '+') {
    return std::nullopt;
  }
  auto v = parse_int(tok);
  if (!v || *v < 0 || *v >= base || (tok.size() > 1 && tok.front() == '0')) {
    return std::nullopt;
  }
  return static_cast<int>(*v);
}

std::optional<int> parse_exponent(std::string_view tok) {
  if (tok.size() < 2 || tok.front() != 'E') {
    return std::nullopt;
  }
  auto v = parse_int(tok.substr(1));
  if (!v || (tok[1] == '+')) {
    return std::nullopt;
  }
  return static_cast<int>(*v);
}

std::string exponent_token(int e) { return "E" + std::to_string(e); }

std::size_t float_width(const FloatEncodingConfig& cfg) { return static_cast<std::size_t>(cfg.mantissa_tokens) + 2; }

std::string term_symbol(int dim, int offset) {
  return std::string(1, kDimensionLetters[static_cast<std::size_t>(dim)]) + std::to_string(offset);
}

// Shortest round-trip text that parse_prefix reads as a real literal.
std::string real_literal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  return std::string(buf, res.ptr);
}

}  // namespace

void EncodingConfig::validate() const {
  if (integer.base < 2) {
    throw std::invalid_argument("integer base must be >= 2");
  }
  if (real.mantissa_tokens < 1 || real.mantissa_tokens > 4) {
    throw std::invalid_argument("mantissa token count must lie in 1..4");
  }
  if (real.min_exponent > real.max_exponent) {
    throw std::invalid_argument("empty exponent range");
  }
  if (max_degree < 1) {
    throw std::invalid_argument("max_degree must be >= 1");
  }
}

std::vector<std::string> encode_integer(const BigInt& x, const IntegerEncodingConfig& cfg) {
  if (exceeds_limit(x)) {
    throw EncodingError("integer magnitude above 1e100");
  }
  std::vector<std::string> out{x.sign() < 0 ? "-" : "+"};
  BigInt rest = boost::multiprecision::abs(x);
  if (rest.is_zero()) {
    out.emplace_back("0");
    return out;
  }
  const BigInt base(cfg.base);
  std::vector<std::string> digits;
  while (!rest.is_zero()) {
    BigInt q;
    BigInt r;
    boost::multiprecision::divide_qr(rest, base, q, r);
    digits.push_back(r.str());
    rest = std::move(q);
  }
  out.insert(out.end(), digits.rbegin(), digits.rend());
  return out;
}

BigInt decode_integer(std::span<const std::string> tokens, const IntegerEncodingConfig& cfg) {
  if (tokens.size() < 2 || !is_sign(tokens.front())) {
    throw EncodingError("integer must be a sign followed by digits");
  }
  BigInt value = 0;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto d = parse_digit(tokens[i], cfg.base);
    if (!d) {
      throw EncodingError("bad digit token '" + tokens[i] + "'");
    }
    if (i == 1 && *d == 0 && tokens.size() > 2) {
      throw EncodingError("leading zero digit");
    }
    value = value * cfg.base + *d;
    if (exceeds_limit(value)) {
      throw EncodingError("integer magnitude above 1e100");
    }
  }
  if (tokens.front() == "-") {
    if (value.is_zero()) {
      throw EncodingError("negative zero");
    }
    value = -value;
  }
  return value;
}

std::vector<std::string> encode_float(double x, const FloatEncodingConfig& cfg) {
  if (!std::isfinite(x)) {
    throw EncodingError("cannot encode a non-finite value");
  }
  const int m = cfg.mantissa_tokens;
  std::vector<std::string> out{std::signbit(x) && x != 0 ? "-" : "+"};
  if (x == 0) {
    out.insert(out.end(), static_cast<std::size_t>(m), "0");
    out.emplace_back("E0");
    return out;
  }
  const int p = cfg.significant_digits();
  // d.ddd...e±XX, correctly rounded (ties to even on the exact binary value).
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::fabs(x), std::chars_format::scientific, p - 1);
  const std::string_view text(buf, static_cast<std::size_t>(res.ptr - buf));
  const auto epos = text.find('e');
  std::string digits;
  for (char c : text.substr(0, epos)) {
    if (c != '.') {
      digits.push_back(c);
    }
  }
  const int decimal_exp = static_cast<int>(*parse_int(text.substr(epos + 1).front() == '+' ? text.substr(epos + 2)
                                                                                         : text.substr(epos + 1)));
  const int e = decimal_exp - (p - 1);
  if (e < cfg.min_exponent || e > cfg.max_exponent) {
    throw EncodingError("exponent " + std::to_string(e) + " outside [" + std::to_string(cfg.min_exponent) + ", " +
                        std::to_string(cfg.max_exponent) + "]");
  }
  for (int k = 0; k < m; ++k) {
    out.push_back(std::to_string(std::stoi(digits.substr(static_cast<std::size_t>(4 * k), 4))));
  }
  out.push_back(exponent_token(e));
  return out;
}

double decode_float(std::span<const std::string> tokens, const FloatEncodingConfig& cfg) {
  if (tokens.size() != float_width(cfg) || !is_sign(tokens.front())) {
    throw EncodingError("float must be sign, " + std::to_string(cfg.mantissa_tokens) + " mantissa token(s), exponent");
  }
  std::string text(tokens.front() == "-" ? "-" : "");
  for (int k = 0; k < cfg.mantissa_tokens; ++k) {
    const auto& tok = tokens[static_cast<std::size_t>(k) + 1];
    auto d = parse_digit(tok, 10000);
    if (!d) {
      throw EncodingError("bad mantissa token '" + tok + "'");
    }
    std::string chunk = std::to_string(*d);
    if (k > 0) {
      chunk.insert(0, 4 - chunk.size(), '0');
    }
    text += chunk;
  }
  auto e = parse_exponent(tokens.back());
  if (!e || *e < cfg.min_exponent || *e > cfg.max_exponent) {
    throw EncodingError("bad exponent token '" + tokens.back() + "'");
  }
  text += "e" + std::to_string(*e);
  return std::strtod(text.c_str(), nullptr);
}

double round_float(double x, const FloatEncodingConfig& cfg) { return decode_float(encode_float(x, cfg), cfg); }

std::vector<std::string> encode_sequence(const SequenceData& data, const EncodingConfig& cfg) {
  std::vector<std::string> out;
  const std::size_t len = length(data);
  std::visit(
      [&](const auto& tracks) {
        for (std::size_t t = 0; t < len; ++t) {
          for (const auto& track : tracks) {
            std::vector<std::string> tok;
            if constexpr (std::is_same_v<std::decay_t<decltype(track[t])>, BigInt>) {
              tok = encode_integer(track[t], cfg.integer);
            } else {
              tok = encode_float(track[t], cfg.real);
            }
            out.insert(out.end(), tok.begin(), tok.end());
          }
        }
      },
      data);
  return out;
}

SequenceData decode_sequence(std::span<const std::string> tokens, Mode mode, int dimensions, const EncodingConfig& cfg) {
  if (dimensions < 1) {
    throw EncodingError("dimension count must be >= 1");
  }
  const auto dims = static_cast<std::size_t>(dimensions);
  std::size_t count = 0;
  if (mode == Mode::integer) {
    IntTracks tracks(dims);
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t j = i + 1;
      while (j < tokens.size() && !is_sign(tokens[j])) {
        ++j;
      }
      tracks[count % dims].push_back(decode_integer(tokens.subspan(i, j - i), cfg.integer));
      ++count;
      i = j;
    }
    if (count % dims != 0) {
      throw EncodingError("number count is not a multiple of the dimension count");
    }
    return tracks;
  }
  const std::size_t width = float_width(cfg.real);
  if (tokens.size() % (width * dims) != 0) {
    throw EncodingError("token count does not match whole float terms");
  }
  RealTracks tracks(dims);
  for (std::size_t i = 0; i < tokens.size(); i += width) {
    tracks[count % dims].push_back(decode_float(tokens.subspan(i, width), cfg.real));
    ++count;
  }
  return tracks;
}

std::vector<std::string> encode_relation(const RecurrenceRelation& rel, const EncodingConfig& cfg) {
  std::vector<std::string> out;
  const bool real = rel.mode() == Mode::real;
  for (int d = 0; d < rel.dimension(); ++d) {
    if (d > 0) {
      out.emplace_back(kDelimiter);
    }
    for (const Node& node : rel.expression(d).nodes()) {
      if (const auto* op = std::get_if<Op>(&node)) {
        out.emplace_back(operator_spec(*op).name);
        continue;
      }
      const Leaf& leaf = std::get<Leaf>(node);
      if (leaf.kind == Leaf::Kind::integer && (leaf.integer < kConstantLow || leaf.integer > kConstantHigh)) {
        if (!real) {
          throw EncodingError("integer constant " + std::to_string(leaf.integer) + " outside the vocabulary");
        }
        auto tok = encode_float(static_cast<double>(leaf.integer), cfg.real);
        out.insert(out.end(), tok.begin(), tok.end());
      } else if (leaf.kind == Leaf::Kind::real) {
        auto tok = encode_float(leaf.real, cfg.real);
        out.insert(out.end(), tok.begin(), tok.end());
      } else if (leaf.kind == Leaf::Kind::term && leaf.offset > cfg.max_degree) {
        throw EncodingError("prior-term offset " + std::to_string(leaf.offset) + " outside the vocabulary");
      } else {
        out.push_back(leaf_symbol(leaf));
      }
    }
  }
  return out;
}

RecurrenceRelation decode_relation(std::span<const std::string> tokens, Mode mode, const EncodingConfig& cfg) {
  using R = InvalidExpression::Reason;
  std::vector<Expression> exprs;
  std::vector<std::string> current;
  const std::size_t width = float_width(cfg.real);
  auto flush = [&] {
    if (current.empty()) {
      throw InvalidExpression(R::empty, "empty dimension");
    }
    exprs.push_back(parse_prefix(current, mode));
    current.clear();
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == kDelimiter) {
      flush();
      continue;
    }
    if (mode == Mode::real && is_sign(tokens[i])) {
      if (i + width > tokens.size()) {
        throw InvalidExpression(R::truncated, "incomplete number literal");
      }
      try {
        current.push_back(real_literal(decode_float(tokens.subspan(i, width), cfg.real)));
      } catch (const EncodingError& err) {
        throw InvalidExpression(R::unknown_symbol, err.what());
      }
      i += width - 1;
      continue;
    }
    current.push_back(tokens[i]);
  }
  flush();
  if (exprs.size() > static_cast<std::size_t>(kMaxDimensions)) {
    throw InvalidExpression(R::bad_dimension, "too many dimensions");
  }
  return RecurrenceRelation(mode, std::move(exprs));
}

Vocabulary::Vocabulary(const EncodingConfig& cfg) {
  cfg.validate();
  tokens_ = {std::string(kPad), std::string(kBos), std::string(kEos), std::string(kDelimiter), "+", "-"};
  for (const auto& spec : all_operators()) {
    tokens_.emplace_back(spec.name);
  }
  tokens_.emplace_back("n");
  for (int d = 0; d < kMaxDimensions; ++d) {
    for (int i = 1; i <= cfg.max_degree; ++i) {
      tokens_.push_back(term_symbol(d, i));
    }
  }
  tokens_.emplace_back("xi");
  for (int c = kConstantLow; c < 0; ++c) {
    tokens_.push_back(std::to_string(c));
  }
  for (auto c : {NamedConstant::e, NamedConstant::pi, NamedConstant::euler_gamma}) {
    tokens_.emplace_back(constant_symbol(c));
  }
  const int digits = std::max({cfg.integer.base, 10000, kConstantHigh + 1});
  for (int d = 0; d < digits; ++d) {
    tokens_.push_back(std::to_string(d));
  }
  for (int e = cfg.real.min_exponent; e <= cfg.real.max_exponent; ++e) {
    tokens_.push_back(exponent_token(e));
  }
  index();
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) { index(); }

void Vocabulary::index() {
  ids_.clear();
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw EncodingError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  auto special = [&](std::string_view t) { return find(t).value_or(-1); };
  pad_ = special(kPad);
  bos_ = special(kBos);
  eos_ = special(kEos);
  del_ = special(kDelimiter);
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) {
    return std::nullopt;
  }
  return it->second;
}

int Vocabulary::id(std::string_view token) const {
  auto v = find(token);
  if (!v) {
    throw EncodingError("token '" + std::string(token) + "' not in vocabulary");
  }
  return *v;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw EncodingError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::to_ids(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    out.push_back(id(t));
  }
  return out;
}

std::vector<std::string> Vocabulary::to_tokens(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) {
    out.push_back(token(i));
  }
  return out;
}

std::string Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h = (h ^ c) * 0x100000001b3ULL;
    }
    h = (h ^ static_cast<unsigned char>('\n')) * 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Vocabulary::save_manifest(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "recur-vocabulary";
  j["version"] = 1;
  j["hash"] = hash();
  j["tokens"] = tokens_;
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

Vocabulary Vocabulary::load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "recur-vocabulary" || j.value("version", 0) != 1) {
    throw EncodingError("unsupported vocabulary manifest " + path.string());
  }
  Vocabulary vocab(j.at("tokens").get<std::vector<std::string>>());
  if (vocab.hash() != j.at("hash").get<std::string>()) {
    throw EncodingError("vocabulary manifest hash mismatch in " + path.string());
  }
  return vocab;
}

std::vector<std::string> relation_output_tokens(Mode mode, const EncodingConfig& cfg, int dimensions,
                                                bool real_literals) {
  std::vector<std::string> out{std::string(kEos)};
  if (dimensions > 1) {
    out.emplace_back(kDelimiter);
  }
  for (const auto& spec : all_operators()) {
    if (allowed_in(spec.op, mode)) {
      out.emplace_back(spec.name);
    }
  }
  out.emplace_back("n");
  for (int d = 0; d < dimensions; ++d) {
    for (int i = 1; i <= cfg.max_degree; ++i) {
      out.push_back(term_symbol(d, i));
    }
  }
  for (int c = kConstantLow; c <= kConstantHigh; ++c) {
    out.push_back(std::to_string(c));
  }
  if (mode == Mode::real) {
    out.emplace_back("xi");
    for (auto c : {NamedConstant::e, NamedConstant::pi, NamedConstant::euler_gamma}) {
      out.emplace_back(constant_symbol(c));
    }
    if (real_literals) {
      out.emplace_back("+");
      out.emplace_back("-");
      for (int d = kConstantHigh + 1; d < 10000; ++d) {
        out.push_back(std::to_string(d));
      }
      for (int e = cfg.real.min_exponent; e <= cfg.real.max_exponent; ++e) {
        out.push_back(exponent_token(e));
      }
    }
  }
  return out;
}

std::vector<std::string> number_output_tokens(Mode mode, const EncodingConfig& cfg) {
  std::vector<std::string> out{std::string(kEos), "+", "-"};
  const int digits = mode == Mode::integer ? cfg.integer.base : 10000;
  for (int d = 0; d < digits; ++d) {
    out.push_back(std::to_string(d));
  }
  if (mode == Mode::real) {
    for (int e = cfg.real.min_exponent; e <= cfg.real.max_exponent; ++e) {
      out.push_back(exponent_token(e));
    }
  }
  return out;
}

}  // namespace recur

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recur/bigint.hpp"
#include "recur/expression.hpp"
#include "recur/sequence.hpp"

namespace recur {

struct IntegerEncodingConfig {
  int base = 10000;
};

struct FloatEncodingConfig {
  /// Mantissa tokens per number; each carries 4 significant digits.
  int mantissa_tokens = 1;
  int min_exponent = -100;
  int max_exponent = 100;

  int significant_digits() const { return 4 * mantissa_tokens; }
};

struct EncodingConfig {
  IntegerEncodingConfig integer;
  FloatEncodingConfig real;
  /// Deepest prior-term offset with a vocabulary symbol.
  int max_degree = 6;

  void validate() const;
};

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kPad = "PAD";
inline constexpr std::string_view kBos = "BOS";
inline constexpr std::string_view kEos = "EOS";
inline constexpr std::string_view kDelimiter = "del";
inline constexpr int kConstantLow = -10;
inline constexpr int kConstantHigh = 10;

/// Sign followed by base-b digits, most significant first. Zero is [+, 0].
std::vector<std::string> encode_integer(const BigInt& x, const IntegerEncodingConfig& cfg = {});
BigInt decode_integer(std::span<const std::string> tokens, const IntegerEncodingConfig& cfg = {});

/// Sign, mantissa tokens, exponent token with value = mantissa * 10^exponent.
/// The mantissa carries 4m significant digits rounded half-to-even from the
/// exact binary value. Zero is [+, 0, E0].
std::vector<std::string> encode_float(double x, const FloatEncodingConfig& cfg = {});
double decode_float(std::span<const std::string> tokens, const FloatEncodingConfig& cfg = {});
/// decode_float(encode_float(x)).
double round_float(double x, const FloatEncodingConfig& cfg = {});

/// Terms in order, dimensions interleaved: u_0, v_0, u_1, v_1, ...
std::vector<std::string> encode_sequence(const SequenceData& data, const EncodingConfig& cfg = {});
SequenceData decode_sequence(std::span<const std::string> tokens, Mode mode, int dimensions,
                             const EncodingConfig& cfg = {});

/// Prefix tokens per dimension joined by `del`. Real-valued literals (and, in
/// float mode, integers outside the constant pool) use the float number form.
std::vector<std::string> encode_relation(const RecurrenceRelation& rel, const EncodingConfig& cfg = {});
/// Throws InvalidExpression on malformed input.
RecurrenceRelation decode_relation(std::span<const std::string> tokens, Mode mode, const EncodingConfig& cfg = {});

/// Fixed token <-> id table.
class Vocabulary {
 public:
  explicit Vocabulary(const EncodingConfig& cfg = {});
  /// Arbitrary token list (manifest loading, tests).
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  /// Throws EncodingError for an unknown token.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  std::vector<int> to_ids(std::span<const std::string> tokens) const;
  std::vector<std::string> to_tokens(std::span<const int> ids) const;

  int pad() const { return pad_; }
  int bos() const { return bos_; }
  int eos() const { return eos_; }
  int delimiter() const { return del_; }

  /// FNV-1a over the newline-joined tokens, as 16 hex digits.
  std::string hash() const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save_manifest(const std::filesystem::path& path) const;
  static Vocabulary load_manifest(const std::filesystem::path& path);

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int pad_ = -1;
  int bos_ = -1;
  int eos_ = -1;
  int del_ = -1;
};

enum class TokenRole : std::uint8_t { number, sequence, relation };

struct TokenSequence {
  std::vector<int> ids;
  TokenRole role = TokenRole::sequence;
};

/// Tokens a decoder may emit for relations of `mode` (EOS included).
/// `real_literals` adds the float number form used by real-valued prefactors.
std::vector<std::string> relation_output_tokens(Mode mode, const EncodingConfig& cfg = {}, int dimensions = 1,
                                                bool real_literals = false);
/// Tokens a decoder may emit for numbers of `mode` (EOS included).
std::vector<std::string> number_output_tokens(Mode mode, const EncodingConfig& cfg = {});

}  // namespace recur

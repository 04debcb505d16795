#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "recur/encoding.hpp"
#include "recur/generator.hpp"

using namespace recur;

using Tokens = std::vector<std::string>;

TEST_SUITE("encoding") {

TEST_CASE("integer examples") {
  CHECK(encode_integer(-325, {10}) == Tokens{"-", "3", "2", "5"});
  CHECK(encode_integer(-325, {30}) == Tokens{"-", "10", "25"});
  CHECK(encode_integer(0) == Tokens{"+", "0"});
  CHECK(encode_integer(10000) == Tokens{"+", "1", "0"});
  CHECK(encode_integer(9999) == Tokens{"+", "9999"});
  CHECK(decode_integer(Tokens{"-", "10", "25"}, {30}) == -325);
  CHECK(decode_integer(Tokens{"+", "0"}) == 0);
}

TEST_CASE("integer decode rejects malformed streams") {
  CHECK_THROWS_AS(decode_integer(Tokens{"+"}), EncodingError);
  CHECK_THROWS_AS(decode_integer(Tokens{"3"}), EncodingError);
  CHECK_THROWS_AS(decode_integer(Tokens{"+", "0", "1"}), EncodingError);
  CHECK_THROWS_AS(decode_integer(Tokens{"-", "0"}), EncodingError);
  CHECK_THROWS_AS(decode_integer(Tokens{"+", "10"}, {10}), EncodingError);
  CHECK_THROWS_AS(decode_integer(Tokens{"+", "E3"}), EncodingError);
  CHECK_THROWS_AS(encode_integer(magnitude_limit() + 1), EncodingError);
}

TEST_CASE("integer round trip and length bound") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> digits(1, 100);
  std::uniform_int_distribution<int> digit(0, 9);
  for (int i = 0; i < 20000; ++i) {
    std::string text(rng() % 2 ? "-" : "");
    const int len = digits(rng);
    text += static_cast<char>('1' + digit(rng) % 9);
    for (int k = 1; k < len; ++k) {
      text += static_cast<char>('0' + digit(rng));
    }
    const BigInt x = *parse_bigint(text);
    auto tokens = encode_integer(x);
    CHECK(tokens.size() <= 26);
    CHECK(decode_integer(tokens) == x);
  }
  // 10^100 itself is the one admissible value needing a 26th digit.
  CHECK(encode_integer(magnitude_limit() - 1).size() == 26);
  auto edge = encode_integer(magnitude_limit());
  CHECK(edge.size() == 27);
  CHECK(decode_integer(edge) == magnitude_limit());
  CHECK(decode_integer(encode_integer(-magnitude_limit())) == -magnitude_limit());
}

TEST_CASE("float examples") {
  CHECK(encode_float(1.0 / 3.0) == Tokens{"+", "3333", "E-4"});
  CHECK(encode_float(M_PI) == Tokens{"+", "3142", "E-3"});
  CHECK(encode_float(0.0) == Tokens{"+", "0", "E0"});
  CHECK(encode_float(-0.0) == Tokens{"+", "0", "E0"});
  CHECK(encode_float(-2.5) == Tokens{"-", "2500", "E-3"});
  CHECK(encode_float(M_PI, {2}) == Tokens{"+", "3141", "5927", "E-7"});
  CHECK(encode_float(0.0, {2}) == Tokens{"+", "0", "0", "E0"});
  CHECK(decode_float(Tokens{"+", "3333", "E-4"}) == doctest::Approx(0.3333).epsilon(1e-15));
  CHECK(decode_float(Tokens{"+", "3141", "593", "E-7"}, {2}) == 3.1410593);
}

TEST_CASE("float rounding is half-to-even on exact ties") {
  CHECK(encode_float(12345.0) == Tokens{"+", "1234", "E1"});
  CHECK(encode_float(12355.0) == Tokens{"+", "1236", "E1"});
  CHECK(encode_float(12365.0) == Tokens{"+", "1236", "E1"});
  CHECK(encode_float(99995.0) == Tokens{"+", "1000", "E2"});
  CHECK(encode_float(0.99995) == Tokens{"+", "1000", "E-3"});
}

TEST_CASE("float range") {
  CHECK_THROWS_AS(encode_float(1e-120), EncodingError);
  CHECK_THROWS_AS(encode_float(std::nan("")), EncodingError);
  CHECK_NOTHROW(encode_float(9.99e102));
  CHECK_THROWS_AS(encode_float(1e104), EncodingError);
  CHECK_THROWS_AS(decode_float(Tokens{"+", "1", "E101"}), EncodingError);
  CHECK_THROWS_AS(decode_float(Tokens{"+", "1"}), EncodingError);
}

TEST_CASE("float round trip precision") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-90, 90);
  for (int m = 1; m <= 2; ++m) {
    FloatEncodingConfig cfg{m};
    const double bound = std::pow(10.0, 1 - 4 * m);
    for (int i = 0; i < 20000; ++i) {
      const double x = mant(rng) * std::pow(10.0, expo(rng));
      if (x == 0) {
        continue;
      }
      const double y = decode_float(encode_float(x, cfg), cfg);
      CHECK(std::fabs(y - x) / std::fabs(x) <= bound);
      CHECK(encode_float(y, cfg) == encode_float(x, cfg));
    }
  }
}

TEST_CASE("sequences") {
  CHECK(encode_sequence(single(std::vector<BigInt>{1, 2, 4})) == Tokens{"+", "1", "+", "2", "+", "4"});
  IntTracks two{{1, 2}, {-3, 40000}};
  auto tokens = encode_sequence(two);
  CHECK(tokens == Tokens{"+", "1", "-", "3", "+", "2", "+", "4", "0"});
  CHECK(decode_sequence(tokens, Mode::integer, 2) == SequenceData(two));
  CHECK_THROWS_AS(decode_sequence(tokens, Mode::integer, 3), EncodingError);

  RealTracks reals{{0.5, -1.25, 1e-3}};
  auto rt = encode_sequence(reals);
  CHECK(rt.size() == 9);
  CHECK(decode_sequence(rt, Mode::real, 1) == SequenceData(reals));
}

TEST_CASE("relations") {
  auto cosine = parse_relation("cos mul 3 n", Mode::real);
  CHECK(encode_relation(cosine) == Tokens{"cos", "mul", "3", "n"});
  auto sys = parse_relation("add v1 1 | mul u1 2", Mode::integer);
  auto tokens = encode_relation(sys);
  CHECK(tokens == Tokens{"add", "v1", "1", "del", "mul", "u1", "2"});
  CHECK(decode_relation(tokens, Mode::integer) == sys);

  auto real = parse_relation("mul 2.5 n", Mode::real);
  auto rt = encode_relation(real);
  CHECK(rt == Tokens{"mul", "+", "2500", "E-3", "n"});
  CHECK(decode_relation(rt, Mode::real) == real);

  CHECK_THROWS_AS(encode_relation(parse_relation("add n 11", Mode::integer)), EncodingError);
  CHECK(encode_relation(parse_relation("add n 11", Mode::real)) == Tokens{"add", "n", "+", "1100", "E-2"});

  CHECK_THROWS_AS(decode_relation(Tokens{"add", "1", "mul", "2"}, Mode::integer), InvalidExpression);
  CHECK_THROWS_AS(decode_relation(Tokens{"add", "n", "1", "del"}, Mode::integer), InvalidExpression);
  CHECK_THROWS_AS(decode_relation(Tokens{"mul", "+", "25"}, Mode::real), InvalidExpression);
  CHECK_THROWS_AS(decode_relation(Tokens{"EOS"}, Mode::integer), InvalidExpression);
}

TEST_CASE("vocabulary") {
  Vocabulary vocab;
  CHECK(vocab.size() > 10000);
  CHECK(vocab.size() < 20000);
  CHECK(vocab.token(vocab.pad()) == "PAD");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    CHECK(vocab.id(vocab.token(static_cast<int>(i))) == static_cast<int>(i));
  }
  CHECK(Vocabulary().hash() == vocab.hash());
  EncodingConfig other;
  other.real.mantissa_tokens = 2;
  CHECK(Vocabulary(other).hash() == vocab.hash());
  other.max_degree = 7;
  CHECK(Vocabulary(other).hash() != vocab.hash());

  const auto path = std::filesystem::temp_directory_path() / "recur_vocab_test.json";
  vocab.save_manifest(path);
  auto loaded = Vocabulary::load_manifest(path);
  CHECK(loaded.tokens() == vocab.tokens());
  std::filesystem::remove(path);
}

TEST_CASE("generated data stays in vocabulary") {
  Vocabulary vocab;
  for (Mode mode : {Mode::integer, Mode::real}) {
    GeneratorConfig cfg;
    cfg.mode = mode;
    cfg.dimensions = mode == Mode::integer ? 1 : 2;
    cfg.max_ops = 6;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
      auto s = generate_sample(cfg, seed);
      std::vector<std::string> tokens;
      try {
        tokens = encode_sequence(s.terms);
      } catch (const EncodingError&) {
        continue;  // float terms outside the exponent range
      }
      for (const auto& t : tokens) {
        CHECK(vocab.contains(t));
      }
      auto rel = encode_relation(s.relation);
      for (const auto& t : rel) {
        CHECK(vocab.contains(t));
      }
      CHECK(decode_relation(rel, mode) == s.relation);
    }
  }
}

TEST_CASE("output subsets") {
  Vocabulary vocab;
  for (Mode mode : {Mode::integer, Mode::real}) {
    for (const auto& t : relation_output_tokens(mode, {}, 3, true)) {
      CHECK(vocab.contains(t));
    }
    for (const auto& t : number_output_tokens(mode)) {
      CHECK(vocab.contains(t));
    }
  }
  CHECK(relation_output_tokens(Mode::integer).size() == 1 + 9 + 1 + 6 + 21);
}

}  // TEST_SUITE

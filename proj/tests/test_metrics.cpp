#include "doctest.h"

#include <cmath>
#include <random>

#include "recur/metrics.hpp"

using namespace recur;

TEST_SUITE("metrics") {

TEST_CASE("accuracy examples") {
  const std::vector<double> truth{1.0, 2.0, 4.0};
  CHECK(accuracy_one(truth, truth, 0.0) == 1);
  const double tau = 1e-3;
  CHECK(accuracy_one(std::vector<double>{1.0, 2.0 * (1 + 2 * tau), 4.0}, truth, tau) == 0);
  // Relative error exactly tau: 1.5 vs 1.0 with tau = 0.5 is representable exactly.
  CHECK(accuracy_one(std::vector<double>{1.5, 3.0, 6.0}, truth, 0.5) == 1);
  CHECK(accuracy_one(std::vector<double>{1.5, 3.0, 6.0}, truth, std::nextafter(0.5, 0.0)) == 0);
  CHECK(accuracy_one(std::vector<BigInt>{3, 0}, std::vector<BigInt>{3, 0}, 0.0) == 1);
  CHECK(accuracy_one(std::vector<double>{1.0, 2.0}, truth, 1.0) == 0);
}

TEST_CASE("zero truth falls back to absolute error") {
  CHECK(relative_error(0.05, 0.0) == doctest::Approx(0.05));
  CHECK(accuracy_one(std::vector<double>{1e-11}, std::vector<double>{0.0}, 1e-10) == 1);
  CHECK(accuracy_one(std::vector<double>{1e-9}, std::vector<double>{0.0}, 1e-10) == 0);
  CHECK(relative_error(BigInt(2), BigInt(0)) == 2.0);
}

TEST_CASE("non-finite predictions fail") {
  CHECK(accuracy_one(std::vector<double>{std::nan("")}, std::vector<double>{1.0}, 1e9) == 0);
  CHECK(accuracy_one(std::vector<double>{INFINITY}, std::vector<double>{1.0}, 1e9) == 0);
}

TEST_CASE("monotone in tau and n_pred") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> logtau(-12.0, 0.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> truth(10);
    std::vector<double> pred(10);
    for (int i = 0; i < 10; ++i) {
      truth[i] = unit(rng) * 100;
      pred[i] = truth[i] * (1 + std::pow(10.0, logtau(rng)) * unit(rng));
    }
    double t1 = std::pow(10.0, logtau(rng));
    double t2 = std::pow(10.0, logtau(rng));
    if (t1 > t2) {
      std::swap(t1, t2);
    }
    CHECK(accuracy_one(pred, truth, t1) <= accuracy_one(pred, truth, t2));
    const auto errors = term_errors(single(pred), single(truth));
    for (std::size_t k = 1; k < 10; ++k) {
      const bool long_ok = max_error_prefix(errors, k + 1) <= t1;
      const bool short_ok = max_error_prefix(errors, k) <= t1;
      CHECK((!long_ok || short_ok));
    }
  }
}

TEST_CASE("term errors") {
  auto e = term_errors(single(std::vector<BigInt>{1, 3}), single(std::vector<BigInt>{1, 2, 4}));
  CHECK(e.size() == 3);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.5);
  CHECK(std::isinf(e[2]));
  CHECK(std::isinf(max_error_prefix(e, 4)));
}

}  // TEST_SUITE

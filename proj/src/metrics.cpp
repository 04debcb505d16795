#include "recur/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recur {

double relative_error(const BigInt& pred, const BigInt& truth) {
  if (pred == truth) {
    return 0.0;
  }
  const double diff = to_double(boost::multiprecision::abs(BigInt(pred - truth)));
  if (truth.is_zero()) {
    return diff;
  }
  return diff / to_double(boost::multiprecision::abs(truth));
}

double relative_error(double pred, double truth) {
  if (pred == truth) {
    return 0.0;
  }
  if (!std::isfinite(pred)) {
    return kInfiniteError;
  }
  const double diff = std::fabs(pred - truth);
  return truth == 0 ? diff : diff / std::fabs(truth);
}

std::vector<double> term_errors(const SequenceData& pred, const SequenceData& truth) {
  const std::size_t n = length(truth);
  std::vector<double> out(n, 0.0);
  if (dimensions(pred) != dimensions(truth)) {
    std::fill(out.begin(), out.end(), kInfiniteError);
    return out;
  }
  auto fill = [&](const auto& p, const auto& t) {
    for (std::size_t d = 0; d < t.size(); ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        const double e = i < p[d].size() ? relative_error(p[d][i], t[d][i]) : kInfiniteError;
        out[i] = std::max(out[i], e);
      }
    }
  };
  if (data_mode(pred) == Mode::integer && data_mode(truth) == Mode::integer) {
    fill(std::get<IntTracks>(pred), std::get<IntTracks>(truth));
  } else {
    fill(to_real(pred), to_real(truth));
  }
  return out;
}

double max_error(const std::vector<double>& errors) {
  double m = 0.0;
  for (double e : errors) {
    if (std::isnan(e)) {
      return kInfiniteError;
    }
    m = std::max(m, e);
  }
  return m;
}

double max_error_prefix(const std::vector<double>& errors, std::size_t count) {
  if (errors.size() < count) {
    return kInfiniteError;
  }
  return max_error(std::vector<double>(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(count)));
}

namespace {

template <class T>
int accuracy_impl(const std::vector<T>& pred, const std::vector<T>& truth, double tau) {
  if (tau < 0) {
    throw std::invalid_argument("tolerance must be >= 0");
  }
  if (pred.size() != truth.size()) {
    return 0;
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(relative_error(pred[i], truth[i]) <= tau)) {
      return 0;
    }
  }
  return 1;
}

}  // namespace

int accuracy_one(const std::vector<BigInt>& pred, const std::vector<BigInt>& truth, double tau) {
  return accuracy_impl(pred, truth, tau);
}

int accuracy_one(const std::vector<double>& pred, const std::vector<double>& truth, double tau) {
  return accuracy_impl(pred, truth, tau);
}

int accuracy_one(const SequenceData& pred, const SequenceData& truth, double tau) {
  if (tau < 0) {
    throw std::invalid_argument("tolerance must be >= 0");
  }
  if (length(pred) != length(truth)) {
    return 0;
  }
  return max_error(term_errors(pred, truth)) <= tau ? 1 : 0;
}

}  // namespace recur

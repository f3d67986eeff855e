#pragma once

#include <cmath>
#include <vector>

#include "eulerlu/common.hpp"

namespace eulerlu {

// Fenwick tree over nonnegative weights: draw index k with probability
// w(k) / total and lower single weights, both in O(log n).
class WeightedSampler {
 public:
  WeightedSampler() = default;

  explicit WeightedSampler(const std::vector<double>& weights) { assign(weights); }

  void assign(const std::vector<double>& weights) {
    n_ = weights.size();
    weights_ = weights;
    tree_.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
        fail(ErrorKind::InvariantViolation, "sampler weights must be finite and nonnegative");
      }
      tree_[i + 1] += weights[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent <= n_) tree_[parent] += tree_[i + 1];
    }
    total_ = 0.0;
    for (double w : weights) total_ += w;
    top_ = 1;
    while (top_ * 2 <= n_) top_ *= 2;
  }

  std::size_t size() const { return n_; }
  double total() const { return total_; }
  double weight(std::size_t k) const { return weights_[k]; }

  /// Sets weight k to max(0, w(k) - amount).
  void decrease(std::size_t k, double amount) {
    const double next = weights_[k] - amount;
    set(k, next > 0.0 ? next : 0.0);
  }

  void set(std::size_t k, double value) {
    if (k >= n_) fail(ErrorKind::IndexOutOfRange, "sampler index");
    const double delta = value - weights_[k];
    weights_[k] = value;
    total_ += delta;
    for (std::size_t i = k + 1; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
  }

  /// Index k with probability w(k) / total. Never returns a zero weight.
  std::size_t sample(Rng& rng) const {
    if (!(total_ > 0.0)) fail(ErrorKind::EmptyDistribution, "sampling from an empty distribution");
    double target = rng.uniform() * total_;
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      if (pos + step <= n_ && tree_[pos + step] <= target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    // pos is the 0-based index; accumulated rounding can land on a zero
    // weight or run off the end, so fall back to a nonzero neighbour.
    if (pos < n_ && weights_[pos] > 0.0) return pos;
    for (std::size_t k = std::min(pos, n_ - 1) + 1; k-- > 0;) {
      if (weights_[k] > 0.0) return k;
    }
    for (std::size_t k = pos; k < n_; ++k) {
      if (weights_[k] > 0.0) return k;
    }
    fail(ErrorKind::EmptyDistribution, "all weights are zero");
  }

 private:
  std::size_t n_ = 0;
  std::size_t top_ = 1;
  double total_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> tree_;
};

}  // namespace eulerlu

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sdds {

/// A probability vector over the micro-states of a StateSpace (or over the
/// four macro-states after aggregation).  Construction validates and
/// normalizes representation noise: entries in [-1e-12, 0) are clamped to
/// exactly 0, anything more negative or a total mass off by more than 1e-10
/// is rejected.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("Distribution: empty vector");
    double sum = 0.0;
    for (double& v : p_) {
      if (!std::isfinite(v)) throw std::invalid_argument("Distribution: non-finite entry");
      if (v < 0.0) {
        if (v < -1e-12) throw std::invalid_argument("Distribution: negative entry below -1e-12");
        v = 0.0;
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10)
      throw std::invalid_argument("Distribution: probabilities do not sum to 1 within 1e-10");
  }

  static Distribution point_mass(std::size_t size, std::size_t index) {
    std::vector<double> v(size, 0.0);
    v.at(index) = 1.0;
    return Distribution(std::move(v));
  }

  double operator[](std::size_t i) const { return p_.at(i); }
  std::size_t size() const { return p_.size(); }
  const std::vector<double>& values() const { return p_; }

  double sum() const {
    double s = 0.0;
    for (double v : p_) s += v;
    return s;
  }

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> p_;
};

}  // namespace sdds

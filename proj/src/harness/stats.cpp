#include "gems/harness/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gems::harness {

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("sample_mean: no samples");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

ConfidenceInterval confidence_interval(std::span<const double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("confidence_interval: no samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence_interval: level must be in (0, 1)");
  ConfidenceInterval ci;
  ci.mean = sample_mean(samples);
  if (samples.size() < 2) return ci;
  const auto n = static_cast<double>(samples.size());
  const double t = boost::math::quantile(boost::math::students_t(n - 1.0), 0.5 + level / 2.0);
  ci.half_width = t * std::sqrt(sample_variance(samples) / n);
  return ci;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: need at least two samples each");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  const double diff = sample_mean(a) - sample_mean(b);
  WelchResult r;
  if (va + vb == 0.0) {
    r.dof = na + nb - 2.0;
    if (diff == 0.0) return r;
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(r.dof), std::abs(r.t)));
  return r;
}

}  // namespace gems::harness

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include "rabf/errors.hpp"

namespace rabf {

namespace detail {

inline double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace detail

/// CDF of the per-device normalized MSE 1/(P |m^H h|^2) under CN(0,1)
/// equivalent channels: exp(-1/(P y)) for y > 0, else 0.
inline double device_mse_cdf(double y, double power) {
  if (!(power > 0.0)) throw ConfigError("device_mse_cdf: power must be positive");
  if (!(y > 0.0)) return 0.0;
  return std::exp(-1.0 / (power * y));
}

/// Density of the per-device normalized MSE: exp(-1/(P y)) / (P y^2), y > 0.
inline double device_mse_pdf(double y, double power) {
  if (!(power > 0.0)) throw ConfigError("device_mse_pdf: power must be positive");
  if (!(y > 0.0)) throw std::domain_error("device_mse_pdf: y must be positive");
  return std::exp(-1.0 / (power * y)) / (power * y * y);
}

/// Quantile of the per-device normalized MSE: -1/(P ln q) for q in (0,1).
inline double device_mse_quantile(double q, double power) {
  if (!(power > 0.0)) throw ConfigError("device_mse_quantile: power must be positive");
  if (!(q > 0.0) || !(q < 1.0))
    throw std::domain_error("device_mse_quantile: q must lie in (0,1)");
  return -1.0 / (power * std::log(q));
}

/// CDF of the achieved MSE/sigma^2 when the S best of K devices are kept:
/// the S-th order statistic of K i.i.d. per-device MSEs. Evaluated as a
/// binomial upper tail in log space, so K up to 1e5 stays exact; far tails
/// short-circuit to 0/1 once the neglected mass is below ~1e-15.
inline double objective_mse_cdf(double x, std::size_t devices, std::size_t selected,
                                double power) {
  if (!(power > 0.0)) throw ConfigError("objective_mse_cdf: power must be positive");
  if (selected == 0 || selected > devices)
    throw ConfigError("objective_mse_cdf: need 1 <= S <= K");
  if (!(x > 0.0)) throw std::domain_error("objective_mse_cdf: x must be positive");

  const double log_p = -1.0 / (power * x);
  const double p = std::exp(log_p);
  if (p >= 1.0) return 1.0;

  const double k = static_cast<double>(devices);
  const double s_max = static_cast<double>(selected - 1);  // top of the lower tail
  const double mean = k * p;
  const double margin = 50.0 * std::sqrt(k);
  if (s_max >= mean + margin) return 0.0;
  if (mean - static_cast<double>(selected) >= margin) return 1.0;

  const double log_q = std::log1p(-p);
  double lower_tail = 0.0;
  for (std::size_t s = 0; s < selected; ++s) {
    const double sd = static_cast<double>(s);
    lower_tail += std::exp(detail::log_choose(devices, s) + sd * log_p +
                           (k - sd) * log_q);
  }
  if (lower_tail > 1.0) lower_tail = 1.0;
  return 1.0 - lower_tail;
}

struct MseMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Large-K normal approximation of the achieved MSE/sigma^2 at quantile
/// q = S/K: mean -1/(P ln q), variance (1-q) / (K P^2 q (ln q)^4).
inline MseMoments asymptotic_mse_moments(std::size_t devices, std::size_t selected,
                                         double power) {
  if (!(power > 0.0))
    throw ConfigError("asymptotic_mse_moments: power must be positive");
  if (selected == 0 || selected >= devices)
    throw std::domain_error("asymptotic_mse_moments: need 0 < S < K");
  const double k = static_cast<double>(devices);
  const double q = static_cast<double>(selected) / k;
  const double lq = std::log(q);
  MseMoments out;
  out.mean = -1.0 / (power * lq);
  out.variance = (1.0 - q) / (k * power * power * q * lq * lq * lq * lq);
  return out;
}

/// PMF of the number of devices passing an MSE cap: Binomial(K, p) with
/// p = exp(-1/(P x)), evaluated in log space.
inline double selected_count_pmf(std::size_t count, std::size_t devices, double max_mse,
                                 double power) {
  if (!(power > 0.0)) throw ConfigError("selected_count_pmf: power must be positive");
  if (!(max_mse > 0.0)) throw ConfigError("selected_count_pmf: cap must be positive");
  if (count > devices)
    throw std::domain_error("selected_count_pmf: count exceeds device total");

  const double log_p = -1.0 / (power * max_mse);
  const double p = std::exp(log_p);
  if (p >= 1.0) return count == devices ? 1.0 : 0.0;

  const double k = static_cast<double>(devices);
  const double c = static_cast<double>(count);
  return std::exp(detail::log_choose(devices, count) + c * log_p +
                  (k - c) * std::log1p(-p));
}

/// Expectation and approximate 3-sigma count interval for threshold
/// selection. The sigma lives in threshold space; when the lower endpoint
/// x - 3 sigma is not positive the interval is degenerate and only the
/// expectation is reported.
struct CountStats {
  double expectation = 0.0;
  double sigma = 0.0;
  std::optional<double> min_count;
  std::optional<double> max_count;
};

inline CountStats selected_count_stats(std::size_t devices, double max_mse,
                                       double power) {
  if (!(power > 0.0)) throw ConfigError("selected_count_stats: power must be positive");
  if (!(max_mse > 0.0)) throw ConfigError("selected_count_stats: cap must be positive");

  const double k = static_cast<double>(devices);
  const double inv = 1.0 / (power * max_mse);
  const double p = std::exp(-inv);

  CountStats out;
  out.expectation = k * p;
  out.sigma = std::sqrt((1.0 - p) / (k * power * power * p * inv * inv * inv * inv));
  const double lo = max_mse - 3.0 * out.sigma;
  if (lo > 0.0) {
    out.min_count = k * std::exp(-1.0 / (power * lo));
    out.max_count = k * std::exp(-1.0 / (power * (max_mse + 3.0 * out.sigma)));
  }
  return out;
}

/// Probability that at least one of n independent draws succeeds when a
/// single draw succeeds with probability p: 1 - (1-p)^n, computed stably for
/// tiny p.
inline double refinement_success_probability(double p_single, std::size_t draws) {
  if (!(p_single >= 0.0) || !(p_single <= 1.0))
    throw ConfigError("refinement_success_probability: p must lie in [0,1]");
  if (draws == 0) throw ConfigError("refinement_success_probability: draws must be >= 1");
  if (p_single >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(draws) * std::log1p(-p_single));
}

/// Model-retransmission probability 1 - exp(-a * MSE/sigma^2).
inline double retransmission_probability(double mse_over_sigma2, double rate) {
  if (!(mse_over_sigma2 >= 0.0))
    throw ConfigError("retransmission_probability: MSE must be nonnegative");
  if (!(rate > 0.0)) throw ConfigError("retransmission_probability: rate must be positive");
  return -std::expm1(-rate * mse_over_sigma2);
}

}  // namespace rabf

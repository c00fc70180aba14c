// Market-side event detection. A window is pump-and-dump shaped when some
// event day pushes both the daily average price and the volume strictly above
// two baseline standard deviations over their five-day baseline means, and the
// normalized rising slope stays at or below the configured threshold (steep
// rises look like genuine news, not a pump).
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pumpscan/records.hpp"
#include "pumpscan/util.hpp"

namespace pumpscan {

constexpr double kDefaultSigmaMultiplier = 2.0;
constexpr double kDefaultSlopeThreshold = 0.18;

// Daily average price: mean of the bar's open, high, low and close.
inline double dap(const OhlcvBar& bar) {
  return (bar.open + bar.high + bar.low + bar.close) / 4.0;
}

// Baseline (estimation-window) means and population standard deviations of
// the five daily average prices and the five volumes.
struct BaselineStats {
  double bap = 0;
  double bav = 0;
  double sigma_price = 0;
  double sigma_volume = 0;
};

namespace detail {

inline double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Population standard deviation: the window is the whole population of
// baseline days, so the divisor is n, not n-1.
inline double population_std(const std::vector<double>& xs, double mu) {
  double s = 0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace detail

inline BaselineStats baseline_stats(const EventWindow& window) {
  if (window.baseline.size() != 5)
    throw std::invalid_argument("baseline must hold exactly 5 bars");
  std::vector<double> daps, vols;
  daps.reserve(5);
  vols.reserve(5);
  for (const auto& b : window.baseline) {
    daps.push_back(dap(b));
    vols.push_back(static_cast<double>(b.volume));
  }
  BaselineStats s;
  s.bap = detail::mean(daps);
  s.bav = detail::mean(vols);
  s.sigma_price = detail::population_std(daps, s.bap);
  s.sigma_volume = detail::population_std(vols, s.bav);
  return s;
}

struct AnomalyVerdict {
  bool price_anomaly = false;
  bool volume_anomaly = false;
  std::optional<double> slope;  // set only when both anomalies hold
  bool is_pnd_shape = false;
};

// Strict exceedance tests against mean + multiplier * sigma. A zero-variance
// baseline therefore flags any strict rise, which is the typical flat
// penny-stock profile.
inline AnomalyVerdict detect_anomaly(const EventWindow& window, const BaselineStats& stats,
                                     double sigma_multiplier = kDefaultSigmaMultiplier) {
  AnomalyVerdict v;
  const double price_threshold = stats.bap + sigma_multiplier * stats.sigma_price;
  const double volume_threshold = stats.bav + sigma_multiplier * stats.sigma_volume;
  for (const auto& b : window.event) {
    if (dap(b) > price_threshold) v.price_anomaly = true;
    if (static_cast<double>(b.volume) > volume_threshold) v.volume_anomaly = true;
  }
  return v;
}

// Least-squares slope of the rising region (first event day through the first
// peak-price day), with both axes min-max normalized to [0, 1]. A two-point
// region is exactly 1. Degenerate regions (single point, or constant price)
// have no rise to measure and report 0.
inline double rising_slope(const std::vector<double>& event_prices) {
  if (event_prices.size() < 2)
    throw std::invalid_argument("rising_slope needs at least 2 points");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < event_prices.size(); ++i)
    if (event_prices[i] > event_prices[peak]) peak = i;
  const std::size_t n = peak + 1;
  if (n < 2) return 0.0;
  double lo = event_prices[0], hi = event_prices[0];
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::min(lo, event_prices[i]);
    hi = std::max(hi, event_prices[i]);
  }
  if (hi == lo) return 0.0;

  double sxy = 0, sxx = 0;
  const double xbar = 0.5;  // mean of equally spaced points on [0, 1]
  double ybar = 0;
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = (event_prices[i] - lo) / (hi - lo);
    ybar += ys[i];
  }
  ybar /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    sxy += (x - xbar) * (ys[i] - ybar);
    sxx += (x - xbar) * (x - xbar);
  }
  return sxy / sxx;
}

// Statistical median; mean of the middle two for even counts.
inline double median_slope(std::vector<double> slopes) {
  if (slopes.empty()) throw std::invalid_argument("median of empty list");
  std::sort(slopes.begin(), slopes.end());
  const std::size_t n = slopes.size();
  if (n % 2 == 1) return slopes[n / 2];
  return (slopes[n / 2 - 1] + slopes[n / 2]) / 2.0;
}

inline std::vector<double> event_daps(const EventWindow& window) {
  std::vector<double> prices;
  prices.reserve(window.event.size());
  for (const auto& b : window.event) prices.push_back(dap(b));
  return prices;
}

inline AnomalyVerdict classify_window(const EventWindow& window,
                                      double slope_threshold = kDefaultSlopeThreshold,
                                      double sigma_multiplier = kDefaultSigmaMultiplier) {
  const BaselineStats stats = baseline_stats(window);
  AnomalyVerdict v = detect_anomaly(window, stats, sigma_multiplier);
  if (v.price_anomaly && v.volume_anomaly) {
    const auto prices = event_daps(window);
    v.slope = prices.size() >= 2 ? rising_slope(prices) : 0.0;
    v.is_pnd_shape = *v.slope <= slope_threshold;
  }
  return v;
}

// One row of the verdict report. The slope column is empty unless both
// anomalies held.
struct VerdictRow {
  std::string post_id;
  std::string symbol;
  BaselineStats stats;
  AnomalyVerdict verdict;
};

inline void write_verdicts(std::ostream& out, const std::vector<VerdictRow>& rows) {
  out << "post_id,symbol,bap,bav,sigma_price,sigma_volume,price_anomaly,volume_anomaly,slope,"
         "is_pnd_shape\n";
  for (const auto& r : rows) {
    out << r.post_id << ',' << r.symbol << ',' << format_double(r.stats.bap) << ','
        << format_double(r.stats.bav) << ',' << format_double(r.stats.sigma_price) << ','
        << format_double(r.stats.sigma_volume) << ',' << (r.verdict.price_anomaly ? 1 : 0) << ','
        << (r.verdict.volume_anomaly ? 1 : 0) << ','
        << (r.verdict.slope ? format_double(*r.verdict.slope) : std::string()) << ','
        << (r.verdict.is_pnd_shape ? 1 : 0) << '\n';
  }
}

}  // namespace pumpscan

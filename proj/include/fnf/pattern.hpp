#pragma once

// Behavior-pattern vectors: mean events per time-of-day bucket per day.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fnf/core_model.hpp"

namespace fnf {

class PatternVector {
 public:
  PatternVector() = default;
  explicit PatternVector(std::size_t n, double fill = 0.0) : v_(n, fill) {}
  explicit PatternVector(std::vector<double> v) : v_(std::move(v)) {
    for (double x : v_)
      if (x < 0.0) throw DomainError("pattern vector entries must be non-negative");
  }

  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  const std::vector<double>& values() const noexcept { return v_; }
  std::span<const double> span() const noexcept { return v_; }

  double max() const { return v_.empty() ? 0.0 : *std::max_element(v_.begin(), v_.end()); }
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(v_.begin(), v_.end()) - v_.begin());
  }
  double sum() const { return std::accumulate(v_.begin(), v_.end(), 0.0); }

  friend bool operator==(const PatternVector&, const PatternVector&) = default;

 private:
  std::vector<double> v_;
};

inline std::int64_t day_of(Timestamp ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

inline std::size_t bucket_of(Timestamp ts, std::size_t n) {
  const auto tod = ts - day_of(ts) * kSecondsPerDay;
  return static_cast<std::size_t>(tod * static_cast<Timestamp>(n) / kSecondsPerDay);
}

// Per-day bucket counts, appended in time order.
class DailyCounts {
 public:
  explicit DailyCounts(std::size_t n = 24, std::int64_t first_day = 0) : n_(n), first_day_(first_day) {
    if (n == 0 || kSecondsPerDay % static_cast<Timestamp>(n) != 0)
      throw DomainError("bucket count must divide a day evenly");
  }

  void add(Timestamp ts, double weight = 1.0) {
    const auto day = day_of(ts);
    if (day < first_day_) throw OrderingError("event before the first tracked day");
    while (static_cast<std::int64_t>(days_.size()) <= day - first_day_) days_.emplace_back(n_, 0.0);
    days_[static_cast<std::size_t>(day - first_day_)][bucket_of(ts, n_)] += weight;
  }

  // Make sure every day up to (exclusive) `end_day` exists, even if empty.
  void extend_to(std::int64_t end_day) {
    while (first_day_ + static_cast<std::int64_t>(days_.size()) < end_day) days_.emplace_back(n_, 0.0);
  }

  // Mean over the `window` days ending before `end_day`. Days before the first
  // tracked day are not counted, so a short history averages what exists.
  PatternVector mean(std::int64_t end_day, std::optional<std::int64_t> window = std::nullopt) const {
    const std::int64_t lo = window ? std::max(first_day_, end_day - *window) : first_day_;
    const std::int64_t hi = end_day;
    PatternVector out(n_);
    if (hi <= lo) return out;
    for (std::int64_t d = lo; d < hi; ++d) {
      const auto idx = d - first_day_;
      if (idx < 0 || idx >= static_cast<std::int64_t>(days_.size())) continue;
      for (std::size_t i = 0; i < n_; ++i) out[i] += days_[static_cast<std::size_t>(idx)][i];
    }
    for (std::size_t i = 0; i < n_; ++i) out[i] /= static_cast<double>(hi - lo);
    return out;
  }

  std::vector<double> day(std::int64_t d) const {
    const auto idx = d - first_day_;
    if (idx < 0 || idx >= static_cast<std::int64_t>(days_.size())) return std::vector<double>(n_, 0.0);
    return days_[static_cast<std::size_t>(idx)];
  }

  std::size_t buckets() const noexcept { return n_; }
  std::int64_t first_day() const noexcept { return first_day_; }
  std::int64_t end_day() const noexcept { return first_day_ + static_cast<std::int64_t>(days_.size()); }

 private:
  std::size_t n_;
  std::int64_t first_day_;
  std::deque<std::vector<double>> days_;
};

// Bucket i = events in bucket i over the last `window_days` days / window_days.
// The window ends at `end_day` (exclusive), by default the day after the last
// event; an unset window covers everything from day 0.
inline PatternVector estimate_pattern(std::span<const Event> events, std::optional<std::int64_t> window_days,
                                      std::size_t n = 24, std::optional<std::int64_t> end_day = std::nullopt) {
  if (events.empty()) return PatternVector(n);
  std::int64_t last = 0;
  for (const auto& e : events) last = std::max(last, day_of(e.ts));
  const std::int64_t end = end_day.value_or(last + 1);
  const std::int64_t lo = window_days ? end - *window_days : 0;
  PatternVector out(n);
  for (const auto& e : events) {
    const auto d = day_of(e.ts);
    if (d >= lo && d < end) out[bucket_of(e.ts, n)] += 1.0;
  }
  const auto span_days = static_cast<double>(end - lo);
  if (span_days > 0)
    for (std::size_t i = 0; i < n; ++i) out[i] /= span_days;
  return out;
}

// One count vector per day in [first_day, first_day + days).
inline std::vector<std::vector<double>> daily_vectors(std::span<const Event> events, std::size_t n,
                                                      std::int64_t first_day, std::int64_t days) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(days), std::vector<double>(n, 0.0));
  for (const auto& e : events) {
    const auto d = day_of(e.ts) - first_day;
    if (d >= 0 && d < days) out[static_cast<std::size_t>(d)][bucket_of(e.ts, n)] += 1.0;
  }
  return out;
}

}  // namespace fnf

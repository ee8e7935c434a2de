#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hguide/records.hpp"
#include "hguide/trials.hpp"

namespace hguide {

// Linear interpolation between closest ranks on the sorted sample
// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

// Tukey fences: values outside [Q_L - 1.5 IQR, Q_u + 1.5 IQR] are outliers.
struct OutlierRule {
  double lower_quartile = 0.0;
  double upper_quartile = 0.0;
  double k = 1.5;

  double iqr() const { return upper_quartile - lower_quartile; }
  double lower_fence() const { return lower_quartile - k * iqr(); }
  double upper_fence() const { return upper_quartile + k * iqr(); }
  bool is_outlier(double v) const { return v > upper_fence() || v < lower_fence(); }

  // Throws EmptyInput.
  static OutlierRule fit(std::span<const double> sample, double k = 1.5);
};

// Indices into `sample` flagged by the rule fitted on the same sample.
std::vector<std::size_t> flag_outliers(std::span<const double> sample, double k = 1.5);

struct SummaryStats {
  std::size_t n = 0;          // all trials
  std::size_t n_success = 0;  // trials whose time enters mean/std
  std::optional<double> mean;  // s, over successful trials
  std::optional<double> std;   // s, sample (n-1) standard deviation
  double success_rate = 0.0;
  std::optional<OutlierRule> rule;
  std::vector<std::size_t> outlier_indices;  // indices into the outcome list
};

// Outliers are flagged, not removed: mean/std include them.
SummaryStats summarize(std::span<const TrialOutcome> outcomes);

struct AxisErrors {
  std::vector<double> x;
  std::vector<double> y;
};

// Signed final errors (position - endpoint) of successful trials.
AxisErrors positioning_error(std::span<const TrialOutcome> outcomes);

struct PathOptions {
  double resample_interval = 0.5;  // s
  double turn_threshold_deg = 60.0;
};

struct PathMetrics {
  double path_length = 0.0;
  double straightness = 1.0;  // path_length / chord_length
  int right_angle_turns = 0;
  double chord_length = 0.0;      // Euclidean start -> end
  double manhattan_length = 0.0;  // |dx| + |dy| start -> end
};

// Throws DegenerateTrace for fewer than two samples. A trace that never moves
// has straightness 1.
PathMetrics path_metrics(const TrialTrace& trace, const PathOptions& opts = {});

struct ReportRow {
  FeedbackMode mode = FeedbackMode::VB;
  std::string cohort;
  SummaryStats stats;
};

// One row per (mode, cohort), ordered by mode then cohort. Throws EmptyInput.
std::vector<ReportRow> build_report(std::span<const TrialRecord> records);

std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_json(const std::vector<ReportRow>& rows);
std::string path_metrics_csv(std::span<const TrialRecord> records, const PathOptions& opts = {});

}  // namespace hguide

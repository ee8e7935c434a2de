#include "hguide/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

#include "json.hpp"

#include "hguide/error.hpp"

namespace hguide {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

OutlierRule OutlierRule::fit(std::span<const double> sample, double k) {
  if (sample.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit quartiles to an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  return {quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.75), k};
}

std::vector<std::size_t> flag_outliers(std::span<const double> sample, double k) {
  const OutlierRule rule = OutlierRule::fit(sample, k);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (rule.is_outlier(sample[i])) out.push_back(i);
  }
  return out;
}

SummaryStats summarize(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyInput, "no outcomes to summarize");

  SummaryStats s;
  s.n = outcomes.size();
  std::vector<double> times;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].success) continue;
    times.push_back(outcomes[i].completion_time);
    where.push_back(i);
  }
  s.n_success = times.size();
  s.success_rate = static_cast<double>(s.n_success) / static_cast<double>(s.n);
  if (times.empty()) return s;

  const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  double ss = 0.0;
  for (double t : times) ss += (t - mean) * (t - mean);
  s.mean = mean;
  s.std = times.size() > 1 ? std::sqrt(ss / static_cast<double>(times.size() - 1)) : 0.0;

  s.rule = OutlierRule::fit(times);
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (s.rule->is_outlier(times[j])) s.outlier_indices.push_back(where[j]);
  }
  return s;
}

AxisErrors positioning_error(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyInput, "no outcomes");
  AxisErrors e;
  for (const auto& o : outcomes) {
    if (!o.success) continue;
    e.x.push_back(o.final_error_x);
    e.y.push_back(o.final_error_y);
  }
  return e;
}

namespace {

Vec2 position_at(const std::vector<TraceSample>& s, double t) {
  // s is sorted by time; linear interpolation between bracketing samples
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const TraceSample& a, double v) { return a.t < v; });
  if (it == s.begin()) return s.front().position;
  if (it == s.end()) return s.back().position;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double span = b.t - a.t;
  const double w = span > 0.0 ? (t - a.t) / span : 1.0;
  return {a.position.x + w * (b.position.x - a.position.x), a.position.y + w * (b.position.y - a.position.y)};
}

}  // namespace

PathMetrics path_metrics(const TrialTrace& trace, const PathOptions& opts) {
  const auto& s = trace.samples;
  if (s.size() < 2) throw Error(ErrorCode::DegenerateTrace, "path metrics need at least two samples");
  if (!(opts.resample_interval > 0.0)) throw Error(ErrorCode::InvalidConfig, "resample interval must be positive");

  PathMetrics m;
  for (std::size_t i = 1; i < s.size(); ++i) {
    m.path_length += std::hypot(s[i].position.x - s[i - 1].position.x, s[i].position.y - s[i - 1].position.y);
  }
  const double dx = s.back().position.x - s.front().position.x;
  const double dy = s.back().position.y - s.front().position.y;
  m.chord_length = std::hypot(dx, dy);
  m.manhattan_length = std::abs(dx) + std::abs(dy);
  if (m.path_length == 0.0) {
    m.straightness = 1.0;
  } else if (m.chord_length == 0.0) {
    m.straightness = std::numeric_limits<double>::infinity();
  } else {
    m.straightness = std::max(1.0, m.path_length / m.chord_length);
  }

  std::vector<Vec2> pts;
  const double t0 = s.front().t;
  const double t1 = s.back().t;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * opts.resample_interval;
    if (t >= t1) break;
    pts.push_back(position_at(s, t));
  }
  pts.push_back(s.back().position);

  const double threshold = opts.turn_threshold_deg * std::numbers::pi / 180.0;
  std::optional<double> prev_heading;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double sx = pts[i].x - pts[i - 1].x;
    const double sy = pts[i].y - pts[i - 1].y;
    if (std::hypot(sx, sy) <= 1e-12) continue;  // stationary spans carry no heading
    const double heading = std::atan2(sy, sx);
    if (prev_heading) {
      double delta = std::abs(heading - *prev_heading);
      if (delta > std::numbers::pi) delta = 2.0 * std::numbers::pi - delta;
      if (delta >= threshold - 1e-12) ++m.right_angle_turns;
    }
    prev_heading = heading;
  }
  return m;
}

std::vector<ReportRow> build_report(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no trial records");
  std::map<std::pair<FeedbackMode, std::string>, std::vector<TrialOutcome>> groups;
  for (const auto& r : records) groups[{r.mode, r.cohort}].push_back(r.outcome);

  std::vector<ReportRow> rows;
  for (const auto& [key, outcomes] : groups) rows.push_back({key.first, key.second, summarize(outcomes)});
  return rows;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "mode,cohort,n,n_success,success_rate,mean_s,std_s,outliers\n";
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out += std::string(to_string(r.mode)) + "," + csv_field(r.cohort) + "," + std::to_string(s.n) + "," +
           std::to_string(s.n_success) + "," + fixed(s.success_rate) + "," + (s.mean ? fixed(*s.mean) : "") + "," +
           (s.std ? fixed(*s.std) : "") + "," + std::to_string(s.outlier_indices.size()) + "\n";
  }
  return out;
}

std::string report_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    const auto& s = r.stats;
    nlohmann::ordered_json row;
    row["mode"] = to_string(r.mode);
    row["cohort"] = r.cohort;
    row["n"] = s.n;
    row["n_success"] = s.n_success;
    row["success_rate"] = s.success_rate;
    row["mean_s"] = s.mean ? nlohmann::ordered_json(*s.mean) : nlohmann::ordered_json(nullptr);
    row["std_s"] = s.std ? nlohmann::ordered_json(*s.std) : nlohmann::ordered_json(nullptr);
    row["outlier_count"] = s.outlier_indices.size();
    row["outlier_indices"] = s.outlier_indices;
    if (s.rule) {
      row["quartiles"] = {{"lower", s.rule->lower_quartile},
                          {"upper", s.rule->upper_quartile},
                          {"iqr", s.rule->iqr()},
                          {"lower_fence", s.rule->lower_fence()},
                          {"upper_fence", s.rule->upper_fence()}};
    }
    arr.push_back(std::move(row));
  }
  nlohmann::ordered_json doc;
  doc["rows"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string path_metrics_csv(std::span<const TrialRecord> records, const PathOptions& opts) {
  std::string out =
      "session,trial_index,mode,cohort,success,completion_time_s,final_error_x,final_error_y,path_length,"
      "chord_length,manhattan_length,straightness,right_angle_turns\n";
  for (const auto& r : records) {
    out += csv_field(r.session) + "," + std::to_string(r.trial_index) + "," + std::string(to_string(r.mode)) + "," +
           csv_field(r.cohort) + "," + (r.outcome.success ? "1" : "0") + "," + fixed(r.outcome.completion_time) + "," +
           fixed(r.outcome.final_error_x) + "," + fixed(r.outcome.final_error_y) + ",";
    if (r.trace.samples.size() < 2) {
      out += ",,,,\n";
      continue;
    }
    const PathMetrics m = path_metrics(r.trace, opts);
    out += fixed(m.path_length) + "," + fixed(m.chord_length) + "," + fixed(m.manhattan_length) + "," +
           (std::isfinite(m.straightness) ? fixed(m.straightness) : std::string("inf")) + "," +
           std::to_string(m.right_angle_turns) + "\n";
  }
  return out;
}

}  // namespace hguide

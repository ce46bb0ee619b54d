#include "cnndc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "cnndc/errors.hpp"

namespace cnndc {

MatchResult match_detections(std::span<const Point2> gt, std::span<const Point2> det,
                             double radius) {
  if (!(radius > 0.0)) throw ConfigError("match radius must be positive");
  std::vector<MatchedPair> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t d = 0; d < det.size(); ++d) {
      const double dist = distance(gt[g], det[d]);
      if (dist <= radius) candidates.push_back({g, d, dist});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchedPair& a, const MatchedPair& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.gt != b.gt) return a.gt < b.gt;
    return a.det < b.det;
  });

  MatchResult result;
  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> det_used(det.size(), false);
  for (const auto& c : candidates) {
    if (gt_used[c.gt] || det_used[c.det]) continue;
    gt_used[c.gt] = true;
    det_used[c.det] = true;
    result.pairs.push_back(c);
  }
  result.tp = result.pairs.size();
  result.fn = gt.size() - result.tp;
  result.fp = det.size() - result.tp;
  return result;
}

double recall(const MatchResult& m) {
  if (m.tp + m.fn == 0) throw MetricError("recall undefined: no ground truth");
  return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
}

double precision(const MatchResult& m) {
  if (m.tp + m.fp == 0) throw MetricError("precision undefined: no detections");
  return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
}

double f1_score(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double acc_r(std::size_t detected, std::size_t actual) {
  if (actual == 0) throw MetricError("relative counting accuracy undefined: no ground truth");
  const double diff = std::abs(static_cast<double>(detected) - static_cast<double>(actual));
  return (1.0 - diff / static_cast<double>(actual)) * 100.0;
}

double center_offset(std::span<const Point2> gt, std::span<const Point2> det, double diameter) {
  if (det.empty()) throw MetricError("offset undefined without detections");
  if (gt.empty()) throw MetricError("offset undefined without ground truth");
  if (!(diameter > 0.0)) throw ConfigError("diameter must be positive");
  double total = 0.0;
  for (const Point2& g : gt) {
    double closest = std::numeric_limits<double>::infinity();
    for (const Point2& d : det) closest = std::min(closest, distance(g, d));
    total += closest / diameter;
  }
  return total / static_cast<double>(gt.size()) * 100.0;
}

EvalReport evaluate(std::span<const Point2> gt, std::span<const Point2> det, double seconds,
                    double match_radius, double diameter) {
  const MatchResult m = match_detections(gt, det, match_radius);
  EvalReport report;
  report.recall = recall(m);
  report.precision = precision(m);
  report.f1 = f1_score(report.precision, report.recall);
  report.acc_r = acc_r(m.tp + m.fp, gt.size());
  report.offset = center_offset(gt, det, diameter);
  report.seconds = seconds;
  return report;
}

EvalReport average(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("cannot average zero reports");
  EvalReport mean;
  for (const auto& r : reports) {
    mean.recall += r.recall;
    mean.precision += r.precision;
    mean.f1 += r.f1;
    mean.acc_r += r.acc_r;
    mean.offset += r.offset;
    mean.seconds += r.seconds;
  }
  const double n = static_cast<double>(reports.size());
  mean.recall /= n;
  mean.precision /= n;
  mean.f1 /= n;
  mean.acc_r /= n;
  mean.offset /= n;
  mean.seconds /= n;
  return mean;
}

std::string to_csv_row(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.4f,%.4f,%.4f", r.recall, r.precision, r.f1,
                r.acc_r, r.offset, r.seconds);
  return buf;
}

std::string to_key_value(const EvalReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "recall=%.6f\nprecision=%.6f\nf1=%.6f\nacc_r=%.4f\noffset=%.4f\nseconds=%.4f\n",
                r.recall, r.precision, r.f1, r.acc_r, r.offset, r.seconds);
  return buf;
}

}  // namespace cnndc

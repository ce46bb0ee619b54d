#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cnndc/geometry.hpp"

namespace cnndc {

inline constexpr double kBarDiameter = 71.0;
inline constexpr double kDefaultMatchRadius = kBarDiameter / 2.0;

struct MatchedPair {
  std::size_t gt = 0;
  std::size_t det = 0;
  double distance = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> pairs;
};

// Greedy one-to-one matching: repeatedly take the closest unmatched
// (gt, det) pair with distance <= radius, ties by (gt, det) index.
MatchResult match_detections(std::span<const Point2> gt, std::span<const Point2> det,
                             double radius = kDefaultMatchRadius);

// TP / (TP + FN); throws MetricError "no ground truth" when undefined.
double recall(const MatchResult& m);
// TP / (TP + FP); throws MetricError "no detections" when undefined.
double precision(const MatchResult& m);
// Harmonic mean; 0 when precision + recall = 0.
double f1_score(double precision, double recall);

// (1 - |N_d - N| / N) * 100. Negative when N_d > 2N. Throws on N = 0.
double acc_r(std::size_t detected, std::size_t actual);

// Mean distance from each ground-truth center to its closest detection,
// divided by the bar diameter, in percent.
double center_offset(std::span<const Point2> gt, std::span<const Point2> det,
                     double diameter = kBarDiameter);

struct EvalReport {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double acc_r = 0.0;    // percent
  double offset = 0.0;   // percent
  double seconds = 0.0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(std::span<const Point2> gt, std::span<const Point2> det, double seconds,
                    double match_radius = kDefaultMatchRadius, double diameter = kBarDiameter);

// Field-wise arithmetic mean. Throws std::invalid_argument on empty input.
EvalReport average(std::span<const EvalReport> reports);

inline constexpr const char* kReportCsvHeader = "recall,precision,f1,acc_r,offset,seconds";

std::string to_csv_row(const EvalReport& report);
// One "key=value" line per field.
std::string to_key_value(const EvalReport& report);

}  // namespace cnndc

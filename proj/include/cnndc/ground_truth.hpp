#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cnndc/geometry.hpp"

namespace cnndc {

// Object centers, one per object.
using GroundTruth = std::vector<Point2>;

// "x,y" per line using the shortest decimal form that round-trips.
std::string format_points(const std::vector<Point2>& points);
void write_points(std::ostream& out, const std::vector<Point2>& points);
void write_points(const std::filesystem::path& path, const std::vector<Point2>& points);

// Blank lines are skipped; anything else must be two finite numbers
// separated by a comma. Throws ParseError with the 1-based line number.
std::vector<Point2> parse_points(std::istream& in);
std::vector<Point2> read_points(const std::filesystem::path& path);

inline void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  write_points(path, gt);
}
inline GroundTruth read_ground_truth(const std::filesystem::path& path) { return read_points(path); }

std::string format_number(double value);

}  // namespace cnndc

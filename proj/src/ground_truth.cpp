#include "cnndc/ground_truth.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cnndc/errors.hpp"

namespace cnndc {

std::string format_number(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string format_points(const std::vector<Point2>& points) {
  std::string out;
  for (const auto& p : points) {
    out += format_number(p.x);
    out += ',';
    out += format_number(p.y);
    out += '\n';
  }
  return out;
}

void write_points(std::ostream& out, const std::vector<Point2>& points) {
  out << format_points(points);
}

void write_points(const std::filesystem::path& path, const std::vector<Point2>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_points(out, points);
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(value);
}

}  // namespace

std::vector<Point2> parse_points(std::istream& in) {
  std::vector<Point2> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    Point2 p;
    if (comma == std::string_view::npos || !parse_double(text.substr(0, comma), p.x) ||
        !parse_double(text.substr(comma + 1), p.y)) {
      throw ParseError("expected 'x,y' but found '" + std::string(text) + "'", line_no);
    }
    points.push_back(p);
  }
  return points;
}

std::vector<Point2> read_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_points(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace cnndc

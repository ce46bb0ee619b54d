#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cnndc/geometry.hpp"

namespace cnndc {

// Candidate center points in detection order. The single-pass merge is
// order-sensitive, so the order is part of the input.
using CandidateSet = std::vector<Point2>;

// Distance below which a point and its nearest neighbor seed the same set.
// The comparison is strict: a neighbor at exactly `px` is not linked.
class DistanceThreshold {
 public:
  explicit DistanceThreshold(double px = 20.0);
  double px() const { return px_; }

 private:
  double px_;
};

enum class MergeMode {
  transitive,  // connected components of the seed-set overlap graph
  faithful,    // literal single pass: merge into the first overlapping cluster
};

MergeMode parse_merge_mode(const std::string& text);
const char* to_string(MergeMode mode);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Nearest other point for every point; ties go to the smallest index.
// Returns an empty table for fewer than two points.
std::vector<Neighbor> nearest_neighbor_table(std::span<const Point2> points);

using SeedSet = std::vector<std::size_t>;

// S[i] = {i, j} when d_ij < threshold, else {i}.
std::vector<SeedSet> init_sets(std::span<const Neighbor> table, const DistanceThreshold& threshold);

struct Cluster {
  std::vector<std::size_t> members;  // ascending candidate indices
  Point2 center;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct ClusterSet {
  std::vector<Cluster> clusters;
  MergeMode mode = MergeMode::transitive;

  std::size_t count() const { return clusters.size(); }
  std::vector<Point2> centers() const;
};

// One pass over S: each set joins the first cluster it shares an element
// with, otherwise opens a new cluster. An index may end up in two clusters.
ClusterSet merge_sets_faithful(std::span<const SeedSet> sets);

// Union-find over all seed sets. Clusters are disjoint, cover every index,
// and are ordered by their smallest member.
ClusterSet merge_sets_transitive(std::span<const SeedSet> sets);

// Sets every center to the midpoint of its members' bounding box. Throws
// std::logic_error on an empty cluster.
void cluster_centers(ClusterSet& clusters, std::span<const Point2> points);

// Distance Clustering: nearest-neighbor seed sets, merge, bounding-box
// centers. Zero points give no clusters; one point gives one singleton.
ClusterSet dc_cluster(std::span<const Point2> points, const DistanceThreshold& threshold,
                      MergeMode mode = MergeMode::transitive);

// Debug dump, one "cluster_id,x,y" line per member.
void write_cluster_members(std::ostream& out, const ClusterSet& clusters,
                           std::span<const Point2> points);

}  // namespace cnndc

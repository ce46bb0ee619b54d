#include "cnndc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cnndc/errors.hpp"
#include "cnndc/ground_truth.hpp"

namespace cnndc {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }

  // The smaller root wins, so every root is its component's minimum.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

bool shares_element(const std::vector<std::size_t>& sorted, const SeedSet& set) {
  return std::any_of(set.begin(), set.end(), [&](std::size_t v) {
    return std::binary_search(sorted.begin(), sorted.end(), v);
  });
}

void insert_sorted(std::vector<std::size_t>& sorted, std::size_t v) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  if (it == sorted.end() || *it != v) sorted.insert(it, v);
}

}  // namespace

DistanceThreshold::DistanceThreshold(double px) : px_(px) {
  if (!(px > 0.0) || !std::isfinite(px)) {
    throw ConfigError("distance threshold must be positive and finite");
  }
}

MergeMode parse_merge_mode(const std::string& text) {
  if (text == "transitive") return MergeMode::transitive;
  if (text == "faithful") return MergeMode::faithful;
  throw ConfigError("unknown clustering mode '" + text + "' (expected transitive or faithful)");
}

const char* to_string(MergeMode mode) {
  return mode == MergeMode::transitive ? "transitive" : "faithful";
}

std::vector<Point2> ClusterSet::centers() const {
  std::vector<Point2> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.center);
  return out;
}

std::vector<Neighbor> nearest_neighbor_table(std::span<const Point2> points) {
  std::vector<Neighbor> table;
  if (points.size() < 2) return table;
  table.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (k == i) continue;
      const double d = distance(points[i], points[k]);
      if (d < best.distance) best = {k, d};
    }
    table[i] = best;
  }
  return table;
}

std::vector<SeedSet> init_sets(std::span<const Neighbor> table, const DistanceThreshold& threshold) {
  std::vector<SeedSet> sets(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    sets[i] = table[i].distance < threshold.px() ? SeedSet{i, table[i].index} : SeedSet{i};
  }
  return sets;
}

ClusterSet merge_sets_faithful(std::span<const SeedSet> sets) {
  ClusterSet result;
  result.mode = MergeMode::faithful;
  for (const SeedSet& set : sets) {
    auto target = std::find_if(result.clusters.begin(), result.clusters.end(),
                               [&](const Cluster& c) { return shares_element(c.members, set); });
    if (target == result.clusters.end()) {
      result.clusters.emplace_back();
      target = std::prev(result.clusters.end());
    }
    for (std::size_t v : set) insert_sorted(target->members, v);
  }
  return result;
}

ClusterSet merge_sets_transitive(std::span<const SeedSet> sets) {
  std::size_t n = sets.size();
  for (const SeedSet& set : sets) {
    for (std::size_t v : set) n = std::max(n, v + 1);
  }
  DisjointSets components(n);
  std::vector<bool> present(n, false);
  for (const SeedSet& set : sets) {
    for (std::size_t v : set) {
      present[v] = true;
      components.unite(set.front(), v);
    }
  }

  ClusterSet result;
  result.mode = MergeMode::transitive;
  std::vector<std::size_t> slot(n, std::numeric_limits<std::size_t>::max());
  // Ascending scan: a component is opened by its smallest member.
  for (std::size_t v = 0; v < n; ++v) {
    if (!present[v]) continue;
    const std::size_t root = components.find(v);
    if (slot[root] == std::numeric_limits<std::size_t>::max()) {
      slot[root] = result.clusters.size();
      result.clusters.emplace_back();
    }
    result.clusters[slot[root]].members.push_back(v);
  }
  return result;
}

void cluster_centers(ClusterSet& clusters, std::span<const Point2> points) {
  for (Cluster& c : clusters.clusters) {
    if (c.members.empty()) throw std::logic_error("cluster has no members");
    double x_min = std::numeric_limits<double>::infinity();
    double y_min = x_min;
    double x_max = -x_min;
    double y_max = -x_min;
    for (std::size_t m : c.members) {
      const Point2& p = points[m];
      x_min = std::min(x_min, p.x);
      x_max = std::max(x_max, p.x);
      y_min = std::min(y_min, p.y);
      y_max = std::max(y_max, p.y);
    }
    c.center = {(x_max + x_min) / 2.0, (y_max + y_min) / 2.0};
  }
}

ClusterSet dc_cluster(std::span<const Point2> points, const DistanceThreshold& threshold,
                      MergeMode mode) {
  ClusterSet result;
  result.mode = mode;
  if (points.empty()) return result;
  if (points.size() == 1) {
    result.clusters.push_back({{0}, points[0]});
    return result;
  }
  const auto table = nearest_neighbor_table(points);
  const auto sets = init_sets(table, threshold);
  result = mode == MergeMode::transitive ? merge_sets_transitive(sets) : merge_sets_faithful(sets);
  cluster_centers(result, points);
  return result;
}

void write_cluster_members(std::ostream& out, const ClusterSet& clusters,
                           std::span<const Point2> points) {
  for (std::size_t id = 0; id < clusters.clusters.size(); ++id) {
    for (std::size_t m : clusters.clusters[id].members) {
      out << id << ',' << format_number(points[m].x) << ',' << format_number(points[m].y) << '\n';
    }
  }
}

}  // namespace cnndc

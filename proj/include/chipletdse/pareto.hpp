#pragma once

// Bounded non-dominated archive over (latency, energy) with crowding eviction.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "chipletdse/evaluate.hpp"

namespace chipletdse {

// Strict Pareto dominance in minimization form.
inline bool dominates(const Evaluation& a, const Evaluation& b) {
  bool le = a.latency_s <= b.latency_s && a.energy_j <= b.energy_j;
  bool lt = a.latency_s < b.latency_s || a.energy_j < b.energy_j;
  return le && lt;
}

class ParetoArchive {
 public:
  explicit ParetoArchive(std::size_t capacity = 64) : capacity_(capacity) {}

  // Returns true when the archive changed. A point matching an existing
  // member's objectives exactly is treated as already represented.
  bool insert(const DesignPoint& dp) {
    for (const auto& m : members_) {
      if (dominates(m.eval, dp.eval)) return false;
      if (m.eval.latency_s == dp.eval.latency_s && m.eval.energy_j == dp.eval.energy_j)
        return false;
    }
    members_.erase(std::remove_if(members_.begin(), members_.end(),
                                  [&](const DesignPoint& m) { return dominates(dp.eval, m.eval); }),
                   members_.end());
    members_.push_back(dp);
    if (members_.size() > capacity_) evict_most_crowded();
    return true;
  }

  const std::vector<DesignPoint>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t capacity() const { return capacity_; }

  // Objective pairs sorted by latency; the canonical front representation used
  // by oracle comparisons.
  std::vector<std::pair<double, double>> front() const {
    std::vector<std::pair<double, double>> f;
    f.reserve(members_.size());
    for (const auto& m : members_) f.push_back({m.eval.latency_s, m.eval.energy_j});
    std::sort(f.begin(), f.end());
    return f;
  }

 private:
  void evict_most_crowded() {
    // Crowding distance in normalized objective space; boundary points are
    // protected. Ties evict the newest member (largest id) so reruns agree.
    std::vector<std::size_t> order(members_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (members_[a].eval.latency_s != members_[b].eval.latency_s)
        return members_[a].eval.latency_s < members_[b].eval.latency_s;
      return members_[a].id < members_[b].id;
    });
    double lat_span = members_[order.back()].eval.latency_s - members_[order.front()].eval.latency_s;
    double en_span = members_[order.front()].eval.energy_j - members_[order.back()].eval.energy_j;
    if (lat_span <= 0) lat_span = 1.0;
    if (en_span <= 0) en_span = 1.0;

    std::vector<double> crowd(members_.size(), 0.0);
    crowd[order.front()] = crowd[order.back()] = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < order.size(); ++k) {
      const auto& lo = members_[order[k - 1]].eval;
      const auto& hi = members_[order[k + 1]].eval;
      crowd[order[k]] = (hi.latency_s - lo.latency_s) / lat_span +
                        (lo.energy_j - hi.energy_j) / en_span;
    }
    std::size_t victim = 0;
    for (std::size_t i = 1; i < members_.size(); ++i) {
      if (crowd[i] < crowd[victim] ||
          (crowd[i] == crowd[victim] && members_[i].id > members_[victim].id))
        victim = i;
    }
    members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  std::size_t capacity_;
  std::vector<DesignPoint> members_;
};

}  // namespace chipletdse

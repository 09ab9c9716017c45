#pragma once

// Greedy storage-driven layer-to-chiplet mapping and traffic-matrix synthesis.
//
// Layers are assigned in DNN execution order along the placement's canonical
// walk. A layer occupies the chiplet under the cursor while weight storage
// remains and splits onto subsequent chiplets when it runs out. The cursor
// never rewinds: capacity left behind on a skipped (policy-ineligible) chiplet
// is abandoned, which keeps consecutive layers contiguous along the walk.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"
#include "chipletdse/topology.hpp"
#include "chipletdse/workload.hpp"

namespace chipletdse {

struct MappingPolicy {
  bool forbid_reram_for_dynamic = true; // dynamic layers never sit in ReRAM
  bool forbid_reram_entirely = false;
  bool disjoint_dnn_partitions = true;  // no chiplet hosts layers of two DNNs
};

// Search-controlled knobs of the otherwise deterministic greedy walk.
struct MappingGenome {
  int start_offset = 0;               // rotation of the canonical walk
  std::set<int> advance_before_layer; // global layer indices forcing a cursor step
};

struct LayerSlice {
  int instance = -1;
  double fraction = 0.0;  // of the layer's weights
  double weight_kb = 0.0;
};

struct Mapping {
  std::vector<std::vector<LayerSlice>> per_layer; // indexed like WorkloadSpec::layers
  std::vector<double> used_kb;                    // per chiplet instance
};

inline bool layer_eligible(const LayerSpec& l, const ChipletSpec& c, const MappingPolicy& pol) {
  if (c.mem_tech != MemTech::ReRAM) return true;
  if (pol.forbid_reram_entirely) return false;
  if (pol.forbid_reram_for_dynamic && l.dynamic) return false;
  return true;
}

inline Mapping map_layers(const WorkloadSpec& wl, const Placement& placement, const Catalog& cat,
                          const MappingPolicy& pol = {}, const MappingGenome& genome = {}) {
  const std::size_t n = placement.chiplets.size();
  if (n == 0) throw ValidationError("cannot map a workload onto an empty placement");

  std::vector<int> order = placement.walk;
  int off = genome.start_offset % static_cast<int>(n);
  if (off < 0) off += static_cast<int>(n);
  std::rotate(order.begin(), order.begin() + off, order.end());

  std::vector<double> cap(n);
  for (std::size_t i = 0; i < n; ++i)
    cap[i] = cat.at(static_cast<std::size_t>(placement.chiplets[i].type)).storage_kb;

  Mapping m;
  m.per_layer.assign(wl.layers.size(), {});
  m.used_kb.assign(n, 0.0);

  std::size_t cursor = 0;
  for (const auto& dnn : wl.dnns) {
    bool dnn_touched_cursor = false;
    for (const auto& lid : dnn.layer_ids) {
      int li = wl.index_of(lid);
      const LayerSpec& layer = wl.layers[static_cast<std::size_t>(li)];
      if (genome.advance_before_layer.count(li) && cursor < order.size()) {
        ++cursor;
        dnn_touched_cursor = false;
      }
      double need = layer.weight_kb;
      while (need > 0.0) {
        if (cursor >= order.size())
          throw ValidationError("insufficient chiplet storage: layer '" + layer.id +
                                "' cannot be placed");
        std::size_t inst = static_cast<std::size_t>(order[cursor]);
        const ChipletSpec& spec = cat.at(static_cast<std::size_t>(placement.chiplets[inst].type));
        if (cap[inst] <= 0.0 || !layer_eligible(layer, spec, pol)) {
          ++cursor;
          dnn_touched_cursor = false;
          continue;
        }
        double take = std::min(cap[inst], need);
        cap[inst] -= take;
        need -= take;
        m.used_kb[inst] += take;
        m.per_layer[static_cast<std::size_t>(li)].push_back(
            {static_cast<int>(inst), take / layer.weight_kb, take});
        dnn_touched_cursor = true;
        if (cap[inst] <= 0.0 && need > 0.0) {
          ++cursor;
          dnn_touched_cursor = false;
        }
      }
    }
    // Disjoint partitions: the next DNN must not share the partially used chiplet.
    if (pol.disjoint_dnn_partitions && dnn_touched_cursor && cursor < order.size()) ++cursor;
  }
  return m;
}

// Traffic between chiplets, in bits per inference pass. Every chiplet hosting a
// slice of layer l sends to every chiplet hosting a slice of each successor,
// apportioned by both slice fractions so that total outflow per edge equals the
// layer's activation volume minus the co-located share.
inline std::vector<std::vector<double>> build_traffic(const WorkloadSpec& wl, const Mapping& m,
                                                      std::size_t n_instances) {
  std::vector<std::vector<double>> traffic(n_instances, std::vector<double>(n_instances, 0.0));
  for (std::size_t li = 0; li < wl.layers.size(); ++li) {
    const LayerSpec& layer = wl.layers[li];
    if (layer.act_out_bits <= 0.0 || layer.successors.empty()) continue;
    for (const auto& succ_id : layer.successors) {
      int si = wl.index_of(succ_id);
      for (const auto& src : m.per_layer[li])
        for (const auto& dst : m.per_layer[static_cast<std::size_t>(si)]) {
          if (src.instance == dst.instance) continue; // intra-chiplet moves are free
          traffic[static_cast<std::size_t>(src.instance)][static_cast<std::size_t>(dst.instance)] +=
              layer.act_out_bits * src.fraction * dst.fraction;
        }
    }
  }
  return traffic;
}

}  // namespace chipletdse

#pragma once

// DNN workload description: per-layer storage/compute/activation attributes plus
// the inter-layer traffic graph (successor edges, skip connections included).

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "chipletdse/common.hpp"

namespace chipletdse {

struct LayerSpec {
  std::string id;          // unique within the workload
  std::string dnn;         // owning DNN name
  double weight_kb = 0.0;  // storage the layer's weights occupy
  double macs = 0.0;       // multiply-accumulate count per inference
  double act_out_bits = 0.0; // activation volume sent to each successor
  double sparsity = 1.0;     // fraction of MACs actually executed, in (0, 1]
  bool dynamic = false;      // layer rewrites weights at run time
  std::vector<std::string> successors;
};

struct DnnSpec {
  std::string name;
  std::vector<std::string> layer_ids; // execution order
};

struct WorkloadSpec {
  std::string name;
  nlohmann::ordered_json metadata; // carried verbatim, never interpreted
  std::vector<LayerSpec> layers;   // concatenated in DNN order, execution order within each DNN
  std::vector<DnnSpec> dnns;

  int index_of(const std::string& layer_id) const {
    auto it = index_.find(layer_id);
    return it == index_.end() ? -1 : it->second;
  }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < layers.size(); ++i) index_[layers[i].id] = static_cast<int>(i);
  }

 private:
  std::map<std::string, int> index_;
};

struct WorkloadTotals {
  double weight_kb = 0.0;
  double macs = 0.0;
  double act_out_bits = 0.0;
  int layer_count = 0;
  int edge_count = 0;
};

inline WorkloadTotals total_requirements(const WorkloadSpec& wl) {
  WorkloadTotals t;
  for (const auto& l : wl.layers) {
    t.weight_kb += l.weight_kb;
    t.macs += l.macs;
    t.act_out_bits += l.act_out_bits;
    t.edge_count += static_cast<int>(l.successors.size());
  }
  t.layer_count = static_cast<int>(wl.layers.size());
  return t;
}

inline void validate(const WorkloadSpec& wl) {
  std::set<std::string> ids;
  for (const auto& l : wl.layers) {
    if (l.id.empty()) throw ValidationError("workload '" + wl.name + "': layer with empty id");
    if (!ids.insert(l.id).second)
      throw ValidationError("workload '" + wl.name + "': duplicate layer id '" + l.id + "'");
    if (l.weight_kb <= 0.0)
      throw ValidationError("layer '" + l.id + "': weight_kb must be positive");
    if (l.macs < 1.0)
      throw ValidationError("layer '" + l.id + "': macs must be at least 1");
    if (l.act_out_bits < 0.0)
      throw ValidationError("layer '" + l.id + "': act_out_bits must be non-negative");
    if (!(l.sparsity > 0.0 && l.sparsity <= 1.0))
      throw ValidationError("layer '" + l.id + "': sparsity must lie in (0, 1]");
  }
  for (const auto& l : wl.layers)
    for (const auto& s : l.successors)
      if (ids.find(s) == ids.end())
        throw ValidationError("layer '" + l.id + "': successor '" + s + "' not in workload");

  // Each layer belongs to exactly one DNN and DNN layer lists cover the layers.
  std::map<std::string, std::string> owner;
  for (const auto& d : wl.dnns)
    for (const auto& lid : d.layer_ids) {
      if (ids.find(lid) == ids.end())
        throw ValidationError("dnn '" + d.name + "' references unknown layer '" + lid + "'");
      if (!owner.emplace(lid, d.name).second)
        throw ValidationError("layer '" + lid + "' appears in more than one dnn");
    }
  for (const auto& l : wl.layers) {
    auto it = owner.find(l.id);
    if (it == owner.end())
      throw ValidationError("layer '" + l.id + "' belongs to no dnn");
    if (it->second != l.dnn)
      throw ValidationError("layer '" + l.id + "': dnn field '" + l.dnn +
                            "' does not match owning dnn '" + it->second + "'");
  }

  // Kahn's algorithm; leftover nodes mean a cycle.
  std::map<std::string, int> indeg;
  for (const auto& l : wl.layers) indeg[l.id] = 0;
  for (const auto& l : wl.layers)
    for (const auto& s : l.successors) indeg[s]++;
  std::vector<std::string> queue;
  for (const auto& [id, d] : indeg)
    if (d == 0) queue.push_back(id);
  std::size_t done = 0;
  while (!queue.empty()) {
    std::string id = queue.back();
    queue.pop_back();
    ++done;
    const auto& l = wl.layers[static_cast<std::size_t>(wl.index_of(id))];
    for (const auto& s : l.successors)
      if (--indeg[s] == 0) queue.push_back(s);
  }
  if (done != wl.layers.size())
    throw ValidationError("workload '" + wl.name + "': successor graph has a cycle");
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j) {
  WorkloadSpec wl;
  wl.name = j.at("name").get<std::string>();
  if (j.contains("metadata")) wl.metadata = j.at("metadata");
  for (const auto& dj : j.at("dnns")) {
    DnnSpec d;
    d.name = dj.at("name").get<std::string>();
    for (const auto& lj : dj.at("layers")) {
      LayerSpec l;
      l.id = lj.at("id").get<std::string>();
      l.dnn = lj.contains("dnn") ? lj.at("dnn").get<std::string>() : d.name;
      l.weight_kb = lj.at("weight_kb").get<double>();
      l.macs = lj.at("macs").get<double>();
      l.act_out_bits = lj.at("act_out_bits").get<double>();
      if (lj.contains("sparsity")) l.sparsity = lj.at("sparsity").get<double>();
      if (lj.contains("dynamic")) l.dynamic = lj.at("dynamic").get<bool>();
      if (lj.contains("successors"))
        for (const auto& s : lj.at("successors")) l.successors.push_back(s.get<std::string>());
      d.layer_ids.push_back(l.id);
      wl.layers.push_back(std::move(l));
    }
    wl.dnns.push_back(std::move(d));
  }
  wl.rebuild_index();
  validate(wl);
  return wl;
}

inline nlohmann::ordered_json workload_to_json(const WorkloadSpec& wl) {
  nlohmann::ordered_json j;
  j["name"] = wl.name;
  if (!wl.metadata.is_null()) j["metadata"] = wl.metadata;
  j["dnns"] = nlohmann::ordered_json::array();
  for (const auto& d : wl.dnns) {
    nlohmann::ordered_json dj;
    dj["name"] = d.name;
    dj["layers"] = nlohmann::ordered_json::array();
    for (const auto& lid : d.layer_ids) {
      const auto& l = wl.layers[static_cast<std::size_t>(wl.index_of(lid))];
      nlohmann::ordered_json lj;
      lj["id"] = l.id;
      lj["weight_kb"] = l.weight_kb;
      lj["macs"] = l.macs;
      lj["act_out_bits"] = l.act_out_bits;
      lj["sparsity"] = l.sparsity;
      lj["dynamic"] = l.dynamic;
      lj["successors"] = l.successors;
      dj["layers"].push_back(std::move(lj));
    }
    j["dnns"].push_back(std::move(dj));
  }
  return j;
}

inline WorkloadSpec load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open workload file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("workload '" + path + "': " + e.what());
  }
  return workload_from_json(j);
}

// Concatenates several workload files into one multi-DNN workload. Colliding DNN
// or layer ids are prefixed with the source workload name; successor references
// are rewritten to match.
inline WorkloadSpec merge_workloads(const std::vector<WorkloadSpec>& parts, const std::string& name) {
  WorkloadSpec out;
  out.name = name;
  std::set<std::string> dnn_names, layer_ids;
  for (const auto& p : parts) {
    std::map<std::string, std::string> rename;
    for (const auto& l : p.layers)
      rename[l.id] = layer_ids.count(l.id) ? p.name + "." + l.id : l.id;
    for (const auto& d : p.dnns) {
      DnnSpec nd;
      nd.name = dnn_names.count(d.name) ? p.name + "." + d.name : d.name;
      dnn_names.insert(nd.name);
      for (const auto& lid : d.layer_ids) {
        LayerSpec l = p.layers[static_cast<std::size_t>(p.index_of(lid))];
        l.id = rename.at(l.id);
        l.dnn = nd.name;
        for (auto& s : l.successors) s = rename.at(s);
        layer_ids.insert(l.id);
        nd.layer_ids.push_back(l.id);
        out.layers.push_back(std::move(l));
      }
      out.dnns.push_back(std::move(nd));
    }
  }
  out.rebuild_index();
  validate(out);
  return out;
}

}  // namespace chipletdse

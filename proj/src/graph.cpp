#include "dhgreg/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dhg {

const char* entity_type_name(EntityType t) {
  switch (t) {
    case EntityType::Email: return "email";
    case EntityType::Address: return "address";
    case EntityType::Phone: return "phone";
    case EntityType::Ip: return "ip";
  }
  return "?";
}

const char* node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Account: return "account";
    case NodeType::Email: return "email";
    case NodeType::Address: return "address";
    case NodeType::Phone: return "phone";
    case NodeType::Ip: return "ip";
    case NodeType::Hub: return "hub";
  }
  return "?";
}

NodeType entity_node_type(EntityType t) {
  switch (t) {
    case EntityType::Email: return NodeType::Email;
    case EntityType::Address: return NodeType::Address;
    case EntityType::Phone: return NodeType::Phone;
    case EntityType::Ip: return NodeType::Ip;
  }
  return NodeType::Email;
}

std::string normalize_entity_key(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

long GraphCensus::total_nodes() const {
  long n = accounts;
  for (int i = 0; i < kNumEntityTypes; ++i) n += instances[i] + hubs[i];
  return n;
}

long GraphCensus::structural_total() const {
  long n = 0;
  for (long e : structural_edges) n += e;
  return n;
}

long GraphCensus::temporal_total() const {
  long n = 0;
  for (long e : temporal_edges) n += e;
  return n;
}

long GraphCensus::total_edges() const { return structural_total() + temporal_total(); }

std::string GraphCensus::to_string() const {
  std::ostringstream os;
  os << "node type        count | edge type              count\n";
  os << "account " << accounts << "\n";
  for (int i = 0; i < kNumEntityTypes; ++i) {
    const char* n = entity_type_name(static_cast<EntityType>(i));
    os << n << " instances " << instances[i] << ", hubs " << hubs[i]
       << " | account-" << n << " " << structural_edges[i] << ", temporal "
       << temporal_edges[i] << "\n";
  }
  os << "total nodes " << total_nodes() << " | structural " << structural_total()
     << " + temporal " << temporal_total() << " = " << total_edges() << "\n";
  return os.str();
}

DynamicHeteroGraph::DynamicHeteroGraph(int num_time_steps, int d_account)
    : num_steps_(num_time_steps), d_account_(d_account) {
  if (num_time_steps < 1) throw std::invalid_argument("graph: T must be >= 1");
  if (d_account < 1) throw std::invalid_argument("graph: d_account must be >= 1");
}

void DynamicHeteroGraph::require_mutable() const {
  if (frozen_) throw std::logic_error("graph is frozen");
}

int DynamicHeteroGraph::add_node(NodeRef node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

int DynamicHeteroGraph::add_registration(const RegistrationRecord& record, int time_step) {
  require_mutable();
  if (time_step < 1 || time_step > num_steps_) {
    throw std::out_of_range("add_registration: time step " + std::to_string(time_step) +
                            " outside 1.." + std::to_string(num_steps_) + " for account " +
                            record.account_id);
  }
  if (account_index_.count(record.account_id)) {
    throw std::invalid_argument("add_registration: duplicate account id " +
                                record.account_id);
  }

  NodeRef acct;
  acct.type = NodeType::Account;
  acct.key = record.account_id;
  acct.t = time_step;
  const int acct_idx = add_node(std::move(acct));
  account_index_.emplace(record.account_id, acct_idx);
  account_nodes_.push_back(acct_idx);

  const std::array<const std::string*, kNumEntityTypes> raw = {
      &record.email, &record.address, &record.phone, &record.ip};
  for (int e = 0; e < kNumEntityTypes; ++e) {
    if (raw[e]->empty()) continue;
    const EntityType et = static_cast<EntityType>(e);
    const std::string key = normalize_entity_key(*raw[e]);
    if (key.empty()) continue;

    const std::string inst_key =
        std::string(entity_type_name(et)) + "|" + key + "|" + std::to_string(time_step);
    auto inst_it = instance_index_.find(inst_key);
    int inst_idx;
    if (inst_it == instance_index_.end()) {
      NodeRef inst;
      inst.type = entity_node_type(et);
      inst.entity = et;
      inst.key = key;
      inst.t = time_step;
      inst_idx = add_node(std::move(inst));
      instance_index_.emplace(inst_key, inst_idx);

      // first sighting of this (entity, week): hook the instance onto its hub
      const std::string hub_key = std::string(entity_type_name(et)) + "|" + key;
      auto hub_it = hub_index_.find(hub_key);
      int hub_idx;
      if (hub_it == hub_index_.end()) {
        NodeRef hub;
        hub.type = NodeType::Hub;
        hub.entity = et;
        hub.key = key;
        hub.t_min = time_step;
        hub.t_max = time_step;
        hub_idx = add_node(std::move(hub));
        hub_index_.emplace(hub_key, hub_idx);
      } else {
        hub_idx = hub_it->second;
        nodes_[hub_idx].t_min = std::min(nodes_[hub_idx].t_min, time_step);
        nodes_[hub_idx].t_max = std::max(nodes_[hub_idx].t_max, time_step);
      }
      edges_.push_back(EdgeRecord{inst_idx, hub_idx, EdgeKind::Temporal, et});
    } else {
      inst_idx = inst_it->second;
    }
    edges_.push_back(EdgeRecord{acct_idx, inst_idx, EdgeKind::Structural, et});
  }
  return acct_idx;
}

void DynamicHeteroGraph::freeze() {
  if (frozen_) return;
  structural_csr_ = build_symmetric_csr(EdgeScope::Structural);
  temporal_csr_ = build_symmetric_csr(EdgeScope::Temporal);
  frozen_ = true;
}

const SparseMatrix& DynamicHeteroGraph::structural_csr() const {
  if (!frozen_) throw std::logic_error("graph not frozen");
  return structural_csr_;
}

const SparseMatrix& DynamicHeteroGraph::temporal_csr() const {
  if (!frozen_) throw std::logic_error("graph not frozen");
  return temporal_csr_;
}

SparseMatrix DynamicHeteroGraph::build_symmetric_csr(EdgeScope scope) const {
  std::vector<std::pair<std::pair<int, int>, real>> entries;
  entries.reserve(edges_.size() * 2);
  for (const auto& e : edges_) {
    const bool want = scope == EdgeScope::Union ||
                      (scope == EdgeScope::Structural && e.kind == EdgeKind::Structural) ||
                      (scope == EdgeScope::Temporal && e.kind == EdgeKind::Temporal);
    if (!want) continue;
    entries.push_back({{e.src, e.dst}, real(1)});
    entries.push_back({{e.dst, e.src}, real(1)});
  }
  SparseMatrix m = SparseMatrix::from_coo(num_nodes(), num_nodes(), std::move(entries));
  // collapse any duplicate edge weight back to 1 (adjacency is 0/1)
  for (auto& v : m.values) v = real(1);
  return m;
}

GraphCensus DynamicHeteroGraph::census() const {
  GraphCensus c;
  for (const auto& n : nodes_) {
    if (n.is_account()) {
      ++c.accounts;
    } else if (n.is_hub()) {
      ++c.hubs[static_cast<int>(n.entity)];
    } else {
      ++c.instances[static_cast<int>(n.entity)];
    }
  }
  for (const auto& e : edges_) {
    if (e.kind == EdgeKind::Structural) {
      ++c.structural_edges[static_cast<int>(e.entity)];
    } else {
      ++c.temporal_edges[static_cast<int>(e.entity)];
    }
  }
  return c;
}

SparseMatrix DynamicHeteroGraph::normalized_adjacency(EdgeScope scope, bool self_loops) const {
  SparseMatrix adj = frozen_ && scope != EdgeScope::Union
                         ? (scope == EdgeScope::Structural ? structural_csr_ : temporal_csr_)
                         : build_symmetric_csr(scope);
  const int n = adj.rows;
  if (self_loops) {
    std::vector<std::pair<std::pair<int, int>, real>> entries;
    entries.reserve(adj.nnz() + n);
    for (int r = 0; r < n; ++r) {
      for (int p = adj.offsets[r]; p < adj.offsets[r + 1]; ++p) {
        entries.push_back({{r, adj.indices[p]}, real(1)});
      }
      entries.push_back({{r, r}, real(1)});
    }
    adj = SparseMatrix::from_coo(n, n, std::move(entries));
    for (auto& v : adj.values) v = real(1);
  }
  std::vector<real> inv_sqrt_deg(n, real(0));
  for (int r = 0; r < n; ++r) {
    const int deg = adj.offsets[r + 1] - adj.offsets[r];
    if (deg > 0) inv_sqrt_deg[r] = real(1) / std::sqrt(static_cast<real>(deg));
  }
  for (int r = 0; r < n; ++r) {
    for (int p = adj.offsets[r]; p < adj.offsets[r + 1]; ++p) {
      adj.values[p] = inv_sqrt_deg[r] * inv_sqrt_deg[adj.indices[p]];
    }
  }
  return adj;
}

SparseMatrix DynamicHeteroGraph::neighbor_pattern(EdgeScope scope) const {
  SparseMatrix adj = build_symmetric_csr(scope);
  const int n = adj.rows;
  std::vector<std::pair<std::pair<int, int>, real>> entries;
  entries.reserve(adj.nnz() + n);
  for (int r = 0; r < n; ++r) {
    for (int p = adj.offsets[r]; p < adj.offsets[r + 1]; ++p) {
      entries.push_back({{r, adj.indices[p]}, real(1)});
    }
    entries.push_back({{r, r}, real(1)});
  }
  SparseMatrix m = SparseMatrix::from_coo(n, n, std::move(entries));
  for (auto& v : m.values) v = real(1);
  return m;
}

DynamicHeteroGraph DynamicHeteroGraph::from_parts(int num_time_steps, int d_account,
                                                  std::vector<NodeRef> nodes,
                                                  std::vector<EdgeRecord> edges) {
  DynamicHeteroGraph g(num_time_steps, d_account);
  g.nodes_ = std::move(nodes);
  const int n = g.num_nodes();
  for (int i = 0; i < n; ++i) {
    const NodeRef& nd = g.nodes_[i];
    if (nd.is_account()) {
      if (!g.account_index_.emplace(nd.key, i).second) {
        throw std::invalid_argument("from_parts: duplicate account " + nd.key);
      }
      g.account_nodes_.push_back(i);
    } else if (nd.is_hub()) {
      g.hub_index_.emplace(std::string(entity_type_name(nd.entity)) + "|" + nd.key, i);
    } else {
      g.instance_index_.emplace(std::string(entity_type_name(nd.entity)) + "|" + nd.key +
                                    "|" + std::to_string(nd.t),
                                i);
    }
  }
  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw std::out_of_range("from_parts: edge endpoint out of range");
    }
  }
  g.edges_ = std::move(edges);
  return g;
}

}  // namespace dhg

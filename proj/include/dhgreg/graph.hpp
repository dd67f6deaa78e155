#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dhgreg/common.hpp"
#include "dhgreg/dense.hpp"
#include "dhgreg/record.hpp"
#include "dhgreg/sparse.hpp"

namespace dhg {

/// The four linking-entity families. Order mirrors the reporting tables.
enum class EntityType : uint8_t { Email = 0, Address = 1, Phone = 2, Ip = 3 };
constexpr int kNumEntityTypes = 4;
const char* entity_type_name(EntityType t);

enum class NodeType : uint8_t { Account, Email, Address, Phone, Ip, Hub };
const char* node_type_name(NodeType t);
NodeType entity_node_type(EntityType t);

/// One node of the unrolled graph. Accounts and per-week entity instances
/// carry a single time step; hub nodes carry the inclusive range of weeks
/// in which their entity was observed.
struct NodeRef {
  NodeType type = NodeType::Account;
  EntityType entity = EntityType::Email;  // meaningful for entity instances and hubs
  std::string key;                        // normalized entity key, or account id
  int t = 0;                              // accounts and entity instances
  int t_min = 0, t_max = 0;               // hubs only

  bool is_account() const { return type == NodeType::Account; }
  bool is_hub() const { return type == NodeType::Hub; }
  bool is_entity_instance() const { return !is_account() && !is_hub(); }
};

enum class EdgeKind : uint8_t { Structural, Temporal };

struct EdgeRecord {
  int src = 0;  // structural: account, temporal: entity instance
  int dst = 0;  // structural: entity instance, temporal: hub
  EdgeKind kind = EdgeKind::Structural;
  EntityType entity = EntityType::Email;
};

/// Per-type node counts and per-kind edge counts of one graph.
struct GraphCensus {
  long accounts = 0;
  std::array<long, kNumEntityTypes> instances{};  // per-week entity nodes
  std::array<long, kNumEntityTypes> hubs{};
  std::array<long, kNumEntityTypes> structural_edges{};
  std::array<long, kNumEntityTypes> temporal_edges{};

  long total_nodes() const;
  long total_edges() const;
  long structural_total() const;
  long temporal_total() const;
  long unique_entities(EntityType t) const { return hubs[static_cast<int>(t)]; }
  bool operator==(const GraphCensus&) const = default;
  std::string to_string() const;
};

enum class EdgeScope { Structural, Temporal, Union };

/// Lowercases and strips all whitespace; linkage needs canonical identity.
std::string normalize_entity_key(const std::string& raw);

/// The unrolled dynamic heterogeneous graph: one structural bipartite
/// subgraph per week plus the temporal hub stars, over a single node index
/// space. Single-writer while building; freeze() builds the CSR caches and
/// makes the graph immutable and safely shareable across readers.
class DynamicHeteroGraph {
 public:
  DynamicHeteroGraph(int num_time_steps, int d_account);

  /// Inserts the account node and all its entity links at the given week.
  /// Reuses per-week entity instances and hubs; adds the hub star edge
  /// exactly once per (entity, week). Returns the account node index.
  int add_registration(const RegistrationRecord& record, int time_step);

  void freeze();
  bool frozen() const { return frozen_; }

  int num_time_steps() const { return num_steps_; }
  int d_account() const { return d_account_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  long num_edges() const { return static_cast<long>(edges_.size()); }
  const std::vector<NodeRef>& nodes() const { return nodes_; }
  const std::vector<EdgeRecord>& edges() const { return edges_; }
  const std::vector<int>& account_nodes() const { return account_nodes_; }

  const SparseMatrix& structural_csr() const;
  const SparseMatrix& temporal_csr() const;

  GraphCensus census() const;

  /// Symmetric GCN normalization over the selected edge kind:
  /// D^{-1/2}(A+I)D^{-1/2} with self loops, D^{-1/2} A D^{-1/2} without.
  SparseMatrix normalized_adjacency(EdgeScope scope, bool self_loops) const;

  /// Undirected neighbor pattern (union scope) with self loops; values 1.
  SparseMatrix neighbor_pattern(EdgeScope scope) const;

  /// Rebuild from serialized parts; validates node/edge consistency.
  static DynamicHeteroGraph from_parts(int num_time_steps, int d_account,
                                       std::vector<NodeRef> nodes,
                                       std::vector<EdgeRecord> edges);

 private:
  int add_node(NodeRef node);
  SparseMatrix build_symmetric_csr(EdgeScope scope) const;
  void require_mutable() const;

  int num_steps_;
  int d_account_;
  std::vector<NodeRef> nodes_;
  std::vector<EdgeRecord> edges_;
  std::vector<int> account_nodes_;
  std::unordered_map<std::string, int> account_index_;
  std::unordered_map<std::string, int> instance_index_;  // "type|key|t"
  std::unordered_map<std::string, int> hub_index_;       // "type|key"
  bool frozen_ = false;
  SparseMatrix structural_csr_;
  SparseMatrix temporal_csr_;
};

/// Account labels; -1 means unlabeled. Only Account nodes may carry labels.
struct LabelTable {
  std::vector<int8_t> labels;  // indexed by node

  long count_labeled() const {
    long n = 0;
    for (int8_t l : labels) n += l >= 0;
    return n;
  }
};

/// Node features: account rows copied from records, all other rows zero.
struct FeatureTable {
  DenseMatrix features;  // num_nodes x d_account
};

}  // namespace dhg

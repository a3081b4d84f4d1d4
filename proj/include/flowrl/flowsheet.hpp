#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flowrl/thermo.hpp"

namespace flowrl::flowsheet {

enum class UnitKind : int {
  Feed = 0,
  PFR,
  Column,
  Heater,
  Splitter,
  Mixer,
  ProductSink,
};
inline constexpr int kUnitKindCount = 7;

std::string_view to_string(UnitKind kind);
std::optional<UnitKind> unit_kind_from(std::string_view token);

struct UnitNode {
  int node_id = -1;
  UnitKind kind = UnitKind::Feed;
  std::optional<double> design_value;  // raw level-3 action in [0,1]
};

struct StreamEdge {
  int edge_id = -1;
  int from_node = -1;
  std::optional<int> to_node;             // absent while the stream is open
  std::optional<thermo::Stream> payload;  // populated by simulation

  bool open() const { return !to_node.has_value(); }
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_),
        line(line_) {}
};

// Directed flowsheet graph: nodes are unit operations, edges are streams.
// Value-semantic; copies are independent snapshots.
class FlowsheetGraph {
 public:
  FlowsheetGraph() = default;

  // One Feed node with a single open stream carrying the feed payload.
  static FlowsheetGraph fresh(const thermo::Stream& feed);

  struct AttachResult {
    int node_id = -1;
    std::vector<int> new_open_edges;  // column: distillate first, bottoms second
  };

  // Closes the open edge into a new unit node. kind must be one of
  // PFR / Column / Heater / ProductSink. design_value (raw, [0,1]) is
  // required for PFR/Column/Heater and must be absent for ProductSink.
  AttachResult attach_unit(int open_edge_id, UnitKind kind,
                           std::optional<double> design_value);

  struct RecycleResult {
    int splitter_id = -1;
    int mixer_id = -1;
    int recycle_edge = -1;  // splitter -> mixer, marked as tear candidate
    int purge_edge = -1;    // new open edge
  };

  // Splits the chosen open stream into recycle + purge; the recycle merges
  // into a mixer spliced directly downstream of the feed node (shared by all
  // recycles). split_raw in [0,1] scales to [0.1, 0.9] at simulation time.
  RecycleResult attach_recycle(int open_edge_id, double split_raw);

  bool complete() const { return open_streams_.empty(); }

  const std::map<int, UnitNode>& nodes() const { return nodes_; }
  const std::map<int, StreamEdge>& edges() const { return edges_; }
  const std::vector<int>& open_streams() const { return open_streams_; }
  const std::set<int>& recycle_edges() const { return recycle_edges_; }

  const UnitNode& node(int node_id) const;
  const StreamEdge& edge(int edge_id) const;

  int feed_node() const { return feed_node_; }
  // True iff the edge is the feed node's direct outlet and still open
  // (recycling it is masked upstream).
  bool is_untouched_feed_edge(int edge_id) const;

  void set_payload(int edge_id, const thermo::Stream& s);
  void clear_payloads_downstream();  // drop all payloads except the feed edge

  std::vector<int> inlet_edges(int node_id) const;   // sorted by edge id
  std::vector<int> outlet_edges(int node_id) const;  // sorted by edge id

  // Used by deserialize; performs no validation beyond id uniqueness.
  void raw_insert_node(UnitNode n);
  void raw_insert_edge(StreamEdge e);
  void raw_set_open_streams(std::vector<int> ids);
  void raw_set_recycle_edges(std::set<int> ids);
  void raw_finalize();  // recompute id counters and feed node

 private:
  int new_node_id() { return next_node_id_++; }
  int new_edge_id() { return next_edge_id_++; }

  std::map<int, UnitNode> nodes_;
  std::map<int, StreamEdge> edges_;
  std::vector<int> open_streams_;  // ordered; level-1 actions index this
  std::set<int> recycle_edges_;
  int next_node_id_ = 0;
  int next_edge_id_ = 0;
  int feed_node_ = -1;
};

struct FeatureScale {
  double t_ref = 400.0;       // K
  double feed_total = 10.0;   // mol/s, config feed total flow
};

inline constexpr int kNodeFeatureSize = kUnitKindCount + 1;  // one-hot + design
inline constexpr int kEdgeFeatureSize = 7;  // T, 4 flows, total, open flag

std::array<double, kNodeFeatureSize> node_features(const FlowsheetGraph& g,
                                                   int node_id);
std::array<double, kEdgeFeatureSize> edge_features(const FlowsheetGraph& g,
                                                   int edge_id,
                                                   const FeatureScale& scale);

// UTF-8 text, one record per line, sections NODES / EDGES / OPEN / RECYCLE.
// Numeric fields use 17 significant digits so round trips are bit-exact.
// Grammar in docs/flowsheet_format.md.
std::string serialize(const FlowsheetGraph& g);
FlowsheetGraph deserialize(const std::string& text);  // throws ParseError

// Full-graph consistency audit: open list vs edge endpoints, feed/sink arity,
// reachability from the feed. Returns a description of the first violation,
// or nullopt when consistent.
std::optional<std::string> audit(const FlowsheetGraph& g);

}  // namespace flowrl::flowsheet

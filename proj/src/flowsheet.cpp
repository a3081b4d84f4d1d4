#include "flowrl/flowsheet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <sstream>

namespace flowrl::flowsheet {

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Feed:        return "Feed";
    case UnitKind::PFR:         return "PFR";
    case UnitKind::Column:      return "Column";
    case UnitKind::Heater:      return "Heater";
    case UnitKind::Splitter:    return "Splitter";
    case UnitKind::Mixer:       return "Mixer";
    case UnitKind::ProductSink: return "ProductSink";
  }
  return "?";
}

std::optional<UnitKind> unit_kind_from(std::string_view token) {
  for (int k = 0; k < kUnitKindCount; ++k) {
    UnitKind kind = static_cast<UnitKind>(k);
    if (token == to_string(kind)) return kind;
  }
  return std::nullopt;
}

FlowsheetGraph FlowsheetGraph::fresh(const thermo::Stream& feed) {
  if (!feed.valid())
    throw std::invalid_argument("fresh: invalid feed stream");
  FlowsheetGraph g;
  int fn = g.new_node_id();
  g.nodes_[fn] = UnitNode{fn, UnitKind::Feed, std::nullopt};
  g.feed_node_ = fn;
  int fe = g.new_edge_id();
  StreamEdge e;
  e.edge_id = fe;
  e.from_node = fn;
  e.payload = feed;
  g.edges_[fe] = e;
  g.open_streams_.push_back(fe);
  return g;
}

const UnitNode& FlowsheetGraph::node(int node_id) const {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end())
    throw std::invalid_argument("unknown node id " + std::to_string(node_id));
  return it->second;
}

const StreamEdge& FlowsheetGraph::edge(int edge_id) const {
  auto it = edges_.find(edge_id);
  if (it == edges_.end())
    throw std::invalid_argument("unknown edge id " + std::to_string(edge_id));
  return it->second;
}

bool FlowsheetGraph::is_untouched_feed_edge(int edge_id) const {
  const StreamEdge& e = edge(edge_id);
  return e.open() && e.from_node == feed_node_;
}

void FlowsheetGraph::set_payload(int edge_id, const thermo::Stream& s) {
  auto it = edges_.find(edge_id);
  if (it == edges_.end())
    throw std::invalid_argument("unknown edge id " + std::to_string(edge_id));
  it->second.payload = s;
}

void FlowsheetGraph::clear_payloads_downstream() {
  for (auto& [id, e] : edges_) {
    if (e.from_node != feed_node_) e.payload.reset();
  }
}

std::vector<int> FlowsheetGraph::inlet_edges(int node_id) const {
  std::vector<int> out;
  for (const auto& [id, e] : edges_)
    if (e.to_node && *e.to_node == node_id) out.push_back(id);
  return out;
}

std::vector<int> FlowsheetGraph::outlet_edges(int node_id) const {
  std::vector<int> out;
  for (const auto& [id, e] : edges_)
    if (e.from_node == node_id) out.push_back(id);
  return out;
}

FlowsheetGraph::AttachResult FlowsheetGraph::attach_unit(
    int open_edge_id, UnitKind kind, std::optional<double> design_value) {
  auto it = edges_.find(open_edge_id);
  if (it == edges_.end() || !it->second.open())
    throw std::invalid_argument("attach_unit: edge " +
                                std::to_string(open_edge_id) + " is not open");
  const bool needs_design =
      kind == UnitKind::PFR || kind == UnitKind::Column || kind == UnitKind::Heater;
  if (!needs_design && kind != UnitKind::ProductSink)
    throw std::invalid_argument("attach_unit: cannot attach unit kind " +
                                std::string(to_string(kind)));
  if (needs_design) {
    if (!design_value)
      throw std::invalid_argument("attach_unit: design value required for " +
                                  std::string(to_string(kind)));
    if (!std::isfinite(*design_value) || *design_value < 0.0 || *design_value > 1.0)
      throw std::invalid_argument("attach_unit: design value must lie in [0,1]");
  } else if (design_value) {
    throw std::invalid_argument("attach_unit: ProductSink takes no design value");
  }

  AttachResult res;
  res.node_id = new_node_id();
  nodes_[res.node_id] = UnitNode{res.node_id, kind, design_value};
  it->second.to_node = res.node_id;

  int n_out = 0;
  if (kind == UnitKind::PFR || kind == UnitKind::Heater) n_out = 1;
  if (kind == UnitKind::Column) n_out = 2;
  for (int i = 0; i < n_out; ++i) {
    int eid = new_edge_id();
    StreamEdge e;
    e.edge_id = eid;
    e.from_node = res.node_id;
    edges_[eid] = e;
    res.new_open_edges.push_back(eid);
  }

  open_streams_.erase(
      std::find(open_streams_.begin(), open_streams_.end(), open_edge_id));
  for (int eid : res.new_open_edges) open_streams_.push_back(eid);
  return res;
}

FlowsheetGraph::RecycleResult FlowsheetGraph::attach_recycle(int open_edge_id,
                                                             double split_raw) {
  auto it = edges_.find(open_edge_id);
  if (it == edges_.end() || !it->second.open())
    throw std::invalid_argument("attach_recycle: edge " +
                                std::to_string(open_edge_id) + " is not open");
  if (is_untouched_feed_edge(open_edge_id))
    throw std::invalid_argument(
        "attach_recycle: cannot recycle the raw feed stream");
  if (!std::isfinite(split_raw) || split_raw < 0.0 || split_raw > 1.0)
    throw std::invalid_argument("attach_recycle: split value must lie in [0,1]");

  RecycleResult res;

  // Splitter consumes the chosen stream.
  res.splitter_id = new_node_id();
  nodes_[res.splitter_id] = UnitNode{res.splitter_id, UnitKind::Splitter, split_raw};
  it->second.to_node = res.splitter_id;

  // Locate or splice the shared mixer directly downstream of the feed.
  auto feed_out = outlet_edges(feed_node_);
  if (feed_out.size() != 1)
    throw std::invalid_argument("attach_recycle: feed node must have one outlet");
  StreamEdge& ef = edges_.at(feed_out[0]);
  if (ef.to_node && nodes_.at(*ef.to_node).kind == UnitKind::Mixer) {
    res.mixer_id = *ef.to_node;
  } else {
    res.mixer_id = new_node_id();
    nodes_[res.mixer_id] = UnitNode{res.mixer_id, UnitKind::Mixer, std::nullopt};
    int mid_out = new_edge_id();
    StreamEdge m;
    m.edge_id = mid_out;
    m.from_node = res.mixer_id;
    m.to_node = ef.to_node;  // may be absent (open feed edge is masked upstream)
    edges_[mid_out] = m;
    if (!ef.to_node) {
      // Preserve position in the open list.
      std::replace(open_streams_.begin(), open_streams_.end(), ef.edge_id, mid_out);
    }
    ef.to_node = res.mixer_id;
  }

  // Recycle branch: splitter -> mixer, marked as a tear candidate.
  res.recycle_edge = new_edge_id();
  {
    StreamEdge r;
    r.edge_id = res.recycle_edge;
    r.from_node = res.splitter_id;
    r.to_node = res.mixer_id;
    edges_[res.recycle_edge] = r;
    recycle_edges_.insert(res.recycle_edge);
  }

  // Purge branch: new open stream.
  res.purge_edge = new_edge_id();
  {
    StreamEdge p;
    p.edge_id = res.purge_edge;
    p.from_node = res.splitter_id;
    edges_[res.purge_edge] = p;
  }

  open_streams_.erase(
      std::find(open_streams_.begin(), open_streams_.end(), open_edge_id));
  open_streams_.push_back(res.purge_edge);
  return res;
}

void FlowsheetGraph::raw_insert_node(UnitNode n) {
  if (nodes_.count(n.node_id))
    throw std::invalid_argument("duplicate node id " + std::to_string(n.node_id));
  nodes_[n.node_id] = n;
}

void FlowsheetGraph::raw_insert_edge(StreamEdge e) {
  if (edges_.count(e.edge_id))
    throw std::invalid_argument("duplicate edge id " + std::to_string(e.edge_id));
  edges_[e.edge_id] = e;
}

void FlowsheetGraph::raw_set_open_streams(std::vector<int> ids) {
  open_streams_ = std::move(ids);
}

void FlowsheetGraph::raw_set_recycle_edges(std::set<int> ids) {
  recycle_edges_ = std::move(ids);
}

void FlowsheetGraph::raw_finalize() {
  next_node_id_ = nodes_.empty() ? 0 : nodes_.rbegin()->first + 1;
  next_edge_id_ = edges_.empty() ? 0 : edges_.rbegin()->first + 1;
  feed_node_ = -1;
  for (const auto& [id, n] : nodes_)
    if (n.kind == UnitKind::Feed) {
      feed_node_ = id;
      break;
    }
}

std::array<double, kNodeFeatureSize> node_features(const FlowsheetGraph& g,
                                                   int node_id) {
  const UnitNode& n = g.node(node_id);
  std::array<double, kNodeFeatureSize> f{};
  f[static_cast<int>(n.kind)] = 1.0;
  f[kUnitKindCount] = n.design_value.value_or(0.0);
  return f;
}

std::array<double, kEdgeFeatureSize> edge_features(const FlowsheetGraph& g,
                                                   int edge_id,
                                                   const FeatureScale& scale) {
  const StreamEdge& e = g.edge(edge_id);
  std::array<double, kEdgeFeatureSize> f{};
  if (e.payload) {
    const thermo::Stream& s = *e.payload;
    f[0] = s.temperature / scale.t_ref;
    for (int i = 0; i < 4; ++i) f[1 + i] = s.molar_flows[i] / scale.feed_total;
    f[5] = s.total_flow() / scale.feed_total;
  }
  f[6] = e.open() ? 1.0 : 0.0;
  return f;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct LineReader {
  std::istringstream in;
  int line_no = 0;
  explicit LineReader(const std::string& text) : in(text) {}

  // Returns the next non-empty, non-comment line.
  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      std::size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos) continue;
      if (line[start] == '#') continue;
      std::size_t end = line.find_last_not_of(" \t\r");
      return line.substr(start, end - start + 1);
    }
    return std::nullopt;
  }
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, int line_no) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size())
    throw ParseError(line_no, "expected number, got '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line_no) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size())
    throw ParseError(line_no, "expected integer, got '" + tok + "'");
  return static_cast<int>(v);
}

int expect_section(LineReader& r, const std::string& name) {
  auto line = r.next();
  if (!line) throw ParseError(r.line_no, "unexpected end of file, wanted " + name);
  auto fields = split_fields(*line);
  if (fields.size() != 2 || fields[0] != name)
    throw ParseError(r.line_no, "expected section header '" + name + " <count>'");
  int count = parse_int(fields[1], r.line_no);
  if (count < 0) throw ParseError(r.line_no, "negative section count");
  return count;
}

}  // namespace

std::string serialize(const FlowsheetGraph& g) {
  std::ostringstream out;
  out << "FLOWSHEET v1\n";
  out << "NODES " << g.nodes().size() << "\n";
  for (const auto& [id, n] : g.nodes()) {
    out << id << " " << to_string(n.kind) << " ";
    out << (n.design_value ? fmt_double(*n.design_value) : std::string("-"));
    out << "\n";
  }
  out << "EDGES " << g.edges().size() << "\n";
  for (const auto& [id, e] : g.edges()) {
    out << id << " " << e.from_node << " ";
    if (e.to_node)
      out << *e.to_node;
    else
      out << "-";
    if (e.payload) {
      const thermo::Stream& s = *e.payload;
      out << " " << fmt_double(s.temperature) << " " << fmt_double(s.pressure);
      for (double f : s.molar_flows) out << " " << fmt_double(f);
    } else {
      out << " -";
    }
    out << "\n";
  }
  out << "OPEN " << g.open_streams().size() << "\n";
  for (int id : g.open_streams()) out << id << "\n";
  out << "RECYCLE " << g.recycle_edges().size() << "\n";
  for (int id : g.recycle_edges()) out << id << "\n";
  out << "END\n";
  return out.str();
}

FlowsheetGraph deserialize(const std::string& text) {
  LineReader r(text);
  auto header = r.next();
  if (!header) throw ParseError(r.line_no, "empty flowsheet file");
  if (*header != "FLOWSHEET v1")
    throw ParseError(r.line_no, "bad header '" + *header +
                                    "', expected 'FLOWSHEET v1'");

  FlowsheetGraph g;
  int n_nodes = expect_section(r, "NODES");
  int feed_count = 0;
  for (int i = 0; i < n_nodes; ++i) {
    auto line = r.next();
    if (!line) throw ParseError(r.line_no, "unexpected end of NODES section");
    auto f = split_fields(*line);
    if (f.size() != 3)
      throw ParseError(r.line_no, "node record needs 3 fields, got " +
                                      std::to_string(f.size()));
    UnitNode n;
    n.node_id = parse_int(f[0], r.line_no);
    auto kind = unit_kind_from(f[1]);
    if (!kind)
      throw ParseError(r.line_no, "unknown unit kind '" + f[1] + "'");
    n.kind = *kind;
    if (f[2] != "-") n.design_value = parse_double(f[2], r.line_no);
    if (n.kind == UnitKind::Feed) ++feed_count;
    try {
      g.raw_insert_node(n);
    } catch (const std::invalid_argument& e) {
      throw ParseError(r.line_no, e.what());
    }
  }
  if (feed_count != 1)
    throw ParseError(r.line_no, "flowsheet must contain exactly one Feed node");

  int n_edges = expect_section(r, "EDGES");
  for (int i = 0; i < n_edges; ++i) {
    auto line = r.next();
    if (!line) throw ParseError(r.line_no, "unexpected end of EDGES section");
    auto f = split_fields(*line);
    if (f.size() != 4 && f.size() != 9)
      throw ParseError(r.line_no, "edge record needs 4 or 9 fields, got " +
                                      std::to_string(f.size()));
    StreamEdge e;
    e.edge_id = parse_int(f[0], r.line_no);
    e.from_node = parse_int(f[1], r.line_no);
    if (f[2] != "-") e.to_node = parse_int(f[2], r.line_no);
    if (f.size() == 9) {
      thermo::Stream s;
      s.temperature = parse_double(f[3], r.line_no);
      s.pressure = parse_double(f[4], r.line_no);
      for (int c = 0; c < 4; ++c) s.molar_flows[c] = parse_double(f[5 + c], r.line_no);
      e.payload = s;
    } else if (f[3] != "-") {
      throw ParseError(r.line_no, "expected '-' or a 6-number payload");
    }
    if (!g.nodes().count(e.from_node))
      throw ParseError(r.line_no,
                       "edge references unknown node " + std::to_string(e.from_node));
    if (e.to_node && !g.nodes().count(*e.to_node))
      throw ParseError(r.line_no,
                       "edge references unknown node " + std::to_string(*e.to_node));
    try {
      g.raw_insert_edge(e);
    } catch (const std::invalid_argument& ex) {
      throw ParseError(r.line_no, ex.what());
    }
  }

  int n_open = expect_section(r, "OPEN");
  std::vector<int> open_ids;
  for (int i = 0; i < n_open; ++i) {
    auto line = r.next();
    if (!line) throw ParseError(r.line_no, "unexpected end of OPEN section");
    int id = parse_int(*line, r.line_no);
    if (!g.edges().count(id))
      throw ParseError(r.line_no, "OPEN references unknown edge " + std::to_string(id));
    if (!g.edges().at(id).open())
      throw ParseError(r.line_no,
                       "OPEN lists edge " + std::to_string(id) + " which has a target");
    open_ids.push_back(id);
  }
  std::size_t actually_open = 0;
  for (const auto& [id, e] : g.edges())
    if (e.open()) ++actually_open;
  if (actually_open != open_ids.size())
    throw ParseError(r.line_no, "OPEN section does not cover all open edges");
  {
    std::set<int> uniq(open_ids.begin(), open_ids.end());
    if (uniq.size() != open_ids.size())
      throw ParseError(r.line_no, "OPEN section lists an edge twice");
  }
  g.raw_set_open_streams(std::move(open_ids));

  int n_rec = expect_section(r, "RECYCLE");
  std::set<int> rec_ids;
  for (int i = 0; i < n_rec; ++i) {
    auto line = r.next();
    if (!line) throw ParseError(r.line_no, "unexpected end of RECYCLE section");
    int id = parse_int(*line, r.line_no);
    if (!g.edges().count(id))
      throw ParseError(r.line_no,
                       "RECYCLE references unknown edge " + std::to_string(id));
    rec_ids.insert(id);
  }
  g.raw_set_recycle_edges(std::move(rec_ids));

  auto tail = r.next();
  if (!tail || *tail != "END")
    throw ParseError(r.line_no, "expected END");
  g.raw_finalize();
  return g;
}

std::optional<std::string> audit(const FlowsheetGraph& g) {
  if (g.feed_node() < 0) return "no feed node";
  std::set<int> open_listed(g.open_streams().begin(), g.open_streams().end());
  if (open_listed.size() != g.open_streams().size())
    return "open list contains duplicates";
  for (const auto& [id, e] : g.edges()) {
    if (!g.nodes().count(e.from_node))
      return "edge " + std::to_string(id) + " has missing source node";
    if (e.to_node && !g.nodes().count(*e.to_node))
      return "edge " + std::to_string(id) + " has missing target node";
    if (e.open() != (open_listed.count(id) > 0))
      return "edge " + std::to_string(id) + " open flag disagrees with open list";
  }
  for (const auto& [id, n] : g.nodes()) {
    if (n.kind == UnitKind::Feed && !g.inlet_edges(id).empty())
      return "feed node " + std::to_string(id) + " has inbound edges";
    if (n.kind == UnitKind::ProductSink && !g.outlet_edges(id).empty())
      return "product sink " + std::to_string(id) + " has outbound edges";
    // Range checks live in the unit models (out-of-range designs must surface
    // as UnitInfeasible, not Malformed), but the value must at least be a number.
    if (n.design_value && !std::isfinite(*n.design_value))
      return "node " + std::to_string(id) + " has a non-finite design value";
  }
  // Reachability from the feed along directed edges.
  std::set<int> seen{g.feed_node()};
  std::deque<int> queue{g.feed_node()};
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    for (const auto& [id, e] : g.edges()) {
      if (e.from_node == cur && e.to_node && !seen.count(*e.to_node)) {
        seen.insert(*e.to_node);
        queue.push_back(*e.to_node);
      }
    }
  }
  for (const auto& [id, n] : g.nodes())
    if (!seen.count(id))
      return "node " + std::to_string(id) + " unreachable from feed";
  return std::nullopt;
}

}  // namespace flowrl::flowsheet

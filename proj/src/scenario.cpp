#include "itsbft/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace itsbft {

ScenarioError::ScenarioError(int l, int c, const std::string& message)
    : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + message),
      line(l),
      column(c) {}

namespace {

[[noreturn]] void fail(const YAML::Node& at, const std::string& message) {
  const YAML::Mark m = at.Mark();
  if (m.line >= 0) throw ScenarioError(m.line + 1, m.column + 1, message);
  throw ScenarioError("override: " + message);
}

// Mapping with a fixed key set; finish() rejects anything not read.
class Fields {
 public:
  Fields(const YAML::Node& node, std::string what) : node_(node), what_(std::move(what)) {
    if (!node_.IsMap()) fail(node_, what_ + " must be a mapping");
  }
  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }
  YAML::Node require(const std::string& key) {
    auto n = get(key);
    if (!n.IsDefined() || n.IsNull()) fail(node_, what_ + ": missing '" + key + "'");
    return n;
  }
  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.Scalar();
      if (!seen_.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what_);
    }
  }
  const YAML::Node& node() const { return node_; }

 private:
  const YAML::Node node_;
  std::string what_;
  std::set<std::string> seen_;
};

bool present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

std::uint64_t as_u64(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field + ": expected an unsigned integer");
  std::string s = n.Scalar();
  std::erase(s, '_');
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size())
    fail(n, field + ": expected an unsigned integer, got '" + n.Scalar() + "'");
  return v;
}

double as_double(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field + ": expected a number");
  const std::string& s = n.Scalar();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) fail(n, field + ": expected a number, got '" + s + "'");
  return v;
}

std::string as_string(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field + ": expected a string");
  return n.Scalar();
}

NodeId as_node(const YAML::Node& n, std::size_t node_count, const std::string& field) {
  const auto v = as_u64(n, field);
  if (v >= node_count)
    fail(n, field + ": node " + std::to_string(v) + " is not in the topology (" + std::to_string(node_count) +
                " nodes)");
  return static_cast<NodeId>(v);
}

const YAML::Node& sequence(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail(n, field + " must be a list");
  return n;
}

Graph parse_topology(const YAML::Node& node, std::string& name) {
  Fields t(node, "topology");
  if (auto n = t.get("name"); present(n)) name = as_string(n, "topology.name");
  const auto count_node = t.require("nodes");
  const auto count = as_u64(count_node, "topology.nodes");
  if (count < 2 || count > 100'000) fail(count_node, "topology.nodes must be in [2, 100000]");
  const auto kind_node = t.get("kind");
  const auto edges_node = t.get("edges");
  const auto jumps_node = t.get("jumps");
  std::vector<Edge> edges;
  if (present(kind_node)) {
    if (present(edges_node)) fail(edges_node, "topology: give either 'kind' or 'edges', not both");
    const auto kind = as_string(kind_node, "topology.kind");
    if (kind != "circulant" && present(jumps_node)) fail(jumps_node, "topology.jumps applies to kind circulant only");
    if (kind == "ring")
      edges = Graph::ring(count).edges();
    else if (kind == "complete")
      edges = Graph::complete(count).edges();
    else if (kind == "path")
      edges = Graph::path(count).edges();
    else if (kind == "circulant") {
      if (!present(jumps_node)) fail(kind_node, "topology: kind circulant needs 'jumps'");
      std::set<Edge> unique;
      for (const auto& j : sequence(jumps_node, "topology.jumps")) {
        const auto jump = as_u64(j, "topology.jumps");
        if (jump == 0 || jump >= count) fail(j, "topology.jumps: jump must be in [1, nodes)");
        for (std::uint64_t i = 0; i < count; ++i)
          unique.insert(Edge(static_cast<NodeId>(i), static_cast<NodeId>((i + jump) % count)));
      }
      edges.assign(unique.begin(), unique.end());
    } else {
      fail(kind_node, "topology.kind must be ring, complete, path or circulant, got '" + kind + "'");
    }
  } else {
    if (!present(edges_node)) fail(node, "topology: missing 'edges' (or 'kind')");
    if (present(jumps_node)) fail(jumps_node, "topology.jumps applies to kind circulant only");
    std::set<Edge> seen;
    for (const auto& e : sequence(edges_node, "topology.edges")) {
      if (!e.IsSequence() || e.size() != 2) fail(e, "topology.edges: each edge is a pair [a, b]");
      const NodeId a = as_node(e[0], count, "topology.edges");
      const NodeId b = as_node(e[1], count, "topology.edges");
      if (a == b) fail(e, "topology.edges: self-loop on node " + std::to_string(a));
      if (!seen.insert(Edge(a, b)).second)
        fail(e, "topology.edges: duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
      edges.emplace_back(a, b);
    }
  }
  t.finish();
  return Graph(count, edges);
}

void parse_security(const YAML::Node& node, SecurityParams& p) {
  Fields s(node, "security");
  if (auto n = s.get("epsilon"); present(n)) p.epsilon = as_double(n, "security.epsilon");
  if (auto n = s.get("epsilon_k"); present(n)) p.epsilon_k = as_double(n, "security.epsilon_k");
  if (auto n = s.get("omega"); present(n)) {
    const auto w = as_u64(n, "security.omega");
    if (w < 1 || w > 64) fail(n, "security.omega must be in [1, 64]");
    p.omega = static_cast<unsigned>(w);
  }
  if (auto n = s.get("ts_key_len_bits"); present(n)) p.ts_key_len_bits = as_u64(n, "security.ts_key_len_bits");
  s.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
}

std::vector<Demand> parse_demands(const YAML::Node& node, std::size_t node_count) {
  std::vector<Demand> out;
  std::set<std::uint32_t> ids;
  std::size_t index = 0;
  for (const auto& item : sequence(node, "demands")) {
    Fields d(item, "demand");
    Demand dm;
    dm.id = static_cast<std::uint32_t>(index++);
    if (auto n = d.get("id"); present(n)) {
      const auto id = as_u64(n, "demand.id");
      if (id >= 0x80000000u) fail(n, "demand.id: ids from 0x80000000 up are reserved");
      dm.id = static_cast<std::uint32_t>(id);
    }
    dm.src = as_node(d.require("src"), node_count, "demand.src");
    const auto dst = d.require("dst");
    dm.dst = as_node(dst, node_count, "demand.dst");
    if (dm.src == dm.dst) fail(dst, "demand: src and dst must differ");
    const auto amount = d.require("amount_bits");
    dm.amount_bits = as_u64(amount, "demand.amount_bits");
    if (dm.amount_bits == 0) fail(amount, "demand.amount_bits must be positive");
    d.finish();
    if (!ids.insert(dm.id).second) fail(item, "demand: duplicate id " + std::to_string(dm.id));
    out.push_back(dm);
  }
  return out;
}

AdversaryScript parse_adversary(const YAML::Node& node, std::size_t node_count) {
  Fields a(node, "adversary");
  AdversaryScript s;
  if (auto b = a.get("byzantine"); present(b))
    for (const auto& id : sequence(b, "adversary.byzantine"))
      if (!s.byzantine_set.insert(as_node(id, node_count, "adversary.byzantine")).second)
        fail(id, "adversary.byzantine: node listed twice");
  if (auto bh = a.get("behaviors"); present(bh)) {
    if (!bh.IsMap()) fail(bh, "adversary.behaviors must map node ids to behavior lists");
    for (const auto& kv : bh) {
      const NodeId who = as_node(kv.first, node_count, "adversary.behaviors");
      if (!s.is_byzantine(who)) fail(kv.first, "adversary.behaviors: node " + std::to_string(who) + " is not Byzantine");
      auto& list = s.behaviors[who];
      for (const auto& name : sequence(kv.second, "adversary.behaviors")) {
        const auto b = behavior_from_string(as_string(name, "adversary.behaviors"));
        if (!b) {
          std::string known;
          for (auto x : all_behaviors()) known += (known.empty() ? "" : ", ") + std::string(to_string(x));
          fail(name, "unknown behavior '" + name.Scalar() + "' (known: " + known + ")");
        }
        list.push_back(*b);
      }
    }
  }
  a.finish();
  return s;
}

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ScenarioError("override '" + spec + "': expected path=value");
  std::vector<std::string> keys;
  std::stringstream path(spec.substr(0, eq));
  for (std::string k; std::getline(path, k, '.');) {
    if (k.empty()) throw ScenarioError("override '" + spec + "': empty path component");
    keys.push_back(k);
  }
  YAML::Node value;
  try {
    value = YAML::Load(spec.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ScenarioError("override '" + spec + "': " + e.msg);
  }
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    YAML::Node next;
    if (cur.IsSequence()) {
      std::size_t idx = 0;
      const auto [end, ec] = std::from_chars(keys[i].data(), keys[i].data() + keys[i].size(), idx);
      if (ec != std::errc() || end != keys[i].data() + keys[i].size() || idx >= cur.size())
        throw ScenarioError("override '" + spec + "': no list element '" + keys[i] + "'");
      next.reset(cur[idx]);
    } else {
      if (!cur[keys[i]].IsMap() && !cur[keys[i]].IsSequence()) cur[keys[i]] = YAML::Node(YAML::NodeType::Map);
      next.reset(cur[keys[i]]);
    }
    cur.reset(next);
  }
  if (cur.IsSequence()) {
    std::size_t idx = 0;
    const auto& k = keys.back();
    const auto [end, ec] = std::from_chars(k.data(), k.data() + k.size(), idx);
    if (ec != std::errc() || end != k.data() + k.size() || idx >= cur.size())
      throw ScenarioError("override '" + spec + "': no list element '" + k + "'");
    cur[idx] = value;
  } else {
    cur[keys.back()] = value;
  }
}

ScenarioConfig parse(const YAML::Node& root) {
  if (!root.IsDefined() || root.IsNull()) throw ScenarioError("scenario document is empty");
  Fields top(root, "scenario");
  ScenarioConfig c;
  if (auto n = top.get("name"); present(n)) c.name = as_string(n, "name");
  c.graph = parse_topology(top.require("topology"), c.topology_name);
  const std::size_t count = c.graph.node_count();
  if (auto n = top.get("capacity_bits"); present(n)) c.capacity_bits = as_u64(n, "capacity_bits");
  if (auto n = top.get("cap_bits"); present(n)) c.cap_bits = as_u64(n, "cap_bits");
  if (auto n = top.get("seed"); present(n)) c.seed = as_u64(n, "seed");
  if (auto n = top.get("view_limit"); present(n)) c.view_limit = as_u64(n, "view_limit");
  if (auto n = top.get("contention_bits"); present(n)) c.contention_bits = as_u64(n, "contention_bits");
  if (auto n = top.get("delta_seconds"); present(n)) c.delta_seconds = as_double(n, "delta_seconds");
  if (auto n = top.get("f"); present(n)) c.f = as_u64(n, "f");
  if (auto n = top.get("security"); present(n)) parse_security(n, c.params);
  if (auto n = top.get("demands"); present(n)) c.demands = parse_demands(n, count);
  if (auto n = top.get("adversary"); present(n)) c.adversary = parse_adversary(n, count);
  top.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    fail(root, e.what());
  }
  return c;
}

std::string shortest(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

ScenarioConfig load_scenario(std::string_view text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  if (!overrides.empty() && !root.IsMap()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);
  return parse(root);
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open");
  std::stringstream text;
  text << in.rdbuf();
  try {
    return load_scenario(text.str(), overrides);
  } catch (const ScenarioError& e) {
    ScenarioError wrapped(path.string() + ": " + e.what());
    wrapped.line = e.line;
    wrapped.column = e.column;
    throw wrapped;
  }
}

std::string render_scenario(const ScenarioConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.topology_name;
  out << YAML::Key << "nodes" << YAML::Value << c.graph.node_count();
  out << YAML::Key << "edges" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& e : c.graph.edges()) out << YAML::Flow << YAML::BeginSeq << e.a << e.b << YAML::EndSeq;
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "capacity_bits" << YAML::Value << c.capacity_bits;
  out << YAML::Key << "cap_bits" << YAML::Value << c.cap_bits;
  out << YAML::Key << "delta_seconds" << YAML::Value << shortest(c.delta_seconds);
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "view_limit" << YAML::Value << c.view_limit;
  out << YAML::Key << "contention_bits" << YAML::Value << c.contention_bits;
  if (c.f) out << YAML::Key << "f" << YAML::Value << *c.f;
  out << YAML::Key << "security" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon" << YAML::Value << shortest(c.params.epsilon);
  out << YAML::Key << "epsilon_k" << YAML::Value << shortest(c.params.epsilon_k);
  out << YAML::Key << "omega" << YAML::Value << c.params.omega;
  out << YAML::Key << "ts_key_len_bits" << YAML::Value << c.params.ts_key_len_bits;
  out << YAML::EndMap;
  out << YAML::Key << "demands" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : c.demands) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << d.id << YAML::Key << "src" << YAML::Value << d.src;
    out << YAML::Key << "dst" << YAML::Value << d.dst << YAML::Key << "amount_bits" << YAML::Value << d.amount_bits;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "adversary" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "byzantine" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (NodeId b : c.adversary.byzantine_set) out << b;
  out << YAML::EndSeq;
  out << YAML::Key << "behaviors" << YAML::Value << YAML::BeginMap;
  for (const auto& [node, list] : c.adversary.behaviors) {
    out << YAML::Key << node << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto b : list) out << std::string(to_string(b));
    out << YAML::EndSeq;
  }
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace itsbft

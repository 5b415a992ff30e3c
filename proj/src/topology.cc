#include "magnneto/topology.h"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

namespace magnneto {
namespace {

struct Line {
  int number;
  std::vector<std::string_view> tokens;
};

// Splits into non-empty, comment-stripped, tokenized lines.
std::vector<Line> Tokenize(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    Line line{number, {}};
    size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      size_t j = i;
      while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
      if (j > i) line.tokens.push_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    pos = end + 1;
  }
  return lines;
}

[[noreturn]] void Fail(ErrorKind kind, int line, const std::string& msg) {
  throw Error(kind, msg + " at line " + std::to_string(line));
}

long long ParseInt(std::string_view tok, int line, const char* what) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    Fail(ErrorKind::kParse, line,
         std::string("malformed ") + what + " '" + std::string(tok) + "'");
  }
  return value;
}

double ParseDouble(std::string_view tok, int line, const char* what) {
  std::string s(tok);
  char* end = nullptr;
  double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(value)) {
    Fail(ErrorKind::kParse, line,
         std::string("malformed ") + what + " '" + s + "'");
  }
  return value;
}

void ExpectArity(const Line& line, size_t n, const char* what) {
  if (line.tokens.size() != n) {
    Fail(ErrorKind::kParse, line.number,
         std::string("malformed ") + what + " line: expected " +
             std::to_string(n) + " fields, got " +
             std::to_string(line.tokens.size()));
  }
}

// Exact shortest round-trip text for a double.
std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool AllReachable(int n, const std::vector<std::vector<LinkId>>& adj,
                  const std::vector<DirectedLink>& links, bool forward) {
  std::vector<char> seen(n, 0);
  std::queue<NodeId> queue;
  queue.push(0);
  seen[0] = 1;
  int count = 1;
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop();
    for (LinkId e : adj[v]) {
      NodeId u = forward ? links[e].dst : links[e].src;
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        queue.push(u);
      }
    }
  }
  return count == n;
}

}  // namespace

Topology::Topology(std::vector<std::string> labels,
                   std::vector<DirectedLink> links)
    : labels_(std::move(labels)), links_(std::move(links)) {
  const int n = num_nodes();
  if (n < 1) throw Error(ErrorKind::kValidation, "topology has no nodes");
  out_.assign(n, {});
  in_.assign(n, {});
  for (size_t i = 0; i < links_.size(); ++i) {
    const DirectedLink& l = links_[i];
    const std::string where = "link " + std::to_string(i);
    if (l.id != static_cast<LinkId>(i)) {
      throw Error(ErrorKind::kValidation, where + ": ids must be dense 0..E-1");
    }
    if (l.src < 0 || l.src >= n || l.dst < 0 || l.dst >= n) {
      throw Error(ErrorKind::kValidation, where + ": unknown node reference");
    }
    if (l.src == l.dst) throw Error(ErrorKind::kValidation, where + ": self-loop");
    if (!(l.capacity > 0.0) || !std::isfinite(l.capacity)) {
      throw Error(ErrorKind::kValidation, where + ": capacity must be > 0");
    }
    if (l.weight < 1) throw Error(ErrorKind::kValidation, where + ": weight < 1");
    out_[l.src].push_back(l.id);
    in_[l.dst].push_back(l.id);
  }
  if (!AllReachable(n, out_, links_, true) || !AllReachable(n, in_, links_, false)) {
    throw Error(ErrorKind::kValidation, "graph is not strongly connected");
  }
}

std::vector<int> Topology::weights() const {
  std::vector<int> w;
  w.reserve(links_.size());
  for (const auto& l : links_) w.push_back(l.weight);
  return w;
}

std::vector<double> Topology::capacities() const {
  std::vector<double> c;
  c.reserve(links_.size());
  for (const auto& l : links_) c.push_back(l.capacity);
  return c;
}

Topology Topology::WithWeights(const std::vector<int>& weights) const {
  if (weights.size() != links_.size()) {
    throw Error(ErrorKind::kValidation, "weight vector length mismatch");
  }
  std::vector<DirectedLink> links = links_;
  for (size_t i = 0; i < links.size(); ++i) links[i].weight = weights[i];
  return Topology(labels_, std::move(links));
}

void TrafficMatrix::set(NodeId src, NodeId dst, double rate) {
  if (src < 0 || src >= n_ || dst < 0 || dst >= n_) {
    throw Error(ErrorKind::kValidation, "demand node id out of range");
  }
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorKind::kValidation, "demand rate must be finite and >= 0");
  }
  demand_[size_t(src) * n_ + dst] = src == dst ? 0.0 : rate;
}

double TrafficMatrix::total() const {
  double sum = 0.0;
  for (double d : demand_) sum += d;
  return sum;
}

TrafficMatrix TrafficMatrix::Scaled(double factor) const {
  TrafficMatrix out = *this;
  for (double& d : out.demand_) d *= factor;
  return out;
}

Topology ParseTopology(std::string_view text) {
  const std::vector<Line> lines = Tokenize(text);
  size_t i = 0;
  if (i >= lines.size() || lines[i].tokens[0] != "NODES") {
    Fail(ErrorKind::kParse, i < lines.size() ? lines[i].number : 1,
         "expected NODES header");
  }
  ExpectArity(lines[i], 2, "NODES");
  const long long n = ParseInt(lines[i].tokens[1], lines[i].number, "node count");
  if (n < 1) Fail(ErrorKind::kValidation, lines[i].number, "node count must be >= 1");
  ++i;
  std::vector<std::string> labels(n);
  for (long long k = 0; k < n; ++k, ++i) {
    if (i >= lines.size()) Fail(ErrorKind::kParse, lines.back().number, "missing node line");
    const Line& line = lines[i];
    ExpectArity(line, 2, "node");
    if (ParseInt(line.tokens[0], line.number, "node id") != k) {
      Fail(ErrorKind::kValidation, line.number, "node ids must be dense and in order");
    }
    labels[k] = std::string(line.tokens[1]);
  }
  if (i >= lines.size() || lines[i].tokens[0] != "EDGES") {
    Fail(ErrorKind::kParse, i < lines.size() ? lines[i].number : lines.back().number,
         "expected EDGES header");
  }
  ExpectArity(lines[i], 3, "EDGES");
  const long long m = ParseInt(lines[i].tokens[1], lines[i].number, "edge count");
  if (m < 0) Fail(ErrorKind::kValidation, lines[i].number, "edge count must be >= 0");
  bool undirected;
  if (lines[i].tokens[2] == "directed") {
    undirected = false;
  } else if (lines[i].tokens[2] == "undirected") {
    undirected = true;
  } else {
    Fail(ErrorKind::kParse, lines[i].number,
         "edge mode must be 'directed' or 'undirected'");
  }
  ++i;
  std::vector<DirectedLink> links;
  for (long long k = 0; k < m; ++k, ++i) {
    if (i >= lines.size()) Fail(ErrorKind::kParse, lines.back().number, "missing edge line");
    const Line& line = lines[i];
    ExpectArity(line, 5, "edge");
    const int ln = line.number;
    if (ParseInt(line.tokens[0], ln, "edge id") != k) {
      Fail(ErrorKind::kValidation, ln, "edge ids must be dense and in order");
    }
    const long long src = ParseInt(line.tokens[1], ln, "source node");
    const long long dst = ParseInt(line.tokens[2], ln, "destination node");
    const double cap = ParseDouble(line.tokens[3], ln, "capacity");
    const long long weight = ParseInt(line.tokens[4], ln, "weight");
    if (src < 0 || src >= n || dst < 0 || dst >= n) {
      Fail(ErrorKind::kValidation, ln, "unknown node reference");
    }
    if (src == dst) Fail(ErrorKind::kValidation, ln, "self-loop");
    if (!(cap > 0.0)) Fail(ErrorKind::kValidation, ln, "nonpositive capacity");
    if (weight < 1 || weight > INT32_MAX) Fail(ErrorKind::kValidation, ln, "weight < 1");
    const int w = static_cast<int>(weight);
    links.push_back({static_cast<LinkId>(links.size()), int(src), int(dst), cap, w});
    if (undirected) {
      links.push_back({static_cast<LinkId>(links.size()), int(dst), int(src), cap, w});
    }
  }
  if (i < lines.size()) Fail(ErrorKind::kParse, lines[i].number, "trailing content");
  return Topology(std::move(labels), std::move(links));
}

std::string SerializeTopology(const Topology& topology) {
  std::ostringstream out;
  out << "NODES " << topology.num_nodes() << "\n";
  for (int v = 0; v < topology.num_nodes(); ++v) {
    out << v << " " << topology.label(v) << "\n";
  }
  out << "EDGES " << topology.num_links() << " directed\n";
  for (const auto& l : topology.links()) {
    out << l.id << " " << l.src << " " << l.dst << " " << FormatDouble(l.capacity)
        << " " << l.weight << "\n";
  }
  return out.str();
}

TrafficMatrix ParseTraffic(std::string_view text, int num_nodes) {
  const std::vector<Line> lines = Tokenize(text);
  TrafficMatrix tm(num_nodes);
  if (lines.empty()) return tm;
  if (lines[0].tokens[0] != "DEMANDS") {
    Fail(ErrorKind::kParse, lines[0].number, "expected DEMANDS header");
  }
  ExpectArity(lines[0], 2, "DEMANDS");
  const long long k = ParseInt(lines[0].tokens[1], lines[0].number, "demand count");
  if (k < 0) Fail(ErrorKind::kValidation, lines[0].number, "demand count must be >= 0");
  if (static_cast<long long>(lines.size()) - 1 != k) {
    Fail(ErrorKind::kParse, lines.back().number,
         "demand count mismatch: header says " + std::to_string(k));
  }
  for (size_t i = 1; i < lines.size(); ++i) {
    const Line& line = lines[i];
    ExpectArity(line, 3, "demand");
    const long long src = ParseInt(line.tokens[0], line.number, "source node");
    const long long dst = ParseInt(line.tokens[1], line.number, "destination node");
    const double rate = ParseDouble(line.tokens[2], line.number, "rate");
    if (src < 0 || src >= num_nodes || dst < 0 || dst >= num_nodes) {
      Fail(ErrorKind::kValidation, line.number, "node id out of range");
    }
    if (rate < 0.0) Fail(ErrorKind::kValidation, line.number, "negative rate");
    if (src == dst) continue;
    tm.set(int(src), int(dst), tm.at(int(src), int(dst)) + rate);
  }
  return tm;
}

std::string SerializeTraffic(const TrafficMatrix& tm) {
  std::ostringstream body;
  int count = 0;
  for (int s = 0; s < tm.size(); ++s) {
    for (int d = 0; d < tm.size(); ++d) {
      if (s == d || tm.at(s, d) == 0.0) continue;
      body << s << " " << d << " " << FormatDouble(tm.at(s, d)) << "\n";
      ++count;
    }
  }
  return "DEMANDS " + std::to_string(count) + "\n" + body.str();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

Topology LoadTopologyFile(const std::string& path) {
  try {
    return ParseTopology(ReadFile(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

TrafficMatrix LoadTrafficFile(const std::string& path, int num_nodes) {
  try {
    return ParseTraffic(ReadFile(path), num_nodes);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace magnneto

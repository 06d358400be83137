#include "netlab/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace netlab {

namespace {

std::string describe(int line, const std::string& message, const std::string& source) {
  std::string out = source.empty() ? std::string{} : source + ": ";
  if (line > 0) out += fmt::format("line {}: ", line);
  return out + message;
}

}  // namespace

ParseError::ParseError(int line, const std::string& message, const std::string& source)
    : std::runtime_error(describe(line, message, source)), line_(line), message_(message) {}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view token, int line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(line, fmt::format("bad number '{}'", token));
  return value;
}

}  // namespace

std::string format_graph(const NetworkGraph& graph) {
  std::string out = fmt::format("nodes {}\n", graph.node_count());
  for (const Edge& e : graph.edges()) {
    out += fmt::format("{} {} {} {} {}\n", e.u, e.v, format_double(e.attrs.cost),
                       format_double(e.attrs.delay), format_double(e.attrs.capacity));
  }
  return out;
}

NetworkGraph parse_graph(std::string_view text) {
  std::optional<NetworkGraph> graph;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (!graph) {
      if (tokens.size() != 2 || tokens[0] != "nodes")
        throw ParseError(line_no, "expected header 'nodes N'");
      const int n = parse_number<int>(tokens[1], line_no);
      if (n < 0) throw ParseError(line_no, "negative node count");
      graph.emplace(n);
      continue;
    }
    if (tokens.size() != 5) throw ParseError(line_no, "expected 'u v cost delay capacity'");
    const NodeId u = parse_number<int>(tokens[0], line_no);
    const NodeId v = parse_number<int>(tokens[1], line_no);
    EdgeAttrs attrs{parse_number<double>(tokens[2], line_no), parse_number<double>(tokens[3], line_no),
                    parse_number<double>(tokens[4], line_no)};
    try {
      graph->add_edge(u, v, attrs);
    } catch (const GraphError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!graph) throw ParseError(line_no, "missing 'nodes N' header");
  return std::move(*graph);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

NetworkGraph read_graph_file(const std::filesystem::path& path) {
  try {
    return parse_graph(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path.string());
  }
}

void write_graph_file(const std::filesystem::path& path, const NetworkGraph& graph) {
  write_text_file(path, format_graph(graph));
}

}  // namespace netlab

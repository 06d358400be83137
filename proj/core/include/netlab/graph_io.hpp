#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "netlab/graph.hpp"

namespace netlab {

/// Input error with the 1-based line it was found on (0 when not line-specific).
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message, const std::string& source = {});
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

// Graph text format:
//
//   nodes N
//   u v cost delay capacity      (one line per undirected edge)
//
// Blank lines and lines starting with '#' are ignored. Numbers are written in
// shortest round-trip form so write -> parse reproduces every double exactly.
std::string format_graph(const NetworkGraph& graph);
NetworkGraph parse_graph(std::string_view text);

NetworkGraph read_graph_file(const std::filesystem::path& path);
void write_graph_file(const std::filesystem::path& path, const NetworkGraph& graph);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace netlab

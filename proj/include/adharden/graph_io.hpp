#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "adharden/graph.hpp"

namespace adharden {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Graph document:
//   { "nodes": [{"id","kind","is_da","is_entry"}],
//     "edges": [{"id","src","dst","kind","blockable","p_d","p_f"}] }
// Probabilities travel as shortest-round-trip decimal strings, so a value
// written as "0.1" loads back as exactly the double 0.1.
std::string serialize_graph(const AttackGraph& g);
AttackGraph deserialize_graph(const std::string& text);

void save_graph(const AttackGraph& g, const std::filesystem::path& path);
AttackGraph load_graph(const std::filesystem::path& path);

// Shortest decimal string that round-trips the double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace adharden

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace hyperball {

// Scalar formatting for every emitted report: 17 significant digits, enough
// to round-trip a double, and byte-stable for a fixed input.
std::string format_double(double v);

// Deterministic JSON dump: keys in nlohmann's (sorted) order, two-space
// indent, floating point through format_double.
std::string dump_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& content);

} // namespace hyperball

#include "hyperball/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hyperball {

std::string format_double(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e9999" : "-1e9999";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string s(buf);
    // Keep JSON parsers treating the value as a number, not an integer.
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

namespace {

void dump_rec(const nlohmann::json& j, std::ostream& out, int indent) {
    const std::string pad(indent * 2, ' ');
    const std::string pad_in((indent + 1) * 2, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out << pad_in << nlohmann::json(it.key()).dump() << ": ";
                dump_rec(it.value(), out, indent + 1);
                if (i + 1 < j.size()) out << ",";
                out << "\n";
            }
            out << pad << "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            out << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out << pad_in;
                dump_rec(j[i], out, indent + 1);
                if (i + 1 < j.size()) out << ",";
                out << "\n";
            }
            out << pad << "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
            out << format_double(j.get<double>());
            return;
        default:
            out << j.dump();
            return;
    }
}

} // namespace

std::string dump_json(const nlohmann::json& j) {
    std::ostringstream out;
    dump_rec(j, out, 0);
    out << "\n";
    return out.str();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, dump_json(j));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

} // namespace hyperball

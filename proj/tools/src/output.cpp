#include "magspec/output.hpp"

#include "magspec/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>

namespace magspec::cli {
namespace {

double parse_real(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw InvalidArgument("not a number: '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidArgument("not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::ostream& open(const std::filesystem::path& path, std::ostream& fallback, std::unique_ptr<std::ofstream>& file) {
    if (path.empty()) return fallback;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file) throw Error("cannot write " + path.string());
    return *file;
}

}  // namespace

std::string OutputMeta::header_line() const {
    return "# magspec " + version + " config=" + config_hash + " grid=" + grid;
}

nlohmann::ordered_json OutputMeta::to_json() const {
    return {{"version", version}, {"config", config_hash}, {"grid", grid}};
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_real: conversion failed");
    return std::string(buf, ptr);
}

std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    return std::get<std::string>(c);
}

Table::Table(std::string name_, std::vector<std::string> columns_)
    : name(std::move(name_)), columns(std::move(columns_)) {}

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw Error("table " + name + ": row width does not match the header");
    rows.push_back(std::move(row));
}

Format parse_format(std::string_view text) {
    if (text == "csv") return Format::Csv;
    if (text == "json") return Format::Json;
    throw InvalidArgument("unknown format '" + std::string(text) + "' (expected csv or json)");
}

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void write_csv(std::ostream& out, const Table& t, const OutputMeta& meta) {
    out << meta.header_line() << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(format_cell(row[i]));
        out << '\n';
    }
}

nlohmann::ordered_json to_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return nullptr;
        return *d;
    }
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    if (const auto* b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

nlohmann::ordered_json records(const std::vector<Table>& tables) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            nlohmann::ordered_json rec;
            if (tables.size() > 1) rec["table"] = t.name;
            for (std::size_t i = 0; i < row.size(); ++i) rec[t.columns[i]] = to_json(row[i]);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

void write_json(std::ostream& out, const nlohmann::ordered_json& recs, const OutputMeta& meta) {
    nlohmann::ordered_json doc;
    doc["magspec"] = meta.to_json();
    doc["records"] = recs;
    out << doc.dump(2) << '\n';
}

}  // namespace

void emit(const std::vector<Table>& tables, Format format, const std::filesystem::path& out_dir,
          std::ostream& fallback, const OutputMeta& meta) {
    if (tables.empty()) throw Error("emit: nothing to write");
    if (format == Format::Json) {
        std::unique_ptr<std::ofstream> file;
        std::ostream& out = open(out_dir.empty() ? out_dir : out_dir / (tables.front().name + ".json"), fallback, file);
        write_json(out, records(tables), meta);
        return;
    }
    for (std::size_t k = 0; k < tables.size(); ++k) {
        std::unique_ptr<std::ofstream> file;
        std::ostream& out = open(out_dir.empty() ? out_dir : out_dir / (tables[k].name + ".csv"), fallback, file);
        if (out_dir.empty() && k > 0) out << '\n';
        write_csv(out, tables[k], meta);
    }
}

std::vector<int> parse_int_range(const std::string& text) {
    std::vector<int> out;
    if (auto pos = text.find(".."); pos != std::string::npos) {
        int a = parse_int(text.substr(0, pos));
        int b = parse_int(text.substr(pos + 2));
        if (b < a) throw InvalidArgument("empty range '" + text + "'");
        for (int i = a; i <= b; ++i) out.push_back(i);
        return out;
    }
    for (const auto& part : split(text, ',')) out.push_back(parse_int(part));
    return out;
}

std::vector<double> parse_real_range(const std::string& text) {
    std::vector<double> out;
    if (auto pos = text.find(".."); pos != std::string::npos) {
        auto colon = text.find(':', pos);
        if (colon == std::string::npos) throw InvalidArgument("range '" + text + "' needs a step (a..b:step)");
        double a = parse_real(text.substr(0, pos));
        double b = parse_real(text.substr(pos + 2, colon - pos - 2));
        double step = parse_real(text.substr(colon + 1));
        if (!(step > 0.0) || b < a) throw InvalidArgument("empty range '" + text + "'");
        const long n = std::lround(std::floor((b - a) / step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    for (const auto& part : split(text, ',')) out.push_back(parse_real(part));
    return out;
}

}  // namespace magspec::cli

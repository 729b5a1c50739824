// csv.hpp: Locale-independent numeric text and atomic file output
//
// Numbers are written with std::to_chars at 17 significant digits, so every
// double round-trips exactly and the bytes never depend on the C locale.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace fgrlab::io {

inline std::string format_number(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (r.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
    return {buf, r.ptr};
}

// Writes to a sibling temporary file, then renames over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("atomic_write: rename to " + path.string() + " failed: " + ec.message());
    }
}

// Column-oriented numeric table; every column has the same length.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;

    Table& add(std::string name, std::vector<double> values) {
        if (!data.empty() && values.size() != data.front().size())
            throw std::invalid_argument("Table: column '" + name + "' has " + std::to_string(values.size()) +
                                        " rows, expected " + std::to_string(data.front().size()));
        columns.push_back(std::move(name));
        data.push_back(std::move(values));
        return *this;
    }
    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

inline std::string to_csv(const Table& t) {
    std::string s;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) s += ',';
        s += t.columns[c];
    }
    s += '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.data.size(); ++c) {
            if (c) s += ',';
            s += format_number(t.data[c][r]);
        }
        s += '\n';
    }
    return s;
}

// Two-column text table of named scalars.
struct Summary {
    std::vector<std::pair<std::string, double>> rows;

    void add(std::string name, double v) { rows.emplace_back(std::move(name), v); }
};

inline std::string to_csv(const Summary& s) {
    std::string out = "quantity,value\n";
    for (const auto& [k, v] : s.rows) out += k + ',' + format_number(v) + '\n';
    return out;
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        std::vector<std::string> cells;
        std::size_t a = 0;
        while (true) {
            const auto b = line.find(',', a);
            cells.push_back(line.substr(a, b == std::string::npos ? std::string::npos : b - a));
            if (b == std::string::npos) break;
            a = b + 1;
        }
        rows.push_back(std::move(cells));
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    return rows;
}

} // namespace fgrlab::io

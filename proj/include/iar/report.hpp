#pragma once

// Tabular report model shared by every pipeline subcommand, rendered as TSV
// or JSON. Absent values print as "--" in TSV and null in JSON.

#include "iar/common.hpp"

#include <cstdint>
#include <deque>
#include <string>
#include <variant>
#include <vector>

namespace iar::report {

enum class Format { tsv, json };

Format format_from_string(std::string_view s);

struct Cell {
    std::variant<std::monostate, double, std::int64_t, std::string> value;
    int precision = 4;

    Cell() = default;
    Cell(double v, int prec = 4) : value(v), precision(prec) {}
    Cell(Maybe v, int prec = 4) : precision(prec) {
        if (v) value = *v;
    }
    Cell(std::int64_t v) : value(v) {}
    Cell(std::size_t v) : value(static_cast<std::int64_t>(v)) {}
    Cell(int v) : value(static_cast<std::int64_t>(v)) {}
    Cell(std::string v) : value(std::move(v)) {}
    Cell(const char* v) : value(std::string(v)) {}
    Cell(std::string_view v) : value(std::string(v)) {}

    static Cell absent() { return Cell(); }
    bool is_absent() const noexcept { return std::holds_alternative<std::monostate>(value); }
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

struct Report {
    std::string command;
    std::deque<Table> tables;  // deque: references from add_table stay valid

    Table& add_table(std::string name, std::vector<std::string> columns);
    const Table* find(std::string_view name) const;
};

std::string render(const Report& report, Format format);

// Fixed-precision rendering used by TSV output; "--" for absent.
std::string format_cell(const Cell& cell);

// "a/b/c" triplet of rank-biserial values as printed in MIP-Stats columns.
std::string triplet(Maybe a, Maybe b, Maybe c, int precision = 2);

}  // namespace iar::report

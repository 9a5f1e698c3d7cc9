#include "iar/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace iar::report {

Format format_from_string(std::string_view s) {
    if (s == "tsv") return Format::tsv;
    if (s == "json") return Format::json;
    throw ParameterError("unknown output format '" + std::string(s) + "'");
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw ShapeError("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

Table& Report::add_table(std::string name, std::vector<std::string> columns) {
    tables.push_back(Table{std::move(name), std::move(columns), {}});
    return tables.back();
}

const Table* Report::find(std::string_view name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::string format_cell(const Cell& cell) {
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "--";
            } else if constexpr (std::is_same_v<T, double>) {
                // Keep "-0.0000" from appearing for tiny negatives.
                const std::string s = fmt::format("{:.{}f}", v, cell.precision);
                if (s.find_first_not_of("-0.") == std::string::npos) return s[0] == '-' ? s.substr(1) : s;
                return s;
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else {
                return v;
            }
        },
        cell.value);
}

std::string triplet(Maybe a, Maybe b, Maybe c, int precision) {
    return format_cell(Cell(a, precision)) + "/" + format_cell(Cell(b, precision)) + "/" +
           format_cell(Cell(c, precision));
}

namespace {

std::string tsv_escape(std::string s) {
    if (s.find_first_of("\t\n\r\\") == std::string::npos) return s;
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string render_tsv(const Report& report) {
    std::string out;
    for (std::size_t k = 0; k < report.tables.size(); ++k) {
        const Table& t = report.tables[k];
        if (k > 0) out += '\n';
        out += "# " + t.name + '\n';
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c > 0) out += '\t';
            out += t.columns[c];
        }
        out += '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0) out += '\t';
                out += tsv_escape(format_cell(row[c]));
            }
            out += '\n';
        }
    }
    return out;
}

nlohmann::ordered_json cell_json(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else {
                return v;
            }
        },
        cell.value);
}

std::string render_json(const Report& report) {
    nlohmann::ordered_json j;
    j["command"] = report.command;
    auto tables = nlohmann::ordered_json::array();
    for (const Table& t : report.tables) {
        nlohmann::ordered_json tj;
        tj["name"] = t.name;
        tj["columns"] = t.columns;
        auto rows = nlohmann::ordered_json::array();
        for (const auto& row : t.rows) {
            nlohmann::ordered_json rj = nlohmann::ordered_json::object();
            for (std::size_t c = 0; c < row.size(); ++c) rj[t.columns[c]] = cell_json(row[c]);
            rows.push_back(std::move(rj));
        }
        tj["rows"] = std::move(rows);
        tables.push_back(std::move(tj));
    }
    j["tables"] = std::move(tables);
    return j.dump(2) + '\n';
}

}  // namespace

std::string render(const Report& report, Format format) {
    return format == Format::tsv ? render_tsv(report) : render_json(report);
}

}  // namespace iar::report

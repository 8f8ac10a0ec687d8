#include "trustfield/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "trustfield/errors.hpp"

namespace trustfield::csv {

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

void split_line(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

}  // namespace

Table Table::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();

    Table table;
    table.buffer_ = std::move(ss).str();

    std::string_view remaining(table.buffer_);
    std::size_t line_no = 0;
    std::vector<std::string_view> cells;
    bool have_header = false;
    while (!remaining.empty()) {
        std::size_t eol = remaining.find('\n');
        std::string_view line = remaining.substr(0, eol);
        remaining = (eol == std::string_view::npos) ? std::string_view{} : remaining.substr(eol + 1);
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        split_line(line, cells);
        if (!have_header) {
            for (auto cell : cells) {
                table.header_.emplace_back(cell);
            }
            have_header = true;
        } else {
            if (cells.size() != table.header_.size()) {
                throw DataError("expected " + std::to_string(table.header_.size()) +
                                " columns but found " + std::to_string(cells.size()) +
                                " at line " + std::to_string(line_no) + " of " + path.string());
            }
            table.rows_.push_back(cells);
            table.line_numbers_.push_back(line_no);
        }
    }
    return table;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

}  // namespace trustfield::csv

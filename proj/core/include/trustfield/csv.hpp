#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trustfield::csv {

/// Shortest representation that round-trips exactly through parse_double.
/// Used for every floating point value written to disk so that re-reading a
/// log reproduces bit-identical doubles.
std::string format_double(double value);

/// Strict parse of a full field; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

/// Comma-separated table held in one buffer; rows are views into it.
class Table {
public:
    /// Throws DataError when the file cannot be read.
    static Table load(const std::filesystem::path& path);

    bool empty() const { return rows_.empty(); }
    std::size_t row_count() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }

    /// Column position for a header name, nullopt when absent.
    std::optional<std::size_t> column(std::string_view name) const;

    const std::vector<std::string_view>& row(std::size_t r) const { return rows_[r]; }

    /// 1-based line number of data row r in the source file (for messages).
    std::size_t line_number(std::size_t r) const { return line_numbers_[r]; }

private:
    std::string buffer_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string_view>> rows_;
    std::vector<std::size_t> line_numbers_;
};

}  // namespace trustfield::csv

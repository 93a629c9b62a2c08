#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanflow::csv {

/// In-memory CSV file with a mandatory header row. Typed accessors throw
/// ValidationError naming file, 1-based data row and column.
class Table {
public:
    static Table read(const std::filesystem::path& path);
    static Table parse(std::string_view text, std::string source_name);

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return cells_.size(); }

    /// Column index; throws when absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;

    const std::string& text(std::size_t row, std::size_t col) const;
    std::int64_t integer(std::size_t row, std::size_t col) const;
    /// Finite doubles only; NaN and infinities are rejected.
    double number(std::size_t row, std::size_t col) const;
    /// Empty cell -> nullopt.
    std::optional<std::int64_t> optional_integer(std::size_t row, std::size_t col) const;
    bool flag(std::size_t row, std::size_t col) const;

    /// "<file> row <n>" prefix for error messages about a whole row.
    std::string where(std::size_t row) const;
    [[noreturn]] void fail(std::size_t row, std::size_t col, const std::string& why) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> cells_;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_number(double value);

/// Strict parsers, shared with the config reader.
std::optional<double> parse_number(std::string_view s);
std::optional<std::int64_t> parse_integer(std::string_view s);

class Writer {
public:
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

    Writer& cell(std::string_view s);
    Writer& cell(double v);
    Writer& cell(std::int64_t v);
    Writer& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    Writer& cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
    Writer& empty();
    void end_row();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
};

} // namespace urbanflow::csv

#include "urbanflow/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "urbanflow/error.hpp"

namespace urbanflow::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// RFC 4180 style: fields may be quoted, "" escapes a quote inside quotes.
std::vector<std::string> split_line(std::string_view line, const std::string& source, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.emplace_back(was_quoted ? field : std::string(trim(field)));
            field.clear();
            was_quoted = false;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) throw ValidationError(source + " line " + std::to_string(line_no) + ": unterminated quote");
    out.emplace_back(was_quoted ? field : std::string(trim(field)));
    return out;
}

} // namespace

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

Table Table::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.filename().string());
}

Table Table::parse(std::string_view text, std::string source_name) {
    Table t;
    t.source_ = std::move(source_name);
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::size_t line_no = 0;
    bool have_header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_line(line, t.source_, line_no);
        if (!have_header) {
            t.header_ = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header_.size()) {
            throw ValidationError(t.source_ + " row " + std::to_string(t.cells_.size() + 1) + ": expected " +
                                  std::to_string(t.header_.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        t.cells_.push_back(std::move(fields));
    }
    if (!have_header) throw ValidationError(t.source_ + ": missing header row");
    return t;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw ValidationError(source_ + ": missing column '" + std::string(name) + "'");
}

const std::string& Table::text(std::size_t row, std::size_t col) const { return cells_.at(row).at(col); }

std::string Table::where(std::size_t row) const { return source_ + " row " + std::to_string(row + 1); }

void Table::fail(std::size_t row, std::size_t col, const std::string& why) const {
    throw ValidationError(where(row) + ", column '" + header_.at(col) + "': " + why);
}

std::int64_t Table::integer(std::size_t row, std::size_t col) const {
    if (auto v = parse_integer(text(row, col))) return *v;
    fail(row, col, "expected integer, got '" + text(row, col) + "'");
}

double Table::number(std::size_t row, std::size_t col) const {
    if (auto v = parse_number(text(row, col))) return *v;
    fail(row, col, "expected finite number, got '" + text(row, col) + "'");
}

std::optional<std::int64_t> Table::optional_integer(std::size_t row, std::size_t col) const {
    if (trim(text(row, col)).empty()) return std::nullopt;
    return integer(row, col);
}

bool Table::flag(std::size_t row, std::size_t col) const {
    const auto s = trim(text(row, col));
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    fail(row, col, "expected flag 0/1, got '" + std::string(s) + "'");
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), columns_(header.size()) {
    if (!out_) throw Error("cannot write " + path.string());
    for (const auto& h : header) cell(h);
    end_row();
}

Writer& Writer::cell(std::string_view s) {
    if (in_row_++ > 0) out_ << ',';
    if (s.find_first_of(",\"\n") != std::string_view::npos) {
        out_ << '"';
        for (char c : s) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    } else {
        out_ << s;
    }
    return *this;
}

Writer& Writer::cell(double v) { return cell(std::string_view(format_number(v))); }

Writer& Writer::cell(std::int64_t v) { return cell(std::string_view(std::to_string(v))); }

Writer& Writer::empty() { return cell(std::string_view{}); }

void Writer::end_row() {
    if (in_row_ != columns_)
        throw Error(path_.string() + ": row has " + std::to_string(in_row_) + " cells, expected " +
                    std::to_string(columns_));
    out_ << '\n';
    in_row_ = 0;
    if (!out_) throw Error("write failed: " + path_.string());
}

} // namespace urbanflow::csv

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanflow {

/// Sectioned key-value text file.
///
/// Grammar (one construct per line, surrounding whitespace ignored):
///
///     file     := { line }
///     line     := blank | comment | section | entry
///     comment  := ('#' | ';') any-text
///     section  := '[' name ']'
///     entry    := key '=' value
///
/// Keys are unique within a section. Entries before any section header go in
/// the unnamed section "". Values are raw strings; typed getters parse them.
class Config {
public:
    static Config read(const std::filesystem::path& path);
    static Config parse(std::string_view text, const std::string& source = "<config>");

    bool has(std::string_view section, std::string_view key) const;
    std::optional<std::string> get(std::string_view section, std::string_view key) const;

    std::string text(std::string_view section, std::string_view key) const;
    std::string text(std::string_view section, std::string_view key, std::string fallback) const;
    double number(std::string_view section, std::string_view key) const;
    double number(std::string_view section, std::string_view key, double fallback) const;
    std::int64_t integer(std::string_view section, std::string_view key) const;
    std::int64_t integer(std::string_view section, std::string_view key, std::int64_t fallback) const;

    void set(const std::string& section, const std::string& key, std::string value);

    std::vector<std::string> sections() const;
    /// Entries of one section in key order.
    std::vector<std::pair<std::string, std::string>> entries(std::string_view section) const;

    std::string serialize() const;
    void write(const std::filesystem::path& path) const;

    const std::string& source() const noexcept { return source_; }

private:
    std::string source_ = "<config>";
    std::vector<std::string> order_;
    std::map<std::string, std::map<std::string, std::string>, std::less<>> data_;
};

} // namespace urbanflow

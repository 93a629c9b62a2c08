#include "urbanflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"

namespace urbanflow {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string qualified(std::string_view section, std::string_view key) {
    return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

} // namespace

Config Config::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("missing config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

Config Config::parse(std::string_view text, const std::string& source) {
    Config cfg;
    cfg.source_ = source;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ConfigError(where() + "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where() + "empty key");
        if (cfg.has(section, key)) throw ConfigError(where() + "duplicate key '" + qualified(section, key) + "'");
        cfg.set(section, key, std::string(trim(line.substr(eq + 1))));
    }
    return cfg;
}

bool Config::has(std::string_view section, std::string_view key) const { return get(section, key).has_value(); }

std::optional<std::string> Config::get(std::string_view section, std::string_view key) const {
    const auto s = data_.find(section);
    if (s == data_.end()) return std::nullopt;
    const auto k = s->second.find(std::string(key));
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string Config::text(std::string_view section, std::string_view key) const {
    if (auto v = get(section, key)) return *v;
    throw ConfigError(source_ + ": missing key '" + qualified(section, key) + "'");
}

std::string Config::text(std::string_view section, std::string_view key, std::string fallback) const {
    if (auto v = get(section, key)) return *v;
    return fallback;
}

double Config::number(std::string_view section, std::string_view key) const {
    const auto raw = text(section, key);
    if (auto v = csv::parse_number(raw)) return *v;
    throw ConfigError(source_ + ": key '" + qualified(section, key) + "' expects a finite number, got '" + raw + "'");
}

double Config::number(std::string_view section, std::string_view key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

std::int64_t Config::integer(std::string_view section, std::string_view key) const {
    const auto raw = text(section, key);
    if (auto v = csv::parse_integer(raw)) return *v;
    throw ConfigError(source_ + ": key '" + qualified(section, key) + "' expects an integer, got '" + raw + "'");
}

std::int64_t Config::integer(std::string_view section, std::string_view key, std::int64_t fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
    auto it = data_.find(section);
    if (it == data_.end()) {
        order_.push_back(section);
        it = data_.emplace(section, std::map<std::string, std::string>{}).first;
    }
    it->second[key] = std::move(value);
}

std::vector<std::string> Config::sections() const { return order_; }

std::vector<std::pair<std::string, std::string>> Config::entries(std::string_view section) const {
    std::vector<std::pair<std::string, std::string>> out;
    if (const auto s = data_.find(section); s != data_.end())
        for (const auto& kv : s->second) out.emplace_back(kv.first, kv.second);
    return out;
}

std::string Config::serialize() const {
    std::ostringstream out;
    bool first = true;
    // Unnamed section must come before any header.
    auto order = order_;
    std::stable_partition(order.begin(), order.end(), [](const std::string& s) { return s.empty(); });
    for (const auto& section : order) {
        if (!section.empty()) {
            if (!first) out << '\n';
            out << '[' << section << "]\n";
        }
        first = false;
        for (const auto& [k, v] : data_.at(section)) out << k << " = " << v << '\n';
    }
    return out.str();
}

void Config::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize();
}

} // namespace urbanflow

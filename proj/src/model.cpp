#include "urbanflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"

namespace urbanflow {

std::string_view to_string(Period p) {
    switch (p) {
    case Period::AM: return "AM";
    case Period::MD: return "MD";
    case Period::PM: return "PM";
    case Period::NT: return "NT";
    }
    return "?";
}

Period parse_period(std::string_view s) {
    for (auto p : kPeriods)
        if (to_string(p) == s) return p;
    throw ValidationError("unknown period '" + std::string(s) + "'");
}

PeriodMap::PeriodMap() {
    for (int h = 0; h < 24; ++h) {
        Period p = Period::NT;
        if (h >= 6 && h <= 9) p = Period::AM;
        else if (h >= 10 && h <= 14) p = Period::MD;
        else if (h >= 15 && h <= 18) p = Period::PM;
        hours_[static_cast<std::size_t>(h)] = p;
    }
}

double PeriodMap::duration_hours(Period p) const {
    return static_cast<double>(std::count(hours_.begin(), hours_.end(), p));
}

std::map<ZoneId, NodeId> center_most_nodes(const std::vector<Node>& nodes) {
    std::map<ZoneId, std::vector<const Node*>> by_zone;
    for (const auto& n : nodes)
        if (n.zone_id) by_zone[*n.zone_id].push_back(&n);

    std::map<ZoneId, NodeId> out;
    for (auto& [zone, members] : by_zone) {
        std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
        double best = std::numeric_limits<double>::infinity();
        NodeId best_id = members.front()->node_id;
        for (const Node* a : members) {
            double sum = 0.0;
            for (const Node* b : members) sum += std::hypot(a->x - b->x, a->y - b->y);
            if (sum < best) {
                best = sum;
                best_id = a->node_id;
            }
        }
        out.emplace(zone, best_id);
    }
    return out;
}

// ---------------------------------------------------------------- TripTable

void TripTable::add(ZoneId o, ZoneId d, Period p, double vehicle_trips) {
    if (!(vehicle_trips >= 0.0) || !std::isfinite(vehicle_trips))
        throw ValidationError("trip table: vehicle_trips must be finite and >= 0");
    cells_[TripKey{o, d, p}] += vehicle_trips;
}

double TripTable::at(ZoneId o, ZoneId d, Period p) const {
    const auto it = cells_.find(TripKey{o, d, p});
    return it == cells_.end() ? 0.0 : it->second;
}

double TripTable::total() const {
    double s = 0.0;
    for (const auto& [k, v] : cells_) s += v;
    return s;
}

double TripTable::total(Period p) const {
    double s = 0.0;
    for (const auto& [k, v] : cells_)
        if (k.period == p) s += v;
    return s;
}

void TripTable::write_csv(const std::filesystem::path& path) const {
    csv::Writer w(path, {"origin", "destination", "period", "vehicle_trips"});
    for (const auto& [k, v] : cells_) {
        w.cell(k.origin).cell(k.destination).cell(to_string(k.period)).cell(v);
        w.end_row();
    }
}

TripTable TripTable::read_csv(const std::filesystem::path& path) {
    const auto t = csv::Table::read(path);
    const auto co = t.column("origin"), cd = t.column("destination"), cp = t.column("period"),
               cv = t.column("vehicle_trips");
    TripTable out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const TripKey key{t.integer(r, co), t.integer(r, cd), parse_period(t.text(r, cp))};
        const double v = t.number(r, cv);
        if (v < 0.0) t.fail(r, cv, "vehicle_trips must be >= 0");
        if (!out.cells_.emplace(key, v).second) throw ValidationError(t.where(r) + ": duplicate (o, d, period)");
    }
    return out;
}

// ---------------------------------------------------------------- SkimSet

std::string_view to_string(SkimMode m) {
    switch (m) {
    case SkimMode::Auto: return "auto";
    case SkimMode::Transit: return "transit";
    case SkimMode::Walk: return "walk";
    }
    return "?";
}

SkimMode parse_skim_mode(std::string_view s) {
    for (auto m : kSkimModes)
        if (to_string(m) == s) return m;
    throw ValidationError("unknown skim mode '" + std::string(s) + "'");
}

SkimSet::SkimSet(std::vector<ZoneId> zone_ids) : zone_ids_(std::move(zone_ids)) {
    std::sort(zone_ids_.begin(), zone_ids_.end());
}

std::size_t SkimSet::index_of(ZoneId z) const {
    const auto it = std::lower_bound(zone_ids_.begin(), zone_ids_.end(), z);
    if (it == zone_ids_.end() || *it != z) throw ValidationError("skims: unknown zone " + std::to_string(z));
    return static_cast<std::size_t>(it - zone_ids_.begin());
}

void SkimSet::set(SkimMode m, Period p, std::vector<double> matrix) {
    if (matrix.size() != zone_ids_.size() * zone_ids_.size())
        throw ValidationError("skims: matrix dimension does not match zone count");
    matrices_[slot(m, p)] = std::move(matrix);
}

bool SkimSet::has(SkimMode m, Period p) const { return !matrices_[slot(m, p)].empty() || zone_ids_.empty(); }

const std::vector<double>& SkimSet::matrix(SkimMode m, Period p) const {
    const auto& mat = matrices_[slot(m, p)];
    if (mat.empty() && !zone_ids_.empty())
        throw ValidationError("skims: no matrix for " + std::string(to_string(m)) + "/" + std::string(to_string(p)));
    return mat;
}

void SkimSet::validate() const {
    for (auto m : kSkimModes)
        for (auto p : kPeriods) {
            const auto& mat = matrix(m, p);
            for (double v : mat)
                if (!(v > 0.0) || !std::isfinite(v))
                    throw ValidationError("skims: non-positive or non-finite value in " + std::string(to_string(m)) +
                                          "/" + std::string(to_string(p)));
        }
}

void SkimSet::write_csv(const std::filesystem::path& path) const {
    csv::Writer w(path, {"mode", "period", "origin", "destination", "minutes"});
    const std::size_t n = zone_ids_.size();
    for (auto m : kSkimModes)
        for (auto p : kPeriods) {
            if (matrices_[slot(m, p)].empty()) continue;
            const auto& mat = matrices_[slot(m, p)];
            for (std::size_t o = 0; o < n; ++o)
                for (std::size_t d = 0; d < n; ++d) {
                    w.cell(to_string(m)).cell(to_string(p)).cell(zone_ids_[o]).cell(zone_ids_[d]).cell(mat[o * n + d]);
                    w.end_row();
                }
        }
}

SkimSet SkimSet::read_csv(const std::filesystem::path& path, std::vector<ZoneId> zone_ids) {
    SkimSet s(std::move(zone_ids));
    const auto t = csv::Table::read(path);
    const auto cm = t.column("mode"), cp = t.column("period"), co = t.column("origin"),
               cd = t.column("destination"), cv = t.column("minutes");
    const std::size_t n = s.zone_count();
    std::array<std::vector<char>, 12> seen{};
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto m = parse_skim_mode(t.text(r, cm));
        const auto p = parse_period(t.text(r, cp));
        auto& mat = s.matrices_[slot(m, p)];
        auto& filled = seen[slot(m, p)];
        if (mat.empty()) {
            mat.assign(n * n, 0.0);
            filled.assign(n * n, 0);
        }
        const auto o = s.index_of(t.integer(r, co));
        const auto d = s.index_of(t.integer(r, cd));
        const double v = t.number(r, cv);
        if (!(v > 0.0)) t.fail(r, cv, "travel time must be > 0");
        if (filled[o * n + d]) throw ValidationError(t.where(r) + ": duplicate skim cell");
        filled[o * n + d] = 1;
        mat[o * n + d] = v;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i].empty() && std::find(seen[i].begin(), seen[i].end(), 0) != seen[i].end())
            throw ValidationError(t.source() + ": incomplete skim matrix");
    return s;
}

void apply_intrazonal_rule(std::vector<double>& matrix, std::size_t n) {
    for (std::size_t o = 0; o < n; ++o) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < n; ++d)
            if (d != o) nearest = std::min(nearest, matrix[o * n + d]);
        matrix[o * n + o] = std::isfinite(nearest) ? std::max(1.0, 0.5 * nearest) : 1.0;
    }
}

} // namespace urbanflow

#include "urbanflow/choice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "urbanflow/error.hpp"

namespace urbanflow::choice {

namespace {

std::optional<std::size_t> index_in(const std::vector<std::string>& names, std::string_view n) {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

} // namespace

// ---------------------------------------------------------------- BoundSpec

BoundSpec BoundSpec::bind(const UtilitySpec& spec, const Schema& schema) {
    BoundSpec b;
    b.name_ = spec.name;
    b.chooser_width_ = schema.chooser.size();
    b.alternative_width_ = schema.alternative.size();
    std::set<std::string> seen;
    for (const auto& [variable, beta] : spec.coefficients) {
        if (!seen.insert(variable).second)
            throw ChoiceError("spec '" + spec.name + "': duplicate variable '" + variable + "'");
        if (!std::isfinite(beta))
            throw ChoiceError("spec '" + spec.name + "': non-finite coefficient for '" + variable + "'");

        Term t{variable, Source::Chooser, 0, 0};
        if (const auto star = variable.find('*'); star != std::string::npos) {
            const std::string lhs = variable.substr(0, star);
            const std::string rhs = variable.substr(star + 1);
            auto c = index_in(schema.chooser, lhs);
            auto a = index_in(schema.alternative, rhs);
            if (!c || !a) {
                c = index_in(schema.chooser, rhs);
                a = index_in(schema.alternative, lhs);
            }
            if (!c || !a)
                throw ChoiceError("spec '" + spec.name + "': cannot resolve interaction '" + variable +
                                  "' as chooser attribute x alternative attribute");
            t.source = Source::Interaction;
            t.chooser_index = *c;
            t.alternative_index = *a;
        } else if (auto a = index_in(schema.alternative, variable)) {
            t.source = Source::Alternative;
            t.alternative_index = *a;
        } else if (auto c = index_in(schema.chooser, variable)) {
            t.source = Source::Chooser;
            t.chooser_index = *c;
        } else {
            throw ChoiceError("spec '" + spec.name + "': unresolvable variable '" + variable + "'");
        }
        b.terms_.push_back(std::move(t));
        b.beta_.push_back(beta);
    }
    return b;
}

void BoundSpec::set_coefficients(std::span<const double> beta) {
    if (beta.size() != beta_.size()) throw ChoiceError("spec '" + name_ + "': coefficient count mismatch");
    beta_.assign(beta.begin(), beta.end());
}

std::optional<std::size_t> BoundSpec::find(std::string_view variable) const {
    for (std::size_t k = 0; k < terms_.size(); ++k)
        if (terms_[k].name == variable) return k;
    return std::nullopt;
}

void BoundSpec::design(std::span<const double> chooser, std::span<const double> alternative,
                       std::span<double> x) const {
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        switch (t.source) {
        case Source::Chooser: x[k] = chooser[t.chooser_index]; break;
        case Source::Alternative: x[k] = alternative[t.alternative_index]; break;
        case Source::Interaction: x[k] = chooser[t.chooser_index] * alternative[t.alternative_index]; break;
        }
    }
}

double BoundSpec::utility(std::span<const double> chooser, std::span<const double> alternative,
                          std::span<const double> beta) const {
    double v = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        double x = 0.0;
        switch (t.source) {
        case Source::Chooser: x = chooser[t.chooser_index]; break;
        case Source::Alternative: x = alternative[t.alternative_index]; break;
        case Source::Interaction: x = chooser[t.chooser_index] * alternative[t.alternative_index]; break;
        }
        v += beta[k] * x;
    }
    return v;
}

double BoundSpec::utility(std::span<const double> chooser, std::span<const double> alternative) const {
    return utility(chooser, alternative, beta_);
}

UtilitySpec BoundSpec::spec() const {
    UtilitySpec s{name_, {}};
    for (std::size_t k = 0; k < terms_.size(); ++k) s.coefficients.emplace_back(terms_[k].name, beta_[k]);
    return s;
}

// ---------------------------------------------------------------- ChoiceSet

void ChoiceSet::add(std::int64_t alternative_id, std::span<const double> attributes, bool available) {
    if (attributes.size() != width_) throw ChoiceError("choice set: attribute vector does not match schema width");
    ids_.push_back(alternative_id);
    attrs_.insert(attrs_.end(), attributes.begin(), attributes.end());
    available_.push_back(available ? 1 : 0);
}

std::size_t ChoiceSet::available_count() const {
    return static_cast<std::size_t>(std::count(available_.begin(), available_.end(), std::uint8_t{1}));
}

std::optional<std::size_t> ChoiceSet::position(std::int64_t alternative_id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), alternative_id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

// ---------------------------------------------------------------- MNL

std::vector<double> systematic_utility(const BoundSpec& spec, std::span<const double> chooser, const ChoiceSet& set) {
    std::vector<double> v(set.size(), kUnavailable);
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set.available(i)) v[i] = spec.utility(chooser, set.attributes(i));
    return v;
}

std::vector<double> mnl_probabilities(std::span<const double> utilities) {
    double vmax = kUnavailable;
    for (double v : utilities)
        if (v != kUnavailable) vmax = std::max(vmax, v);
    if (vmax == kUnavailable) throw ChoiceError("mnl: no available alternatives");

    std::vector<double> p(utilities.size(), 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        if (utilities[i] == kUnavailable) continue;
        p[i] = std::exp(utilities[i] - vmax);
        denom += p[i];
    }
    for (double& x : p) x /= denom;
    return p;
}

double logsum(std::span<const double> utilities) {
    double vmax = kUnavailable;
    for (double v : utilities)
        if (v != kUnavailable) vmax = std::max(vmax, v);
    if (vmax == kUnavailable) throw ChoiceError("logsum: no available alternatives");
    double s = 0.0;
    for (double v : utilities)
        if (v != kUnavailable) s += std::exp(v - vmax);
    return vmax + std::log(s);
}

ChoiceSet sample_alternatives(const ChoiceSet& universe, std::size_t n_sample, RandomStream& stream,
                              std::optional<std::int64_t> must_include) {
    if (n_sample == 0) throw ChoiceError("sample_alternatives: n_sample must be >= 1");
    if (universe.size() == 0) throw ChoiceError("sample_alternatives: empty universe");

    std::optional<std::size_t> forced;
    if (must_include) {
        forced = universe.position(*must_include);
        if (!forced)
            throw ChoiceError("sample_alternatives: alternative " + std::to_string(*must_include) +
                              " not in universe");
    }
    if (n_sample >= universe.size()) return universe;

    std::vector<std::size_t> pool;
    pool.reserve(universe.size());
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (!forced || i != *forced) pool.push_back(i);

    std::vector<std::uint8_t> picked(universe.size(), 0);
    std::size_t need = n_sample;
    if (forced) {
        picked[*forced] = 1;
        --need;
    }
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < need; ++k) {
        const auto j = k + static_cast<std::size_t>(stream.below(pool.size() - k));
        std::swap(pool[k], pool[j]);
        picked[pool[k]] = 1;
    }

    ChoiceSet out(universe.chooser_id(), universe.width());
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (picked[i]) out.add(universe.id(i), universe.attributes(i), universe.available(i));
    return out;
}

std::size_t monte_carlo_choice(std::span<const double> probabilities, double u) {
    double lo = 0.0;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = probabilities[i];
        if (p <= 0.0) continue;
        last = i;
        const double hi = lo + p;
        if (u >= lo && u < hi) return i;
        lo = hi;
    }
    if (!last) throw ChoiceError("monte_carlo_choice: all probabilities are zero");
    // u beyond the accumulated total (rounding): last positive entry.
    return *last;
}

std::size_t monte_carlo_choice(std::span<const double> probabilities, RandomStream& stream) {
    return monte_carlo_choice(probabilities, stream.uniform());
}

ChoiceSet constrained_choice_set(ChoiceSet set, const std::function<bool(const ChoiceSet&, std::size_t)>& keep) {
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set.available(i) && !keep(set, i)) set.set_available(i, false);
    if (set.available_count() == 0)
        throw ChoiceError("constrained choice set is empty for chooser " + std::to_string(set.chooser_id()));
    return set;
}

// ---------------------------------------------------------------- market clearing

std::vector<double> expected_demand(const BoundSpec& spec, const Choosers& choosers, const ChoiceSet& alternatives) {
    std::vector<double> demand(alternatives.size(), 0.0);
    for (std::size_t c = 0; c < choosers.count(); ++c) {
        const auto p = mnl_probabilities(systematic_utility(spec, choosers.row(c), alternatives));
        for (std::size_t m = 0; m < p.size(); ++m) demand[m] += p[m];
    }
    return demand;
}

std::vector<std::size_t> capacity_constrained_placement(const BoundSpec& spec, const Choosers& choosers,
                                                        const ChoiceSet& alternatives,
                                                        std::span<const double> capacity, RandomStream& stream) {
    const std::size_t n = choosers.count();
    if (capacity.size() != alternatives.size()) throw ChoiceError("placement: capacity size mismatch");

    std::vector<std::int64_t> remaining(alternatives.size(), 0);
    std::int64_t total = 0;
    for (std::size_t m = 0; m < alternatives.size(); ++m) {
        if (!alternatives.available(m)) continue;
        remaining[m] = static_cast<std::int64_t>(std::floor(capacity[m] + 1e-9));
        total += std::max<std::int64_t>(0, remaining[m]);
    }
    if (total < static_cast<std::int64_t>(n))
        throw ChoiceError("insufficient supply: " + std::to_string(total) + " spaces for " + std::to_string(n) +
                          " choosers");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(stream.below(i))]);

    std::vector<std::size_t> placement(n, 0);
    for (std::size_t c : order) {
        auto v = systematic_utility(spec, choosers.row(c), alternatives);
        for (std::size_t m = 0; m < v.size(); ++m)
            if (remaining[m] <= 0) v[m] = kUnavailable;
        const auto p = mnl_probabilities(v);
        const auto m = monte_carlo_choice(p, stream);
        placement[c] = m;
        --remaining[m];
    }
    return placement;
}

MarketClearingResult market_clearing_assignment(const BoundSpec& spec, const Choosers& choosers,
                                                ChoiceSet submarkets, std::span<const double> supply,
                                                std::string_view price_variable, RandomStream& stream,
                                                const MarketClearingOptions& options) {
    const auto term = spec.find(price_variable);
    if (!term || spec.terms()[*term].source != BoundSpec::Source::Alternative)
        throw ChoiceError("market clearing: spec '" + spec.name() + "' has no alternative attribute '" +
                          std::string(price_variable) + "'");
    if (!(spec.coefficients()[*term] < 0.0))
        throw ChoiceError("market clearing: non-negative price coefficient in spec '" + spec.name() + "'");
    if (supply.size() != submarkets.size()) throw ChoiceError("market clearing: supply size mismatch");
    const std::size_t price_col = spec.terms()[*term].alternative_index;

    const std::size_t n = choosers.count();
    double total_supply = 0.0;
    for (std::size_t m = 0; m < submarkets.size(); ++m) {
        if (supply[m] <= 0.0) submarkets.set_available(m, false);
        if (submarkets.available(m)) total_supply += supply[m];
    }
    if (total_supply + 1e-9 < static_cast<double>(n))
        throw ChoiceError("market clearing: insufficient total supply");
    const bool slack = total_supply > static_cast<double>(n) + 1e-9;

    MarketClearingResult r;
    r.prices.resize(submarkets.size());
    for (std::size_t m = 0; m < submarkets.size(); ++m) r.prices[m] = submarkets.attributes(m)[price_col];

    if (n > 0) {
        while (true) {
            r.demand = expected_demand(spec, choosers, submarkets);
            r.price_history.push_back(r.prices);
            r.demand_history.push_back(r.demand);

            double max_excess = -std::numeric_limits<double>::infinity();
            double min_excess = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < submarkets.size(); ++m) {
                if (!submarkets.available(m)) continue;
                const double e = (r.demand[m] - supply[m]) / supply[m];
                max_excess = std::max(max_excess, e);
                min_excess = std::min(min_excess, e);
            }
            if (max_excess <= options.tol && (slack || min_excess >= -options.tol)) {
                r.converged = true;
                break;
            }
            if (r.iterations >= options.max_iters) break;

            for (std::size_t m = 0; m < submarkets.size(); ++m) {
                if (!submarkets.available(m)) continue;
                const double ratio = std::max(r.demand[m], 1e-12) / supply[m];
                const double factor =
                    std::clamp(std::pow(ratio, options.gamma), options.factor_floor, options.factor_ceiling);
                r.prices[m] *= factor;
                submarkets.attributes(m)[price_col] = r.prices[m];
            }
            ++r.iterations;
        }
    } else {
        r.demand.assign(submarkets.size(), 0.0);
        r.converged = true;
    }

    r.placement = capacity_constrained_placement(spec, choosers, submarkets, supply, stream);
    return r;
}

} // namespace urbanflow::choice

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbanflow/model.hpp"
#include "urbanflow/random.hpp"

namespace urbanflow::choice {

inline constexpr double kUnavailable = -std::numeric_limits<double>::infinity();

/// Attribute names a model exposes to its utility specification.
struct Schema {
    std::vector<std::string> chooser;
    std::vector<std::string> alternative;
};

/// A UtilitySpec resolved against a Schema. Each term is a chooser
/// attribute, an alternative attribute, or a chooser x alternative product
/// written "a*b" (either order).
class BoundSpec {
public:
    enum class Source : std::uint8_t { Chooser, Alternative, Interaction };

    struct Term {
        std::string name;
        Source source;
        std::size_t chooser_index;     // Chooser, Interaction
        std::size_t alternative_index; // Alternative, Interaction
    };

    BoundSpec() = default;

    /// Throws ChoiceError on an unresolvable or duplicate variable name.
    static BoundSpec bind(const UtilitySpec& spec, const Schema& schema);

    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return terms_.size(); }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::span<const double> coefficients() const noexcept { return beta_; }
    void set_coefficients(std::span<const double> beta);
    std::optional<std::size_t> find(std::string_view variable) const;
    std::size_t chooser_width() const noexcept { return chooser_width_; }
    std::size_t alternative_width() const noexcept { return alternative_width_; }

    /// x_k for one (chooser, alternative) pair.
    void design(std::span<const double> chooser, std::span<const double> alternative, std::span<double> x) const;
    double utility(std::span<const double> chooser, std::span<const double> alternative) const;
    double utility(std::span<const double> chooser, std::span<const double> alternative,
                   std::span<const double> beta) const;

    /// Back to the plain data form (variable order preserved).
    UtilitySpec spec() const;

private:
    std::string name_;
    std::vector<Term> terms_;
    std::vector<double> beta_;
    std::size_t chooser_width_ = 0;
    std::size_t alternative_width_ = 0;
};

/// Alternatives presented to one chooser. Attribute rows share one schema.
class ChoiceSet {
public:
    ChoiceSet() = default;
    ChoiceSet(std::int64_t chooser_id, std::size_t width) : chooser_id_(chooser_id), width_(width) {}

    void add(std::int64_t alternative_id, std::span<const double> attributes, bool available = true);

    std::int64_t chooser_id() const noexcept { return chooser_id_; }
    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t width() const noexcept { return width_; }
    std::int64_t id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::int64_t>& ids() const noexcept { return ids_; }
    std::span<const double> attributes(std::size_t i) const {
        return std::span<const double>(attrs_).subspan(i * width_, width_);
    }
    std::span<double> attributes(std::size_t i) { return std::span<double>(attrs_).subspan(i * width_, width_); }
    bool available(std::size_t i) const { return available_[i] != 0; }
    void set_available(std::size_t i, bool on) { available_[i] = on ? 1 : 0; }
    std::size_t available_count() const;
    std::optional<std::size_t> position(std::int64_t alternative_id) const;

private:
    std::int64_t chooser_id_ = 0;
    std::size_t width_ = 0;
    std::vector<std::int64_t> ids_;
    std::vector<double> attrs_;
    std::vector<std::uint8_t> available_;
};

/// V_i = beta . x_i for each alternative; unavailable alternatives get -inf.
std::vector<double> systematic_utility(const BoundSpec& spec, std::span<const double> chooser, const ChoiceSet& set);

/// Multinomial logit probabilities with max-shift. Entries equal to -inf are
/// unavailable and receive probability 0. Throws ChoiceError if none remain.
std::vector<double> mnl_probabilities(std::span<const double> utilities);

/// ln sum_j exp(V_j) over available entries, computed with max-shift.
double logsum(std::span<const double> utilities);

/// Uniform sample without replacement of min(n_sample, |universe|)
/// alternatives, kept in universe order. `must_include` is always present.
ChoiceSet sample_alternatives(const ChoiceSet& universe, std::size_t n_sample, RandomStream& stream,
                              std::optional<std::int64_t> must_include = std::nullopt);

/// Index whose half-open cumulative interval [lo, hi) contains u.
std::size_t monte_carlo_choice(std::span<const double> probabilities, double u);
std::size_t monte_carlo_choice(std::span<const double> probabilities, RandomStream& stream);

/// Clears availability where `keep(alternative index)` is false. Throws
/// ChoiceError when nothing remains available (infeasible chooser).
ChoiceSet constrained_choice_set(ChoiceSet set, const std::function<bool(const ChoiceSet&, std::size_t)>& keep);

// ---------------------------------------------------------------- market clearing

struct MarketClearingOptions {
    double gamma = 0.5;
    double tol = 0.05;
    int max_iters = 50;
    /// Bounds on the per-iteration price factor (D/s)^gamma. Defaults leave
    /// the factor unbounded.
    double factor_floor = 0.0;
    double factor_ceiling = std::numeric_limits<double>::infinity();
};

/// Choosers are rows of `chooser_width` attributes in `choosers`.
struct Choosers {
    std::span<const double> attributes;
    std::size_t width = 0;

    std::size_t count() const { return width == 0 ? 0 : attributes.size() / width; }
    std::span<const double> row(std::size_t i) const { return attributes.subspan(i * width, width); }
};

struct MarketClearingResult {
    /// Index into the submarket choice set for each chooser.
    std::vector<std::size_t> placement;
    std::vector<double> prices;
    /// Expected demand at the final prices.
    std::vector<double> demand;
    int iterations = 0;
    bool converged = false;
    /// prices[k] and demand[k] seen at demand evaluation k.
    std::vector<std::vector<double>> price_history;
    std::vector<std::vector<double>> demand_history;
};

/// Sum over choosers of the MNL probabilities for every alternative.
std::vector<double> expected_demand(const BoundSpec& spec, const Choosers& choosers, const ChoiceSet& alternatives);

/// Sequential placement in a shuffled chooser order; an alternative whose
/// remaining capacity hits zero becomes unavailable for later choosers.
/// Throws ChoiceError when total capacity is below the number of choosers.
std::vector<std::size_t> capacity_constrained_placement(const BoundSpec& spec, const Choosers& choosers,
                                                        const ChoiceSet& alternatives,
                                                        std::span<const double> capacity, RandomStream& stream);

/// Iterative price adjustment: aggregate expected demand D_m per submarket,
/// p_m <- p_m (D_m / s_m)^gamma, recompute utilities; stop when the
/// clearing criterion holds or after max_iters, then place choosers with
/// capacity enforcement. The price enters through `price_variable`, an
/// alternative attribute of the spec with a negative coefficient.
///
/// Clearing criterion: max_m (D_m - s_m)/s_m <= tol, and additionally
/// min_m (D_m - s_m)/s_m >= -tol when total supply equals the number of
/// choosers (with slack supply demand cannot meet supply everywhere).
MarketClearingResult market_clearing_assignment(const BoundSpec& spec, const Choosers& choosers,
                                                ChoiceSet submarkets, std::span<const double> supply,
                                                std::string_view price_variable, RandomStream& stream,
                                                const MarketClearingOptions& options = {});

} // namespace urbanflow::choice

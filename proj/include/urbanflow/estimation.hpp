#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "urbanflow/choice.hpp"

namespace urbanflow::choice {

struct Observation {
    std::vector<double> chooser;
    ChoiceSet choices;
    std::size_t chosen = 0; // position in `choices`
};

struct LogLikelihood {
    double value = 0.0;
    std::vector<double> gradient;
};

/// LL = sum_n ln P_n(chosen); dLL/dbeta_k = sum_n (x_chosen,k - sum_j P_j x_j,k).
/// Throws ChoiceError when a chosen alternative is unavailable.
LogLikelihood mnl_loglik_and_gradient(const BoundSpec& spec, std::span<const double> beta,
                                      std::span<const Observation> observations);
LogLikelihood mnl_loglik_and_gradient(const BoundSpec& spec, std::span<const Observation> observations);

/// Negative Hessian of LL (the information matrix), row-major k*k.
std::vector<double> mnl_information(const BoundSpec& spec, std::span<const double> beta,
                                    std::span<const Observation> observations);

enum class FitStatus { Converged, MaxIterations, Diverged };

struct FitOptions {
    int max_iters = 200;
    /// Bound on |dLL/dbeta| / N, the per-observation gradient norm.
    double gradient_tol = 1e-6;
    /// Any |beta_k| beyond this counts as divergence (separated data).
    double coefficient_bound = 50.0;
};

struct FitResult {
    std::vector<double> coefficients;
    std::vector<double> std_errors; // empty when the information matrix is singular
    double loglik = 0.0;
    double loglik_start = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    FitStatus status = FitStatus::MaxIterations;
};

/// Maximum likelihood by BFGS with Armijo backtracking, starting from the
/// skeleton's coefficients. Throws ChoiceError for an empty sample or
/// collinear variables (singular information matrix at the start point).
/// Non-convergence is reported through FitResult::status with the last
/// iterate and its gradient norm.
FitResult mnl_fit(const BoundSpec& skeleton, std::span<const Observation> observations, const FitOptions& options = {});

/// Long-format estimation data: observation_id, alternative_id, chosen (0/1),
/// then one column per chooser attribute and per alternative attribute of
/// the schema. Chooser columns must repeat the same value within an
/// observation; rows of one observation must be contiguous.
std::vector<Observation> load_observations_csv(const std::filesystem::path& path, const Schema& schema);

} // namespace urbanflow::choice

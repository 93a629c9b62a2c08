#include "urbanflow/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"

namespace urbanflow::choice {

namespace {

// Design rows and probabilities for one observation at beta.
struct Evaluated {
    std::vector<double> x; // size() * K, unavailable rows left at 0
    std::vector<double> p;
};

Evaluated evaluate(const BoundSpec& spec, std::span<const double> beta, const Observation& obs) {
    const std::size_t k = spec.size();
    const auto& cs = obs.choices;
    Evaluated e;
    e.x.assign(cs.size() * k, 0.0);
    std::vector<double> v(cs.size(), kUnavailable);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!cs.available(i)) continue;
        std::span<double> row(e.x.data() + i * k, k);
        spec.design(obs.chooser, cs.attributes(i), row);
        double u = 0.0;
        for (std::size_t j = 0; j < k; ++j) u += beta[j] * row[j];
        v[i] = u;
    }
    e.p = mnl_probabilities(v);
    return e;
}

void check(const Observation& obs) {
    if (obs.chosen >= obs.choices.size() || !obs.choices.available(obs.chosen))
        throw ChoiceError("estimation: chosen alternative unavailable for chooser " +
                          std::to_string(obs.choices.chooser_id()));
}

} // namespace

LogLikelihood mnl_loglik_and_gradient(const BoundSpec& spec, std::span<const double> beta,
                                      std::span<const Observation> observations) {
    const std::size_t k = spec.size();
    if (beta.size() != k) throw ChoiceError("estimation: coefficient count mismatch");
    LogLikelihood out;
    out.gradient.assign(k, 0.0);
    for (const auto& obs : observations) {
        check(obs);
        const auto e = evaluate(spec, beta, obs);
        out.value += std::log(e.p[obs.chosen]);
        for (std::size_t j = 0; j < k; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < e.p.size(); ++i) mean += e.p[i] * e.x[i * k + j];
            out.gradient[j] += e.x[obs.chosen * k + j] - mean;
        }
    }
    return out;
}

LogLikelihood mnl_loglik_and_gradient(const BoundSpec& spec, std::span<const Observation> observations) {
    return mnl_loglik_and_gradient(spec, spec.coefficients(), observations);
}

std::vector<double> mnl_information(const BoundSpec& spec, std::span<const double> beta,
                                    std::span<const Observation> observations) {
    const std::size_t k = spec.size();
    std::vector<double> info(k * k, 0.0);
    std::vector<double> mean(k);
    for (const auto& obs : observations) {
        check(obs);
        const auto e = evaluate(spec, beta, obs);
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t i = 0; i < e.p.size(); ++i)
            for (std::size_t j = 0; j < k; ++j) mean[j] += e.p[i] * e.x[i * k + j];
        for (std::size_t i = 0; i < e.p.size(); ++i) {
            if (e.p[i] == 0.0) continue;
            for (std::size_t a = 0; a < k; ++a) {
                const double da = e.x[i * k + a] - mean[a];
                for (std::size_t b = 0; b < k; ++b) info[a * k + b] += e.p[i] * da * (e.x[i * k + b] - mean[b]);
            }
        }
    }
    return info;
}

FitResult mnl_fit(const BoundSpec& skeleton, std::span<const Observation> observations, const FitOptions& options) {
    if (observations.empty()) throw ChoiceError("mnl_fit: no observations");
    const auto k = static_cast<Eigen::Index>(skeleton.size());
    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;

    const auto to_std = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    const auto information = [&](const Vec& b) {
        const auto info = mnl_information(skeleton, to_std(b), observations);
        return Mat(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            info.data(), k, k));
    };

    Vec beta = Eigen::Map<const Vec>(skeleton.coefficients().data(), k);
    const Mat info0 = information(beta);
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(info0);
        const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (k > 0 && es.eigenvalues().minCoeff() <= 1e-10 * top)
            throw ChoiceError("mnl_fit: degenerate step, collinear or constant variables in spec '" +
                              skeleton.name() + "'");
    }

    auto current = mnl_loglik_and_gradient(skeleton, to_std(beta), observations);
    FitResult result;
    result.loglik_start = current.value;
    Vec g = Eigen::Map<const Vec>(current.gradient.data(), k);
    Mat hinv = info0.ldlt().solve(Mat::Identity(k, k));

    // LL is a sum over observations, so the tolerance applies to the mean.
    const double gradient_limit = options.gradient_tol * static_cast<double>(observations.size());
    int it = 0;
    for (; it < options.max_iters; ++it) {
        if (g.norm() <= gradient_limit) {
            result.status = FitStatus::Converged;
            break;
        }
        if (beta.cwiseAbs().maxCoeff() > options.coefficient_bound) {
            result.status = FitStatus::Diverged;
            break;
        }
        Vec dir = hinv * g;
        double slope = g.dot(dir);
        if (!(slope > 0.0)) {
            hinv = Mat::Identity(k, k) / std::max(1.0, g.norm());
            dir = hinv * g;
            slope = g.dot(dir);
        }
        double step = 1.0;
        LogLikelihood trial;
        Vec next;
        bool accepted = false;
        while (step > 1e-20) {
            next = beta + step * dir;
            trial = mnl_loglik_and_gradient(skeleton, to_std(next), observations);
            if (std::isfinite(trial.value) && trial.value >= current.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // stalled; reported as MaxIterations

        const Vec g_next = Eigen::Map<const Vec>(trial.gradient.data(), k);
        const Vec s = next - beta;
        const Vec y = g - g_next; // gradient change of -LL
        const double sy = s.dot(y);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Mat left = Mat::Identity(k, k) - rho * s * y.transpose();
            hinv = left * hinv * left.transpose() + rho * s * s.transpose();
        }
        beta = next;
        g = g_next;
        current = std::move(trial);
    }

    result.coefficients = to_std(beta);
    result.loglik = current.value;
    result.gradient_norm = g.norm();
    result.iterations = it;
    if (beta.cwiseAbs().maxCoeff() > options.coefficient_bound) result.status = FitStatus::Diverged;
    // Complete separation: every chosen alternative predicted with certainty.
    if (result.loglik > -1e-6 * static_cast<double>(observations.size())) result.status = FitStatus::Diverged;

    const Mat info = information(beta);
    Eigen::LDLT<Mat> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Mat cov = ldlt.solve(Mat::Identity(k, k));
        bool ok = true;
        for (Eigen::Index j = 0; j < k; ++j) ok = ok && cov(j, j) > 0.0 && std::isfinite(cov(j, j));
        if (ok)
            for (Eigen::Index j = 0; j < k; ++j) result.std_errors.push_back(std::sqrt(cov(j, j)));
    }
    return result;
}

std::vector<Observation> load_observations_csv(const std::filesystem::path& path, const Schema& schema) {
    const auto t = csv::Table::read(path);
    const auto c_obs = t.column("observation_id");
    const auto c_alt = t.column("alternative_id");
    const auto c_chosen = t.column("chosen");
    std::vector<std::size_t> chooser_cols, alt_cols;
    for (const auto& n : schema.chooser) chooser_cols.push_back(t.column(n));
    for (const auto& n : schema.alternative) alt_cols.push_back(t.column(n));

    std::vector<Observation> out;
    std::vector<std::int64_t> seen_ids;
    std::vector<int> chosen_count;
    std::vector<double> attrs(alt_cols.size());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto obs_id = t.integer(r, c_obs);
        if (out.empty() || seen_ids.back() != obs_id) {
            if (std::find(seen_ids.begin(), seen_ids.end(), obs_id) != seen_ids.end())
                throw ValidationError(t.where(r) + ": rows of observation " + std::to_string(obs_id) +
                                      " are not contiguous");
            Observation o;
            o.choices = ChoiceSet(obs_id, alt_cols.size());
            for (auto c : chooser_cols) o.chooser.push_back(t.number(r, c));
            out.push_back(std::move(o));
            seen_ids.push_back(obs_id);
            chosen_count.push_back(0);
        }
        auto& o = out.back();
        for (std::size_t i = 0; i < chooser_cols.size(); ++i)
            if (t.number(r, chooser_cols[i]) != o.chooser[i])
                t.fail(r, chooser_cols[i], "chooser attribute changes within an observation");
        for (std::size_t i = 0; i < alt_cols.size(); ++i) attrs[i] = t.number(r, alt_cols[i]);
        if (t.flag(r, c_chosen)) {
            o.chosen = o.choices.size();
            ++chosen_count.back();
        }
        o.choices.add(t.integer(r, c_alt), attrs);
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        if (chosen_count[i] != 1)
            throw ValidationError(t.source() + ": observation " + std::to_string(seen_ids[i]) +
                                  " must have exactly one chosen alternative");
    return out;
}

} // namespace urbanflow::choice

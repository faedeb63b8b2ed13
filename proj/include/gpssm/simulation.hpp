#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/equilibrium.hpp"
#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/random.hpp"

namespace gpssm {

/// One stochastic step: mean(x) + sqrt(var(x)) .* eta, eta ~ N(0, I).
inline Eigen::VectorXd sample_next_state(const GpSsmModel& model,
                                         const Eigen::Ref<const Eigen::VectorXd>& x,
                                         RandomStream& rng) {
    const GaussianPrediction pred = model.predict(x);
    Eigen::VectorXd next(pred.mean.size());
    for (Eigen::Index i = 0; i < next.size(); ++i)
        next(i) = pred.mean(i) + std::sqrt(pred.variance(i)) * rng.gaussian();
    return next;
}

struct Trajectory {
    Eigen::MatrixXd states;  // n x (steps + 1); column k is x_k
    std::uint64_t seed = 0;

    Eigen::Index steps() const { return states.cols() - 1; }
};

/// Iterated stochastic simulation from x0; pure function of (model, x0, seed).
inline Trajectory rollout(const GpSsmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                          int steps, std::uint64_t seed) {
    if (steps < 0) throw Error("rollout needs steps >= 0");
    Trajectory traj;
    traj.seed = seed;
    traj.states.resize(model.state_dimension(), steps + 1);
    traj.states.col(0) = x0;
    RandomStream rng(seed);
    for (int k = 0; k < steps; ++k)
        traj.states.col(k + 1) = sample_next_state(model, traj.states.col(k), rng);
    return traj;
}

struct EnsembleStats {
    Eigen::MatrixXd mean;  // n x (steps + 1)
    Eigen::MatrixXd std;   // n x (steps + 1), sample standard deviation
    int rollouts = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr Eigen::Index kRolloutChunk = 128;

}  // namespace detail

/// Monte Carlo ensemble over `rollouts` trajectories with per-rollout derived
/// seed streams. Rollouts advance in fixed-size chunks through the batched
/// predictor; aggregation runs in rollout-index order.
inline EnsembleStats ensemble(const GpSsmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                              int steps, int rollouts, std::uint64_t seed) {
    if (steps < 0) throw Error("ensemble needs steps >= 0");
    if (rollouts < 2) throw Error("ensemble needs at least two rollouts");
    const int n = model.state_dimension();

    EnsembleStats stats;
    stats.rollouts = rollouts;
    stats.seed = seed;
    stats.mean = Eigen::MatrixXd::Zero(n, steps + 1);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(n, steps + 1);

    for (Eigen::Index chunk = 0; chunk < rollouts; chunk += detail::kRolloutChunk) {
        const Eigen::Index width = std::min<Eigen::Index>(detail::kRolloutChunk, rollouts - chunk);
        std::vector<RandomStream> streams;
        streams.reserve(width);
        for (Eigen::Index r = 0; r < width; ++r)
            streams.emplace_back(seed, static_cast<std::uint64_t>(chunk + r));

        Eigen::MatrixXd states(n, width);
        states.colwise() = x0;
        stats.mean.col(0) += static_cast<double>(width) * x0;
        sumsq.col(0) += static_cast<double>(width) * x0.cwiseAbs2();

        for (int k = 0; k < steps; ++k) {
            const auto [means, vars] = model.predict_batch(states);
            for (Eigen::Index r = 0; r < width; ++r)
                for (int i = 0; i < n; ++i)
                    states(i, r) = means(i, r) + std::sqrt(vars(i, r)) * streams[r].gaussian();
            stats.mean.col(k + 1) += states.rowwise().sum();
            sumsq.col(k + 1) += states.cwiseAbs2().rowwise().sum();
        }
    }

    const double R = static_cast<double>(rollouts);
    stats.mean /= R;
    stats.std = ((sumsq - R * stats.mean.cwiseAbs2()) / (R - 1.0)).cwiseMax(0.0).cwiseSqrt();
    return stats;
}

/// Draws from a 1-D equilibrium solution by inverting the trapezoid CDF with
/// linear interpolation between grid nodes.
inline Eigen::VectorXd inverse_transform_sample(const EquilibriumSolution& solution,
                                                Eigen::Index count, std::uint64_t seed) {
    if (solution.grid.dimension() != 1)
        throw NotOneDimensional("inverse transform sampling is defined for 1-D solutions");
    if (count < 1) throw Error("sample count must be positive");
    const Eigen::VectorXd& u = solution.density;
    const Eigen::VectorXd nodes = solution.grid.nodes().row(0).transpose();
    const Eigen::Index N = u.size();

    const double mass = solution.grid.weights().dot(u);
    if (std::abs(mass - 1.0) > 1e-6)
        throw Error("density must integrate to one for inverse transform sampling");

    Eigen::VectorXd cdf(N);
    cdf(0) = 0.0;
    for (Eigen::Index i = 1; i < N; ++i)
        cdf(i) = cdf(i - 1) + 0.5 * (nodes(i) - nodes(i - 1)) * (u(i) + u(i - 1));
    cdf /= cdf(N - 1);

    RandomStream rng(seed);
    Eigen::VectorXd samples(count);
    for (Eigen::Index s = 0; s < count; ++s) {
        const double p = rng.uniform();
        const double* begin = cdf.data();
        const double* it = std::upper_bound(begin, begin + N, p);
        Eigen::Index hi = std::min<Eigen::Index>(it - begin, N - 1);
        if (hi == 0) hi = 1;
        const Eigen::Index lo = hi - 1;
        const double span = cdf(hi) - cdf(lo);
        const double t = span > 0.0 ? (p - cdf(lo)) / span : 0.0;
        samples(s) = nodes(lo) + t * (nodes(hi) - nodes(lo));
    }
    return samples;
}

struct KsResult {
    double statistic = 0.0;
    double threshold = 0.0;
    double alpha = 0.0;
    bool reject = false;
    Eigen::Index count_a = 0;
    Eigen::Index count_b = 0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic critical value
/// c(alpha) = sqrt(-ln(alpha/2) / 2); c(0.05) = 1.358.
inline KsResult ks_two_sample(Eigen::VectorXd a, Eigen::VectorXd b, double alpha = 0.05) {
    if (a.size() == 0 || b.size() == 0) throw EmptySample("KS test needs nonempty samples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("KS significance level must be in (0, 1)");

    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());

    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    Eigen::Index i = 0, j = 0;
    double statistic = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i >= a.size()) v = b(j);
        else if (j >= b.size()) v = a(i);
        else v = std::min(a(i), b(j));
        while (i < a.size() && a(i) == v) ++i;
        while (j < b.size() && b(j) == v) ++j;
        statistic = std::max(statistic, std::abs(static_cast<double>(i) / na -
                                                 static_cast<double>(j) / nb));
    }

    KsResult result;
    result.statistic = statistic;
    result.alpha = alpha;
    result.count_a = a.size();
    result.count_b = b.size();
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    result.threshold = c * std::sqrt((na + nb) / (na * nb));
    result.reject = statistic > result.threshold;
    return result;
}

/// Stationarity check: equilibrium samples pushed one step through the model
/// must be indistinguishable from fresh equilibrium samples.
inline KsResult monte_carlo_equilibrium_check(const GpSsmModel& model,
                                              const EquilibriumSolution& solution,
                                              Eigen::Index count, double alpha,
                                              std::uint64_t seed) {
    if (solution.grid.dimension() != 1 || model.state_dimension() != 1)
        throw NotOneDimensional("the Monte Carlo equilibrium check is defined in 1-D");

    const Eigen::VectorXd inputs = inverse_transform_sample(solution, count, derive_seed(seed, 0));
    RandomStream push_rng(seed, 1);
    Eigen::VectorXd pushed(count);
    const auto [means, vars] = model.predict_batch(inputs.transpose());
    for (Eigen::Index s = 0; s < count; ++s)
        pushed(s) = means(0, s) + std::sqrt(vars(0, s)) * push_rng.gaussian();

    const Eigen::VectorXd fresh = inverse_transform_sample(solution, count, derive_seed(seed, 2));
    return ks_two_sample(pushed, fresh, alpha);
}

}  // namespace gpssm

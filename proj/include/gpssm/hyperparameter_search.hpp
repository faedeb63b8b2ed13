#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/kernel.hpp"
#include "gpssm/random.hpp"
#include "gpssm/training_set.hpp"

namespace gpssm {

struct OptimizeConfig {
    int starts = 8;
    std::uint64_t seed = kDefaultSeed;
    double relative_tolerance = 1e-8;  // on the objective spread of the simplex
    int max_iterations = 400;          // Nelder-Mead iterations per start
    double start_lower = 1e-2;         // log-uniform start sampling range
    double start_upper = 1e2;
    double bound_lower = 1e-4;         // hard search box per parameter
    double bound_upper = 1e4;
    bool optimize_noise = false;
    int polynomial_degree = 2;
};

struct OptimizeResult {
    Kernel kernel;
    double noise_std;  // equals the training value unless optimize_noise
    double objective;
    int best_start;
    std::vector<double> start_objectives;  // objective at each start point
};

namespace detail {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Downhill simplex minimization; `f` may return +inf for infeasible points.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double step, double rel_tol,
                                    int max_iterations) {
    const int d = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> xs(d + 1, x0);
    std::vector<double> fs(d + 1);
    for (int i = 0; i < d; ++i) xs[i + 1](i) += step;
    for (int i = 0; i <= d; ++i) fs[i] = f(xs[i]);

    std::vector<int> order(d + 1);
    NelderMeadResult result;
    for (int iter = 0; iter < max_iterations; ++iter) {
        result.iterations = iter;
        for (int i = 0; i <= d; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        const int best = order[0], worst = order[d], second_worst = order[d - 1];

        if (std::isfinite(fs[best]) && std::isfinite(fs[worst]) &&
            fs[worst] - fs[best] <= rel_tol * (std::abs(fs[best]) + 1e-300))
            break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i <= d; ++i)
            if (i != worst) centroid += xs[i];
        centroid /= static_cast<double>(d);

        const Eigen::VectorXd reflected = centroid + (centroid - xs[worst]);
        const double fr = f(reflected);
        if (fr < fs[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                xs[worst] = expanded;
                fs[worst] = fe;
            } else {
                xs[worst] = reflected;
                fs[worst] = fr;
            }
            continue;
        }
        if (fr < fs[second_worst]) {
            xs[worst] = reflected;
            fs[worst] = fr;
            continue;
        }
        const Eigen::VectorXd contracted =
            fr < fs[worst] ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                           : Eigen::VectorXd(centroid + 0.5 * (xs[worst] - centroid));
        const double fc = f(contracted);
        if (fc < std::min(fr, fs[worst])) {
            xs[worst] = contracted;
            fs[worst] = fc;
            continue;
        }
        for (int i = 0; i <= d; ++i) {  // shrink toward the best vertex
            if (i == best) continue;
            xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
            fs[i] = f(xs[i]);
        }
    }

    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (fs[i] < fs[best]) best = i;
    result.x = xs[best];
    result.value = fs[best];
    return result;
}

inline Kernel kernel_from_log_params(KernelKind kind, const Eigen::VectorXd& theta, int degree) {
    switch (kind) {
        case KernelKind::Linear: return Kernel::linear(std::exp(theta(0)));
        case KernelKind::Polynomial: return Kernel::polynomial(std::exp(theta(0)), degree);
        case KernelKind::SquaredExponential:
            return Kernel::squared_exponential(std::exp(theta(0)), std::exp(theta(1)));
    }
    throw Error("unknown kernel kind");
}

inline int kernel_param_count(KernelKind kind) {
    return kind == KernelKind::SquaredExponential ? 2 : 1;
}

}  // namespace detail

/// Maximizes the log marginal likelihood over the kernel hyperparameters (and
/// optionally the noise deviation) with a multi-start Nelder-Mead search in
/// log-parameter space. Start 0 is all-ones; the remaining starts are drawn
/// log-uniformly from [start_lower, start_upper]. The best objective wins,
/// ties broken by the lowest start index.
inline OptimizeResult optimize_hyperparameters(const TrainingSet& data, KernelKind kind, int dim,
                                               const OptimizeConfig& config = {}) {
    data.validate();
    if (data.size() < 1) throw Error("hyperparameter search needs a nonempty training set");
    if (dim < 0 || dim >= data.state_dimension())
        throw DimensionMismatch("dimension index out of range");

    const int kernel_params = detail::kernel_param_count(kind);
    const int d = kernel_params + (config.optimize_noise ? 1 : 0);
    const double lo = std::log(config.bound_lower), hi = std::log(config.bound_upper);

    const auto objective = [&](const Eigen::VectorXd& theta) -> double {
        for (int i = 0; i < d; ++i)
            if (!(theta(i) >= lo && theta(i) <= hi))
                return -std::numeric_limits<double>::infinity();
        TrainingSet candidate = data;
        if (config.optimize_noise) candidate.noise_std(dim) = std::exp(theta(d - 1));
        try {
            return log_marginal_likelihood(detail::kernel_from_log_params(kind, theta,
                                                                          config.polynomial_degree),
                                           candidate, dim);
        } catch (const FactorizationFailure&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    const auto negated = [&](const Eigen::VectorXd& theta) { return -objective(theta); };

    std::vector<double> start_objectives;
    double best_objective = -std::numeric_limits<double>::infinity();
    int best_start = -1;
    Eigen::VectorXd best_theta;
    for (int s = 0; s < config.starts; ++s) {
        Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(d);
        if (s == 0) {
            if (config.optimize_noise)
                theta0(d - 1) = std::log(std::clamp(data.noise_std(dim), 1e-2, 1e2));
        } else {
            RandomStream rng(config.seed,
                             (static_cast<std::uint64_t>(dim) << 32) | static_cast<std::uint64_t>(s));
            for (int i = 0; i < d; ++i)
                theta0(i) = std::log(rng.log_uniform(config.start_lower, config.start_upper));
        }
        start_objectives.push_back(objective(theta0));

        const auto run = detail::nelder_mead(negated, theta0, 0.5, config.relative_tolerance,
                                             config.max_iterations);
        const double value = -run.value;
        if (value > best_objective) {
            best_objective = value;
            best_start = s;
            best_theta = run.x;
        }
    }

    if (!std::isfinite(best_objective))
        throw OptimizationFailure("every hyperparameter start failed factorization");

    return OptimizeResult{
        detail::kernel_from_log_params(kind, best_theta, config.polynomial_degree),
        config.optimize_noise ? std::exp(best_theta(d - 1)) : data.noise_std(dim),
        best_objective, best_start, std::move(start_objectives)};
}

}  // namespace gpssm

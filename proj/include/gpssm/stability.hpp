#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/random.hpp"
#include "gpssm/simulation.hpp"

namespace gpssm {

struct DimensionContribution {
    double sigma_f = 0.0;
    double weight_norm = 0.0;   // ||h(i)||
    double contribution = 0.0;  // sigma_f^4 m ||h(i)||^2 + sigma_f^2
};

/// Closed-form certificate for squared-exponential GP-SSMs: the chain is mean
/// square bounded by `bound`, and the ball of squared radius `bound` is
/// positive recurrent. Both statements certify the fitted model, not the
/// data-generating system.
struct StabilityReport {
    double bound = 0.0;
    double recurrent_radius_sq = 0.0;
    std::vector<DimensionContribution> per_dimension;

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        return x.squaredNorm() <= recurrent_radius_sq;
    }
};

/// sup_k E||x_k||^2 <= sum_i (sigma_{i,f}^4 m ||h(i)||^2 + sigma_{i,f}^2).
inline StabilityReport mean_square_bound(const GpSsmModel& model) {
    if (!model.all_squared_exponential())
        throw UnsupportedKernel("the mean-square certificate covers squared-exponential "
                                "kernels only");
    StabilityReport report;
    const double m = static_cast<double>(model.training_size());
    for (int i = 0; i < model.state_dimension(); ++i) {
        DimensionContribution c;
        c.sigma_f = model.kernel(i).sigma_f();
        c.weight_norm = model.weights(i).norm();
        const double s2 = c.sigma_f * c.sigma_f;
        c.contribution = s2 * s2 * m * c.weight_norm * c.weight_norm + s2;
        report.bound += c.contribution;
        report.per_dimension.push_back(c);
    }
    report.recurrent_radius_sq = report.bound;
    return report;
}

/// The positive recurrent set {x : ||x||^2 <= bound}; same certificate viewed
/// as a set.
inline StabilityReport recurrent_set(const GpSsmModel& model) { return mean_square_bound(model); }

struct EmpiricalMeanSquare {
    double sup_estimate = 0.0;           // over k >= 1 and start points
    std::vector<double> per_start_sup;   // sup over k >= 1 per start point
    int steps = 0;
    int rollouts = 0;
    std::uint64_t seed = 0;
};

/// Monte Carlo estimate of max_k E||x_k||^2 from each start point; rollout r
/// of start s draws from the derived stream (s, r).
inline EmpiricalMeanSquare empirical_mean_square(const GpSsmModel& model,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& starts,
                                                 int steps, int rollouts, std::uint64_t seed) {
    if (starts.rows() != model.state_dimension())
        throw DimensionMismatch("start points must have the model dimension");
    if (steps < 1 || rollouts < 1) throw Error("need steps >= 1 and rollouts >= 1");

    EmpiricalMeanSquare out;
    out.steps = steps;
    out.rollouts = rollouts;
    out.seed = seed;

    const int n = model.state_dimension();
    for (Eigen::Index s = 0; s < starts.cols(); ++s) {
        Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(steps);  // per step k = 1..steps
        for (Eigen::Index chunk = 0; chunk < rollouts; chunk += detail::kRolloutChunk) {
            const Eigen::Index width =
                std::min<Eigen::Index>(detail::kRolloutChunk, rollouts - chunk);
            std::vector<RandomStream> streams;
            streams.reserve(width);
            for (Eigen::Index r = 0; r < width; ++r)
                streams.emplace_back(seed, (static_cast<std::uint64_t>(s) << 32) |
                                               static_cast<std::uint64_t>(chunk + r));
            Eigen::MatrixXd states(n, width);
            states.colwise() = starts.col(s);
            for (int k = 0; k < steps; ++k) {
                const auto [means, vars] = model.predict_batch(states);
                for (Eigen::Index r = 0; r < width; ++r)
                    for (int i = 0; i < n; ++i)
                        states(i, r) = means(i, r) + std::sqrt(vars(i, r)) * streams[r].gaussian();
                sum_sq(k) += states.colwise().squaredNorm().sum();
            }
        }
        const double sup_s = sum_sq.maxCoeff() / static_cast<double>(rollouts);
        out.per_start_sup.push_back(sup_s);
        out.sup_estimate = std::max(out.sup_estimate, sup_s);
    }
    return out;
}

struct ReturnTimeStats {
    double mean = 0.0;          // over rollouts that returned
    int max = 0;                // over rollouts that returned
    double cap_fraction = 0.0;  // rollouts that never returned within the cap
    int returned = 0;
    int rollouts = 0;
    int cap = 0;
    std::uint64_t seed = 0;
    double radius_sq = 0.0;     // the recurrent set used
    std::vector<int> times;     // per rollout; 0 marks a cap hit
};

/// Empirical first hitting time of the recurrent set from x0 outside it.
/// Rollouts hitting the cap are reported, not errors.
inline ReturnTimeStats return_time_estimate(const GpSsmModel& model,
                                            const Eigen::Ref<const Eigen::VectorXd>& x0,
                                            int rollouts, int cap, std::uint64_t seed) {
    if (rollouts < 1 || cap < 1) throw Error("need rollouts >= 1 and cap >= 1");
    const StabilityReport certificate = recurrent_set(model);
    if (certificate.contains(x0))
        throw Error("x0 lies inside the recurrent set; the hitting time would be zero");

    ReturnTimeStats stats;
    stats.rollouts = rollouts;
    stats.cap = cap;
    stats.seed = seed;
    stats.radius_sq = certificate.recurrent_radius_sq;

    long long total = 0;
    for (int r = 0; r < rollouts; ++r) {
        RandomStream rng(seed, static_cast<std::uint64_t>(r));
        Eigen::VectorXd x = x0;
        int hit = 0;
        for (int k = 1; k <= cap; ++k) {
            x = sample_next_state(model, x, rng);
            if (certificate.contains(x)) {
                hit = k;
                break;
            }
        }
        stats.times.push_back(hit);
        if (hit > 0) {
            ++stats.returned;
            total += hit;
            stats.max = std::max(stats.max, hit);
        }
    }
    stats.cap_fraction = 1.0 - static_cast<double>(stats.returned) / rollouts;
    stats.mean = stats.returned > 0 ? static_cast<double>(total) / stats.returned : 0.0;
    return stats;
}

}  // namespace gpssm

#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"
#include "gpssm/grid.hpp"
#include "gpssm/random.hpp"
#include "gpssm/training_set.hpp"

namespace gpssm {

/// Noise-free part of the scalar benchmark map
/// x_{k+1} = 0.01 x^3 - 0.2 x^2 + 0.2 x + eta.
inline double cubic_mean(double x) { return 0.01 * x * x * x - 0.2 * x * x + 0.2 * x; }

inline double cubic_step(double x, RandomStream& rng) { return cubic_mean(x) + rng.gaussian(); }

/// Training pairs for the cubic benchmark: `count` inputs on [lo, hi]
/// (evenly spaced by default, uniform-random with `random_placement`),
/// outputs corrupted by N(0, noise_std^2).
inline TrainingSet generate_cubic_dataset(int count = 20, Interval interval = {-5.0, 5.0},
                                          double noise_std = 1.0,
                                          std::uint64_t seed = kDefaultSeed,
                                          bool random_placement = false) {
    if (count < 2) throw Error("cubic dataset needs at least two points");
    if (!(interval.lower < interval.upper)) throw IntervalInvalid("invalid dataset interval");

    RandomStream rng(seed);
    TrainingSet data;
    data.inputs.resize(1, count);
    data.outputs.resize(count, 1);
    data.noise_std = Eigen::VectorXd::Constant(1, noise_std);
    const double span = interval.upper - interval.lower;
    for (int j = 0; j < count; ++j) {
        const double x = random_placement ? rng.uniform(interval.lower, interval.upper)
                                          : interval.lower + span * j / (count - 1);
        data.inputs(0, j) = x;
        data.outputs(j, 0) = cubic_mean(x) + noise_std * rng.gaussian();
    }
    return data;
}

/// Van der Pol vector field x' = y, y' = eps (1 - x^2) y - x. With eps < 0
/// the origin is stable and the limit cycle repels, so trajectories started
/// outside it diverge.
inline Eigen::Vector2d van_der_pol_derivative(const Eigen::Vector2d& state, double epsilon) {
    return {state(1), epsilon * (1.0 - state(0) * state(0)) * state(1) - state(0)};
}

/// One noise-free RK4 step of length T.
inline Eigen::Vector2d van_der_pol_step(const Eigen::Vector2d& state, double T, double epsilon) {
    if (!(T > 0.0)) throw Error("van der pol step needs T > 0");
    const Eigen::Vector2d k1 = van_der_pol_derivative(state, epsilon);
    const Eigen::Vector2d k2 = van_der_pol_derivative(state + 0.5 * T * k1, epsilon);
    const Eigen::Vector2d k3 = van_der_pol_derivative(state + 0.5 * T * k2, epsilon);
    const Eigen::Vector2d k4 = van_der_pol_derivative(state + T * k3, epsilon);
    return state + (T / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Noisy variant used when generating training outputs.
inline Eigen::Vector2d van_der_pol_step(const Eigen::Vector2d& state, double T, double epsilon,
                                        double noise_std, RandomStream& rng) {
    Eigen::Vector2d next = van_der_pol_step(state, T, epsilon);
    next(0) += noise_std * rng.gaussian();
    next(1) += noise_std * rng.gaussian();
    return next;
}

/// Training pairs for the Van der Pol benchmark: `count` points on the square
/// [lo, hi]^2 (a sqrt(count) x sqrt(count) lattice by default), outputs one
/// RK4 step ahead plus N(0, noise_std^2) on each component.
inline TrainingSet generate_vdp_dataset(Interval square = {-3.0, 3.0}, int count = 441,
                                        double T = 0.1, double epsilon = -0.8,
                                        double noise_std = 0.01,
                                        std::uint64_t seed = kDefaultSeed,
                                        bool random_placement = false) {
    if (!(square.lower < square.upper)) throw IntervalInvalid("invalid dataset square");
    if (count < 4) throw Error("van der pol dataset needs at least four points");

    RandomStream rng(seed);
    TrainingSet data;
    data.inputs.resize(2, count);
    data.outputs.resize(count, 2);
    data.noise_std = Eigen::VectorXd::Constant(2, noise_std);

    if (random_placement) {
        for (int j = 0; j < count; ++j) {
            data.inputs(0, j) = rng.uniform(square.lower, square.upper);
            data.inputs(1, j) = rng.uniform(square.lower, square.upper);
        }
    } else {
        const int per_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
        if (per_side * per_side != count)
            throw Error("lattice placement needs a perfect-square count (e.g. 441 = 21 x 21)");
        const double span = square.upper - square.lower;
        int j = 0;
        for (int a = 0; a < per_side; ++a)
            for (int b = 0; b < per_side; ++b, ++j) {
                data.inputs(0, j) = square.lower + span * a / (per_side - 1);
                data.inputs(1, j) = square.lower + span * b / (per_side - 1);
            }
    }
    for (int j = 0; j < count; ++j) {
        const Eigen::Vector2d next =
            van_der_pol_step(data.inputs.col(j), T, epsilon, noise_std, rng);
        data.outputs(j, 0) = next(0);
        data.outputs(j, 1) = next(1);
    }
    return data;
}

}  // namespace gpssm

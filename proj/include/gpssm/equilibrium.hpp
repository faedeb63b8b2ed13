#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/grid.hpp"
#include "gpssm/nnls.hpp"

namespace gpssm {

/// Variances at or below this floor make the transition kernel a spike rather
/// than a usable density (noise-free training inputs do this).
inline constexpr double kDegenerateVarianceFloor = 1e-12;

namespace detail {

inline void check_variances(const Eigen::Ref<const Eigen::VectorXd>& variance) {
    for (Eigen::Index i = 0; i < variance.size(); ++i)
        if (variance(i) <= kDegenerateVarianceFloor)
            throw DegenerateVariance("predictive variance " + std::to_string(variance(i)) +
                                     " in dimension " + std::to_string(i) +
                                     " is too small for a transition density");
}

}  // namespace detail

/// p(x_next | x, D): product of the per-dimension Gaussian densities.
inline double transition_density(const GpSsmModel& model,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_next,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x_next.size() != model.state_dimension())
        throw DimensionMismatch("x_next has the wrong dimension");
    const GaussianPrediction pred = model.predict(x);
    detail::check_variances(pred.variance);
    double density = 1.0;
    for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        const double v = pred.variance(i);
        const double d = x_next(i) - pred.mean(i);
        density *= std::exp(-0.5 * d * d / v) / std::sqrt(2.0 * std::numbers::pi * v);
    }
    return density;
}

/// H_{i,j} = p(node_i | node_j, D).
inline Eigen::MatrixXd transition_matrix(const GpSsmModel& model, const Grid& grid) {
    if (grid.dimension() != model.state_dimension())
        throw DimensionMismatch("grid dimension does not match the model");
    const Eigen::Index N = grid.node_count();
    const int n = grid.dimension();
    const Eigen::MatrixXd& nodes = grid.nodes();

    Eigen::MatrixXd H(N, N);
    Eigen::ArrayXd column(N);
    for (Eigen::Index j = 0; j < N; ++j) {
        const GaussianPrediction pred = model.predict(nodes.col(j));
        detail::check_variances(pred.variance);
        column.setOnes();
        for (int d = 0; d < n; ++d) {
            const double v = pred.variance(d);
            const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * v);
            column *= (-0.5 / v * (nodes.row(d).transpose().array() - pred.mean(d)).square())
                          .exp() * norm;
        }
        H.col(j) = column.matrix();
    }
    return H;
}

/// M = (1/lambda) I - H diag(weights); the Nystrom discretization of the
/// Fredholm operator.
inline Eigen::MatrixXd assemble_fredholm_matrix(const Eigen::MatrixXd& H, const Grid& grid,
                                                double lambda) {
    if (lambda == 0.0) throw Error("assemble_fredholm_matrix: lambda must be nonzero");
    if (H.rows() != H.cols() || H.rows() != grid.node_count())
        throw DimensionMismatch("transition matrix does not match the grid");
    Eigen::MatrixXd M = -H;
    M.array().rowwise() *= grid.weights().transpose().array();
    M.diagonal().array() += 1.0 / lambda;
    return M;
}

struct SingularityReport {
    double singular_value_min = 0.0;
    double singular_value_second = 0.0;
    double singular_value_max = 0.0;
    bool is_singular = false;
    /// More than one singular value inside the singularity band.
    bool multiple = false;
};

/// Rank-deficiency test via the smallest singular value relative to the
/// largest; replaces the determinant test, which is meaningless at scale.
inline SingularityReport singularity_check(const Eigen::MatrixXd& M,
                                           double relative_tolerance = 1e-6) {
    if (M.rows() != M.cols()) throw DimensionMismatch("singularity check needs a square matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    SingularityReport report;
    report.singular_value_max = sv(0);
    report.singular_value_min = sv(sv.size() - 1);
    report.singular_value_second = sv.size() > 1 ? sv(sv.size() - 2) : sv(0);
    report.is_singular = report.singular_value_min <= relative_tolerance * report.singular_value_max;
    report.multiple =
        sv.size() > 1 && report.singular_value_second <= relative_tolerance * report.singular_value_max;
    return report;
}

struct EquilibriumOptions {
    double singularity_tolerance = 1e-6;
    double coverage_threshold = 0.99;  // warn when a column's quadrature mass drops below
    int nnls_iteration_factor = 10;    // iteration cap = factor * node count
};

struct EquilibriumSolution {
    Grid grid;
    Eigen::VectorXd density;          // u >= 0, sum_i w_i u_i = 1
    double residual = 0.0;            // ||M_p u - b_p|| for the returned u
    double singular_value_min = 0.0;
    double singular_value_max = 0.0;
    bool nonunique_warning = false;   // singular value multiplicity > 1
    Eigen::VectorXd column_mass;      // quadrature mass of each transition column
    double min_column_mass = 0.0;
    int low_mass_columns = 0;
    bool coverage_warning = false;
    int nnls_iterations = 0;
};

/// Algorithm core once H is known: assemble M at lambda = 1, require
/// singularity, stack the discretized normalization row and solve the
/// non-negative least-squares problem.
inline EquilibriumSolution solve_equilibrium_from_transition(const Eigen::MatrixXd& H,
                                                             const Grid& grid,
                                                             const EquilibriumOptions& options = {}) {
    const Eigen::Index N = grid.node_count();
    if (H.rows() != N || H.cols() != N)
        throw DimensionMismatch("transition matrix does not match the grid");
    if (!H.allFinite() || (H.array() < 0.0).any())
        throw NumericalError("transition matrix must be finite and nonnegative");

    EquilibriumSolution solution;
    solution.grid = grid;
    solution.column_mass = H.transpose() * grid.weights();
    solution.min_column_mass = solution.column_mass.minCoeff();
    solution.low_mass_columns =
        static_cast<int>((solution.column_mass.array() < options.coverage_threshold).count());
    solution.coverage_warning = solution.low_mass_columns > 0;

    const Eigen::MatrixXd M = assemble_fredholm_matrix(H, grid, 1.0);
    const SingularityReport sing = singularity_check(M, options.singularity_tolerance);
    solution.singular_value_min = sing.singular_value_min;
    solution.singular_value_max = sing.singular_value_max;
    solution.nonunique_warning = sing.multiple;
    if (!sing.is_singular)
        throw NoSolution("No solution: the Fredholm matrix is not singular at lambda = 1 "
                         "(smallest singular value " +
                         std::to_string(sing.singular_value_min) + ")");

    Eigen::MatrixXd Mp(N + 1, N);
    Mp.topRows(N) = M;
    Mp.row(N) = grid.weights().transpose();
    Eigen::VectorXd bp = Eigen::VectorXd::Zero(N + 1);
    bp(N) = 1.0;

    NnlsOptions nnls_options;
    nnls_options.max_iterations = options.nnls_iteration_factor * static_cast<int>(N);
    NnlsSolution fit = nnls(Mp, bp, nnls_options);
    solution.nnls_iterations = fit.iterations;
    if (!fit.converged)
        throw SolverStall("non-negative least squares exceeded " +
                          std::to_string(nnls_options.max_iterations) + " iterations");

    const double mass = grid.weights().dot(fit.x);
    if (!(mass > 0.0))
        throw NumericalError("equilibrium solve produced zero quadrature mass");
    solution.density = fit.x / mass;
    solution.residual = (Mp * solution.density - bp).norm();
    return solution;
}

/// Full pipeline from a trained model: transition matrix, singularity check,
/// constrained least squares.
inline EquilibriumSolution solve_equilibrium(const GpSsmModel& model, const Grid& grid,
                                             const EquilibriumOptions& options = {}) {
    return solve_equilibrium_from_transition(transition_matrix(model, grid), grid, options);
}

struct ConvergenceRecord {
    int subdivisions = 0;
    double distance = 0.0;  // L-inf against the finest solution at shared nodes
};

/// Solves on a nested sequence of grids (same box, per-dimension subdivision
/// count q for every dimension) and reports the L-inf distance of each
/// solution to the finest one at shared nodes. The last entry of q_sequence
/// is the reference and every other entry must divide it.
inline std::vector<ConvergenceRecord> convergence_study(const GpSsmModel& model,
                                                        std::span<const Interval> intervals,
                                                        std::span<const int> q_sequence,
                                                        const EquilibriumOptions& options = {}) {
    if (q_sequence.size() < 2) throw Error("convergence study needs at least two grid sizes");
    for (std::size_t i = 1; i < q_sequence.size(); ++i)
        if (q_sequence[i] < q_sequence[i - 1])
            throw Error("convergence study needs a non-decreasing q sequence");
    const int q_ref = q_sequence.back();
    for (const int q : q_sequence)
        if (q_ref % q != 0)
            throw Error("every q must divide the reference (finest) q");

    const int dim = static_cast<int>(intervals.size());
    const auto solve_at = [&](int q) {
        const std::vector<int> subdivisions(dim, q);
        return solve_equilibrium(model, Grid::build(intervals, subdivisions), options);
    };

    const EquilibriumSolution reference = solve_at(q_ref);

    // strides of the reference grid, dimension 0 slowest
    std::vector<Eigen::Index> ref_stride(dim, 1);
    for (int d = dim - 2; d >= 0; --d) ref_stride[d] = ref_stride[d + 1] * (q_ref + 1);

    std::vector<ConvergenceRecord> records;
    for (std::size_t s = 0; s + 1 < q_sequence.size(); ++s) {
        const int q = q_sequence[s];
        const EquilibriumSolution coarse = solve_at(q);
        const int ratio = q_ref / q;

        double linf = 0.0;
        std::vector<int> idx(dim, 0);
        for (Eigen::Index flat = 0; flat < coarse.density.size(); ++flat) {
            Eigen::Index ref_flat = 0;
            for (int d = 0; d < dim; ++d) ref_flat += static_cast<Eigen::Index>(idx[d]) * ratio * ref_stride[d];
            linf = std::max(linf, std::abs(coarse.density(flat) - reference.density(ref_flat)));
            for (int d = dim - 1; d >= 0; --d) {
                if (++idx[d] <= q) break;
                idx[d] = 0;
            }
        }
        records.push_back({q, linf});
    }
    return records;
}

}  // namespace gpssm

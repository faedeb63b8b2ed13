#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"

namespace gpssm {

struct NnlsOptions {
    int max_iterations = 0;  // 0: defaults to 10 * cols
    double dual_tolerance = -1.0;  // < 0: scaled machine-epsilon default
};

struct NnlsSolution {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    int iterations = 0;     // inner (feasibility) iterations consumed
    bool converged = true;  // false when the iteration cap was hit
    int passive_count = 0;
};

namespace detail {

/// Plane rotation (c, s) with c*a + s*b = r, -s*a + c*b = 0.
struct GivensRotation {
    double c = 1.0, s = 0.0, r = 0.0;
    static GivensRotation make(double a, double b) {
        GivensRotation g;
        if (std::abs(a) > std::abs(b)) {
            const double t = b / a;
            const double u = std::sqrt(1.0 + t * t);
            g.c = std::copysign(1.0 / u, a);
            g.s = g.c * t;
            g.r = std::abs(a) * u;
        } else if (b != 0.0) {
            const double t = a / b;
            const double u = std::sqrt(1.0 + t * t);
            g.s = std::copysign(1.0 / u, b);
            g.c = g.s * t;
            g.r = std::abs(b) * u;
        }
        return g;
    }
};

}  // namespace detail

/// Lawson-Hanson active-set solver for min ||A x - b||_2 with x >= 0.
/// Columns enter the passive set one at a time; the QR factorization of the
/// passive block is maintained with Householder reflections on entry and
/// Givens rotations on removal.
inline NnlsSolution nnls(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                         const NnlsOptions& options = {}) {
    const Eigen::Index M = A_in.rows();
    const Eigen::Index N = A_in.cols();
    if (b_in.size() != M) throw DimensionMismatch("nnls: A and b row counts disagree");
    if (M == 0 || N == 0) throw Error("nnls: empty problem");

    Eigen::MatrixXd A = A_in;
    Eigen::VectorXd b = b_in;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(M);

    // index[0, passive) holds the passive set in insertion order
    std::vector<Eigen::Index> index(N);
    std::iota(index.begin(), index.end(), Eigen::Index{0});
    Eigen::Index passive = 0;

    const int max_iterations =
        options.max_iterations > 0 ? options.max_iterations : 10 * static_cast<int>(N);
    const double dual_tol =
        options.dual_tolerance >= 0.0
            ? options.dual_tolerance
            : 10.0 * std::numeric_limits<double>::epsilon() *
                  A.colwise().norm().maxCoeff() * b.norm();

    NnlsSolution out;

    // back-substitution on the passive triangle: z[0, passive) <- R^{-1} b
    const auto solve_triangle = [&](Eigen::VectorXd& rhs) {
        for (Eigen::Index c = passive - 1; c >= 0; --c) {
            rhs(c) /= A(c, index[c]);
            const double zc = rhs(c);
            for (Eigen::Index r = 0; r < c; ++r) rhs(r) -= A(r, index[c]) * zc;
        }
    };

    while (passive < std::min(M, N)) {
        // dual vector over the zero set
        for (Eigen::Index p = passive; p < N; ++p) {
            const Eigen::Index j = index[p];
            w(j) = A.col(j).tail(M - passive).dot(b.tail(M - passive));
        }

        // pick the most positive dual; reject columns that fail the
        // independence or positivity test and retry
        Eigen::Index chosen_pos = -1;
        double up = 0.0;
        while (true) {
            Eigen::Index best_pos = -1;
            double wmax = dual_tol;
            for (Eigen::Index p = passive; p < N; ++p) {
                const Eigen::Index j = index[p];
                if (w(j) > wmax) {
                    wmax = w(j);
                    best_pos = p;
                }
            }
            if (best_pos < 0) break;

            const Eigen::Index j = index[best_pos];
            const double saved_pivot = A(passive, j);

            // Householder for rows [passive, M) of column j
            const double tail_norm = A.col(j).tail(M - passive).norm();
            if (tail_norm > 0.0) {
                const double cl = -std::copysign(tail_norm, A(passive, j));
                up = A(passive, j) - cl;
                A(passive, j) = cl;
            } else {
                up = 0.0;
            }

            const double upper_norm = passive > 0 ? A.col(j).head(passive).norm() : 0.0;
            const bool independent =
                upper_norm + 0.01 * std::abs(A(passive, j)) - upper_norm > 0.0;

            bool accepted = false;
            if (independent) {
                z = b;
                const double beta = up * A(passive, j);  // must be negative
                if (beta < 0.0) {
                    double s = up * z(passive);
                    for (Eigen::Index r = passive + 1; r < M; ++r) s += A(r, j) * z(r);
                    if (s != 0.0) {
                        s /= beta;
                        z(passive) += s * up;
                        for (Eigen::Index r = passive + 1; r < M; ++r) z(r) += s * A(r, j);
                    }
                }
                accepted = z(passive) / A(passive, j) > 0.0;
            }
            if (accepted) {
                chosen_pos = best_pos;
                break;
            }
            A(passive, j) = saved_pivot;
            w(j) = 0.0;
        }
        if (chosen_pos < 0) break;  // Kuhn-Tucker conditions met

        // commit: transformed b, move column into the passive set
        b = z;
        const Eigen::Index j = index[chosen_pos];
        std::swap(index[chosen_pos], index[passive]);
        ++passive;

        // apply the new reflection to the remaining zero-set columns
        const double pivot = A(passive - 1, j);
        const double beta = up * pivot;
        if (beta < 0.0) {
            for (Eigen::Index p = passive; p < N; ++p) {
                const Eigen::Index jj = index[p];
                double s = up * A(passive - 1, jj);
                for (Eigen::Index r = passive; r < M; ++r) s += A(r, j) * A(r, jj);
                if (s == 0.0) continue;
                s /= beta;
                A(passive - 1, jj) += s * up;
                for (Eigen::Index r = passive; r < M; ++r) A(r, jj) += s * A(r, j);
            }
        }
        A.col(j).tail(M - passive).setZero();
        w(j) = 0.0;

        Eigen::VectorXd zsol = b;
        solve_triangle(zsol);

        // feasibility loop: pull the iterate back onto the boundary and drop
        // columns whose coefficient reaches zero
        while (true) {
            bool feasible = true;
            for (Eigen::Index c = 0; c < passive; ++c)
                if (zsol(c) <= 0.0) feasible = false;
            if (feasible) break;

            if (++out.iterations > max_iterations) {
                out.converged = false;
                break;
            }

            double alpha = 2.0;
            Eigen::Index alpha_pos = -1;
            for (Eigen::Index c = 0; c < passive; ++c) {
                if (zsol(c) > 0.0) continue;
                const double xc = x(index[c]);
                const double denom = xc - zsol(c);
                const double t = denom > 0.0 ? xc / denom : 0.0;
                if (t < alpha) {
                    alpha = t;
                    alpha_pos = c;
                }
            }
            if (alpha_pos < 0) break;  // cannot happen; guards round-off
            for (Eigen::Index c = 0; c < passive; ++c) {
                const Eigen::Index jc = index[c];
                x(jc) += alpha * (zsol(c) - x(jc));
            }
            x(index[alpha_pos]) = 0.0;

            // remove every passive column pinned at zero (round-off may pin
            // more than the alpha-defining one)
            Eigen::Index remove_pos = alpha_pos;
            while (remove_pos >= 0) {
                const Eigen::Index removed = index[remove_pos];
                for (Eigen::Index p = remove_pos + 1; p < passive; ++p) {
                    const Eigen::Index jj = index[p];
                    index[p - 1] = jj;
                    const auto g = detail::GivensRotation::make(A(p - 1, jj), A(p, jj));
                    A(p - 1, jj) = g.r;
                    A(p, jj) = 0.0;
                    for (Eigen::Index l = 0; l < N; ++l) {
                        if (l == jj) continue;
                        const double t1 = A(p - 1, l);
                        const double t2 = A(p, l);
                        A(p - 1, l) = g.c * t1 + g.s * t2;
                        A(p, l) = -g.s * t1 + g.c * t2;
                    }
                    const double t1 = b(p - 1);
                    const double t2 = b(p);
                    b(p - 1) = g.c * t1 + g.s * t2;
                    b(p) = -g.s * t1 + g.c * t2;
                }
                index[passive - 1] = removed;
                --passive;
                x(removed) = 0.0;

                remove_pos = -1;
                for (Eigen::Index c = 0; c < passive; ++c) {
                    if (x(index[c]) <= 0.0) {
                        remove_pos = c;
                        break;
                    }
                }
            }

            zsol = b;
            solve_triangle(zsol);
        }
        if (!out.converged) break;

        for (Eigen::Index c = 0; c < passive; ++c) x(index[c]) = zsol(c);
    }

    out.x = std::move(x);
    out.passive_count = static_cast<int>(passive);
    out.residual_norm = passive < M ? b.tail(M - passive).norm() : 0.0;
    return out;
}

}  // namespace gpssm

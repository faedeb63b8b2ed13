#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"

namespace gpssm {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Tensor-product trapezoid grid over a box. Nodes are ordered
/// lexicographically over per-dimension indices with dimension 0 varying
/// slowest; node q_d of each axis sits exactly on the upper bound.
class Grid {
public:
    Grid() = default;  // empty grid; populate via build()

    static Grid build(std::span<const Interval> intervals, std::span<const int> subdivisions) {
        if (intervals.empty() || intervals.size() != subdivisions.size())
            throw Error("grid needs one interval and one subdivision count per dimension");

        Grid grid;
        grid.intervals_.assign(intervals.begin(), intervals.end());
        grid.subdivisions_.assign(subdivisions.begin(), subdivisions.end());

        const int dim = static_cast<int>(intervals.size());
        std::vector<std::vector<double>> axis_nodes(dim);
        std::vector<std::vector<double>> axis_weights(dim);
        Eigen::Index count = 1;
        for (int d = 0; d < dim; ++d) {
            const auto [a, b] = intervals[d];
            const int q = subdivisions[d];
            if (!(a < b))
                throw IntervalInvalid("interval [" + std::to_string(a) + ", " + std::to_string(b) +
                                      "] has lower >= upper");
            if (q < 2) throw Error("grid subdivisions must be >= 2");
            const double dx = (b - a) / q;
            axis_nodes[d].resize(q + 1);
            axis_weights[d].resize(q + 1);
            for (int i = 0; i <= q; ++i) {
                axis_nodes[d][i] = i == q ? b : a + i * dx;
                axis_weights[d][i] = (i == 0 || i == q) ? 0.5 * dx : dx;
            }
            count *= q + 1;
        }

        grid.nodes_.resize(dim, count);
        grid.weights_.resize(count);
        std::vector<int> idx(dim, 0);
        for (Eigen::Index flat = 0; flat < count; ++flat) {
            double w = 1.0;
            for (int d = 0; d < dim; ++d) {
                grid.nodes_(d, flat) = axis_nodes[d][idx[d]];
                w *= axis_weights[d][idx[d]];
            }
            grid.weights_(flat) = w;
            for (int d = dim - 1; d >= 0; --d) {  // dimension 0 varies slowest
                if (++idx[d] <= subdivisions[d]) break;
                idx[d] = 0;
            }
        }
        return grid;
    }

    static Grid build_1d(Interval interval, int subdivisions) {
        return build(std::span(&interval, 1), std::span(&subdivisions, 1));
    }

    int dimension() const { return static_cast<int>(intervals_.size()); }
    Eigen::Index node_count() const { return nodes_.cols(); }
    const Eigen::MatrixXd& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const std::vector<Interval>& intervals() const { return intervals_; }
    const std::vector<int>& subdivisions() const { return subdivisions_; }

    double spacing(int d) const {
        return (intervals_.at(d).upper - intervals_.at(d).lower) / subdivisions_.at(d);
    }

private:
    std::vector<Interval> intervals_;
    std::vector<int> subdivisions_;
    Eigen::MatrixXd nodes_;   // dim x N
    Eigen::VectorXd weights_; // N
};

}  // namespace gpssm

#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gpssm/errors.hpp"
#include "gpssm/kernel.hpp"
#include "gpssm/training_set.hpp"

namespace gpssm {

/// One-step predictive distribution: diagonal Gaussian over the next state.
struct GaussianPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

namespace detail {

/// Negative variances in [-kVarianceClampBand, 0) are round-off and clamp to
/// zero; anything more negative indicates a broken factorization.
inline constexpr double kVarianceClampBand = 1e-12;

inline double clamp_variance(double v) {
    if (v >= 0.0) return v;
    if (v >= -kVarianceClampBand) return 0.0;
    throw NumericalError("predictive variance " + std::to_string(v) +
                         " below the round-off clamp band");
}

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

/// Cholesky of K + sigma_n^2 I with escalating diagonal jitter
/// (1e-10 .. 1e-4 of max diag K, factors of 10).
inline Factorization factorize_with_jitter(const Eigen::MatrixXd& K, double noise_std) {
    const double max_diag = K.diagonal().maxCoeff();
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise_std * noise_std;

    Factorization f;
    f.llt.compute(A);
    if (f.llt.info() == Eigen::Success) return f;

    for (double scale = 1e-10; scale <= 1e-4 * 1.0000001; scale *= 10.0) {
        const double jitter = scale * max_diag;
        Eigen::MatrixXd Aj = A;
        Aj.diagonal().array() += jitter;
        f.llt.compute(Aj);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw FactorizationFailure(
        "covariance matrix is numerically indefinite even with maximum jitter; "
        "check for duplicated training inputs with zero noise");
}

}  // namespace detail

/// Trained GP-SSM: one GP per output dimension over the shared training
/// inputs. Immutable once fitted; const access is safe from multiple threads.
class GpSsmModel {
public:
    /// Fits weight vectors h(i) = (K + sigma_n,i^2 I)^{-1} Y_:,i per dimension.
    static GpSsmModel fit(std::vector<Kernel> kernels, TrainingSet data) {
        data.validate();
        const int n = data.state_dimension();
        if (static_cast<int>(kernels.size()) != n)
            throw DimensionMismatch("need one kernel per state dimension");

        GpSsmModel model(std::move(kernels), std::move(data));
        for (int i = 0; i < n; ++i) {
            const Eigen::MatrixXd K = covariance_matrix(model.kernels_[i], model.data_.inputs);
            auto f = detail::factorize_with_jitter(K, model.data_.noise_std(i));
            const Eigen::VectorXd y = model.data_.output_column(i);
            Eigen::VectorXd h = f.llt.solve(y);
            // one step of iterative refinement keeps the residual near round-off
            Eigen::VectorXd K_diag_shift = Eigen::VectorXd::Constant(
                y.size(), model.data_.noise_std(i) * model.data_.noise_std(i) + f.jitter);
            Eigen::VectorXd r = y - (K * h + K_diag_shift.cwiseProduct(h));
            h += f.llt.solve(r);
            model.factors_.push_back(std::move(f));
            model.weights_.push_back(std::move(h));
        }
        return model;
    }

    /// Rebuilds a model from persisted parts: the factorization is recomputed,
    /// the stored weight vectors are kept as-is.
    static GpSsmModel from_parts(std::vector<Kernel> kernels, TrainingSet data,
                                 std::vector<Eigen::VectorXd> weights) {
        data.validate();
        const int n = data.state_dimension();
        if (static_cast<int>(kernels.size()) != n)
            throw DimensionMismatch("need one kernel per state dimension");
        if (static_cast<int>(weights.size()) != n)
            throw DimensionMismatch("need one weight vector per state dimension");

        GpSsmModel model(std::move(kernels), std::move(data));
        for (int i = 0; i < n; ++i) {
            if (model.data_.size() != weights[i].size())
                throw DimensionMismatch("weight vector length must equal training size");
            const Eigen::MatrixXd K = covariance_matrix(model.kernels_[i], model.data_.inputs);
            model.factors_.push_back(detail::factorize_with_jitter(K, model.data_.noise_std(i)));
            model.weights_.push_back(std::move(weights[i]));
        }
        return model;
    }

    int state_dimension() const { return data_.state_dimension(); }
    Eigen::Index training_size() const { return data_.size(); }
    const TrainingSet& data() const { return data_; }
    const Kernel& kernel(int dim) const { return kernels_.at(dim); }
    const std::vector<Kernel>& kernels() const { return kernels_; }
    const Eigen::VectorXd& weights(int dim) const { return weights_.at(dim); }
    double jitter(int dim) const { return factors_.at(dim).jitter; }

    bool all_squared_exponential() const {
        for (const auto& k : kernels_)
            if (k.kind() != KernelKind::SquaredExponential) return false;
        return true;
    }

    /// One-step prediction at x.
    GaussianPrediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        if (x.size() != state_dimension())
            throw DimensionMismatch("query state has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(state_dimension()));
        const int n = state_dimension();
        GaussianPrediction out;
        out.mean.resize(n);
        out.variance.resize(n);
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd kx = kernels_[i].cross_covariance(data_.inputs, x);
            out.mean(i) = kx.dot(weights_[i]);
            const Eigen::VectorXd z =
                factors_[i].llt.matrixL().solve(kx);
            out.variance(i) =
                detail::clamp_variance(kernels_[i].self_covariance(x) - z.squaredNorm());
        }
        return out;
    }

    /// Batched prediction over the columns of Q (n x B). Means and variances
    /// come back as n x B matrices.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predict_batch(
        const Eigen::Ref<const Eigen::MatrixXd>& Q) const {
        if (Q.rows() != state_dimension())
            throw DimensionMismatch("query batch has dimension " + std::to_string(Q.rows()) +
                                    ", model expects " + std::to_string(state_dimension()));
        const int n = state_dimension();
        const Eigen::Index B = Q.cols();
        Eigen::MatrixXd means(n, B), vars(n, B);
        for (int i = 0; i < n; ++i) {
            Eigen::MatrixXd Kx = kernels_[i].cross_covariance_batch(data_.inputs, Q);
            means.row(i) = weights_[i].transpose() * Kx;
            factors_[i].llt.matrixL().solveInPlace(Kx);
            if (kernels_[i].kind() == KernelKind::SquaredExponential) {
                const double s2 = kernels_[i].sigma_f() * kernels_[i].sigma_f();
                vars.row(i) = (s2 - Kx.colwise().squaredNorm().array()).matrix();
            } else {
                for (Eigen::Index b = 0; b < B; ++b)
                    vars(i, b) = kernels_[i].self_covariance(Q.col(b)) - Kx.col(b).squaredNorm();
            }
            for (Eigen::Index b = 0; b < B; ++b) vars(i, b) = detail::clamp_variance(vars(i, b));
        }
        return {std::move(means), std::move(vars)};
    }

private:
    GpSsmModel(std::vector<Kernel> kernels, TrainingSet data)
        : kernels_(std::move(kernels)), data_(std::move(data)) {}

    std::vector<Kernel> kernels_;
    TrainingSet data_;
    std::vector<detail::Factorization> factors_;
    std::vector<Eigen::VectorXd> weights_;
};

/// log P(Y_:,i | X, phi) for one output dimension:
/// -1/2 y^T h - sum_j log L_jj - m/2 log 2pi.
inline double log_marginal_likelihood(const Kernel& kernel, const TrainingSet& data, int dim) {
    data.validate();
    if (dim < 0 || dim >= data.state_dimension())
        throw DimensionMismatch("dimension index out of range");
    const Eigen::MatrixXd K = covariance_matrix(kernel, data.inputs);
    const auto f = detail::factorize_with_jitter(K, data.noise_std(dim));
    const Eigen::VectorXd y = data.output_column(dim);
    const Eigen::VectorXd h = f.llt.solve(y);
    const double log_det_half = f.llt.matrixLLT().diagonal().array().log().sum();
    const double m = static_cast<double>(data.size());
    return -0.5 * y.dot(h) - log_det_half - 0.5 * m * std::log(2.0 * std::numbers::pi);
}

}  // namespace gpssm

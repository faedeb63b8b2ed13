#pragma once

#include <cmath>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"

namespace gpssm {

enum class KernelKind { Linear, Polynomial, SquaredExponential };

inline std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Polynomial: return "polynomial";
        case KernelKind::SquaredExponential: return "squared-exponential";
    }
    throw Error("unknown kernel kind");
}

inline KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "linear") return KernelKind::Linear;
    if (name == "polynomial") return KernelKind::Polynomial;
    if (name == "squared-exponential" || name == "se") return KernelKind::SquaredExponential;
    throw ParseError("unknown kernel kind: " + name);
}

/// Covariance function: kind plus hyperparameters, validated at construction.
class Kernel {
public:
    static Kernel linear(double sigma0) {
        require(sigma0 >= 0.0, "linear kernel requires sigma0 >= 0");
        Kernel k(KernelKind::Linear);
        k.sigma0_ = sigma0;
        return k;
    }

    static Kernel polynomial(double sigma0, int degree) {
        require(sigma0 >= 0.0, "polynomial kernel requires sigma0 >= 0");
        require(degree >= 1, "polynomial kernel requires degree >= 1");
        Kernel k(KernelKind::Polynomial);
        k.sigma0_ = sigma0;
        k.degree_ = degree;
        return k;
    }

    static Kernel squared_exponential(double sigma_f, double length_scale) {
        require(sigma_f >= 0.0, "squared-exponential kernel requires sigma_f >= 0");
        require(length_scale > 0.0, "squared-exponential kernel requires length_scale > 0");
        Kernel k(KernelKind::SquaredExponential);
        k.sigma_f_ = sigma_f;
        k.length_scale_ = length_scale;
        return k;
    }

    KernelKind kind() const { return kind_; }

    double sigma0() const { return sigma0_; }
    int degree() const { return degree_; }
    double sigma_f() const { return sigma_f_; }
    double length_scale() const { return length_scale_; }

    /// k(x, x'); symmetric in its arguments.
    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y) const {
        switch (kind_) {
            case KernelKind::Linear:
                return x.dot(y) + sigma0_ * sigma0_;
            case KernelKind::Polynomial:
                return std::pow(x.dot(y) + sigma0_ * sigma0_, degree_);
            case KernelKind::SquaredExponential:
                return se_from_sqdist((x - y).squaredNorm());
        }
        throw Error("unknown kernel kind");
    }

    /// k(x, x) without forming the difference; exact sigma_f^2 for SE.
    double self_covariance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        switch (kind_) {
            case KernelKind::Linear:
                return x.squaredNorm() + sigma0_ * sigma0_;
            case KernelKind::Polynomial:
                return std::pow(x.squaredNorm() + sigma0_ * sigma0_, degree_);
            case KernelKind::SquaredExponential:
                return sigma_f_ * sigma_f_;
        }
        throw Error("unknown kernel kind");
    }

    /// Vector [k(x, X_:,1), ..., k(x, X_:,m)].
    Eigen::VectorXd cross_covariance(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) const {
        Eigen::VectorXd k(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) k(j) = (*this)(x, X.col(j));
        return k;
    }

    /// m x B matrix of k(X_:,j, Q_:,b); uses a GEMM-based path for large batches.
    Eigen::MatrixXd cross_covariance_batch(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const Eigen::Ref<const Eigen::MatrixXd>& Q) const {
        switch (kind_) {
            case KernelKind::Linear:
                return ((X.transpose() * Q).array() + sigma0_ * sigma0_).matrix();
            case KernelKind::Polynomial:
                return ((X.transpose() * Q).array() + sigma0_ * sigma0_).pow(degree_).matrix();
            case KernelKind::SquaredExponential: {
                Eigen::MatrixXd sq = -2.0 * (X.transpose() * Q);
                sq.colwise() += X.colwise().squaredNorm().transpose();
                sq.rowwise() += Q.colwise().squaredNorm();
                // cancellation can leave tiny negative squared distances
                sq = sq.cwiseMax(0.0);
                const double inv = -0.5 / (length_scale_ * length_scale_);
                return (sigma_f_ * sigma_f_) * (inv * sq.array()).exp().matrix();
            }
        }
        throw Error("unknown kernel kind");
    }

    std::map<std::string, double> hyperparameters() const {
        switch (kind_) {
            case KernelKind::Linear:
                return {{"sigma0", sigma0_}};
            case KernelKind::Polynomial:
                return {{"sigma0", sigma0_}, {"degree", static_cast<double>(degree_)}};
            case KernelKind::SquaredExponential:
                return {{"sigma_f", sigma_f_}, {"length_scale", length_scale_}};
        }
        throw Error("unknown kernel kind");
    }

private:
    explicit Kernel(KernelKind kind) : kind_(kind) {}

    static void require(bool cond, const char* message) {
        if (!cond) throw Error(message);
    }

    double se_from_sqdist(double sqdist) const {
        const double l2 = length_scale_ * length_scale_;
        return sigma_f_ * sigma_f_ * std::exp(-0.5 * sqdist / l2);
    }

    KernelKind kind_;
    double sigma0_ = 0.0;
    int degree_ = 0;
    double sigma_f_ = 0.0;
    double length_scale_ = 0.0;
};

/// K_{j',j} = k(X_:,j', X_:,j). Fills the lower triangle and mirrors it, so
/// the result is symmetric to the bit.
inline Eigen::MatrixXd covariance_matrix(const Kernel& kernel,
                                         const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Eigen::Index m = X.cols();
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        K(j, j) = kernel.self_covariance(X.col(j));
        for (Eigen::Index i = j + 1; i < m; ++i) {
            const double v = kernel(X.col(i), X.col(j));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

}  // namespace gpssm

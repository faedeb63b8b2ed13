#pragma once

#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpssm/equilibrium.hpp"
#include "gpssm/errors.hpp"
#include "gpssm/gp_model.hpp"
#include "gpssm/grid.hpp"
#include "gpssm/kernel.hpp"
#include "gpssm/simulation.hpp"
#include "gpssm/stability.hpp"

namespace gpssm {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline nlohmann::json kernel_to_json(const Kernel& kernel) {
    nlohmann::json j;
    j["kind"] = to_string(kernel.kind());
    for (const auto& [name, value] : kernel.hyperparameters()) {
        if (name == "degree") j[name] = kernel.degree();
        else j[name] = value;
    }
    return j;
}

inline Kernel kernel_from_json(const nlohmann::json& j) {
    const auto kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
        case KernelKind::Linear: return Kernel::linear(j.at("sigma0").get<double>());
        case KernelKind::Polynomial:
            return Kernel::polynomial(j.at("sigma0").get<double>(), j.at("degree").get<int>());
        case KernelKind::SquaredExponential:
            return Kernel::squared_exponential(j.at("sigma_f").get<double>(),
                                               j.at("length_scale").get<double>());
    }
    throw ParseError("unknown kernel kind in model file");
}

inline nlohmann::json matrix_rows_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_rows_from_json(const nlohmann::json& rows) {
    if (!rows.is_array() || rows.empty()) throw ParseError("expected a nonempty array of rows");
    const Eigen::Index R = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index C = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(R, C);
    for (Eigen::Index r = 0; r < R; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != C)
            throw ParseError("ragged matrix in JSON document");
        for (Eigen::Index c = 0; c < C; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace detail

/// Serialized model: kernel kind and hyperparameters, noise deviations, the
/// training pairs, and the weight vectors h(i). The factorization is
/// recomputed on load.
inline nlohmann::json model_to_json(const GpSsmModel& model,
                                    const std::vector<double>& log_likelihoods = {}) {
    nlohmann::json j;
    j["schema"] = "gpssm-model";
    j["version"] = kSchemaVersion;
    j["dimension"] = model.state_dimension();
    j["kernels"] = nlohmann::json::array();
    for (const auto& k : model.kernels()) j["kernels"].push_back(detail::kernel_to_json(k));
    j["noise_std"] = std::vector<double>(model.data().noise_std.data(),
                                         model.data().noise_std.data() +
                                             model.data().noise_std.size());
    j["inputs"] = detail::matrix_rows_to_json(model.data().inputs);
    j["outputs"] = detail::matrix_rows_to_json(model.data().outputs);
    j["weights"] = nlohmann::json::array();
    for (int i = 0; i < model.state_dimension(); ++i) {
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index r = 0; r < model.weights(i).size(); ++r)
            w.push_back(model.weights(i)(r));
        j["weights"].push_back(std::move(w));
    }
    if (!log_likelihoods.empty()) j["log_marginal_likelihood"] = log_likelihoods;
    return j;
}

inline GpSsmModel model_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "gpssm-model")
        throw ParseError("not a gpssm-model document");
    if (j.value("version", 0) != kSchemaVersion)
        throw ParseError("unsupported model schema version");

    const int n = j.at("dimension").get<int>();
    std::vector<Kernel> kernels;
    for (const auto& kj : j.at("kernels")) kernels.push_back(detail::kernel_from_json(kj));
    if (static_cast<int>(kernels.size()) != n) throw ParseError("kernel count != dimension");

    TrainingSet data;
    data.inputs = detail::matrix_rows_from_json(j.at("inputs"));
    data.outputs = detail::matrix_rows_from_json(j.at("outputs"));
    const auto noise = j.at("noise_std").get<std::vector<double>>();
    data.noise_std = Eigen::Map<const Eigen::VectorXd>(noise.data(),
                                                       static_cast<Eigen::Index>(noise.size()));

    const auto& wj = j.at("weights");
    std::vector<Eigen::VectorXd> weights;
    for (const auto& row : wj) {
        const auto values = row.get<std::vector<double>>();
        weights.emplace_back(Eigen::Map<const Eigen::VectorXd>(
            values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return GpSsmModel::from_parts(std::move(kernels), std::move(data), std::move(weights));
}

inline void save_model(const std::string& path, const GpSsmModel& model,
                       const std::vector<double>& log_likelihoods = {}) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << model_to_json(model, log_likelihoods).dump(2) << "\n";
}

inline GpSsmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed model JSON: " + std::string(e.what()));
    }
    return model_from_json(j);
}

/// Equilibrium CSV: node coordinates, quadrature weight, density value.
inline void save_equilibrium_csv(std::ostream& out, const EquilibriumSolution& solution) {
    const int n = solution.grid.dimension();
    out << std::setprecision(17);
    for (int d = 0; d < n; ++d) out << "x_" << (d + 1) << ",";
    out << "weight,density\n";
    for (Eigen::Index i = 0; i < solution.grid.node_count(); ++i) {
        for (int d = 0; d < n; ++d) out << solution.grid.nodes()(d, i) << ",";
        out << solution.grid.weights()(i) << "," << solution.density(i) << "\n";
    }
}

inline void save_equilibrium_csv(const std::string& path, const EquilibriumSolution& solution) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write equilibrium CSV: " + path);
    save_equilibrium_csv(out, solution);
}

/// Rebuilds a 1-D equilibrium solution from its CSV (used by `validate`).
/// Nodes must form the uniform grid the solver emits; solver diagnostics are
/// not part of the CSV and stay zero.
inline EquilibriumSolution load_equilibrium_csv_1d(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty equilibrium CSV");
    if (detail::trim(line) != "x_1,weight,density")
        throw ParseError("expected a 1-D equilibrium CSV with header x_1,weight,density");

    std::vector<double> nodes, weights, density;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw ParseError("row " + std::to_string(row) + ": expected 3 fields");
        nodes.push_back(detail::parse_double(fields[0], row));
        weights.push_back(detail::parse_double(fields[1], row));
        density.push_back(detail::parse_double(fields[2], row));
    }
    if (nodes.size() < 3) throw ParseError("equilibrium CSV holds too few nodes");

    const int q = static_cast<int>(nodes.size()) - 1;
    const Interval interval{nodes.front(), nodes.back()};
    Grid grid = Grid::build_1d(interval, q);
    const double span = interval.upper - interval.lower;
    for (int i = 0; i <= q; ++i)
        if (std::abs(grid.nodes()(0, i) - nodes[static_cast<std::size_t>(i)]) > 1e-9 * span)
            throw ParseError("equilibrium CSV nodes must form a uniform grid");

    EquilibriumSolution solution;
    solution.grid = std::move(grid);
    solution.density = Eigen::Map<const Eigen::VectorXd>(density.data(),
                                                         static_cast<Eigen::Index>(density.size()));
    return solution;
}

inline EquilibriumSolution load_equilibrium_csv_1d(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open equilibrium CSV: " + path);
    return load_equilibrium_csv_1d(in);
}

inline nlohmann::json equilibrium_summary_to_json(const EquilibriumSolution& solution) {
    nlohmann::json j;
    j["schema"] = "gpssm-equilibrium-summary";
    j["version"] = kSchemaVersion;
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : solution.grid.intervals())
        intervals.push_back({{"lower", iv.lower}, {"upper", iv.upper}});
    j["intervals"] = std::move(intervals);
    j["subdivisions"] = solution.grid.subdivisions();
    j["residual"] = solution.residual;
    j["singular_value_min"] = solution.singular_value_min;
    j["singular_value_max"] = solution.singular_value_max;
    j["nonunique_warning"] = solution.nonunique_warning;
    j["column_mass_min"] = solution.min_column_mass;
    j["low_mass_columns"] = solution.low_mass_columns;
    j["coverage_warning"] = solution.coverage_warning;
    j["nnls_iterations"] = solution.nnls_iterations;
    j["mass"] = solution.grid.weights().dot(solution.density);
    return j;
}

inline nlohmann::json stability_report_to_json(const StabilityReport& report) {
    nlohmann::json j;
    j["schema"] = "gpssm-stability-report";
    j["version"] = kSchemaVersion;
    j["certifies"] = "fitted GP-SSM";
    j["bound"] = report.bound;
    j["recurrent_radius_sq"] = report.recurrent_radius_sq;
    j["recurrent_radius"] = std::sqrt(report.recurrent_radius_sq);
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& c : report.per_dimension)
        dims.push_back({{"sigma_f", c.sigma_f},
                        {"weight_norm", c.weight_norm},
                        {"contribution", c.contribution}});
    j["per_dimension"] = std::move(dims);
    return j;
}

inline nlohmann::json ks_result_to_json(const KsResult& result) {
    return {{"schema", "gpssm-ks-result"},
            {"version", kSchemaVersion},
            {"statistic", result.statistic},
            {"threshold", result.threshold},
            {"alpha", result.alpha},
            {"reject", result.reject},
            {"count_a", result.count_a},
            {"count_b", result.count_b}};
}

/// Ensemble CSV: step, time = step * dt, per-dimension mean, per-dimension
/// sample standard deviation.
inline void save_ensemble_csv(std::ostream& out, const EnsembleStats& stats, double dt) {
    const Eigen::Index n = stats.mean.rows();
    out << std::setprecision(17);
    out << "step,time";
    for (Eigen::Index d = 0; d < n; ++d) out << ",mean_" << (d + 1);
    for (Eigen::Index d = 0; d < n; ++d) out << ",std_" << (d + 1);
    out << "\n";
    for (Eigen::Index k = 0; k < stats.mean.cols(); ++k) {
        out << k << "," << k * dt;
        for (Eigen::Index d = 0; d < n; ++d) out << "," << stats.mean(d, k);
        for (Eigen::Index d = 0; d < n; ++d) out << "," << stats.std(d, k);
        out << "\n";
    }
}

inline void save_ensemble_csv(const std::string& path, const EnsembleStats& stats, double dt) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write ensemble CSV: " + path);
    save_ensemble_csv(out, stats, dt);
}

}  // namespace gpssm

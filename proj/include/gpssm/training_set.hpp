#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpssm/errors.hpp"

namespace gpssm {

/// Input/output pairs for one GP-SSM. Column j of `inputs` is the state at
/// step k, row j of `outputs` the observed next state.
struct TrainingSet {
    Eigen::MatrixXd inputs;     // n x m
    Eigen::MatrixXd outputs;    // m x n
    Eigen::VectorXd noise_std;  // per output dimension, length n

    int state_dimension() const { return static_cast<int>(inputs.rows()); }
    Eigen::Index size() const { return inputs.cols(); }

    Eigen::VectorXd output_column(int dim) const { return outputs.col(dim); }

    void validate() const {
        if (inputs.cols() < 1) throw Error("training set must hold at least one pair");
        if (outputs.rows() != inputs.cols())
            throw Error("training set: outputs must have one row per input column");
        if (outputs.cols() != inputs.rows())
            throw Error("training set: input and output dimensions disagree");
        if (noise_std.size() != inputs.rows())
            throw Error("training set: noise_std must have one entry per dimension");
        if ((noise_std.array() < 0.0).any())
            throw Error("training set: noise standard deviations must be >= 0");
        if (!inputs.allFinite() || !outputs.allFinite())
            throw Error("training set: non-finite entry");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& text, std::size_t row) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("row " + std::to_string(row) + ": cannot parse number '" + text + "'");
    return value;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads the training CSV (header x_1..x_n,y_1..y_n). noise_std may be empty,
/// in which case it defaults to all ones.
inline TrainingSet load_training_csv(std::istream& in, const Eigen::VectorXd& noise_std = {}) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty training CSV");
    const auto header = detail::split_csv_line(line);
    const std::size_t total = header.size();
    if (total < 2 || total % 2 != 0)
        throw ParseError("training CSV header must list x_1..x_n,y_1..y_n");
    const std::size_t n = total / 2;
    for (std::size_t i = 0; i < n; ++i) {
        if (detail::trim(header[i]) != "x_" + std::to_string(i + 1) ||
            detail::trim(header[n + i]) != "y_" + std::to_string(i + 1))
            throw ParseError("training CSV header must list x_1..x_n,y_1..y_n");
    }

    std::vector<std::vector<double>> rows;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != total)
            throw ParseError("row " + std::to_string(row_number) + ": expected " +
                             std::to_string(total) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> values(total);
        for (std::size_t i = 0; i < total; ++i) values[i] = detail::parse_double(fields[i], row_number);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ParseError("training CSV holds no data rows");

    TrainingSet data;
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    data.inputs.resize(static_cast<Eigen::Index>(n), m);
    data.outputs.resize(m, static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            data.inputs(static_cast<Eigen::Index>(i), j) = rows[j][i];
            data.outputs(j, static_cast<Eigen::Index>(i)) = rows[j][n + i];
        }
    }
    data.noise_std = noise_std.size() ? noise_std
                                      : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    data.validate();
    return data;
}

inline TrainingSet load_training_csv(const std::string& path, const Eigen::VectorXd& noise_std = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open training CSV: " + path);
    return load_training_csv(in, noise_std);
}

inline void save_training_csv(std::ostream& out, const TrainingSet& data) {
    const int n = data.state_dimension();
    out << std::setprecision(17);
    for (int i = 0; i < n; ++i) out << "x_" << (i + 1) << ",";
    for (int i = 0; i < n; ++i) out << "y_" << (i + 1) << (i + 1 == n ? "" : ",");
    out << "\n";
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        for (int i = 0; i < n; ++i) out << data.inputs(i, j) << ",";
        for (int i = 0; i < n; ++i) out << data.outputs(j, i) << (i + 1 == n ? "" : ",");
        out << "\n";
    }
}

inline void save_training_csv(const std::string& path, const TrainingSet& data) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write training CSV: " + path);
    save_training_csv(out, data);
}

}  // namespace gpssm

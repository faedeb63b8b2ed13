#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpssm/gpssm.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

Eigen::VectorXd parse_vector(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw gpssm::ParseError("cannot parse vector component '" + field + "'");
        }
    }
    if (values.empty()) throw gpssm::ParseError("empty vector argument");
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
}

gpssm::Interval parse_interval(const std::string& text) {
    const auto sep = text.find(':');
    if (sep == std::string::npos)
        throw gpssm::ParseError("interval must be written lower:upper, got '" + text + "'");
    try {
        return {std::stod(text.substr(0, sep)), std::stod(text.substr(sep + 1))};
    } catch (const std::exception&) {
        throw gpssm::ParseError("cannot parse interval '" + text + "'");
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw gpssm::Error("cannot write file: " + path);
    out << text;
}

void emit_json(const nlohmann::json& j, const std::string& output_path) {
    if (output_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_text(output_path, j.dump(2) + "\n");
}

struct GenerateArgs {
    std::string dataset;
    std::string output;
    int count = -1;  // -1: dataset default
    double lo = 0.0, hi = 0.0;
    bool has_range = false;
    double noise_std = -1.0;  // <0: dataset default
    double dt = 0.1;
    double epsilon = -0.8;
    bool random_placement = false;
    std::uint64_t seed = gpssm::kDefaultSeed;
};

int cmd_generate(const GenerateArgs& args) {
    gpssm::TrainingSet data;
    std::ostringstream echo;
    echo << std::setprecision(17);
    if (args.dataset == "cubic") {
        const int count = args.count > 0 ? args.count : 20;
        const gpssm::Interval interval =
            args.has_range ? gpssm::Interval{args.lo, args.hi} : gpssm::Interval{-5.0, 5.0};
        const double noise = args.noise_std >= 0.0 ? args.noise_std : 1.0;
        data = gpssm::generate_cubic_dataset(count, interval, noise, args.seed,
                                             args.random_placement);
        echo << "generated cubic dataset: count=" << count << " interval=[" << interval.lower
             << "," << interval.upper << "] noise_std=" << noise << " seed=" << args.seed
             << " placement=" << (args.random_placement ? "random" : "even");
    } else if (args.dataset == "vanderpol") {
        const int count = args.count > 0 ? args.count : 441;
        const gpssm::Interval square =
            args.has_range ? gpssm::Interval{args.lo, args.hi} : gpssm::Interval{-3.0, 3.0};
        const double noise = args.noise_std >= 0.0 ? args.noise_std : 0.01;
        data = gpssm::generate_vdp_dataset(square, count, args.dt, args.epsilon, noise, args.seed,
                                           args.random_placement);
        echo << "generated vanderpol dataset: count=" << count << " square=[" << square.lower
             << "," << square.upper << "]^2 T=" << args.dt << " epsilon=" << args.epsilon
             << " noise_std=" << noise << " seed=" << args.seed
             << " placement=" << (args.random_placement ? "random" : "lattice");
    } else {
        throw gpssm::ParseError("unknown dataset '" + args.dataset +
                                "' (expected cubic or vanderpol)");
    }
    gpssm::save_training_csv(args.output, data);
    std::cout << echo.str() << " -> " << args.output << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_path;
    std::string output;
    std::string kernel = "squared-exponential";
    int degree = 2;
    double noise_std = 1.0;
    bool optimize_noise = false;
    int starts = 8;
    std::uint64_t seed = gpssm::kDefaultSeed;
};

int cmd_train(const TrainArgs& args) {
    auto data = gpssm::load_training_csv(args.data_path);
    data.noise_std.setConstant(args.noise_std);
    const auto kind = gpssm::kernel_kind_from_string(args.kernel);

    gpssm::OptimizeConfig config;
    config.seed = args.seed;
    config.starts = args.starts;
    config.optimize_noise = args.optimize_noise;
    config.polynomial_degree = args.degree;

    std::vector<gpssm::Kernel> kernels;
    std::vector<double> objectives;
    std::cout << std::setprecision(17);
    for (int dim = 0; dim < data.state_dimension(); ++dim) {
        const auto result = gpssm::optimize_hyperparameters(data, kind, dim, config);
        kernels.push_back(result.kernel);
        objectives.push_back(result.objective);
        data.noise_std(dim) = result.noise_std;
        std::cout << "dimension " << (dim + 1) << ":";
        for (const auto& [name, value] : result.kernel.hyperparameters())
            std::cout << " " << name << "=" << value;
        std::cout << " noise_std=" << result.noise_std
                  << " log_marginal_likelihood=" << result.objective << "\n";
    }
    const auto model = gpssm::GpSsmModel::fit(kernels, data);
    gpssm::save_model(args.output, model, objectives);
    std::cout << "model written to " << args.output << "\n";
    return 0;
}

struct PredictArgs {
    std::string model_path;
    std::string at;
    std::string output;
    std::string format = "json";
};

int cmd_predict(const PredictArgs& args) {
    const auto model = gpssm::load_model(args.model_path);
    const Eigen::VectorXd x = parse_vector(args.at);
    const auto pred = model.predict(x);
    if (args.format == "csv") {
        std::ostringstream out;
        out << std::setprecision(17);
        for (int i = 0; i < pred.mean.size(); ++i) out << "mean_" << (i + 1) << ",";
        for (int i = 0; i < pred.mean.size(); ++i)
            out << "var_" << (i + 1) << (i + 1 == pred.mean.size() ? "" : ",");
        out << "\n";
        for (int i = 0; i < pred.mean.size(); ++i) out << pred.mean(i) << ",";
        for (int i = 0; i < pred.mean.size(); ++i)
            out << pred.variance(i) << (i + 1 == pred.mean.size() ? "" : ",");
        out << "\n";
        if (args.output.empty())
            std::cout << out.str();
        else
            write_text(args.output, out.str());
    } else {
        nlohmann::json j;
        j["schema"] = "gpssm-prediction";
        j["version"] = gpssm::kSchemaVersion;
        j["mean"] = std::vector<double>(pred.mean.data(), pred.mean.data() + pred.mean.size());
        j["variance"] =
            std::vector<double>(pred.variance.data(), pred.variance.data() + pred.variance.size());
        emit_json(j, args.output);
    }
    return 0;
}

struct EquilibriumArgs {
    std::string model_path;
    std::string output;
    std::string summary;
    std::vector<std::string> intervals;
    std::vector<int> subdivisions;
};

int cmd_equilibrium(const EquilibriumArgs& args) {
    const auto model = gpssm::load_model(args.model_path);
    std::vector<gpssm::Interval> intervals;
    for (const auto& text : args.intervals) intervals.push_back(parse_interval(text));
    if (intervals.empty()) intervals.push_back({-12.0, 8.0});
    std::vector<int> qs = args.subdivisions;
    if (qs.empty()) qs.push_back(150);
    if (intervals.size() == 1 && model.state_dimension() > 1)
        intervals.resize(model.state_dimension(), intervals.front());
    if (qs.size() == 1 && intervals.size() > 1) qs.resize(intervals.size(), qs.front());
    if (static_cast<int>(intervals.size()) != model.state_dimension())
        throw gpssm::ParseError("need one --interval per model dimension");
    if (qs.size() != intervals.size())
        throw gpssm::ParseError("need one --q per model dimension");

    const gpssm::Grid grid = gpssm::Grid::build(intervals, qs);
    const auto solution = gpssm::solve_equilibrium(model, grid);
    if (solution.coverage_warning)
        std::cerr << "warning: " << solution.low_mass_columns
                  << " transition columns carry quadrature mass below 0.99; "
                     "the grid may truncate the density\n";
    if (solution.nonunique_warning)
        std::cerr << "warning: the singular value near zero is not isolated; "
                     "the equilibrium may not be unique\n";

    gpssm::save_equilibrium_csv(args.output, solution);
    const auto summary = gpssm::equilibrium_summary_to_json(solution);
    if (args.summary.empty())
        std::cout << summary.dump(2) << "\n";
    else
        write_text(args.summary, summary.dump(2) + "\n");
    std::cout << std::setprecision(17) << "equilibrium written to " << args.output
              << " (residual " << solution.residual << ")\n";
    return 0;
}

struct StabilityArgs {
    std::string model_path;
    std::string output;
    bool empirical = false;
    std::vector<std::string> starts;
    int steps = 10000;
    int rollouts = 100;
    std::uint64_t seed = gpssm::kDefaultSeed;
};

int cmd_stability(const StabilityArgs& args) {
    const auto model = gpssm::load_model(args.model_path);
    const auto report = gpssm::mean_square_bound(model);
    nlohmann::json j = gpssm::stability_report_to_json(report);
    if (args.empirical) {
        Eigen::MatrixXd starts;
        if (args.starts.empty()) {
            starts = Eigen::MatrixXd::Zero(model.state_dimension(), 1);
        } else {
            starts.resize(model.state_dimension(), static_cast<Eigen::Index>(args.starts.size()));
            for (std::size_t c = 0; c < args.starts.size(); ++c) {
                const Eigen::VectorXd x0 = parse_vector(args.starts[c]);
                if (x0.size() != model.state_dimension())
                    throw gpssm::ParseError("--x0 must have the model dimension");
                starts.col(static_cast<Eigen::Index>(c)) = x0;
            }
        }
        const auto estimate =
            gpssm::empirical_mean_square(model, starts, args.steps, args.rollouts, args.seed);
        j["empirical"] = {{"sup_mean_square", estimate.sup_estimate},
                          {"per_start_sup", estimate.per_start_sup},
                          {"steps", estimate.steps},
                          {"rollouts", estimate.rollouts},
                          {"seed", estimate.seed},
                          {"within_bound", estimate.sup_estimate <= report.bound}};
    }
    emit_json(j, args.output);
    return 0;
}

struct ValidateArgs {
    std::string model_path;
    std::string equilibrium_path;
    std::string output;
    Eigen::Index count = 30000;
    double alpha = 0.05;
    std::uint64_t seed = gpssm::kDefaultSeed;
};

int cmd_validate(const ValidateArgs& args) {
    const auto model = gpssm::load_model(args.model_path);
    const auto solution = gpssm::load_equilibrium_csv_1d(args.equilibrium_path);
    const auto result =
        gpssm::monte_carlo_equilibrium_check(model, solution, args.count, args.alpha, args.seed);
    nlohmann::json j = gpssm::ks_result_to_json(result);
    j["count"] = args.count;
    j["seed"] = args.seed;
    emit_json(j, args.output);
    return 0;
}

struct SimulateArgs {
    std::string model_path;
    std::string output;
    std::string x0;
    int steps = 150;
    int rollouts = 500;
    double dt = 0.1;
    std::uint64_t seed = gpssm::kDefaultSeed;
};

int cmd_simulate(const SimulateArgs& args) {
    const auto model = gpssm::load_model(args.model_path);
    const Eigen::VectorXd x0 = parse_vector(args.x0);
    if (x0.size() != model.state_dimension())
        throw gpssm::ParseError("--x0 must have the model dimension");
    const auto stats = gpssm::ensemble(model, x0, args.steps, args.rollouts, args.seed);
    gpssm::save_ensemble_csv(args.output, stats, args.dt);
    std::cout << "ensemble of " << args.rollouts << " rollouts over " << args.steps
              << " steps written to " << args.output << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian process state space models: training, equilibrium distributions, "
                 "stochastic stability"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a benchmark training CSV");
    generate->add_option("dataset", gen.dataset, "cubic | vanderpol")->required();
    generate->add_option("--output", gen.output, "output CSV path")->required();
    generate->add_option("--count", gen.count, "number of training pairs");
    auto* lo = generate->add_option("--lo", gen.lo, "interval lower bound");
    generate->add_option("--hi", gen.hi, "interval upper bound")->needs(lo);
    generate->add_option("--noise-std", gen.noise_std, "output noise standard deviation");
    generate->add_option("--dt", gen.dt, "vanderpol sample time T");
    generate->add_option("--epsilon", gen.epsilon, "vanderpol damping parameter");
    generate->add_flag("--random-placement", gen.random_placement,
                       "place inputs uniformly at random instead of on a lattice");
    generate->add_option("--seed", gen.seed, "random seed");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Fit a GP-SSM with optimized hyperparameters");
    train_cmd->add_option("data", train.data_path, "training CSV")->required();
    train_cmd->add_option("--output", train.output, "output model JSON")->required();
    train_cmd->add_option("--kernel", train.kernel,
                          "kernel kind: linear | polynomial | squared-exponential");
    train_cmd->add_option("--degree", train.degree, "polynomial degree");
    train_cmd->add_option("--noise-std", train.noise_std,
                          "noise standard deviation of the training outputs");
    train_cmd->add_flag("--optimize-noise", train.optimize_noise,
                        "optimize the noise deviation along with the kernel");
    train_cmd->add_option("--starts", train.starts, "multi-start count");
    train_cmd->add_option("--seed", train.seed, "random seed");

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "One-step prediction at a state");
    predict_cmd->add_option("model", predict.model_path, "model JSON")->required();
    predict_cmd->add_option("--at", predict.at, "query state, comma separated")->required();
    predict_cmd->add_option("--output", predict.output, "output path (stdout if omitted)");
    predict_cmd->add_option("--format", predict.format, "csv | json");

    EquilibriumArgs equilibrium;
    auto* eq_cmd = app.add_subcommand("equilibrium", "Solve for the stationary distribution");
    eq_cmd->add_option("model", equilibrium.model_path, "model JSON")->required();
    eq_cmd->add_option("--output", equilibrium.output, "output CSV path")->required();
    eq_cmd->add_option("--summary", equilibrium.summary, "summary JSON path (stdout if omitted)");
    eq_cmd->add_option("--interval", equilibrium.intervals,
                       "integration interval lower:upper (repeat per dimension)");
    eq_cmd->add_option("--q", equilibrium.subdivisions,
                       "subdivision count (repeat per dimension)");

    StabilityArgs stability;
    auto* stab_cmd = app.add_subcommand("stability", "Mean-square bound and recurrent set");
    stab_cmd->add_option("model", stability.model_path, "model JSON")->required();
    stab_cmd->add_option("--output", stability.output, "report JSON path (stdout if omitted)");
    stab_cmd->add_flag("--empirical", stability.empirical,
                       "append Monte Carlo corroboration of the bound");
    stab_cmd->add_option("--x0", stability.starts, "start state for --empirical (repeatable)");
    stab_cmd->add_option("--steps", stability.steps, "steps per rollout");
    stab_cmd->add_option("--rollouts", stability.rollouts, "rollouts per start");
    stab_cmd->add_option("--seed", stability.seed, "random seed");

    ValidateArgs validate;
    auto* val_cmd = app.add_subcommand("validate", "Kolmogorov-Smirnov stationarity check");
    val_cmd->add_option("model", validate.model_path, "model JSON")->required();
    val_cmd->add_option("equilibrium", validate.equilibrium_path, "equilibrium CSV")->required();
    val_cmd->add_option("--count", validate.count, "sample count");
    val_cmd->add_option("--alpha", validate.alpha, "significance level");
    val_cmd->add_option("--seed", validate.seed, "random seed");
    val_cmd->add_option("--output", validate.output, "output JSON path (stdout if omitted)");

    SimulateArgs simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo multi-step prediction ensemble");
    sim_cmd->add_option("model", simulate.model_path, "model JSON")->required();
    sim_cmd->add_option("--x0", simulate.x0, "start state, comma separated")->required();
    sim_cmd->add_option("--output", simulate.output, "output CSV path")->required();
    sim_cmd->add_option("--steps", simulate.steps, "prediction horizon");
    sim_cmd->add_option("--rollouts", simulate.rollouts, "Monte Carlo rollouts");
    sim_cmd->add_option("--dt", simulate.dt, "time per step in the CSV time column");
    sim_cmd->add_option("--seed", simulate.seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*train_cmd) return cmd_train(train);
        if (*predict_cmd) return cmd_predict(predict);
        if (*eq_cmd) return cmd_equilibrium(equilibrium);
        if (*stab_cmd) return cmd_stability(stability);
        if (*val_cmd) return cmd_validate(validate);
        if (*sim_cmd) return cmd_simulate(simulate);
    } catch (const gpssm::NoSolution& e) {
        std::cerr << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::FactorizationFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::OptimizationFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::SolverStall& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::DegenerateVariance& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const gpssm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

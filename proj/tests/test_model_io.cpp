#include <gtest/gtest.h>

#include <sstream>

#include "gpssm/benchmark_systems.hpp"
#include "gpssm/model_io.hpp"

using namespace gpssm;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

TEST(ModelJson, RoundTripPreservesPredictionsExactly) {
    const auto data = generate_cubic_dataset();
    const auto model = GpSsmModel::fit({Kernel::squared_exponential(3.3068, 2.2435)}, data);
    const auto j = model_to_json(model, {-36.66});
    const auto loaded = model_from_json(j);

    for (double x = -10.0; x <= 10.0; x += 0.37) {
        const auto a = model.predict(vec1(x));
        const auto b = loaded.predict(vec1(x));
        EXPECT_EQ(a.mean(0), b.mean(0));
        EXPECT_EQ(a.variance(0), b.variance(0));
    }
}

TEST(ModelJson, SerializedDocumentRoundTripsThroughText) {
    const auto data = generate_vdp_dataset({-3.0, 3.0}, 25, 0.1, -0.8, 0.01, 3);
    const auto model = GpSsmModel::fit({Kernel::squared_exponential(1.0, 1.0),
                                        Kernel::squared_exponential(2.0, 0.5)},
                                       data);
    const std::string text = model_to_json(model).dump(2);
    const auto loaded = model_from_json(nlohmann::json::parse(text));
    Eigen::VectorXd x(2);
    x << 0.4, -1.1;
    EXPECT_EQ(model.predict(x).mean, loaded.predict(x).mean);
    EXPECT_EQ(model.predict(x).variance, loaded.predict(x).variance);
}

TEST(ModelJson, RejectsWrongSchema) {
    nlohmann::json j;
    j["schema"] = "something-else";
    EXPECT_THROW(model_from_json(j), ParseError);
}

TEST(ModelJson, KernelKindsRoundTrip) {
    for (const auto& kernel : {Kernel::linear(0.4), Kernel::polynomial(0.9, 3),
                               Kernel::squared_exponential(1.2, 0.6)}) {
        const auto back = detail::kernel_from_json(detail::kernel_to_json(kernel));
        EXPECT_EQ(back.kind(), kernel.kind());
        Eigen::VectorXd a = vec1(0.7), b = vec1(-0.3);
        EXPECT_EQ(kernel(a, b), back(a, b));
    }
}

TEST(TrainingCsv, RoundTripIsExact) {
    const auto data = generate_vdp_dataset({-3.0, 3.0}, 16, 0.1, -0.8, 0.01, 5);
    std::stringstream buffer;
    save_training_csv(buffer, data);
    const auto loaded = load_training_csv(buffer, data.noise_std);
    EXPECT_EQ(loaded.inputs, data.inputs);
    EXPECT_EQ(loaded.outputs, data.outputs);
}

TEST(TrainingCsv, HeaderAndFieldErrorsCarryRowNumbers) {
    {
        std::stringstream bad("x_1,z_1\n0,0\n");
        EXPECT_THROW(load_training_csv(bad), ParseError);
    }
    {
        std::stringstream bad("x_1,y_1\n0.5\n");
        try {
            load_training_csv(bad);
            FAIL() << "expected ParseError";
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
        }
    }
    {
        std::stringstream bad("x_1,y_1\n0.5,abc\n");
        try {
            load_training_csv(bad);
            FAIL() << "expected ParseError";
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
        }
    }
    {
        std::stringstream empty("");
        EXPECT_THROW(load_training_csv(empty), ParseError);
    }
    {
        std::stringstream header_only("x_1,y_1\n");
        EXPECT_THROW(load_training_csv(header_only), ParseError);
    }
}

TEST(EquilibriumCsv, RoundTripPreservesDensity) {
    const auto data = generate_cubic_dataset();
    const auto model = GpSsmModel::fit({Kernel::squared_exponential(3.3, 2.2)}, data);
    const auto solution = solve_equilibrium(model, Grid::build_1d({-12.0, 8.0}, 150));

    std::stringstream buffer;
    save_equilibrium_csv(buffer, solution);
    const auto loaded = load_equilibrium_csv_1d(buffer);
    EXPECT_EQ(loaded.grid.node_count(), solution.grid.node_count());
    EXPECT_EQ(loaded.density, solution.density);
    EXPECT_NEAR((loaded.grid.weights() - solution.grid.weights()).cwiseAbs().maxCoeff(), 0.0,
                1e-15);
}

TEST(EquilibriumCsv, RejectsNonUniformNodes) {
    std::stringstream bad("x_1,weight,density\n0,0.5,1\n0.6,1,1\n2,0.5,1\n");
    EXPECT_THROW(load_equilibrium_csv_1d(bad), ParseError);
}

TEST(EnsembleCsv, LayoutMatchesContract) {
    EnsembleStats stats;
    stats.mean.resize(2, 3);
    stats.mean << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
    stats.std.resize(2, 3);
    stats.std << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
    std::stringstream buffer;
    save_ensemble_csv(buffer, stats, 0.1);
    std::string line;
    std::getline(buffer, line);
    EXPECT_EQ(line, "step,time,mean_1,mean_2,std_1,std_2");
    std::getline(buffer, line);
    EXPECT_EQ(line.substr(0, 4), "0,0,");
    std::getline(buffer, line);
    const auto fields = detail::split_csv_line(line);
    ASSERT_EQ(fields.size(), 6u);
    EXPECT_EQ(fields[0], "1");
    EXPECT_DOUBLE_EQ(std::stod(fields[1]), 0.1);
    EXPECT_DOUBLE_EQ(std::stod(fields[2]), 1.0);
    EXPECT_DOUBLE_EQ(std::stod(fields[5]), 0.5);
}

TEST(SummaryJson, CarriesDiagnostics) {
    const auto data = generate_cubic_dataset();
    const auto model = GpSsmModel::fit({Kernel::squared_exponential(3.3, 2.2)}, data);
    const auto solution = solve_equilibrium(model, Grid::build_1d({-12.0, 8.0}, 60));
    const auto j = equilibrium_summary_to_json(solution);
    EXPECT_EQ(j.at("schema"), "gpssm-equilibrium-summary");
    EXPECT_EQ(j.at("subdivisions").at(0), 60);
    EXPECT_NEAR(j.at("mass").get<double>(), 1.0, 1e-8);
    EXPECT_LE(j.at("residual").get<double>(), 1e-4);
}

}  // namespace

#include <gtest/gtest.h>

#include <atomic>
#include <numbers>
#include <random>

#include "mbe/config.hpp"
#include "mbe/io.hpp"
#include "mbe/parallel.hpp"
#include "mbe/quadrature.hpp"
#include "mbe/trig_series.hpp"

using namespace mbe;

TEST(TrigSeries, ProductMatchesPointwiseProduct) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TrigSeries a = TrigSeries::constant(0.3) + TrigSeries::cosine(1.0, 0.7) + TrigSeries::sine(2.5, -0.4);
    TrigSeries b = TrigSeries::cosine(1.0, 1.1) + TrigSeries::sine(std::numbers::sqrt2, 0.6);
    const TrigSeries c = a * b;
    for (int k = 0; k < 100; ++k) {
        const double t = 50.0 * u(rng);
        EXPECT_NEAR(c(t), a(t) * b(t), 1e-13);
    }
    // cos^2 has mean 1/2.
    EXPECT_NEAR((TrigSeries::cosine(3.0) * TrigSeries::cosine(3.0)).mean(), 0.5, 1e-16);
    EXPECT_NEAR((TrigSeries::sine(3.0) * TrigSeries::cosine(3.0)).mean(), 0.0, 1e-16);
}

TEST(TrigSeries, NegativeFrequencyFolds) {
    TrigSeries s;
    s.add(-2.0, 1.0, 1.0);
    ASSERT_EQ(s.terms().size(), 1u);
    EXPECT_EQ(s.terms()[0].frequency, 2.0);
    EXPECT_NEAR(s(0.4), std::cos(-0.8) + std::sin(-0.8), 1e-15);
}

TEST(TrigSeries, OscillatoryIntegralMatchesQuadrature) {
    const TrigSeries s = TrigSeries::constant(2.0) + TrigSeries::cosine(1.3, 0.5) + TrigSeries::sine(0.7, -1.2);
    const double T = 9.0;
    const std::size_t n = 200000;
    const double avg = trapezoid_average<double>([&](double t) { return s(t) - 2.0; }, T, n);
    EXPECT_NEAR(s.oscillatory_integral(T), avg * T, 1e-8);
}

TEST(Parallel, ResultsOrderedAndIndependentOfWorkers) {
    auto square = [](std::size_t i) { return static_cast<double>(i * i); };
    const auto a = parallel_map<double>(100, 1, square);
    const auto b = parallel_map<double>(100, 7, square);
    ASSERT_EQ(a.size(), 100u);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(a[i], static_cast<double>(i * i));
    EXPECT_TRUE(parallel_map<int>(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST(Parallel, LowestIndexFailureIsRethrown) {
    std::atomic<int> calls{0};
    try {
        parallel_map<int>(50, 1, [&](std::size_t i) {
            ++calls;
            if (i == 3 || i == 10) throw std::runtime_error("item " + std::to_string(i));
            return 0;
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "item 3");
    }
    EXPECT_EQ(calls.load(), 4);  // stops launching after the failure
}

TEST(Io, ShortestRoundTripDoubles) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-10), "1e-10");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double x = u(rng);
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
    EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Config, DefaultsAndOverrides) {
    const RunConfig c = parse_config_text(R"({"schema_version": 1})");
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.tol, 1e-10);
    EXPECT_TRUE(c.experiment.empty());
    const RunConfig d = parse_config_text(R"({
        "schema_version": 1,
        "model": {"p": 0.002, "gamma": 0.001, "Omega": 1.0},
        "pumping": {"Ae": [0.5, 0.5], "modes": [{"amplitude": 0.2, "frequency": 1.5}]},
        "seed": 42,
        "simulate": {"kind": "pure", "C1": [0.6, 0], "C2": [0, 0.8], "t1": 5, "dt": 0.5},
        "experiment": {"name": "stable", "d": 0.02, "samples": 3}
    })");
    EXPECT_EQ(d.model.p, 0.002);
    EXPECT_EQ(d.pumping.Ae, Complex(0.5, 0.5));
    ASSERT_EQ(d.pumping.modes.size(), 1u);
    EXPECT_EQ(d.pumping.modes[0].amplitude, Complex(0.2, 0.0));
    EXPECT_EQ(d.seed, 42u);
    EXPECT_EQ(d.simulate.kind, RhsKind::PureState);
    const StableConfig s = stable_config(d);
    EXPECT_EQ(s.d, 0.02);
    EXPECT_EQ(s.samples, 3u);
    EXPECT_EQ(s.seed, 42u);
    EXPECT_EQ(s.base.omega2, 1.0);
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "bogus": 1})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "model": {"Omega2": 1}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "experiment": {"name": "kbm", "d": 0.1}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "experiment": {"name": "nope"}})"), ConfigError);
}

TEST(Config, StructuralErrors) {
    EXPECT_THROW(parse_config_text("{"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"model": {}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 2})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "model": {"p": "x"}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "simulate": {"t0": 5, "t1": 1}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "simulate": {"S": [1, 1, 0]}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "simulate": {"kind": "euler"}})"), ConfigError);
}

TEST(Config, ModelInvariantsRechecked) {
    try {
        parse_config_text(R"({"schema_version": 1, "model": {"omega1": 1, "omega2": 1}})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
        EXPECT_NE(std::string(e.what()).find("omega2 > omega1"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text(R"({"schema_version": 1, "pumping": {"modes": [{"amplitude": 1, "frequency": 1}]}})"),
                 Error);
}

TEST(Config, HashIgnoresKeyOrder) {
    const auto a = nlohmann::json::parse(R"({"schema_version": 1, "seed": 3, "tol": 1e-9})");
    const auto b = nlohmann::json::parse(R"({"tol": 1e-9, "seed": 3, "schema_version": 1})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    const auto c = nlohmann::json::parse(R"({"tol": 1e-9, "seed": 4, "schema_version": 1})");
    EXPECT_NE(config_hash(a), config_hash(c));
}

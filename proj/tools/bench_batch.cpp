// Serial reference vs OpenMP scenario batches on the bundled feeder.

#include "voltvar/batch.hpp"
#include "voltvar/scenarios.hpp"
#include "voltvar/trainer.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace voltvar;

struct Fixture {
    GridModel model;
    RuleSet rules;
    std::vector<Scenario> scenarios;
    Vec lambda;
    ChanceConfig chance;
    EquilibriumOptions eq_opts;

    static const Fixture& get() {
        static Fixture f = [] {
            FeederModel feeder =
                FeederModel::from_json_file(std::string(VOLTVAR_DATA_DIR)
                                            + "/ieee37_feeder.json");
            Fixture fx{GridModel::build(feeder), {}, {}, {}, {}, {}};
            std::vector<int> buses;
            for (int b : fx.model.der_buses())
                buses.push_back(b + 1);
            fx.rules = RuleSet::defaults(buses, fx.model.q_hat());
            ScenarioSet set = generate_synthetic(feeder, 320, 7, Profile::high_solar);
            fx.scenarios = std::move(set.items);
            fx.lambda = Vec::Constant(fx.model.n(), 0.05);
            fx.eq_opts.max_iterations = 400;
            return fx;
        }();
        return f;
    }
};

void bench_equilibria(benchmark::State& state, ExecutionPolicy policy) {
    const Fixture& fx = Fixture::get();
    for (auto _ : state) {
        auto eqs = equilibria_batch(fx.rules, fx.model, fx.scenarios, fx.eq_opts, policy);
        benchmark::DoNotOptimize(eqs.data());
    }
}

void bench_gradient(benchmark::State& state, ExecutionPolicy policy) {
    const Fixture& fx = Fixture::get();
    for (auto _ : state) {
        auto lg = lagrangian_batch(fx.rules, fx.lambda, fx.model, fx.scenarios, fx.chance,
                                   fx.eq_opts, true, policy);
        benchmark::DoNotOptimize(lg.gradient.data());
    }
}

} // namespace

BENCHMARK_CAPTURE(bench_equilibria, serial, voltvar::ExecutionPolicy::serial);
BENCHMARK_CAPTURE(bench_equilibria, openmp, voltvar::ExecutionPolicy::parallel);
BENCHMARK_CAPTURE(bench_gradient, serial, voltvar::ExecutionPolicy::serial);
BENCHMARK_CAPTURE(bench_gradient, openmp, voltvar::ExecutionPolicy::parallel);

BENCHMARK_MAIN();

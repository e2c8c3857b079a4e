#include <benchmark/benchmark.h>

#include "pdterm/hazard_model.hpp"
#include "pdterm/life_table.hpp"
#include "pdterm/simulate.hpp"
#include "pdterm/troc.hpp"

namespace {

using namespace pdterm;

SimConfig bench_config(std::size_t n_loans) {
    SimConfig cfg;
    cfg.n_loans = n_loans;
    cfg.horizon = 60;
    cfg.seed = 1234;
    cfg.baseline_hazard = {{6, 0.012}, {18, 0.006}, {0, 0.009}};
    cfg.macro_series = {{"m_rate", 0.0, 0.9, 0.3}};
    cfg.true_coefficients = {{"m_rate", 0.6}, {"delinq", 1.2}};
    cfg.settlement_rate = 0.003;
    cfg.cure_probability = 0.25;
    return cfg;
}

const SimResult& shared_sim() {
    static const SimResult sim = simulate(bench_config(20000), 1);
    return sim;
}

void BM_Simulate(benchmark::State& state) {
    const SimConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(cfg, 1).panel.rows().size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_LifeTable(benchmark::State& state) {
    const SpellPanel& panel = shared_sim().panel;
    for (auto _ : state) benchmark::DoNotOptimize(build_life_table(panel, 60).size());
    state.SetItemsProcessed(state.iterations() * panel.spells().size());
}
BENCHMARK(BM_LifeTable)->Unit(benchmark::kMillisecond);

void BM_BuildDesign(benchmark::State& state) {
    const SpellPanel& panel = shared_sim().panel;
    ModelSpec spec;
    spec.numeric_covariates = {"m_rate", "delinq"};
    for (auto _ : state) benchmark::DoNotOptimize(build_design(panel, spec).rows());
    state.SetItemsProcessed(state.iterations() * panel.rows().size());
}
BENCHMARK(BM_BuildDesign)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
    const SpellPanel& panel = shared_sim().panel;
    ModelSpec spec;
    spec.numeric_covariates = {"m_rate", "delinq"};
    spec.event_weight = 10.0;
    const DesignMatrix design = build_design(panel, spec);
    FitOptions options;
    options.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(fit(design, options).deviance);
    state.SetItemsProcessed(state.iterations() * design.rows());
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Troc(benchmark::State& state) {
    const SimResult& sim = shared_sim();
    const MarkerPanel mp = make_marker_panel(sim.panel, sim.truth.hazard);
    for (auto _ : state) benchmark::DoNotOptimize(troc(mp, 12, {0.05}).auc);
    state.SetItemsProcessed(state.iterations() * mp.marker_count());
}
BENCHMARK(BM_Troc)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

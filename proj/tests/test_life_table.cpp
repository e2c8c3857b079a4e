#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pdterm/errors.hpp"
#include "pdterm/life_table.hpp"

using namespace pdterm;
using namespace pdterm::testing;

namespace {

// Brute-force recomputation straight from the risk-set definition, for fully
// observed panels: n_k sums failures and censorings at ages >= t_(k).
struct BruteTable {
    std::vector<int> age;
    std::vector<double> n, f, c, h, s, dens;
};

BruteTable brute_force_table(const SpellPanel& panel, int cap) {
    std::map<int, std::pair<double, double>> stops;  // age -> (failures, censored)
    for (const Spell& spell : panel.spells()) {
        REQUIRE(spell.entry_time == 0);
        auto& [f, c] = stops[spell.stop_time];
        if (spell.defaulted())
            f += 1.0;
        else
            c += 1.0;
    }
    BruteTable out;
    double survival = 1.0;
    for (const auto& [age, fc] : stops) {
        if (age > cap) break;
        double n = 0.0;
        for (const auto& [age2, fc2] : stops)
            if (age2 >= age) n += fc2.first + fc2.second;
        out.age.push_back(age);
        out.n.push_back(n);
        out.f.push_back(fc.first);
        out.c.push_back(fc.second);
        out.h.push_back(fc.first / n);
        const double prev = survival;
        survival *= 1.0 - fc.first / n;
        out.s.push_back(survival);
        out.dens.push_back(prev - survival);
    }
    return out;
}

SpellPanel random_panel(std::mt19937_64& rng, std::size_t max_spells) {
    PanelBuilder builder({});
    std::uniform_int_distribution<int> age_dist(1, 24);
    std::uniform_int_distribution<int> res_dist(1, 4);
    std::uniform_int_distribution<std::size_t> count_dist(1, max_spells);
    const std::size_t spells = count_dist(rng);
    for (std::size_t i = 0; i < spells; ++i)
        add_spell(builder, static_cast<std::int64_t>(i + 1), 1, age_dist(rng),
                  static_cast<ResolutionType>(res_dist(rng)), YearMonth(2019, 1), 1);
    return builder.build();
}

}  // namespace

TEST_CASE("hand-computed ten-loan table") {
    const LifeTable table = build_life_table(ten_loan_panel(), 300);
    REQUIRE(table.size() == 3);  // stop ages 1, 2, 5
    CHECK(table.age[0] == 1);
    CHECK(table.n_risk[0] == 10);
    CHECK(table.failures[0] == 2);
    CHECK(table.censored[0] == 1);
    CHECK(table.hazard[0] == doctest::Approx(0.2));
    CHECK(table.survival[0] == doctest::Approx(0.8));

    CHECK(table.age[1] == 2);
    CHECK(table.n_risk[1] == 7);
    CHECK(table.hazard[1] == doctest::Approx(1.0 / 7.0));
    CHECK(table.survival[1] == doctest::Approx(0.8 * 6.0 / 7.0));

    SUBCASE("Greenwood variance at the first age") {
        CHECK(table.variance[0] == doctest::Approx(0.8 * 0.8 * (2.0 / (10.0 * 8.0))));
    }

    SUBCASE("95% band half-width uses the normal quantile") {
        const SurvivalBand band = greenwood_ci(table, 0.95);
        const double half = 1.959964 * std::sqrt(table.variance[0]);
        CHECK(table.survival[0] - band.lower[0] == doctest::Approx(half).epsilon(1e-5));
        CHECK(band.upper[0] == doctest::Approx(1.0));  // clipped
    }

    SUBCASE("empirical term structure projects the density") {
        const auto dens = empirical_term_structure(table);
        CHECK(dens.at(1) == doctest::Approx(0.2));
        CHECK(dens.at(2) == doctest::Approx(0.8 / 7.0));
        CHECK(dens.count(5) == 0);  // censoring-only age has no density mass
    }
}

TEST_CASE("zero-default panel has flat survival") {
    PanelBuilder builder({});
    for (std::int64_t loan = 1; loan <= 6; ++loan)
        add_spell(builder, loan, 1, 3 + static_cast<int>(loan % 3), ResolutionType::kCensored,
                  YearMonth(2020, 1), 1);
    const LifeTable table = build_life_table(builder.build(), 300);
    for (std::size_t k = 0; k < table.size(); ++k) {
        CHECK(table.survival[k] == doctest::Approx(1.0));
        CHECK(table.density[k] == doctest::Approx(0.0));
        CHECK(table.variance[k] == doctest::Approx(0.0));
    }
    const SurvivalBand band = greenwood_ci(table, 0.95);
    CHECK(band.lower[0] == doctest::Approx(1.0));
    CHECK(band.upper[0] == doctest::Approx(1.0));
}

TEST_CASE("everyone defaulting at the first age exhausts the table") {
    PanelBuilder builder({});
    for (std::int64_t loan = 1; loan <= 4; ++loan)
        add_spell(builder, loan, 1, 1, ResolutionType::kDefault, YearMonth(2020, 1), 1);
    const LifeTable table = build_life_table(builder.build(), 300);
    REQUIRE(table.size() == 1);
    CHECK(table.hazard[0] == doctest::Approx(1.0));
    CHECK(table.survival[0] == doctest::Approx(0.0));
    CHECK(table.density[0] == doctest::Approx(1.0));
    CHECK(std::isinf(table.variance[0]));
    const SurvivalBand band = greenwood_ci(table, 0.95);
    CHECK(band.lower[0] == 0.0);
    CHECK(band.upper[0] == 1.0);
}

TEST_CASE("brute-force oracle matches on random fully-observed panels") {
    std::mt19937_64 rng(20240517);
    for (int trial = 0; trial < 12; ++trial) {
        const SpellPanel panel = random_panel(rng, 200);
        const LifeTable table = build_life_table(panel, 1000);
        const BruteTable brute = brute_force_table(panel, 1000);
        REQUIRE(table.size() == brute.age.size());
        double dens_sum = 0.0;
        for (std::size_t k = 0; k < table.size(); ++k) {
            CHECK(table.age[k] == brute.age[k]);
            CHECK(table.n_risk[k] == doctest::Approx(brute.n[k]).epsilon(1e-12));
            CHECK(table.failures[k] == doctest::Approx(brute.f[k]).epsilon(1e-12));
            CHECK(table.hazard[k] == doctest::Approx(brute.h[k]).epsilon(1e-12));
            CHECK(table.survival[k] == doctest::Approx(brute.s[k]).epsilon(1e-12));
            dens_sum += table.density[k];
        }
        CHECK(dens_sum + table.survival.back() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("density equals S(prev) times hazard identically") {
    const LifeTable table = build_life_table(illustrative_panel(), 300);
    double prev = 1.0;
    for (std::size_t k = 0; k < table.size(); ++k) {
        CHECK(table.density[k] == doctest::Approx(prev * table.hazard[k]).epsilon(1e-14));
        prev = table.survival[k];
    }
}

TEST_CASE("delayed entry keeps truncated spells out of early risk sets") {
    PanelBuilder builder({});
    add_spell(builder, 1, 1, 4, ResolutionType::kDefault, YearMonth(2020, 1), 1);
    add_spell(builder, 2, 1, 4, ResolutionType::kCensored, YearMonth(2020, 1), 1);
    // Loan 3 enters late: observed over ages 3..6 only.
    for (int t = 3; t <= 6; ++t) {
        PanelRow row;
        row.loan_id = 3;
        row.loan_period = t;
        row.spell_num = 1;
        row.spell_period = t;
        row.entry_time = 2;
        row.stop_time = 6;
        row.spell_age = 4;
        row.resolution = ResolutionType::kDefault;
        row.event = t == 6;
        row.date = YearMonth(2020, 1) + (t - 1);
        builder.add_row(row, {}, {});
    }
    const LifeTable table = build_life_table(builder.build(), 300);
    REQUIRE(table.age == std::vector<int>{4, 6});
    CHECK(table.n_risk[0] == 3);  // loan 3 is at risk from age 3 onward
    CHECK(table.n_risk[1] == 1);
    CHECK(table.failures[1] == 1);
}

TEST_CASE("empty panel is rejected") {
    CHECK_THROWS_AS(build_life_table(SpellPanel(), 10), EmptyPanel);
}

TEST_CASE("the crude estimator under-censoring sits below the KM survivor") {
    // Crude survival ignores censoring: spells censored before t silently
    // leave the numerator, dragging the estimate down.
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> age(1, 20);
    std::bernoulli_distribution censored(0.45);
    PanelBuilder builder({});
    std::size_t n_censored = 0;
    const std::size_t n = 400;
    for (std::size_t i = 0; i < n; ++i) {
        const bool c = censored(rng);
        n_censored += c;
        add_spell(builder, static_cast<std::int64_t>(i + 1), 1, age(rng),
                  c ? ResolutionType::kCensored : ResolutionType::kDefault, YearMonth(2020, 1),
                  1);
    }
    REQUIRE(static_cast<double>(n_censored) / n > 0.2);
    const SpellPanel panel = builder.build();
    const LifeTable table = build_life_table(panel, 100);

    bool strictly_below_somewhere = false;
    for (std::size_t k = 0; k < table.size(); ++k) {
        std::size_t surviving = 0;
        for (const Spell& spell : panel.spells())
            if (spell.stop_time > table.age[k]) ++surviving;
        const double crude = static_cast<double>(surviving) / static_cast<double>(n);
        CHECK(crude <= table.survival[k] + 1e-12);
        if (crude < table.survival[k] - 1e-9) strictly_below_somewhere = true;
    }
    CHECK(strictly_below_somewhere);
}

// Scheme sweep: determinism, ordering bookkeeping, and error naming.

#include <gtest/gtest.h>

#include "lapai/sweep.hpp"

namespace {

using namespace lapai;

// Small, fast configuration: coarse grid, short traces, 3-crossing phantom.
sweep::SweepConfig small_config() {
    sweep::SweepConfig cfg;
    cfg.scene = pa::make_vessel_phantom(3, 40.0, 11);
    cfg.acq.n_samples = 1024;
    cfg.acq.rng_seed = 11;
    cfg.acq.noise_snr_db = 10.0;
    cfg.grid.nx = 81;
    cfg.grid.ny = 81;
    cfg.grid.pitch_mm = 0.5;
    cfg.grid.origin_x_mm = -20.0;
    cfg.grid.origin_y_mm = 0.0;
    cfg.schemes = {{12.0, 45.0}, {20.0, 60.0}};
    return cfg;
}

TEST(Sweep, EmptySchemeListRejected) {
    sweep::SweepConfig cfg = small_config();
    cfg.schemes.clear();
    try {
        sweep::run_sweep(cfg);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
    }
}

TEST(Sweep, RowsFollowSchemeListOrder) {
    const sweep::SweepConfig cfg = small_config();
    const sweep::SweepResult result = sweep::run_sweep(cfg);
    ASSERT_EQ(result.rows.size(), 2u);
    ASSERT_EQ(result.images.size(), 2u);
    EXPECT_EQ(result.rows[0].d_mm, 12.0);
    EXPECT_EQ(result.rows[0].theta_deg, 45.0);
    EXPECT_EQ(result.rows[1].d_mm, 20.0);
    EXPECT_EQ(result.rows[1].theta_deg, 60.0);
    for (const auto& img : result.images) {
        EXPECT_EQ(img.grid.nx, cfg.grid.nx);
        EXPECT_EQ(img.values.size(), cfg.grid.nx * cfg.grid.ny);
    }
}

TEST(Sweep, ClassColumnMatchesClassifier) {
    const sweep::SweepResult result = sweep::run_sweep(small_config());
    EXPECT_EQ(result.rows[0].scheme_class, illum::SchemeClass::bright);
    EXPECT_EQ(result.rows[1].scheme_class, illum::SchemeClass::dark);
}

TEST(Sweep, ExactlyOneBestRowAtMaxContrast) {
    const sweep::SweepResult result = sweep::run_sweep(small_config());
    std::size_t n_best = 0, argmax = 0;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        if (result.rows[i].best) ++n_best;
        if (result.rows[i].contrast > result.rows[argmax].contrast) argmax = i;
    }
    EXPECT_EQ(n_best, 1u);
    EXPECT_EQ(result.best_index, argmax);
    EXPECT_TRUE(result.rows[argmax].best);
    // The concentrated bright scheme must beat the dark scheme outright.
    EXPECT_GT(result.rows[0].contrast, result.rows[1].contrast);
    EXPECT_EQ(result.best_index, 0u);
}

TEST(Sweep, DeterministicAcrossCallsAndThreadCounts) {
    sweep::SweepConfig cfg = small_config();
    const sweep::SweepResult a = sweep::run_sweep(cfg);
    const sweep::SweepResult b = sweep::run_sweep(cfg);
    cfg.threads = 4;
    const sweep::SweepResult c = sweep::run_sweep(cfg);
    EXPECT_EQ(sweep::sweep_csv(a), sweep::sweep_csv(b));
    EXPECT_EQ(sweep::sweep_csv(a), sweep::sweep_csv(c));
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        EXPECT_EQ(a.images[i].values, b.images[i].values);
        EXPECT_EQ(a.images[i].values, c.images[i].values);
    }
}

TEST(Sweep, SeedChangesNoise) {
    sweep::SweepConfig cfg = small_config();
    const sweep::SweepResult a = sweep::run_sweep(cfg);
    cfg.acq.rng_seed = 12;
    const sweep::SweepResult b = sweep::run_sweep(cfg);
    EXPECT_NE(a.images[0].values, b.images[0].values);
}

TEST(Sweep, ErrorNamesOffendingScheme) {
    sweep::SweepConfig cfg = small_config();
    cfg.schemes.push_back({16.0, 95.0});  // invalid incidence angle
    try {
        sweep::run_sweep(cfg);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("d = 16"), std::string::npos) << what;
        EXPECT_NE(what.find("theta = 95"), std::string::npos) << what;
    }
}

TEST(Sweep, CsvSchemaIsStable) {
    const sweep::SweepResult result = sweep::run_sweep(small_config());
    const std::string csv = sweep::sweep_csv(result);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "d_mm,theta_deg,class,contrast,node_count,best");
    // One header plus one line per scheme, each with 6 columns.
    std::size_t lines = 0, pos = 0;
    while ((pos = csv.find('\n', pos)) != std::string::npos) {
        ++lines;
        ++pos;
    }
    EXPECT_EQ(lines, 1u + result.rows.size());
    const std::string first_row = csv.substr(csv.find('\n') + 1);
    EXPECT_EQ(first_row.substr(0, first_row.find(',')), "12");
    EXPECT_NE(first_row.find(",bright,"), std::string::npos);
}

TEST(Sweep, NoiselessSweepRunsWithoutNoiseField) {
    sweep::SweepConfig cfg = small_config();
    cfg.acq.noise_snr_db.reset();
    const sweep::SweepResult a = sweep::run_sweep(cfg);
    const sweep::SweepResult b = sweep::run_sweep(cfg);
    EXPECT_EQ(sweep::sweep_csv(a), sweep::sweep_csv(b));
}

}  // namespace

#pragma once

#include "flaresim/nets.hpp"
#include "flaresim/render.hpp"
#include "flaresim/zernike.hpp"

#include <json.hpp>

#include <filesystem>

namespace flaresim {

struct OpticsConfig {
    int pupil_grid = 64;
    double radius_frac = 0.9;
    int kernel_size = 33;
    int anchor_rows = 3;
    int anchor_cols = 3;
};

struct BasisConfig {
    int count = 3; // K basis kernels kept from the decomposition
};

struct AugmentConfig {
    bool enabled = true;
};

struct EvalConfig {
    double peak = 1.0;
    double mask_threshold = 0.5;
};

// Whole-run configuration; every key mirrors a module config field. Parsing
// rejects unknown keys and validates ranges before any command starts work.
struct RunConfig {
    OpticsConfig optics;
    zernike::TurbulenceConfig turbulence;
    BasisConfig basis;
    AugmentConfig augment;
    render::CompositeRecipe composite;
    nets::ModelConfig model;
    EvalConfig eval;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void validate_run_config(const RunConfig& cfg);
nlohmann::json run_config_to_json(const RunConfig& cfg);

} // namespace flaresim

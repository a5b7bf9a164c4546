#include "flaresim/config.hpp"

#include "flaresim/errors.hpp"

#include <fstream>
#include <set>
#include <string>

namespace flaresim {
namespace {

using nlohmann::json;

// Pulls a typed value and reports the full key path on any mismatch.
template <typename T>
void read_key(const json& section, const std::string& path, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config error at " + path + "." + key + ": wrong value type");
    }
}

void reject_unknown(const json& section, const std::string& path, std::set<std::string> known) {
    for (const auto& item : section.items())
        if (!known.count(item.key()))
            throw ConfigError("config error at " + path + "." + item.key() + ": unknown key");
}

void fail(const std::string& path, const char* why) {
    throw ConfigError("config error at " + path + ": " + why);
}

} // namespace

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config error: top level must be a JSON object");
    reject_unknown(j, "config",
                   {"optics", "turbulence", "basis", "augment", "composite", "model", "eval"});

    RunConfig cfg;
    if (j.contains("optics")) {
        const auto& s = j.at("optics");
        reject_unknown(s, "optics", {"pupil_grid", "radius_frac", "kernel_size", "anchor_rows", "anchor_cols"});
        read_key(s, "optics", "pupil_grid", cfg.optics.pupil_grid);
        read_key(s, "optics", "radius_frac", cfg.optics.radius_frac);
        read_key(s, "optics", "kernel_size", cfg.optics.kernel_size);
        read_key(s, "optics", "anchor_rows", cfg.optics.anchor_rows);
        read_key(s, "optics", "anchor_cols", cfg.optics.anchor_cols);
    }
    if (j.contains("turbulence")) {
        const auto& s = j.at("turbulence");
        reject_unknown(s, "turbulence", {"n_modes", "base_sigma", "decay_alpha", "skip_piston"});
        read_key(s, "turbulence", "n_modes", cfg.turbulence.n_modes);
        read_key(s, "turbulence", "base_sigma", cfg.turbulence.base_sigma);
        read_key(s, "turbulence", "decay_alpha", cfg.turbulence.decay_alpha);
        read_key(s, "turbulence", "skip_piston", cfg.turbulence.skip_piston);
    }
    if (j.contains("basis")) {
        const auto& s = j.at("basis");
        reject_unknown(s, "basis", {"count"});
        read_key(s, "basis", "count", cfg.basis.count);
    }
    if (j.contains("augment")) {
        const auto& s = j.at("augment");
        reject_unknown(s, "augment", {"enabled"});
        read_key(s, "augment", "enabled", cfg.augment.enabled);
    }
    if (j.contains("composite")) {
        const auto& s = j.at("composite");
        reject_unknown(s, "composite",
                       {"gamma", "clip_high", "include_light_source_in_gt", "light_source_threshold"});
        read_key(s, "composite", "gamma", cfg.composite.gamma);
        read_key(s, "composite", "clip_high", cfg.composite.clip_high);
        read_key(s, "composite", "include_light_source_in_gt", cfg.composite.include_light_source_in_gt);
        read_key(s, "composite", "light_source_threshold", cfg.composite.light_source_threshold);
    }
    if (j.contains("model")) {
        const auto& s = j.at("model");
        reject_unknown(s, "model", {"stages", "base_channels", "blocks_per_stage", "dilation", "ffn_expand"});
        read_key(s, "model", "stages", cfg.model.stages);
        read_key(s, "model", "base_channels", cfg.model.base_channels);
        read_key(s, "model", "blocks_per_stage", cfg.model.blocks_per_stage);
        read_key(s, "model", "dilation", cfg.model.dilation);
        read_key(s, "model", "ffn_expand", cfg.model.ffn_expand);
    }
    if (j.contains("eval")) {
        const auto& s = j.at("eval");
        reject_unknown(s, "eval", {"peak", "mask_threshold"});
        read_key(s, "eval", "peak", cfg.eval.peak);
        read_key(s, "eval", "mask_threshold", cfg.eval.mask_threshold);
    }

    validate_run_config(cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

void validate_run_config(const RunConfig& cfg) {
    if (cfg.optics.pupil_grid < 8) fail("optics.pupil_grid", "must be >= 8");
    if (!(cfg.optics.radius_frac > 0.0) || cfg.optics.radius_frac > 1.0)
        fail("optics.radius_frac", "must be in (0, 1]");
    if (cfg.optics.kernel_size < 1 || cfg.optics.kernel_size > cfg.optics.pupil_grid)
        fail("optics.kernel_size", "must be in [1, pupil_grid]");
    if (cfg.optics.anchor_rows < 1 || cfg.optics.anchor_cols < 1)
        fail("optics.anchor_rows/anchor_cols", "must be >= 1");
    if (cfg.turbulence.n_modes < 1) fail("turbulence.n_modes", "must be >= 1");
    if (cfg.turbulence.base_sigma < 0.0) fail("turbulence.base_sigma", "must be >= 0");
    if (cfg.turbulence.decay_alpha < 0.0) fail("turbulence.decay_alpha", "must be >= 0");
    if (cfg.basis.count < 1 || cfg.basis.count > cfg.optics.anchor_rows * cfg.optics.anchor_cols)
        fail("basis.count", "must be in [1, anchor_rows*anchor_cols]");
    if (!(cfg.composite.gamma > 0.0)) fail("composite.gamma", "must be > 0");
    if (!(cfg.composite.clip_high > 0.0)) fail("composite.clip_high", "must be > 0");
    if (!(cfg.composite.light_source_threshold > 0.0) || cfg.composite.light_source_threshold > 1.0)
        fail("composite.light_source_threshold", "must be in (0, 1]");
    if (!(cfg.eval.peak > 0.0)) fail("eval.peak", "must be > 0");
    if (cfg.eval.mask_threshold < 0.0 || cfg.eval.mask_threshold > 1.0)
        fail("eval.mask_threshold", "must be in [0, 1]");
    try {
        cfg.model.validate();
    } catch (const std::invalid_argument& e) {
        fail("model", e.what());
    }
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return json{
        {"optics",
         {{"pupil_grid", cfg.optics.pupil_grid},
          {"radius_frac", cfg.optics.radius_frac},
          {"kernel_size", cfg.optics.kernel_size},
          {"anchor_rows", cfg.optics.anchor_rows},
          {"anchor_cols", cfg.optics.anchor_cols}}},
        {"turbulence",
         {{"n_modes", cfg.turbulence.n_modes},
          {"base_sigma", cfg.turbulence.base_sigma},
          {"decay_alpha", cfg.turbulence.decay_alpha},
          {"skip_piston", cfg.turbulence.skip_piston}}},
        {"basis", {{"count", cfg.basis.count}}},
        {"augment", {{"enabled", cfg.augment.enabled}}},
        {"composite",
         {{"gamma", cfg.composite.gamma},
          {"clip_high", cfg.composite.clip_high},
          {"include_light_source_in_gt", cfg.composite.include_light_source_in_gt},
          {"light_source_threshold", cfg.composite.light_source_threshold}}},
        {"model",
         {{"stages", cfg.model.stages},
          {"base_channels", cfg.model.base_channels},
          {"blocks_per_stage", cfg.model.blocks_per_stage},
          {"dilation", cfg.model.dilation},
          {"ffn_expand", cfg.model.ffn_expand}}},
        {"eval", {{"peak", cfg.eval.peak}, {"mask_threshold", cfg.eval.mask_threshold}}}};
}

} // namespace flaresim

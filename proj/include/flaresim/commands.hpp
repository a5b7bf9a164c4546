#pragma once

#include "flaresim/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace flaresim::cli {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0; // 0 = auto
    bool verbose = false;
};

// Command bodies shared by the binary and the tests. They throw ConfigError /
// DataError / std::invalid_argument; the binary maps those to exit codes.

// PSF kernels per anchor as tensor dumps plus max-normalized heatmap PNGs,
// and the full grid as one rank-4 dump.
void cmd_gen_psf(const RunConfig& cfg, const GlobalOpts& opts,
                 const std::filesystem::path& out_dir, int image_size = 512);

// Full synthesis: per pair draw a plan, augment flare/background, render the
// spatially varying scatter on the flare, composite, write input/gt plus a
// JSON-lines manifest.
void cmd_synthesize(const RunConfig& cfg, const GlobalOpts& opts,
                    const std::filesystem::path& flare_dir, const std::filesystem::path& bg_dir,
                    const std::filesystem::path& out_dir, int count);

// Augment a directory with the flare or background pipeline.
void cmd_augment(const RunConfig& cfg, const GlobalOpts& opts,
                 const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                 int count, const std::string& kind /* "flare" | "background" */);

// Plain compositing of paired flare/background directories (no scatter).
void cmd_composite(const RunConfig& cfg, const GlobalOpts& opts,
                   const std::filesystem::path& flare_dir, const std::filesystem::path& bg_dir,
                   const std::filesystem::path& out_dir);

// Metric report over paired prediction/ground-truth directories. Mask
// directories are optional; masked metrics are flagged absent when missing.
void cmd_eval(const RunConfig& cfg, const GlobalOpts& opts,
              const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
              const std::optional<std::filesystem::path>& glare_masks,
              const std::optional<std::filesystem::path>& streak_masks,
              const std::filesystem::path& report_path);

// One image through the restoration model read from a weight manifest.
void cmd_forward(const std::optional<RunConfig>& cfg, const std::filesystem::path& input,
                 const std::filesystem::path& weights_manifest,
                 const std::filesystem::path& output);

// Deterministic random (or all-zero) weight manifest for the configured model.
void cmd_init_weights(const RunConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& out_dir, bool zero);

} // namespace flaresim::cli

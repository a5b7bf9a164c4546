#include "flaresim/commands.hpp"
#include "flaresim/errors.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

namespace {

// exit codes: 0 ok, 1 usage, 2 config, 3 data, 4 internal
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flaresim: spatially varying scatter-flare synthesis and evaluation"};
    app.require_subcommand(1);

    flaresim::cli::GlobalOpts opts;
    std::string config_path;
    app.add_option("--seed", opts.seed, "base seed for every stochastic stage");
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--threads", opts.threads, "worker threads (0 = auto)");
    app.add_flag("--verbose", opts.verbose, "chatty progress output");

    std::string flare_dir, bg_dir, in_dir, out_dir, pred_dir, gt_dir;
    std::string input_file, output_file, weights_path, report_path, kind = "flare";
    std::string glare_dir, streak_dir;
    int count = 1, image_size = 512;
    bool zero_weights = false;

    auto* gen = app.add_subcommand("gen-psf", "emit anchor PSF kernels and heatmaps");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--image-size", image_size, "nominal image size for anchors");

    auto* synth = app.add_subcommand("synthesize", "full synthesis pipeline to paired data");
    synth->add_option("--flare-dir", flare_dir)->required();
    synth->add_option("--bg-dir", bg_dir)->required();
    synth->add_option("--out", out_dir)->required();
    synth->add_option("--count", count)->required();

    auto* aug = app.add_subcommand("augment", "augment a directory of images");
    aug->add_option("--in", in_dir)->required();
    aug->add_option("--out", out_dir)->required();
    aug->add_option("--count", count)->required();
    aug->add_option("--kind", kind, "flare | background");

    auto* comp = app.add_subcommand("composite", "composite paired flare/background images");
    comp->add_option("--flare-dir", flare_dir)->required();
    comp->add_option("--bg-dir", bg_dir)->required();
    comp->add_option("--out", out_dir)->required();

    auto* eval = app.add_subcommand("eval", "metric report over paired directories");
    eval->add_option("--pred-dir", pred_dir)->required();
    eval->add_option("--gt-dir", gt_dir)->required();
    eval->add_option("--glare-masks", glare_dir);
    eval->add_option("--streak-masks", streak_dir);
    eval->add_option("--report", report_path)->required();

    auto* fwd = app.add_subcommand("forward", "run the restoration model on one image");
    fwd->add_option("--input", input_file)->required();
    fwd->add_option("--weights", weights_path, "model manifest JSON")->required();
    fwd->add_option("--output", output_file)->required();

    auto* init = app.add_subcommand("init-weights", "emit a deterministic weight manifest");
    init->add_option("--out", out_dir)->required();
    init->add_flag("--zero", zero_weights, "all-zero weights instead of random");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        flaresim::RunConfig cfg;
        if (!config_path.empty()) cfg = flaresim::load_run_config(config_path);

        if (gen->parsed()) {
            flaresim::cli::cmd_gen_psf(cfg, opts, out_dir, image_size);
        } else if (synth->parsed()) {
            flaresim::cli::cmd_synthesize(cfg, opts, flare_dir, bg_dir, out_dir, count);
        } else if (aug->parsed()) {
            flaresim::cli::cmd_augment(cfg, opts, in_dir, out_dir, count, kind);
        } else if (comp->parsed()) {
            flaresim::cli::cmd_composite(cfg, opts, flare_dir, bg_dir, out_dir);
        } else if (eval->parsed()) {
            std::optional<std::filesystem::path> glare, streak;
            if (!glare_dir.empty()) glare = glare_dir;
            if (!streak_dir.empty()) streak = streak_dir;
            flaresim::cli::cmd_eval(cfg, opts, pred_dir, gt_dir, glare, streak, report_path);
        } else if (fwd->parsed()) {
            std::optional<flaresim::RunConfig> fwd_cfg;
            if (!config_path.empty()) fwd_cfg = cfg;
            flaresim::cli::cmd_forward(fwd_cfg, input_file, weights_path, output_file);
        } else if (init->parsed()) {
            flaresim::cli::cmd_init_weights(cfg, opts.seed, out_dir, zero_weights);
        }
    } catch (const flaresim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const flaresim::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitOk;
}

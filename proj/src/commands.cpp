#include "flaresim/commands.hpp"

#include "flaresim/augment.hpp"
#include "flaresim/errors.hpp"
#include "flaresim/metrics.hpp"
#include "flaresim/parallel.hpp"
#include "flaresim/png_io.hpp"
#include "flaresim/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flaresim::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<fs::path> require_pngs(const fs::path& dir) {
    auto files = list_pngs(dir);
    if (files.empty()) throw DataError("no PNG files in " + dir.string());
    return files;
}

// write-temp-then-rename so partial output never lands under the final name
void atomic_save_png(const ImageF& img, const fs::path& path, double inv_gamma) {
    const fs::path tmp = path.string() + ".tmp";
    save_png(img, tmp, inv_gamma);
    fs::rename(tmp, path);
}

void atomic_dump_tensor(const fs::path& path, const Tensor& t) {
    const fs::path tmp = path.string() + ".tmp";
    dump_tensor(tmp, t);
    fs::rename(tmp, path);
}

std::string index_name(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04zu.png", stem, i);
    return buf;
}

json plan_to_json(const augment::AugPlan& p) {
    return json{{"gamma", p.gamma},
                {"rgb_gains", p.rgb_gains},
                {"noise_var", p.noise_var},
                {"offset", p.offset},
                {"jitter_gains", p.jitter_gains},
                {"rotation", p.rotation},
                {"translation", p.translation},
                {"shear", p.shear},
                {"scale", p.scale},
                {"blur_sigma", p.blur_sigma}};
}

ImageF max_normalized(const optics::Psf& psf) {
    ImageF img(psf.size, psf.size, 1);
    const double peak = *std::max_element(psf.kernel.begin(), psf.kernel.end());
    const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
    for (std::size_t i = 0; i < psf.kernel.size(); ++i) img.data[i] = psf.kernel[i] * scale;
    return img;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& lines) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw DataError("cannot write manifest: " + path.string());
        for (const auto& line : lines) f << line << "\n";
    }
    fs::rename(tmp, path);
}

} // namespace

void cmd_gen_psf(const RunConfig& cfg, const GlobalOpts& opts, const fs::path& out_dir,
                 int image_size) {
    validate_run_config(cfg);
    if (image_size < 2) throw ConfigError("gen-psf: image size must be >= 2");
    fs::create_directories(out_dir);

    const auto aperture = optics::circular_aperture(cfg.optics.pupil_grid, cfg.optics.radius_frac);
    const auto zbasis = zernike::build_basis(cfg.optics.pupil_grid, cfg.turbulence.n_modes);
    const auto anchors =
        zernike::uniform_anchors(cfg.optics.anchor_rows, cfg.optics.anchor_cols, image_size, image_size);

    SeededRng rng(opts.seed);
    const auto field = zernike::sample_coeff_field(rng, cfg.turbulence, anchors);
    const auto grid = optics::build_psf_grid(aperture, zbasis, field, cfg.optics.kernel_size);

    const int ks = grid.kernel_size;
    std::vector<float> all;
    all.reserve(grid.psfs.size() * static_cast<std::size_t>(ks) * ks);
    for (int r = 0; r < anchors.rows; ++r) {
        for (int c = 0; c < anchors.cols; ++c) {
            const auto& psf = grid.psfs[static_cast<std::size_t>(r) * anchors.cols + c];
            const std::string stem = "psf_r" + std::to_string(r) + "_c" + std::to_string(c);
            atomic_dump_tensor(out_dir / (stem + ".fftd"),
                               Tensor::from_doubles({static_cast<std::uint32_t>(ks),
                                                     static_cast<std::uint32_t>(ks)},
                                                    psf.kernel));
            atomic_save_png(max_normalized(psf), out_dir / (stem + ".png"), 2.2);
            for (double v : psf.kernel) all.push_back(static_cast<float>(v));
        }
    }
    atomic_dump_tensor(out_dir / "psf_grid.fftd",
                       Tensor({static_cast<std::uint32_t>(anchors.rows),
                               static_cast<std::uint32_t>(anchors.cols),
                               static_cast<std::uint32_t>(ks), static_cast<std::uint32_t>(ks)},
                              std::move(all)));
}

void cmd_synthesize(const RunConfig& cfg, const GlobalOpts& opts, const fs::path& flare_dir,
                    const fs::path& bg_dir, const fs::path& out_dir, int count) {
    validate_run_config(cfg);
    if (count < 1) throw ConfigError("synthesize: count must be >= 1");
    const auto flares = require_pngs(flare_dir);
    const auto bgs = require_pngs(bg_dir);
    fs::create_directories(out_dir);

    const auto aperture = optics::circular_aperture(cfg.optics.pupil_grid, cfg.optics.radius_frac);
    const auto zbasis = zernike::build_basis(cfg.optics.pupil_grid, cfg.turbulence.n_modes);

    std::vector<std::string> manifest(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), opts.threads, [&](std::size_t i) {
        SeededRng rng = SeededRng::for_item(opts.seed, i);
        const fs::path& flare_path = flares[i % flares.size()];
        const fs::path& bg_path = bgs[i % bgs.size()];

        ImageF flare = load_png(flare_path, cfg.composite.gamma);
        ImageF bg = load_png(bg_path, cfg.composite.gamma);
        if (!flare.same_shape(bg))
            throw DataError("synthesize: resolution mismatch between " + flare_path.string() +
                            " and " + bg_path.string());

        const augment::AugPlan plan = augment::draw_plan(rng);
        if (cfg.augment.enabled) {
            flare = augment::apply_flare_pipeline(flare, plan, rng);
            bg = augment::apply_background_pipeline(bg, plan, rng);
        }

        const auto anchors = zernike::uniform_anchors(cfg.optics.anchor_rows, cfg.optics.anchor_cols,
                                                      flare.height, flare.width);
        const auto field = zernike::sample_coeff_field(rng, cfg.turbulence, anchors);
        const auto grid = optics::build_psf_grid(aperture, zbasis, field, cfg.optics.kernel_size);
        const auto basis = optics::decompose_basis(grid, cfg.basis.count, flare.height, flare.width);
        ImageF scattered = render::sv_convolve(flare, basis);
        for (double& v : scattered.data)
            if (v < 0.0) v = 0.0; // truncated-rank kernels can dip slightly negative

        const auto [input, gt] = render::composite(bg, scattered, cfg.composite);
        const std::string in_name = index_name("input", i);
        const std::string gt_name = index_name("gt", i);
        atomic_save_png(input, out_dir / in_name, cfg.composite.gamma);
        atomic_save_png(gt, out_dir / gt_name, cfg.composite.gamma);

        manifest[i] = json{{"index", i},
                           {"input", in_name},
                           {"gt", gt_name},
                           {"flare", flare_path.filename().string()},
                           {"background", bg_path.filename().string()},
                           {"seed", opts.seed ^ static_cast<std::uint64_t>(i)},
                           {"augmented", cfg.augment.enabled},
                           {"plan", plan_to_json(plan)}}
                          .dump();
    });
    write_manifest(out_dir / "manifest.jsonl", manifest);
}

void cmd_augment(const RunConfig& cfg, const GlobalOpts& opts, const fs::path& in_dir,
                 const fs::path& out_dir, int count, const std::string& kind) {
    validate_run_config(cfg);
    if (count < 1) throw ConfigError("augment: count must be >= 1");
    if (kind != "flare" && kind != "background")
        throw ConfigError("augment: kind must be 'flare' or 'background'");
    const auto inputs = require_pngs(in_dir);
    fs::create_directories(out_dir);

    std::vector<std::string> manifest(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), opts.threads, [&](std::size_t i) {
        SeededRng rng = SeededRng::for_item(opts.seed, i);
        const fs::path& src = inputs[i % inputs.size()];
        const ImageF img = load_png(src, 1.0);
        const augment::AugPlan plan = augment::draw_plan(rng);
        const ImageF out = kind == "flare" ? augment::apply_flare_pipeline(img, plan, rng)
                                           : augment::apply_background_pipeline(img, plan, rng);
        const std::string name = index_name("aug", i);
        atomic_save_png(out, out_dir / name, 1.0);
        manifest[i] = json{{"index", i},
                           {"output", name},
                           {"source", src.filename().string()},
                           {"kind", kind},
                           {"seed", opts.seed ^ static_cast<std::uint64_t>(i)},
                           {"plan", plan_to_json(plan)}}
                          .dump();
    });
    write_manifest(out_dir / "manifest.jsonl", manifest);
}

void cmd_composite(const RunConfig& cfg, const GlobalOpts& opts, const fs::path& flare_dir,
                   const fs::path& bg_dir, const fs::path& out_dir) {
    validate_run_config(cfg);
    const auto flares = require_pngs(flare_dir);
    const auto bgs = require_pngs(bg_dir);
    const std::size_t count = std::min(flares.size(), bgs.size());
    fs::create_directories(out_dir);

    std::vector<std::string> manifest(count);
    parallel_for(count, opts.threads, [&](std::size_t i) {
        const ImageF flare = load_png(flares[i], cfg.composite.gamma);
        const ImageF bg = load_png(bgs[i], cfg.composite.gamma);
        if (!flare.same_shape(bg))
            throw DataError("composite: resolution mismatch between " + flares[i].string() +
                            " and " + bgs[i].string());
        const auto [input, gt] = render::composite(bg, flare, cfg.composite);
        const std::string in_name = index_name("input", i);
        const std::string gt_name = index_name("gt", i);
        atomic_save_png(input, out_dir / in_name, cfg.composite.gamma);
        atomic_save_png(gt, out_dir / gt_name, cfg.composite.gamma);
        manifest[i] = json{{"index", i},
                           {"input", in_name},
                           {"gt", gt_name},
                           {"flare", flares[i].filename().string()},
                           {"background", bgs[i].filename().string()},
                           {"gamma", cfg.composite.gamma},
                           {"clip_high", cfg.composite.clip_high},
                           {"include_light_source_in_gt", cfg.composite.include_light_source_in_gt},
                           {"light_source_threshold", cfg.composite.light_source_threshold}}
                          .dump();
    });
    write_manifest(out_dir / "manifest.jsonl", manifest);
}

namespace {

metrics::RegionMask load_mask(const fs::path& path, metrics::RegionMask::Kind kind) {
    const ImageF img = load_png(path, 1.0);
    metrics::RegionMask mask;
    mask.height = img.height;
    mask.width = img.width;
    mask.kind = kind;
    mask.grid.resize(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            mask.grid[static_cast<std::size_t>(y) * img.width + x] =
                img.channels == 1 ? img.at(0, y, x) : luminance(img, y, x);
    return mask;
}

} // namespace

void cmd_eval(const RunConfig& cfg, const GlobalOpts& opts, const fs::path& pred_dir,
              const fs::path& gt_dir, const std::optional<fs::path>& glare_masks,
              const std::optional<fs::path>& streak_masks, const fs::path& report_path) {
    validate_run_config(cfg);
    const auto preds = require_pngs(pred_dir);

    struct Row {
        std::string name;
        double psnr = 0.0, ssim = 0.0;
        std::optional<double> g_psnr, s_psnr;
    };
    std::vector<Row> rows(preds.size());

    parallel_for(preds.size(), opts.threads, [&](std::size_t i) {
        const fs::path& pred_path = preds[i];
        const fs::path gt_path = gt_dir / pred_path.filename();
        if (!fs::exists(gt_path))
            throw DataError("eval: unpaired prediction " + pred_path.filename().string());

        const ImageF pred = load_png(pred_path, 1.0);
        const ImageF gt = load_png(gt_path, 1.0);
        Row row;
        row.name = pred_path.filename().string();
        row.psnr = metrics::psnr(pred, gt, cfg.eval.peak);
        row.ssim = metrics::ssim(pred, gt, cfg.eval.peak);
        if (glare_masks) {
            const auto mask = load_mask(*glare_masks / pred_path.filename(),
                                        metrics::RegionMask::Kind::Glare);
            row.g_psnr = metrics::masked_psnr(pred, gt, mask, cfg.eval.mask_threshold, cfg.eval.peak);
        }
        if (streak_masks) {
            const auto mask = load_mask(*streak_masks / pred_path.filename(),
                                        metrics::RegionMask::Kind::Streak);
            row.s_psnr = metrics::masked_psnr(pred, gt, mask, cfg.eval.mask_threshold, cfg.eval.peak);
        }
        rows[i] = std::move(row);
    });

    const auto metric_json = [](double v) -> json {
        if (metrics::psnr_is_infinite(v)) return json{{"value", nullptr}, {"infinite", true}};
        return json{{"value", v}, {"infinite", false}};
    };
    const auto finite_mean = [](const std::vector<double>& vs) -> json {
        double sum = 0.0;
        std::size_t n = 0, inf = 0;
        for (double v : vs) {
            if (metrics::psnr_is_infinite(v))
                ++inf;
            else {
                sum += v;
                ++n;
            }
        }
        json out{{"infinite_count", inf}, {"finite_count", n}};
        out["mean"] = n > 0 ? json(sum / static_cast<double>(n)) : json(nullptr);
        return out;
    };

    json per_image = json::array();
    std::vector<double> all_psnr, all_ssim, all_g, all_s;
    for (const auto& row : rows) {
        json item{{"name", row.name}, {"psnr", metric_json(row.psnr)}, {"ssim", row.ssim}};
        if (row.g_psnr) item["g_psnr"] = metric_json(*row.g_psnr);
        if (row.s_psnr) item["s_psnr"] = metric_json(*row.s_psnr);
        per_image.push_back(std::move(item));
        all_psnr.push_back(row.psnr);
        all_ssim.push_back(row.ssim);
        if (row.g_psnr) all_g.push_back(*row.g_psnr);
        if (row.s_psnr) all_s.push_back(*row.s_psnr);
    }

    json report;
    report["images"] = std::move(per_image);
    report["aggregate"]["psnr"] = finite_mean(all_psnr);
    double ssim_sum = 0.0;
    for (double v : all_ssim) ssim_sum += v;
    report["aggregate"]["ssim_mean"] = ssim_sum / static_cast<double>(all_ssim.size());
    report["aggregate"]["g_psnr"] =
        glare_masks ? finite_mean(all_g) : json{{"skipped", "no glare masks supplied"}};
    report["aggregate"]["s_psnr"] =
        streak_masks ? finite_mean(all_s) : json{{"skipped", "no streak masks supplied"}};

    const fs::path tmp = report_path.string() + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw DataError("cannot write report: " + report_path.string());
        f << report.dump(2) << "\n";
    }
    fs::rename(tmp, report_path);
}

void cmd_forward(const std::optional<RunConfig>& cfg, const fs::path& input,
                 const fs::path& weights_manifest, const fs::path& output) {
    auto [weights, model_cfg] = nets::load_model_weights(weights_manifest);
    if (cfg) {
        validate_run_config(*cfg);
        const auto& m = cfg->model;
        if (m.stages != model_cfg.stages || m.base_channels != model_cfg.base_channels ||
            m.blocks_per_stage != model_cfg.blocks_per_stage || m.dilation != model_cfg.dilation ||
            m.ffn_expand != model_cfg.ffn_expand)
            throw ConfigError("forward: config model section conflicts with the weights manifest");
    }

    const ImageF img = load_png(input, 1.0);
    const int div = 1 << (model_cfg.stages - 1);
    if (img.height % div != 0 || img.width % div != 0)
        throw DataError("forward: input " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + " is not divisible by " + std::to_string(div) +
                        "; crop or pad the image, or reduce model.stages");

    const ImageF out = nets::model_forward(img, weights, model_cfg);
    atomic_save_png(out, output, 1.0);
}

void cmd_init_weights(const RunConfig& cfg, std::uint64_t seed, const fs::path& out_dir, bool zero) {
    validate_run_config(cfg);
    const auto weights = nets::init_model_weights(cfg.model, seed, zero);
    nets::save_model_weights(weights, cfg.model, out_dir);
}

} // namespace flaresim::cli

#include "flaresim/optics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace flaresim::optics {

double Psf::sum() const {
    double s = 0.0;
    for (double v : kernel) s += v;
    return s;
}

ApertureMask circular_aperture(int grid_size, double radius_frac) {
    if (grid_size < 1) throw std::invalid_argument("circular_aperture: grid_size must be >= 1");
    if (!(radius_frac > 0.0) || radius_frac > 1.0)
        throw std::invalid_argument("circular_aperture: radius_frac must be in (0, 1]");

    ApertureMask mask;
    mask.grid_size = grid_size;
    mask.radius_frac = radius_frac;
    mask.grid.assign(static_cast<std::size_t>(grid_size) * grid_size, 0.0);
    const double g = static_cast<double>(grid_size);
    for (int y = 0; y < grid_size; ++y) {
        for (int x = 0; x < grid_size; ++x) {
            const double px = (2.0 * (x + 0.5) - g) / g;
            const double py = (2.0 * (y + 0.5) - g) / g;
            if (px * px + py * py <= radius_frac * radius_frac) mask.grid[mask.idx(y, x)] = 1.0;
        }
    }
    return mask;
}

ComplexField pupil(const ApertureMask& aperture, const std::vector<double>& phase) {
    const int g = aperture.grid_size;
    if (phase.size() != aperture.grid.size())
        throw std::invalid_argument("pupil: phase grid shape mismatch");

    ComplexField p(g, g);
    for (std::size_t i = 0; i < phase.size(); ++i) {
        p.re[i] = aperture.grid[i] * std::cos(phase[i]);
        p.im[i] = aperture.grid[i] * std::sin(phase[i]);
    }
    return p;
}

Psf psf_from_pupil(const ComplexField& p) {
    const ComplexField spectrum = fft2(p);
    const int h = p.height, w = p.width;

    Psf psf;
    psf.size = h;
    if (h != w) throw std::invalid_argument("psf_from_pupil: pupil must be square");
    psf.center_row = h / 2;
    psf.center_col = w / 2;
    psf.kernel.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t src = spectrum.idx(y, x);
            const double mag2 = spectrum.re[src] * spectrum.re[src] + spectrum.im[src] * spectrum.im[src];
            psf.kernel[psf.idx((y + h / 2) % h, (x + w / 2) % w)] = mag2;
        }
    }
    return psf;
}

Psf normalize_psf(const Psf& h) {
    const double s = h.sum();
    if (!(s > 0.0)) throw std::invalid_argument("normalize_psf: kernel has no energy");
    Psf out = h;
    for (double& v : out.kernel) v /= s;
    return out;
}

namespace {

Psf center_crop(const Psf& psf, int kernel_size) {
    if (kernel_size > psf.size)
        throw std::invalid_argument("center_crop: kernel_size exceeds pupil grid");
    const int r0 = psf.center_row - kernel_size / 2;
    const int c0 = psf.center_col - kernel_size / 2;
    Psf out;
    out.size = kernel_size;
    out.center_row = psf.center_row - r0;
    out.center_col = psf.center_col - c0;
    out.kernel.assign(static_cast<std::size_t>(kernel_size) * kernel_size, 0.0);
    for (int y = 0; y < kernel_size; ++y)
        for (int x = 0; x < kernel_size; ++x)
            out.kernel[out.idx(y, x)] = psf.kernel[psf.idx(r0 + y, c0 + x)];
    return out;
}

} // namespace

PsfGrid build_psf_grid(const ApertureMask& aperture, const zernike::ZernikeBasis& basis,
                       const zernike::CoeffField& field, int kernel_size) {
    if (aperture.grid_size != basis.grid_size)
        throw std::invalid_argument("build_psf_grid: aperture and basis grids differ");
    if (kernel_size < 1 || kernel_size > aperture.grid_size)
        throw std::invalid_argument("build_psf_grid: kernel_size must be in [1, pupil grid]");
    if (field.coeffs.size() != static_cast<std::size_t>(field.anchors.count()))
        throw std::invalid_argument("build_psf_grid: coefficient field is inconsistent");

    PsfGrid grid;
    grid.anchors = field.anchors;
    grid.kernel_size = kernel_size;
    grid.psfs.reserve(field.coeffs.size());
    for (const auto& coeffs : field.coeffs) {
        const auto phase = zernike::phase_map(basis, coeffs);
        const Psf full = psf_from_pupil(pupil(aperture, phase));
        grid.psfs.push_back(normalize_psf(center_crop(full, kernel_size)));
    }
    return grid;
}

namespace {

// Bilinear interpolation of per-anchor values to image resolution. Exact at
// anchor positions since anchors sit on the uniform lattice.
std::vector<double> interp_anchor_values(const zernike::AnchorGrid& anchors,
                                         const std::vector<double>& values, int h, int w) {
    std::vector<double> map(static_cast<std::size_t>(h) * w, 0.0);
    const int rows = anchors.rows, cols = anchors.cols;
    for (int y = 0; y < h; ++y) {
        double fr = 0.0;
        int r0 = 0;
        if (rows > 1) {
            const double fy = static_cast<double>(y) * (rows - 1) / (h - 1);
            r0 = std::min(static_cast<int>(fy), rows - 2);
            fr = fy - r0;
        }
        for (int x = 0; x < w; ++x) {
            double fc = 0.0;
            int c0 = 0;
            if (cols > 1) {
                const double fx = static_cast<double>(x) * (cols - 1) / (w - 1);
                c0 = std::min(static_cast<int>(fx), cols - 2);
                fc = fx - c0;
            }
            const auto v = [&](int r, int c) {
                return values[static_cast<std::size_t>(r) * cols + c];
            };
            double val = (1 - fr) * (1 - fc) * v(r0, c0);
            if (cols > 1) val += (1 - fr) * fc * v(r0, c0 + 1);
            if (rows > 1) val += fr * (1 - fc) * v(r0 + 1, c0);
            if (rows > 1 && cols > 1) val += fr * fc * v(r0 + 1, c0 + 1);
            map[static_cast<std::size_t>(y) * w + x] = val;
        }
    }
    return map;
}

} // namespace

PsfBasis decompose_basis(const PsfGrid& grid, int k, int image_height, int image_width) {
    const int n_anchors = grid.anchors.count();
    if (k < 1 || k > n_anchors)
        throw std::invalid_argument("decompose_basis: K must be in [1, anchor count]");
    if (image_height < 2 || image_width < 2)
        throw std::invalid_argument("decompose_basis: image dims must be >= 2");

    const int taps = grid.kernel_size * grid.kernel_size;
    Eigen::MatrixXd m(taps, n_anchors);
    for (int a = 0; a < n_anchors; ++a)
        for (int t = 0; t < taps; ++t) m(t, a) = grid.psfs[static_cast<std::size_t>(a)].kernel[static_cast<std::size_t>(t)];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd& u = svd.matrixU();
    // per-anchor projections onto the top-K singular directions
    Eigen::MatrixXd proj = u.leftCols(k).transpose() * m; // K x anchors

    PsfBasis basis;
    basis.kernel_size = grid.kernel_size;
    basis.center_row = grid.psfs.front().center_row;
    basis.center_col = grid.psfs.front().center_col;
    basis.image_height = image_height;
    basis.image_width = image_width;
    basis.bases.resize(static_cast<std::size_t>(k));
    basis.coeff_maps.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        auto& kern = basis.bases[static_cast<std::size_t>(i)];
        kern.resize(static_cast<std::size_t>(taps));
        for (int t = 0; t < taps; ++t) kern[static_cast<std::size_t>(t)] = u(t, i);

        std::vector<double> anchor_values(static_cast<std::size_t>(n_anchors));
        for (int a = 0; a < n_anchors; ++a) anchor_values[static_cast<std::size_t>(a)] = proj(i, a);
        basis.coeff_maps[static_cast<std::size_t>(i)] =
            interp_anchor_values(grid.anchors, anchor_values, image_height, image_width);
    }
    return basis;
}

double reconstruction_residual(const PsfGrid& grid, const PsfBasis& basis) {
    const int taps = grid.kernel_size * grid.kernel_size;
    double worst = 0.0;
    for (int a = 0; a < grid.anchors.count(); ++a) {
        const auto& anchor = grid.anchors.positions[static_cast<std::size_t>(a)];
        const int ay = static_cast<int>(std::lround(anchor.y));
        const int ax = static_cast<int>(std::lround(anchor.x));
        double err2 = 0.0;
        for (int t = 0; t < taps; ++t) {
            double rec = 0.0;
            for (int i = 0; i < basis.count(); ++i)
                rec += basis.coeff_maps[static_cast<std::size_t>(i)][basis.midx(ay, ax)] *
                       basis.bases[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            const double d = rec - grid.psfs[static_cast<std::size_t>(a)].kernel[static_cast<std::size_t>(t)];
            err2 += d * d;
        }
        worst = std::max(worst, std::sqrt(err2));
    }
    return worst;
}

std::vector<double> effective_kernel_sizes(const PsfGrid& grid) {
    std::vector<double> sizes;
    sizes.reserve(grid.psfs.size());
    for (const auto& psf : grid.psfs) {
        double mass = 0.0, second = 0.0;
        for (int y = 0; y < psf.size; ++y) {
            for (int x = 0; x < psf.size; ++x) {
                const double v = psf.kernel[psf.idx(y, x)];
                const double dy = y - psf.center_row, dx = x - psf.center_col;
                mass += v;
                second += v * (dy * dy + dx * dx);
            }
        }
        sizes.push_back(mass > 0.0 ? 1.0 + 2.0 * std::sqrt(second / mass) : 1.0);
    }
    return sizes;
}

} // namespace flaresim::optics

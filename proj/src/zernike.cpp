#include "flaresim/zernike.hpp"

#include <cmath>
#include <stdexcept>

namespace flaresim::zernike {
namespace {

// Exact double factorials up to 170!; radial orders above ~80 are rejected.
double factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(171);
        t[0] = 1.0;
        for (int i = 1; i <= 170; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    return table[static_cast<std::size_t>(n)];
}

// R_n^m(rho) for m = |m|, n - m even.
double radial(int n, int m, double rho) {
    double sum = 0.0;
    const int kmax = (n - m) / 2;
    for (int k = 0; k <= kmax; ++k) {
        const double coef = factorial(n - k) /
                            (factorial(k) * factorial((n + m) / 2 - k) * factorial((n - m) / 2 - k));
        sum += (k % 2 == 0 ? coef : -coef) * std::pow(rho, n - 2 * k);
    }
    return sum;
}

} // namespace

std::pair<int, int> noll_to_nm(int j) {
    if (j < 1) throw std::invalid_argument("noll_to_nm: index must be >= 1");
    int n = 0;
    int j1 = j - 1;
    while (j1 > n) {
        ++n;
        j1 -= n;
    }
    int m = (n % 2) + 2 * ((j1 + ((n + 1) % 2)) / 2);
    if (m != 0 && j % 2 != 0) m = -m;
    return {n, m};
}

double eval(int j, double rho, double theta) {
    const auto [n, m] = noll_to_nm(j);
    if (n > 80) throw std::invalid_argument("zernike::eval: radial order too large");
    const int ma = std::abs(m);
    const double r = radial(n, ma, rho);
    if (m == 0) return std::sqrt(n + 1.0) * r;
    const double norm = std::sqrt(2.0 * (n + 1.0));
    return m > 0 ? norm * r * std::cos(ma * theta) : norm * r * std::sin(ma * theta);
}

ZernikeBasis build_basis(int grid_size, int n_modes) {
    if (grid_size < 8) throw std::invalid_argument("build_basis: grid_size must be >= 8");
    if (n_modes < 1) throw std::invalid_argument("build_basis: n_modes must be >= 1");

    ZernikeBasis basis;
    basis.grid_size = grid_size;
    basis.n_modes = n_modes;
    basis.disk_mask.assign(static_cast<std::size_t>(grid_size) * grid_size, 0);
    basis.values.assign(n_modes, std::vector<double>(basis.disk_mask.size(), 0.0));

    const double g = static_cast<double>(grid_size);
    for (int y = 0; y < grid_size; ++y) {
        for (int x = 0; x < grid_size; ++x) {
            // pixel centers mapped so the unit disk is inscribed in the grid
            const double px = (2.0 * (x + 0.5) - g) / g;
            const double py = (2.0 * (y + 0.5) - g) / g;
            const double rho = std::sqrt(px * px + py * py);
            if (rho > 1.0) continue;
            basis.disk_mask[basis.idx(y, x)] = 1;
            const double theta = std::atan2(py, px);
            for (int j = 1; j <= n_modes; ++j)
                basis.values[j - 1][basis.idx(y, x)] = eval(j, rho, theta);
        }
    }
    return basis;
}

std::vector<double> phase_map(const ZernikeBasis& basis, const ZernikeCoeffs& coeffs) {
    if (static_cast<int>(coeffs.a.size()) != basis.n_modes)
        throw std::invalid_argument("phase_map: coefficient count does not match basis modes");
    std::vector<double> phase(basis.disk_mask.size(), 0.0);
    for (int j = 0; j < basis.n_modes; ++j) {
        const double a = coeffs.a[j];
        if (a == 0.0) continue;
        const auto& mode = basis.values[j];
        for (std::size_t i = 0; i < phase.size(); ++i) phase[i] += a * mode[i];
    }
    return phase;
}

AnchorGrid uniform_anchors(int rows, int cols, int image_height, int image_width) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("uniform_anchors: lattice dims must be >= 1");
    if (image_height < 1 || image_width < 1)
        throw std::invalid_argument("uniform_anchors: image dims must be >= 1");

    AnchorGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.image_height = image_height;
    grid.image_width = image_width;
    grid.positions.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        const double y = rows == 1 ? (image_height - 1) / 2.0
                                   : static_cast<double>(r) * (image_height - 1) / (rows - 1);
        for (int c = 0; c < cols; ++c) {
            const double x = cols == 1 ? (image_width - 1) / 2.0
                                       : static_cast<double>(c) * (image_width - 1) / (cols - 1);
            grid.positions.push_back({x, y});
        }
    }
    return grid;
}

CoeffField sample_coeff_field(SeededRng& rng, const TurbulenceConfig& cfg, const AnchorGrid& anchors) {
    if (cfg.n_modes < 1) throw std::invalid_argument("sample_coeff_field: n_modes must be >= 1");
    if (cfg.base_sigma < 0.0 || cfg.decay_alpha < 0.0)
        throw std::invalid_argument("sample_coeff_field: base_sigma and decay_alpha must be >= 0");

    CoeffField field;
    field.anchors = anchors;
    field.coeffs.reserve(static_cast<std::size_t>(anchors.count()));
    for (int a = 0; a < anchors.count(); ++a) {
        ZernikeCoeffs c;
        c.a.resize(static_cast<std::size_t>(cfg.n_modes));
        for (int j = 1; j <= cfg.n_modes; ++j) {
            const double sigma = cfg.base_sigma * std::pow(static_cast<double>(j), -cfg.decay_alpha);
            c.a[j - 1] = rng.normal(0.0, sigma);
        }
        if (cfg.skip_piston) c.a[0] = 0.0;
        field.coeffs.push_back(std::move(c));
    }
    return field;
}

} // namespace flaresim::zernike

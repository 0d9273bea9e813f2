#include "kinvfp/spectral.hpp"

#include "kinvfp/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

namespace kinvfp {

namespace {

struct RealBuf {
    double* p;
    explicit RealBuf(int n) : p(fftw_alloc_real(n)) {}
    ~RealBuf() { fftw_free(p); }
    RealBuf(const RealBuf&) = delete;
    RealBuf& operator=(const RealBuf&) = delete;
};

struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(int n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuf() { fftw_free(p); }
    ComplexBuf(const ComplexBuf&) = delete;
    ComplexBuf& operator=(const ComplexBuf&) = delete;
};

}  // namespace

struct Spectral1d::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

Spectral1d::Spectral1d(int n, double period) : n_(n), period_(period), plans_(std::make_unique<Plans>()) {
    require(n >= 2, "transform length must be >= 2");
    require(period > 0.0, "period must be positive");
    RealBuf r(n);
    ComplexBuf c(n / 2 + 1);
    plans_->fwd = fftw_plan_dft_r2c_1d(n, r.p, c.p, FFTW_ESTIMATE);
    plans_->bwd = fftw_plan_dft_c2r_1d(n, c.p, r.p, FFTW_ESTIMATE);
}

Spectral1d::~Spectral1d() = default;
Spectral1d::Spectral1d(Spectral1d&&) noexcept = default;
Spectral1d& Spectral1d::operator=(Spectral1d&&) noexcept = default;

double Spectral1d::wavenumber(int m) const { return 2.0 * std::numbers::pi * m / period_; }

void Spectral1d::transform_modes(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                                 const std::function<std::complex<double>(int)>& mult) const {
    const int nc = n_ / 2 + 1;
    RealBuf r(n_);
    ComplexBuf c(nc);
    for (int i = 0; i < n_; ++i) r.p[i] = in[i * istride];
    fftw_execute_dft_r2c(plans_->fwd, r.p, c.p);
    const double inv_n = 1.0 / n_;
    for (int m = 0; m < nc; ++m) {
        std::complex<double> z(c.p[m][0], c.p[m][1]);
        z *= mult(m) * inv_n;
        c.p[m][0] = z.real();
        c.p[m][1] = z.imag();
    }
    fftw_execute_dft_c2r(plans_->bwd, c.p, r.p);
    for (int i = 0; i < n_; ++i) out[i * ostride] = r.p[i];
}

void Spectral1d::derivative(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                            int order) const {
    require(order >= 0, "derivative order must be >= 0");
    const bool even_n = n_ % 2 == 0;
    transform_modes(in, istride, out, ostride, [&](int m) -> std::complex<double> {
        if (even_n && m == n_ / 2 && order % 2 == 1) return 0.0;
        return std::pow(std::complex<double>(0.0, wavenumber(m)), order);
    });
}

void Spectral1d::shift(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                       double a) const {
    const bool even_n = n_ % 2 == 0;
    transform_modes(in, istride, out, ostride, [&](int m) -> std::complex<double> {
        const double ph = wavenumber(m) * a;
        if (even_n && m == n_ / 2) return std::cos(ph);
        return std::polar(1.0, -ph);
    });
}

void Spectral1d::filter(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                        const std::function<double(double)>& factor) const {
    transform_modes(in, istride, out, ostride, [&](int m) -> std::complex<double> { return factor(wavenumber(m)); });
}

void Spectral1d::interpolate(std::span<const double> in, std::span<const double> offsets,
                             std::span<double> out) const {
    require(static_cast<int>(in.size()) == n_ && out.size() == offsets.size(), "interpolate: size mismatch");
    const int nc = n_ / 2 + 1;
    RealBuf r(n_);
    ComplexBuf c(nc);
    for (int i = 0; i < n_; ++i) r.p[i] = in[i];
    fftw_execute_dft_r2c(plans_->fwd, r.p, c.p);
    const bool even_n = n_ % 2 == 0;
    const int top = even_n ? n_ / 2 - 1 : n_ / 2;
    const double k1 = wavenumber(1);
    const double inv_n = 1.0 / n_;
    for (std::size_t q = 0; q < offsets.size(); ++q) {
        const double p = offsets[q];
        const std::complex<double> z = std::polar(1.0, k1 * p);
        std::complex<double> w = z;
        double acc = 0.0;
        for (int m = 1; m <= top; ++m) {
            acc += c.p[m][0] * w.real() - c.p[m][1] * w.imag();
            w *= z;
        }
        double v = c.p[0][0] + 2.0 * acc;
        if (even_n) v += c.p[n_ / 2][0] * std::cos(wavenumber(n_ / 2) * p);
        out[q] = v * inv_n;
    }
}

}  // namespace kinvfp

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace kinvfp {

// Real periodic transforms of a fixed length on a fixed period. Plans are
// built in the constructor (not thread-safe); every other member is safe to
// call concurrently and allocates its own work arrays.
class Spectral1d {
  public:
    Spectral1d(int n, double period);
    ~Spectral1d();
    Spectral1d(Spectral1d&&) noexcept;
    Spectral1d& operator=(Spectral1d&&) noexcept;

    int size() const { return n_; }
    double period() const { return period_; }
    // Angular wavenumber of mode m (0 <= m <= n/2).
    double wavenumber(int m) const;

    // out = d^order/dx^order in; strided access so columns can be used in place.
    void derivative(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                    int order) const;

    // out(x) = in(x - a)
    void shift(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride, double a) const;

    // Multiply mode m by factor(wavenumber(m)); the factor must be real.
    void filter(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                const std::function<double(double)>& factor) const;

    // Band-limited interpolant of `in` evaluated at offsets (physical units
    // measured from sample 0, taken modulo the period).
    void interpolate(std::span<const double> in, std::span<const double> offsets, std::span<double> out) const;

  private:
    struct Plans;
    int n_;
    double period_;
    std::unique_ptr<Plans> plans_;

    void transform_modes(const double* in, std::ptrdiff_t istride, double* out, std::ptrdiff_t ostride,
                         const std::function<std::complex<double>(int)>& mult) const;
};

}  // namespace kinvfp

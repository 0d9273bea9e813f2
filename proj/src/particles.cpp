#include "kinvfp/particles.hpp"

#include "kinvfp/error.hpp"
#include "kinvfp/parallel.hpp"
#include "kinvfp/rng.hpp"
#include "kinvfp/spectral.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>
#include <istream>

namespace kinvfp {

namespace {

// Per-bin particle lists in particle order, so sums do not depend on threads.
struct BinIndex {
    std::vector<std::size_t> start;  // n_bins + 1
    std::vector<std::size_t> members;
};

BinIndex bin_index(const std::vector<double>& x, int n_bins) {
    BinIndex b;
    std::vector<int> which(x.size());
    b.start.assign(n_bins + 1, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        which[i] = std::min(static_cast<int>(x[i] * n_bins), n_bins - 1);
        ++b.start[which[i] + 1];
    }
    for (int k = 0; k < n_bins; ++k) b.start[k + 1] += b.start[k];
    b.members.resize(x.size());
    auto fill = b.start;
    for (std::size_t i = 0; i < x.size(); ++i) b.members[fill[which[i]]++] = i;
    return b;
}

double periodic_lerp(const std::vector<double>& v, double x) {
    const int n = static_cast<int>(v.size());
    double p = x * n - 0.5;
    const double fl = std::floor(p);
    const double w = p - fl;
    int i0 = static_cast<int>(fl) % n;
    if (i0 < 0) i0 += n;
    const int i1 = i0 + 1 == n ? 0 : i0 + 1;
    return v[i0] + w * (v[i1] - v[i0]);
}

constexpr std::uint64_t init_stream = stream_id("particles/init");
constexpr std::uint64_t step_stream = stream_id("particles/step");

}  // namespace

double wrap_unit(double x) {
    double y = x - std::floor(x);
    return y >= 1.0 ? 0.0 : y;
}

ParticleEnsemble init_ensemble(std::size_t N, const InitialDataSpec& spec, std::uint64_t seed, double u_max) {
    require(N >= 1, "init_ensemble: N must be >= 1");
    spec.validate();
    const double var = spec.thermal_var, sd = std::sqrt(var);
    if (u_max <= 0.0) u_max = 8.0 * sd;
    const double psi_max = std::max((u_max * u_max - var) / var, 1.0);
    if (1.0 - spec.eps * psi_max < 0.0)
        throw InvalidInput("init_ensemble: f0 is negative for |u| <= u_max (eps * max|psi| = " +
                           std::to_string(spec.eps * psi_max) + ")");
    const double bound = 1.0 + spec.eps * psi_max;

    // rho0 per cell of a fine x mesh, then a piecewise-constant inverse CDF
    const int nfine = 4096, nq = 2001;
    const double hq = 2.0 * u_max / (nq - 1);
    std::vector<double> cdf(nfine + 1, 0.0);
    std::vector<double> row(nq);
    for (int c = 0; c < nfine; ++c) {
        const double xm = (c + 0.5) / nfine;
        for (int j = 0; j < nq; ++j) row[j] = initial_value(spec, xm, -u_max + j * hq);
        cdf[c + 1] = cdf[c] + simpson(row, hq) / nfine;
    }
    const double total = cdf.back();
    for (auto& v : cdf) v /= total;

    ParticleEnsemble e;
    e.seed = seed;
    e.x.resize(N);
    e.u.resize(N);
    const std::uint64_t key = seed ^ init_stream;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) {
        CounterRng rng(key, i);
        const double q = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), q);
        const std::size_t c = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cdf.begin() - 1, 0), nfine - 1);
        const double width = cdf[c + 1] - cdf[c];
        const double frac = width > 0.0 ? (q - cdf[c]) / width : 0.5;
        const double x = wrap_unit((c + frac) / nfine);
        double u = 0.0;
        for (;;) {
            u = sd * rng.normal();
            if (std::abs(u) > u_max) continue;
            const double ratio = initial_value(spec, x, u) / maxwellian(u, var);
            if (rng.uniform() * bound <= ratio) break;
        }
        e.x[i] = x;
        e.u[i] = u;
    }
    return e;
}

double BinnedMoments::V_at(double x) const { return periodic_lerp(V, x); }
double BinnedMoments::S_at(double x) const { return periodic_lerp(S, x); }

BinnedMoments conditional_moments(const ParticleEnsemble& e, int n_bins) {
    require(n_bins >= 2, "conditional_moments: need at least 2 bins");
    require(e.size() >= 50 * static_cast<std::size_t>(n_bins),
            "conditional_moments: need N / n_bins >= 50 (N = " + std::to_string(e.size()) + ", bins " +
                std::to_string(n_bins) + ")");
    const auto idx = bin_index(e.x, n_bins);
    BinnedMoments m;
    m.centers.resize(n_bins);
    m.V.resize(n_bins);
    m.S.resize(n_bins);
    m.counts.resize(n_bins);
    bool empty = false;
#pragma omp parallel for schedule(static) reduction(|| : empty)
    for (int k = 0; k < n_bins; ++k) {
        const std::size_t a = idx.start[k], b = idx.start[k + 1];
        m.centers[k] = (k + 0.5) / n_bins;
        m.counts[k] = b - a;
        if (a == b) {
            empty = true;
            continue;
        }
        std::vector<double> v1(b - a), v2(b - a);
        for (std::size_t p = a; p < b; ++p) {
            const double u = e.u[idx.members[p]];
            v1[p - a] = u;
            v2[p - a] = u * u;
        }
        m.V[k] = pairwise_sum(v1) / (b - a);
        m.S[k] = pairwise_sum(v2) / (b - a);
    }
    if (empty) throw InvalidInput("conditional_moments: empty bin; use more particles or fewer bins");
    return m;
}

std::string to_string(DriftMode m) { return m == DriftMode::field_coupled ? "field_coupled" : "self_consistent"; }

StepReport step_trajectory(ParticleEnsemble& e, const DriftSpec& drift, const ModelParams& params, double dt,
                           int n_steps) {
    params.validate();
    require(dt > 0.0, "step_trajectory: dt must be positive");
    require(n_steps >= 0, "step_trajectory: n_steps must be >= 0");
    StepReport rep;
    rep.outside_hypothesis = params.sigma == 0.0;
    const std::size_t N = e.size();
    const double beta = params.beta, alpha = params.alpha, noise = params.sigma * std::sqrt(dt);

    std::unique_ptr<WeightModel> weight;
    std::unique_ptr<LinearStepper> stepper;
    std::shared_ptr<const LinearStepper::Sampler> sampler;
    std::unique_ptr<Spectral1d> sp;
    if (drift.mode == DriftMode::field_coupled) {
        require(drift.fields != nullptr && !drift.fields->Q.empty(), "step_trajectory: field_coupled needs fields");
        const PhaseGrid pg{static_cast<int>(drift.fields->Q.front().size()), 5, 1.0};
        weight = std::make_unique<WeightModel>(make_weight(4, beta));
        StepperOptions o;
        o.weighted = false;
        stepper = std::make_unique<LinearStepper>(pg, params, *weight, *drift.fields, o);
        sampler = stepper->sampler(drift.refine);
    } else {
        require(drift.n_bins >= 2, "step_trajectory: n_bins must be >= 2");
        require(drift.smoothing >= 0.0, "step_trajectory: smoothing must be >= 0");
        sp = std::make_unique<Spectral1d>(drift.n_bins, 1.0);
    }

    const std::uint64_t key = e.seed ^ step_stream;
    const double t0 = e.t;
    const std::size_t pairs = (N + 1) / 2;
    std::vector<double> dS, Vb;
    for (int k = 0; k < n_steps; ++k) {
        const double t = t0 + k * dt;
        if (drift.mode == DriftMode::self_consistent) {
            const auto m = conditional_moments(e, drift.n_bins);
            const double h = drift.smoothing / drift.n_bins;
            std::vector<double> sm(drift.n_bins);
            sp->filter(m.S.data(), 1, sm.data(), 1, [h](double kk) { return std::exp(-0.5 * kk * kk * h * h); });
            dS.resize(drift.n_bins);
            sp->derivative(sm.data(), 1, dS.data(), 1, 1);
            Vb = m.V;
        }
#pragma omp parallel for schedule(static)
        for (std::size_t p = 0; p < pairs; ++p) {
            CounterRng rng(key, p, e.counter);
            const double xi[2] = {rng.normal(), rng.normal()};
            for (std::size_t q = 0; q < 2; ++q) {
                const std::size_t i = 2 * p + q;
                if (i >= N) break;
                const double x = e.x[i], u = e.u[i];
                double a;
                if (drift.mode == DriftMode::field_coupled) {
                    a = -stepper->drift(*sampler, t, x, u);
                } else {
                    // -d_x P = d_x S
                    a = periodic_lerp(dS, x) - beta * (u - alpha * periodic_lerp(Vb, x));
                }
                e.x[i] = wrap_unit(x + u * dt);
                e.u[i] = u + a * dt + noise * xi[q];
            }
        }
        e.counter += 2;
        e.t = t0 + (k + 1) * dt;
        for (std::size_t i = 0; i < N; ++i)
            if (!std::isfinite(e.u[i]))
                throw NumericalAbort("step_trajectory: non-finite velocity at particle " + std::to_string(i) +
                                     ", t = " + std::to_string(e.t));
        ++rep.steps;
    }
    return rep;
}

UniformityResult uniformity_test(const ParticleEnsemble& e, int n_bins) {
    const std::size_t N = e.size();
    require(N >= 10000, "uniformity_test: need N >= 1e4");
    require(n_bins >= 2, "uniformity_test: need at least 2 bins");
    std::vector<std::size_t> counts(n_bins, 0);
    for (double x : e.x) ++counts[std::min(static_cast<int>(x * n_bins), n_bins - 1)];
    const double expect = static_cast<double>(N) / n_bins;
    UniformityResult r;
    for (auto c : counts) r.chi2 += (c - expect) * (c - expect) / expect;
    r.dof = n_bins - 1;
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi2));
    r.chi2_q99 = boost::math::quantile(dist, 0.99);

    auto xs = e.x;
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i < N; ++i) {
        const double lo = static_cast<double>(i) / N, hi = static_cast<double>(i + 1) / N;
        r.ks = std::max({r.ks, hi - xs[i], xs[i] - lo});
    }
    // 99% point of the Kolmogorov distribution
    r.ks_crit_1pct = 1.6276 / std::sqrt(static_cast<double>(N));
    return r;
}

VelocityStats velocity_stats(const ParticleEnsemble& e) {
    const std::size_t N = e.size();
    require(N >= 2, "velocity_stats: need at least 2 particles");
    VelocityStats s;
    s.mean = pairwise_sum(e.u) / N;
    std::vector<double> d2(N), d4(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double d = e.u[i] - s.mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    s.var = pairwise_sum(d2) / N;
    const double m4 = pairwise_sum(d4) / N;
    s.var_stderr = std::sqrt(std::max(m4 - s.var * s.var, 0.0) / N);
    return s;
}

double histogram_tv(const ParticleEnsemble& e, const PhaseField& f, int nbx, int nbu) {
    const auto& g = f.grid();
    require(f.kind() == FieldKind::f, "histogram_tv: field must be a density (kind f)");
    require(nbx >= 1 && g.nx % nbx == 0, "histogram_tv: nbx must divide nx");
    require(nbu >= 1 && (g.nu - 1) % nbu == 0, "histogram_tv: nbu must divide nu - 1");
    require(e.size() >= 1, "histogram_tv: empty ensemble");
    const int kx = g.nx / nbx, ku = (g.nu - 1) / nbu;
    // x bins are unions of node cells [x_i - dx/2, x_i + dx/2)
    std::vector<double> q(static_cast<std::size_t>(nbx) * nbu, 0.0);
    double total = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        const auto r = f.row(i);
        for (int bu = 0; bu < nbu; ++bu) {
            double m = 0.0;
            for (int j = bu * ku; j < (bu + 1) * ku; ++j) m += 0.5 * (r[j] + r[j + 1]) * g.du();
            q[(i / kx) * nbu + bu] += m * g.dx();
            total += m * g.dx();
        }
    }
    std::vector<double> p(q.size(), 0.0);
    double outside = 0.0;
    const double w = 1.0 / e.size();
    for (std::size_t n = 0; n < e.size(); ++n) {
        const double u = e.u[n];
        if (std::abs(u) >= g.u_max) {
            outside += w;
            continue;
        }
        const int bx = static_cast<int>(wrap_unit(e.x[n] + 0.5 * g.dx()) * g.nx) / kx;
        const int bu = std::min(static_cast<int>((u + g.u_max) / (2.0 * g.u_max) * nbu), nbu - 1);
        p[std::min(bx, nbx - 1) * nbu + bu] += w;
    }
    double tv = outside;
    for (std::size_t k = 0; k < q.size(); ++k) tv += std::abs(p[k] - q[k] / total);
    return 0.5 * tv;
}

void write_ensemble(std::ostream& os, const ParticleEnsemble& e) {
    os << "KINVFP-P v1 " << e.size() << ' ' << format_double(e.t) << ' ' << e.seed << '\n';
    for (std::size_t i = 0; i < e.size(); ++i) os << format_double(e.x[i]) << ' ' << format_double(e.u[i]) << '\n';
}

ParticleEnsemble read_ensemble(std::istream& is) {
    std::string magic, version, t_s;
    std::size_t N = 0;
    ParticleEnsemble e;
    if (!(is >> magic >> version >> N >> t_s >> e.seed) || magic != "KINVFP-P" || version != "v1")
        throw InvalidInput("ensemble: bad header");
    e.t = parse_double(t_s);
    // the file carries no RNG position; continue on a counter tied to t
    e.counter = splitmix64(std::bit_cast<std::uint64_t>(e.t)) & ~std::uint64_t{1};
    e.x.resize(N);
    e.u.resize(N);
    std::string a, b;
    for (std::size_t i = 0; i < N; ++i) {
        if (!(is >> a >> b)) throw InvalidInput("ensemble: truncated data");
        e.x[i] = parse_double(a);
        e.u[i] = parse_double(b);
        if (!(e.x[i] >= 0.0 && e.x[i] < 1.0)) throw InvalidInput("ensemble: position outside [0,1) at line " + std::to_string(i + 2));
    }
    if (is >> a) throw InvalidInput("ensemble: trailing data");
    return e;
}

void save_ensemble(const std::string& path, const ParticleEnsemble& e) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path);
    write_ensemble(os, e);
}

ParticleEnsemble load_ensemble(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot read " + path);
    return read_ensemble(is);
}

ParticleStatsRow particle_stats(const ParticleEnsemble& e, int n_bins) {
    return {e.t, uniformity_test(e, n_bins), velocity_stats(e)};
}

void write_particle_stats(std::ostream& os, const std::vector<ParticleStatsRow>& rows) {
    os << "t,chi2,chi2_q99,p_value,ks,ks_crit_1pct,mean_u,var_u,var_stderr\n";
    for (const auto& r : rows)
        os << format_double(r.t) << ',' << format_double(r.uniformity.chi2) << ','
           << format_double(r.uniformity.chi2_q99) << ',' << format_double(r.uniformity.p_value) << ','
           << format_double(r.uniformity.ks) << ',' << format_double(r.uniformity.ks_crit_1pct) << ','
           << format_double(r.velocity.mean) << ',' << format_double(r.velocity.var) << ','
           << format_double(r.velocity.var_stderr) << '\n';
}

}  // namespace kinvfp

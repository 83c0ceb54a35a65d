#pragma once

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"

namespace tgmc {

using Series = std::vector<double>;
/// One series per disorder realization (or per chain), all of equal length.
using Ensemble = std::vector<Series>;

inline double spin_overlap(const SpinConfiguration& a, const SpinConfiguration& b) {
    if (a.size() != b.size() || a.size() == 0) throw InvalidArgument("overlap needs two configurations of equal length");
    long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return std::abs(static_cast<double>(s)) / static_cast<double>(a.size());
}

inline double mean(const Series& x) {
    if (x.empty()) throw InvalidArgument("mean of empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (divides by M).
inline double population_variance(const Series& x) {
    const double m = mean(x);
    double v = 0.0;
    for (double a : x) v += (a - m) * (a - m);
    return v / static_cast<double>(x.size());
}

/// Sample variance (divides by M - 1).
inline double sample_variance(const Series& x) {
    if (x.size() < 2) throw InvalidArgument("sample variance needs two values");
    return population_variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

struct ThermalMoments {
    double m2 = 0.0;  // <q^2>_T
    double m4 = 0.0;  // <q^4>_T
};

inline ThermalMoments thermal_moments(const Series& q) {
    ThermalMoments t;
    for (double v : q) {
        t.m2 += v * v;
        t.m4 += v * v * v * v;
    }
    t.m2 /= static_cast<double>(q.size());
    t.m4 /= static_cast<double>(q.size());
    return t;
}

/// g = ½ [3 - <q⁴>/<q²>²]_J with the thermal moments taken per realization first.
inline double binder_ratio(const std::vector<ThermalMoments>& per_realization) {
    if (per_realization.empty()) throw InvalidArgument("no realizations");
    double g = 0.0;
    for (const auto& t : per_realization) {
        if (!(t.m2 > 0.0)) throw InvalidArgument("zero second moment");
        g += 0.5 * (3.0 - t.m4 / (t.m2 * t.m2));
    }
    return g / static_cast<double>(per_realization.size());
}

inline double binder_ratio(const Ensemble& q) {
    std::vector<ThermalMoments> t;
    for (const auto& s : q) t.push_back(thermal_moments(s));
    return binder_ratio(t);
}

/// χ = N [<q²>_T]_J.
inline double susceptibility(const std::vector<double>& q2_means, std::size_t n_sites) {
    if (q2_means.empty()) throw InvalidArgument("no realizations");
    double s = 0.0;
    for (double v : q2_means) s += v;
    return static_cast<double>(n_sites) * s / static_cast<double>(q2_means.size());
}

/// Var(βH)/N for one realization.
inline double specific_heat(const Series& energy, std::size_t n_sites) {
    if (energy.size() < 2) throw InvalidArgument("specific heat needs at least two samples");
    return population_variance(energy) / static_cast<double>(n_sites);
}

inline double specific_heat(const Ensemble& energy, std::size_t n_sites) {
    if (energy.empty()) throw InvalidArgument("no realizations");
    double c = 0.0;
    for (const auto& e : energy) c += specific_heat(e, n_sites);
    return c / static_cast<double>(energy.size());
}

inline double autocorrelation(const Series& x, std::size_t lag) {
    const double m = mean(x);
    double c0 = 0.0, ck = 0.0;
    for (double a : x) c0 += (a - m) * (a - m);
    for (std::size_t i = 0; i + lag < x.size(); ++i) ck += (x[i] - m) * (x[i + lag] - m);
    if (c0 == 0.0) return 0.0;
    return ck / c0;
}

struct AutocorrelationTime {
    double tau = 1.0;
    std::size_t window = 0;
    bool degenerate = false;  // constant series
    bool suspicious = false;  // tau < 0.5
};

/// τ = 1 + 2 Σ_{k<W} ρ_k, W the first lag with ρ_k < 0.
inline AutocorrelationTime integrated_autocorrelation(const Series& x) {
    if (x.size() < 10) throw InvalidArgument("autocorrelation needs at least 10 samples");
    AutocorrelationTime r;
    if (population_variance(x) == 0.0) {
        r.degenerate = true;
        return r;
    }
    double sum = 0.0;
    std::size_t k = 1;
    for (; k < x.size(); ++k) {
        const double rho = autocorrelation(x, k);
        if (rho < 0.0) break;
        sum += rho;
    }
    r.window = k;
    r.tau = 1.0 + 2.0 * sum;
    r.suspicious = r.tau < 0.5;
    return r;
}

struct ConfidenceInterval {
    double lo = 0.0, hi = 0.0;
    double mean = 0.0;
    double sigma = 0.0;
};

inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

/// Two-level interval for the grand mean of an ensemble: each realization's sample variance
/// over M sweeps is inflated by its lag-1 factor (1 + ρ)/(1 - ρ).
inline ConfidenceInterval confidence_interval(const Ensemble& a, double alpha) {
    const std::size_t N = a.size();
    if (N < 2) throw InvalidArgument("confidence interval needs at least two realizations");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const std::size_t M = a.front().size();
    if (M < 2) throw InvalidArgument("confidence interval needs at least two samples per realization");
    double grand = 0.0, var = 0.0;
    for (const auto& s : a) {
        if (s.size() != M) throw InvalidArgument("ragged ensemble");
        grand += std::accumulate(s.begin(), s.end(), 0.0);
        const double sv = sample_variance(s);
        if (sv == 0.0) continue;
        const double rho = autocorrelation(s, 1);
        if (rho >= 1.0) throw DegenerateAutocorrelation("lag-1 autocorrelation is 1");
        var += sv / static_cast<double>(M) * (1.0 + rho) / (1.0 - rho);
    }
    ConfidenceInterval ci;
    ci.mean = grand / static_cast<double>(N * M);
    ci.sigma = std::sqrt(var) / static_cast<double>(N);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    ci.lo = ci.mean - z * ci.sigma;
    ci.hi = ci.mean + z * ci.sigma;
    return ci;
}

/// Per-sweep pseudo-values whose realization means are the Binder ratio of that
/// realization (first-order expansion in the two moments).
inline Series linearized_binder(const Series& q) {
    const auto t = thermal_moments(q);
    if (!(t.m2 > 0.0)) throw InvalidArgument("zero second moment");
    const double g = 0.5 * (3.0 - t.m4 / (t.m2 * t.m2));
    Series out;
    out.reserve(q.size());
    for (double v : q) {
        const double v2 = v * v, v4 = v2 * v2;
        out.push_back(g - 0.5 * ((v4 - t.m4) / (t.m2 * t.m2) - 2.0 * t.m4 * (v2 - t.m2) / (t.m2 * t.m2 * t.m2)));
    }
    return out;
}

/// Per-sweep pseudo-values (E - Ē)²/N whose mean is the realization's specific heat.
inline Series linearized_specific_heat(const Series& e, std::size_t n_sites) {
    const double m = mean(e);
    Series out;
    out.reserve(e.size());
    for (double v : e) out.push_back((v - m) * (v - m) / static_cast<double>(n_sites));
    return out;
}

struct ScalingParams {
    double eta = 0.2;
};

struct ScalingPoint {
    double L = 0.0;
    double beta = 0.0;
    double value = 0.0;
};

struct RescaledPoint {
    double x = 0.0;
    double g = 0.0;    // unchanged Binder ratio
    double chi = 0.0;  // χ L^{-(2-η)}
};

/// x' = β - ln(L)/2. The same point is rescaled both as a Binder value and as a susceptibility.
inline RescaledPoint rescale_for_collapse(const ScalingPoint& p, const ScalingParams& params) {
    if (!(p.L > 0.0)) throw InvalidArgument("L must be positive");
    RescaledPoint r;
    r.x = p.beta - 0.5 * std::log(p.L);
    r.g = p.value;
    r.chi = p.value * std::pow(p.L, -(2.0 - params.eta));
    return r;
}

inline std::vector<RescaledPoint> rescale_for_collapse(const std::vector<ScalingPoint>& pts, const ScalingParams& params) {
    std::vector<RescaledPoint> out;
    for (const auto& p : pts) out.push_back(rescale_for_collapse(p, params));
    return out;
}

}  // namespace tgmc

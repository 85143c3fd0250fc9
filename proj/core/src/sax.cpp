#include "vqcpc/sax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "vqcpc/errors.hpp"

namespace vqcpc {

namespace {

// Acklam's rational approximation to the probit function.
double acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425, p_high = 1.0 - p_low;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > p_high) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("inv_normal_cdf: p must be in (0, 1)");
    double x = acklam(p);
    // One Halley refinement step takes the approximation to machine precision.
    const double e = normal_cdf(x) - p;
    const double u = e * std::numbers::sqrt2 * std::sqrt(std::numbers::pi) *
                     std::exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
    return x;
}

std::vector<double> normal_breakpoints(int64_t alphabet_size) {
    if (alphabet_size < 2) throw Error("normal_breakpoints: alphabet must be >= 2");
    std::vector<double> bps(alphabet_size - 1);
    for (int64_t i = 1; i < alphabet_size; ++i)
        bps[i - 1] = inv_normal_cdf(static_cast<double>(i) / static_cast<double>(alphabet_size));
    return bps;
}

int64_t sax_bin(double v, const std::vector<double>& breakpoints) {
    const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), v);
    return static_cast<int64_t>(it - breakpoints.begin());
}

std::vector<double> paa(const std::vector<double>& series, int64_t segments) {
    const auto n = static_cast<int64_t>(series.size());
    if (segments < 1 || n % segments != 0)
        throw NonDivisibleLength("paa: series length " + std::to_string(n) +
                                 " not divisible into " + std::to_string(segments) + " segments");
    const int64_t span = n / segments;
    std::vector<double> out(segments);
    for (int64_t s = 0; s < segments; ++s) {
        double sum = 0.0;
        for (int64_t i = s * span; i < (s + 1) * span; ++i) sum += series[i];
        out[s] = sum / static_cast<double>(span);
    }
    return out;
}

namespace {

constexpr double kZNormEps = 1e-12;

// z-normalize in place; returns false when the series is constant.
bool znorm(std::vector<double>& series) {
    double mean = 0.0;
    for (const double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (const double v : series) var += (v - mean) * (v - mean);
    var /= static_cast<double>(series.size());
    if (var <= kZNormEps) return false;
    const double inv = 1.0 / std::sqrt(var);
    for (double& v : series) v = (v - mean) * inv;
    return true;
}

std::vector<int64_t> discretize_series(std::vector<double> series, const SaxConfig& cfg,
                                       const std::vector<double>& bps) {
    const auto segments = static_cast<int64_t>(series.size()) / cfg.paa_ratio;
    if (static_cast<int64_t>(series.size()) % cfg.paa_ratio != 0)
        throw NonDivisibleLength("sax: window length not divisible by paa_ratio");
    if (!znorm(series)) return std::vector<int64_t>(segments, sax_bin(0.0, bps));
    const auto means = paa(series, segments);
    std::vector<int64_t> symbols(segments);
    for (int64_t s = 0; s < segments; ++s) symbols[s] = sax_bin(means[s], bps);
    return symbols;
}

}  // namespace

RawTokenSequence sax_discretize(const SensorWindow& window, const SaxConfig& cfg) {
    std::vector<double> magnitude(window.width);
    for (int64_t t = 0; t < window.width; ++t) {
        double s = 0.0;
        for (int64_t c = 0; c < window.channels; ++c) s += window.at(t, c) * window.at(t, c);
        magnitude[t] = std::sqrt(s);
    }
    const auto bps = normal_breakpoints(cfg.alphabet_size);
    const auto symbols = discretize_series(std::move(magnitude), cfg, bps);
    RawTokenSequence out;
    out.label = window.label;
    out.participant_id = window.participant_id;
    out.codewords.assign(symbols.begin(), symbols.end());
    return out;
}

std::vector<std::vector<int64_t>> channel_symbol_tuples(const SensorWindow& window,
                                                        const SaxConfig& cfg) {
    const auto bps = normal_breakpoints(cfg.alphabet_size);
    const int64_t frames = window.width / cfg.paa_ratio;
    std::vector<std::vector<int64_t>> tuples(frames, std::vector<int64_t>(window.channels));
    for (int64_t c = 0; c < window.channels; ++c) {
        std::vector<double> series(window.width);
        for (int64_t t = 0; t < window.width; ++t) series[t] = window.at(t, c);
        const auto symbols = discretize_series(std::move(series), cfg, bps);
        for (int64_t f = 0; f < frames; ++f) tuples[f][c] = symbols[f];
    }
    return tuples;
}

SaxRepeatModel sax_repeat_fit(const std::vector<SensorWindow>& train_windows,
                              const SaxConfig& cfg, int64_t k, uint64_t seed) {
    if (train_windows.empty()) throw EmptySplit("sax_repeat_fit: empty train split");
    const auto channels = train_windows.front().channels;
    std::vector<double> points;
    std::set<std::vector<int64_t>> distinct;
    for (const auto& w : train_windows)
        for (const auto& tuple : channel_symbol_tuples(w, cfg)) {
            distinct.insert(tuple);
            for (const auto s : tuple) points.push_back(static_cast<double>(s));
        }
    const auto n = static_cast<int64_t>(points.size()) / channels;
    auto effective_k = k;
    bool capped = false;
    if (static_cast<int64_t>(distinct.size()) < k) {
        effective_k = static_cast<int64_t>(distinct.size());
        capped = true;
        std::fprintf(stderr,
                     "sax-repeat: only %zu distinct tuples in train split; reducing k from %lld to %lld\n",
                     distinct.size(), static_cast<long long>(k), static_cast<long long>(effective_k));
    }
    KMeansConfig kc;
    kc.k = effective_k;
    kc.seed = seed;
    SaxRepeatModel model;
    model.cfg = cfg;
    model.k_capped = capped;
    model.clusters = kmeans_fit(points, n, channels, kc);
    return model;
}

RawTokenSequence sax_repeat_discretize(const SensorWindow& window, const SaxRepeatModel& model) {
    RawTokenSequence out;
    out.label = window.label;
    out.participant_id = window.participant_id;
    std::vector<double> point(window.channels);
    for (const auto& tuple : channel_symbol_tuples(window, model.cfg)) {
        for (size_t c = 0; c < tuple.size(); ++c) point[c] = static_cast<double>(tuple[c]);
        out.codewords.push_back(static_cast<uint64_t>(kmeans_assign(model.clusters, point.data())));
    }
    return out;
}

std::vector<RawTokenSequence> sax_corpus(const std::vector<SensorWindow>& windows,
                                         const SaxConfig& cfg) {
    std::vector<RawTokenSequence> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(sax_discretize(w, cfg));
    return out;
}

std::vector<RawTokenSequence> sax_repeat_corpus(const std::vector<SensorWindow>& windows,
                                                const SaxRepeatModel& model) {
    std::vector<RawTokenSequence> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(sax_repeat_discretize(w, model));
    return out;
}

}  // namespace vqcpc

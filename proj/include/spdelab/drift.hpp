#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spdelab {

enum class Smoothness { measurable, lipschitz, c1 };

/// A drift b: R -> R with its declared sup-norm and smoothness class.
/// Discontinuous drifts may list their breakpoints so mollification
/// quadrature can split the integral there.
struct DriftSpec {
    std::function<double(double)> b;
    double sup_norm = 0.0;
    Smoothness smoothness = Smoothness::measurable;
    std::function<double(double)> bprime;    // required when smoothness == c1
    double lipschitz_const = 0.0;            // meaningful for lipschitz/c1
    std::vector<double> breakpoints;         // known discontinuities of b
    std::string name = "custom";

    double operator()(double x) const { return b(x); }

    bool has_derivative() const { return smoothness == Smoothness::c1 && static_cast<bool>(bprime); }
};

inline DriftSpec drift_zero() {
    return {[](double) { return 0.0; }, 0.0, Smoothness::c1,
            [](double) { return 0.0; }, 0.0, {}, "zero"};
}

inline DriftSpec drift_constant(double c) {
    return {[c](double) { return c; }, std::abs(c), Smoothness::c1,
            [](double) { return 0.0; }, 0.0, {}, "constant"};
}

inline DriftSpec drift_sign() {
    return {[](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); },
            1.0, Smoothness::measurable, nullptr, 0.0, {0.0}, "sign"};
}

/// Indicator step 1_{x>0}.
inline DriftSpec drift_step() {
    return {[](double x) { return x > 0.0 ? 1.0 : 0.0; },
            1.0, Smoothness::measurable, nullptr, 0.0, {0.0}, "step"};
}

/// +1/-1 alternating on dyadic intervals of width 2^{-level} inside [-1,1],
/// constant outside.
inline DriftSpec drift_comb(int level = 3) {
    if (level < 1 || level > 12) throw std::invalid_argument("drift_comb: level must be in [1,12]");
    const double w = std::pow(2.0, -level);
    std::vector<double> breaks;
    for (double x = -1.0; x <= 1.0 + 1e-12; x += w) breaks.push_back(x);
    auto b = [w](double x) {
        if (x <= -1.0) return 1.0;
        if (x >= 1.0) return -1.0;
        const long long k = static_cast<long long>(std::floor((x + 1.0) / w));
        return k % 2 == 0 ? 1.0 : -1.0;
    };
    return {b, 1.0, Smoothness::measurable, nullptr, 0.0, std::move(breaks), "comb"};
}

inline DriftSpec drift_smooth_sine(double amplitude = 1.0, double frequency = 1.0) {
    auto b = [amplitude, frequency](double x) { return amplitude * std::sin(frequency * x); };
    auto bp = [amplitude, frequency](double x) { return amplitude * frequency * std::cos(frequency * x); };
    return {b, std::abs(amplitude), Smoothness::c1, bp,
            std::abs(amplitude * frequency), {}, "smooth-sine"};
}

/// Bounded smooth drift with sup-norm |amplitude|; b' is globally bounded.
inline DriftSpec drift_tanh(double amplitude = 1.0, double slope = 1.0) {
    auto b = [amplitude, slope](double x) { return amplitude * std::tanh(slope * x); };
    auto bp = [amplitude, slope](double x) {
        const double c = std::cosh(slope * x);
        return amplitude * slope / (c * c);
    };
    return {b, std::abs(amplitude), Smoothness::c1, bp,
            std::abs(amplitude * slope), {}, "tanh"};
}

inline DriftSpec drift_arctan(double amplitude = 1.0, double slope = 1.0) {
    auto b = [amplitude, slope](double x) { return amplitude * 2.0 / 3.141592653589793 * std::atan(slope * x); };
    auto bp = [amplitude, slope](double x) {
        return amplitude * 2.0 / 3.141592653589793 * slope / (1.0 + slope * x * slope * x);
    };
    return {b, std::abs(amplitude), Smoothness::c1, bp,
            std::abs(amplitude * slope * 2.0 / 3.141592653589793), {}, "arctan"};
}

/// Named lookup used by the experiment config.
inline DriftSpec drift_by_name(const std::string& name, double param = 1.0) {
    if (name == "zero") return drift_zero();
    if (name == "constant") return drift_constant(param);
    if (name == "sign") return drift_sign();
    if (name == "step") return drift_step();
    if (name == "comb") return drift_comb(static_cast<int>(param));
    if (name == "smooth-sine") return drift_smooth_sine(param);
    if (name == "tanh") return drift_tanh(param);
    if (name == "arctan") return drift_arctan(param);
    throw std::invalid_argument("drift_by_name: unknown drift '" + name + "'");
}

}  // namespace spdelab

#pragma once

#include <array>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace whs {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Wrap a coordinate difference into (-1/2, 1/2] (unit periods).
inline double torus_wrap(double d) {
    d -= std::floor(d);
    if (d > 0.5) d -= 1.0;
    return d;
}

// Wrap a coordinate into [0, 1).
inline double torus_coord(double x) {
    x -= std::floor(x);
    if (x >= 1.0) x -= 1.0; // floor can leave exactly 1.0 for tiny negatives
    return x;
}

inline double torus_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = torus_wrap(a[i] - b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Lexicographically ordered strictly-increasing multi-indices: the fiber
// basis e_I = dx_{i1} ^ ... ^ dx_{iq} of q-forms in n variables.
// Axes are 0-based internally.
// ---------------------------------------------------------------------------
struct FiberBasis {
    int n = 0;
    int q = 0;
    std::vector<std::vector<int>> tuples;  // lex order
    std::vector<uint32_t> masks;           // bit i set <=> axis i in I
    std::vector<int> mask_to_index;        // size 1<<n, -1 if |I| != q

    static const FiberBasis& get(int n, int q);

    int count() const { return static_cast<int>(tuples.size()); }
    int index_of(uint32_t mask) const { return mask_to_index[mask]; }
};

// sign of e_i ^ e_I as a multiple of e_{I u {i}}; 0 if i in I
inline int wedge_sign(int axis, uint32_t mask) {
    if (mask & (1u << axis)) return 0;
    int below = std::popcount(mask & ((1u << axis) - 1u));
    return (below % 2 == 0) ? 1 : -1;
}

// sign of iota_{e_axis} e_I as a multiple of e_{I \ {i}}; 0 if i not in I
inline int contraction_sign(int axis, uint32_t mask) {
    if (!(mask & (1u << axis))) return 0;
    int below = std::popcount(mask & ((1u << axis) - 1u));
    return (below % 2 == 0) ? 1 : -1;
}

// Sign of the permutation (I, complement of I) of (0..n-1): the Hodge
// coefficient of e_I -> e_{I^c}.
int hodge_sign(int n, uint32_t mask);

// ---------------------------------------------------------------------------
// Least-squares line fit with Pearson correlation.
// ---------------------------------------------------------------------------
struct LineFit {
    double slope = 0;
    double intercept = 0;
    double corr = 0; // correlation coefficient of (x, y)
    bool valid = false;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 with explicit double construction so the
// stream does not depend on distribution internals.
// ---------------------------------------------------------------------------
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform() { // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0;
        do { u1 = uniform(); } while (u1 <= 0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        have_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }
    uint64_t bits() { return eng_(); }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(eng_() % static_cast<uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0;
};

// Shortest representation that round-trips, fixed 17 significant digits.
std::string format_double(double v);

// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

// integral of f over [a, b] with a composite rule (segments x order)
template <typename F>
double integrate_gl(F&& f, double a, double b, int order = 32, int segments = 4) {
    const GaussRule& gr = gauss_legendre(order);
    double total = 0;
    double seg = (b - a) / segments;
    for (int s = 0; s < segments; ++s) {
        double lo = a + s * seg;
        double mid = lo + 0.5 * seg, half = 0.5 * seg;
        for (int i = 0; i < order; ++i) total += gr.weights[i] * f(mid + half * gr.nodes[i]) * half;
    }
    return total;
}

} // namespace whs

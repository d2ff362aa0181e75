#include "whs/util.hpp"

#include <cstdio>
#include <map>
#include <mutex>

namespace whs {

const FiberBasis& FiberBasis::get(int n, int q) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, FiberBasis> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_pair(n, q);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    FiberBasis fb;
    fb.n = n;
    fb.q = q;
    fb.mask_to_index.assign(size_t(1) << n, -1);
    if (q >= 0 && q <= n) {
        std::vector<int> idx(q);
        for (int i = 0; i < q; ++i) idx[i] = i;
        while (true) {
            uint32_t mask = 0;
            for (int v : idx) mask |= (1u << v);
            fb.mask_to_index[mask] = static_cast<int>(fb.tuples.size());
            fb.tuples.push_back(idx);
            fb.masks.push_back(mask);
            if (q == 0) break;
            int j = q - 1;
            while (j >= 0 && idx[j] == n - q + j) --j;
            if (j < 0) break;
            ++idx[j];
            for (int k = j + 1; k < q; ++k) idx[k] = idx[k - 1] + 1;
        }
    }
    return cache.emplace(key, std::move(fb)).first->second;
}

int hodge_sign(int n, uint32_t mask) {
    // parity of the permutation (I, I^c) of (0..n-1), counted by inversions
    std::vector<int> perm;
    perm.reserve(n);
    for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) perm.push_back(i);
    for (int i = 0; i < n; ++i)
        if (!(mask & (1u << i))) perm.push_back(i);
    int inv = 0;
    for (size_t a = 0; a < perm.size(); ++a)
        for (size_t b = a + 1; b < perm.size(); ++b)
            if (perm[a] > perm[b]) ++inv;
    return (inv % 2 == 0) ? 1 : -1;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    size_t m = x.size();
    if (m < 2 || y.size() != m) return f;
    double sx = 0, sy = 0;
    for (size_t i = 0; i < m; ++i) { sx += x[i]; sy += y[i]; }
    double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < m; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.corr = (syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    f.valid = true;
    return f;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

const GaussRule& gauss_legendre(int order) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    GaussRule gr;
    gr.nodes.resize(order);
    gr.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        // Newton from the Chebyshev-ish initial guess
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            double dp = order * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < order; ++j) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        double dp = order * (x * p0 - p1) / (x * x - 1.0);
        gr.nodes[order - 1 - i] = x;
        gr.weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(order, std::move(gr)).first->second;
}

} // namespace whs

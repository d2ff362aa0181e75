#include "whs/fft.hpp"

#include <fftw3.h>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "whs/fail.hpp"
#include "whs/util.hpp"

namespace whs {

namespace {
// FFTW planning is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}
} // namespace

struct SpectralGrid::Impl {
    fftw_complex* buf_in = nullptr;
    fftw_complex* buf_out = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    ~Impl() {
        std::lock_guard<std::mutex> lk(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (buf_in) fftw_free(buf_in);
        if (buf_out) fftw_free(buf_out);
    }
};

SpectralGrid::SpectralGrid(int n, int N) : n_(n), N_(N) {
    if (n < 1 || n > 4) throw ConfigError("SpectralGrid: dimension out of range");
    total_ = 1;
    for (int i = 0; i < n; ++i) total_ *= N;
    impl_ = std::make_unique<Impl>();
    impl_->buf_in = fftw_alloc_complex(total_);
    impl_->buf_out = fftw_alloc_complex(total_);
    std::vector<int> dims(n, N);
    std::lock_guard<std::mutex> lk(planner_mutex());
    impl_->fwd = fftw_plan_dft(n, dims.data(), impl_->buf_in, impl_->buf_out,
                               FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft(n, dims.data(), impl_->buf_in, impl_->buf_out,
                               FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!impl_->fwd || !impl_->bwd) throw Error("fftw_plan_failed", "SpectralGrid: planning failed");
}

SpectralGrid::~SpectralGrid() = default;

std::vector<Complex> SpectralGrid::forward(const std::vector<double>& f) {
    if (static_cast<long>(f.size()) != total_)
        throw ConfigError("SpectralGrid::forward: size mismatch");
    std::lock_guard<std::mutex> lk(mu_);
    for (long i = 0; i < total_; ++i) {
        impl_->buf_in[i][0] = f[i];
        impl_->buf_in[i][1] = 0.0;
    }
    fftw_execute(impl_->fwd);
    std::vector<Complex> c(total_);
    for (long i = 0; i < total_; ++i) c[i] = Complex(impl_->buf_out[i][0], impl_->buf_out[i][1]);
    return c;
}

std::vector<double> SpectralGrid::inverse(const std::vector<Complex>& c) {
    if (static_cast<long>(c.size()) != total_)
        throw ConfigError("SpectralGrid::inverse: size mismatch");
    std::lock_guard<std::mutex> lk(mu_);
    for (long i = 0; i < total_; ++i) {
        impl_->buf_in[i][0] = c[i].real();
        impl_->buf_in[i][1] = c[i].imag();
    }
    fftw_execute(impl_->bwd);
    std::vector<double> f(total_);
    const double scale = 1.0 / double(total_);
    for (long i = 0; i < total_; ++i) f[i] = impl_->buf_out[i][0] * scale;
    return f;
}

void SpectralGrid::apply_derivative(std::vector<Complex>& c, int axis) const {
    // strides: axis 0 slowest
    long stride = 1;
    for (int a = n_ - 1; a > axis; --a) stride *= N_;
    for (long i = 0; i < total_; ++i) {
        int idx = static_cast<int>((i / stride) % N_);
        int k = wavenumber(idx);
        if (2 * idx == N_) { // Nyquist: no odd-derivative contribution
            c[i] = Complex(0, 0);
        } else {
            c[i] *= Complex(0, kTwoPi * k);
        }
    }
}

std::vector<double> SpectralGrid::derivative(const std::vector<double>& f, int axis) {
    auto c = forward(f);
    apply_derivative(c, axis);
    return inverse(c);
}

SpectralGrid* SpectralGrid::padded() {
    if (!padded_) padded_ = std::make_unique<SpectralGrid>(n_, (3 * N_) / 2);
    return padded_.get();
}

namespace {

// copy low modes of c (grid N) into a larger spectral array (grid M), zero pad
void pad_spectrum(int n, int N, int M, const std::vector<Complex>& c,
                  std::vector<Complex>& out) {
    long totM = 1;
    for (int i = 0; i < n; ++i) totM *= M;
    out.assign(totM, Complex(0, 0));
    long totN = 1;
    for (int i = 0; i < n; ++i) totN *= N;
    for (long i = 0; i < totN; ++i) {
        long rem = i;
        long j = 0;
        bool keep = true;
        for (int a = n - 1; a >= 0; --a) {
            int idx = static_cast<int>(rem % N);
            rem /= N;
            int k = idx <= N / 2 ? idx : idx - N;
            if (2 * idx == N) { keep = false; break; } // drop ambiguous Nyquist
            int idxM = k >= 0 ? k : k + M;
            long strideM = 1;
            for (int b = n - 1; b > a; --b) strideM *= M;
            j += static_cast<long>(idxM) * strideM;
        }
        if (keep) out[j] = c[i];
    }
}

// inverse of pad_spectrum: take low modes of a grid-M spectrum into grid N
void truncate_spectrum(int n, int N, int M, const std::vector<Complex>& cM,
                       std::vector<Complex>& out) {
    long totN = 1;
    for (int i = 0; i < n; ++i) totN *= N;
    out.assign(totN, Complex(0, 0));
    for (long i = 0; i < totN; ++i) {
        long rem = i;
        long j = 0;
        bool keep = true;
        for (int a = n - 1; a >= 0; --a) {
            int idx = static_cast<int>(rem % N);
            rem /= N;
            int k = idx <= N / 2 ? idx : idx - N;
            if (2 * idx == N) { keep = false; break; }
            int idxM = k >= 0 ? k : k + M;
            long strideM = 1;
            for (int b = n - 1; b > a; --b) strideM *= M;
            j += static_cast<long>(idxM) * strideM;
        }
        if (keep) out[i] = cM[j];
    }
}

} // namespace

std::vector<double> SpectralGrid::multiply(const std::vector<double>& a,
                                           const std::vector<double>& b, bool dealias) {
    if (!dealias) {
        std::vector<double> r(a.size());
        for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
        return r;
    }
    SpectralGrid* pg = padded();
    const int M = pg->res();
    auto ca = forward(a);
    auto cb = forward(b);
    std::vector<Complex> pa, pb;
    pad_spectrum(n_, N_, M, ca, pa);
    pad_spectrum(n_, N_, M, cb, pb);
    auto fa = pg->inverse(pa);
    auto fb = pg->inverse(pb);
    std::vector<double> prod(fa.size());
    for (size_t i = 0; i < fa.size(); ++i) prod[i] = fa[i] * fb[i];
    auto cp = pg->forward(prod);
    std::vector<Complex> ct;
    truncate_spectrum(n_, N_, M, cp, ct);
    return inverse(ct);
}

TrigInterpolant::TrigInterpolant(SpectralGrid& grid, const std::vector<double>& field,
                                 double prune_rel) {
    n_ = grid.dim();
    auto c = grid.forward(field);
    const long tot = grid.total();
    const double scale = 1.0 / double(tot);
    double cmax = 0;
    for (auto& z : c) cmax = std::max(cmax, std::abs(z));
    const double floor = cmax * scale * prune_rel;
    const int N = grid.res();
    for (long i = 0; i < tot; ++i) {
        Complex z = c[i] * scale;
        if (std::abs(z) <= floor) continue;
        std::vector<int> k(n_);
        long rem = i;
        for (int a = n_ - 1; a >= 0; --a) {
            int idx = static_cast<int>(rem % N);
            rem /= N;
            k[a] = grid.wavenumber(idx);
            kmax_ = std::max(kmax_, std::abs(k[a]));
        }
        kvecs_.push_back(std::move(k));
        coeffs_.push_back(z);
    }
}

double TrigInterpolant::operator()(const Eigen::VectorXd& x) const {
    // per-axis phase tables e^{i 2 pi k x_a}, k = -kmax..kmax
    const int K = kmax_;
    const int W = 2 * K + 1;
    thread_local std::vector<Complex> phases;
    phases.assign(static_cast<size_t>(n_) * W, Complex(1, 0));
    for (int a = 0; a < n_; ++a) {
        Complex w = std::polar(1.0, kTwoPi * x[a]);
        Complex p(1, 0);
        for (int k = 0; k <= K; ++k) {
            phases[a * W + K + k] = p;
            phases[a * W + K - k] = std::conj(p);
            p *= w;
        }
    }
    double s = 0;
    for (size_t m = 0; m < coeffs_.size(); ++m) {
        Complex ph(1, 0);
        for (int a = 0; a < n_; ++a) ph *= phases[a * W + K + kvecs_[m][a]];
        s += (coeffs_[m] * ph).real();
    }
    return s;
}

} // namespace whs

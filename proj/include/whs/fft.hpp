#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Core>

namespace whs {

using Complex = std::complex<double>;

// Complex-to-complex FFT workspace for the n-dimensional periodic grid with
// N points per axis (axis 0 slowest, last axis contiguous). Plans are created
// with FFTW_ESTIMATE so results are reproducible run to run. Methods are
// serialized on an internal mutex; independent instances may run in parallel.
class SpectralGrid {
public:
    SpectralGrid(int n, int N);
    ~SpectralGrid();
    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    int dim() const { return n_; }
    int res() const { return N_; }
    long total() const { return total_; }

    // signed wave number of a raw index along one axis
    int wavenumber(int idx) const { return idx <= N_ / 2 ? idx : idx - N_; }

    std::vector<Complex> forward(const std::vector<double>& f);
    std::vector<double> inverse(const std::vector<Complex>& c); // real part, 1/total

    // multiply coefficients by (i 2 pi k_axis); Nyquist mode zeroed
    void apply_derivative(std::vector<Complex>& c, int axis) const;

    std::vector<double> derivative(const std::vector<double>& f, int axis);

    // pointwise product; with dealias=true both factors are padded to a
    // 3N/2 grid before multiplying and the result is truncated back
    std::vector<double> multiply(const std::vector<double>& a,
                                 const std::vector<double>& b, bool dealias);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_ = 0;
    int N_ = 0;
    long total_ = 0;
    std::mutex mu_;

    SpectralGrid* padded(); // lazily built 3N/2 workspace
    std::unique_ptr<SpectralGrid> padded_;
};

// Sparse trigonometric interpolant sum_k c_k e^{i 2 pi <k,x>} of a real grid
// function; modes below prune_rel * max|c| are dropped. Evaluation cost per
// point is O(#modes kept).
class TrigInterpolant {
public:
    TrigInterpolant() = default;
    TrigInterpolant(SpectralGrid& grid, const std::vector<double>& field,
                    double prune_rel = 1e-15);

    double operator()(const Eigen::VectorXd& x) const;
    size_t mode_count() const { return coeffs_.size(); }

private:
    int n_ = 0;
    int kmax_ = 0;
    std::vector<std::vector<int>> kvecs_;
    std::vector<Complex> coeffs_;
};

} // namespace whs

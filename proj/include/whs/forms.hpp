#pragma once

#include <string>
#include <vector>

#include "whs/fft.hpp"
#include "whs/torus.hpp"
#include "whs/util.hpp"

namespace whs {

// Degree-q differential form sampled on the periodic grid: one real field per
// fiber basis element dx_I, multi-indices in lexicographic order. Degree -1
// and n+1 forms are represented by the zero object with no fibers.
struct GridForm {
    int n = 0;
    int q = 0;
    int res = 0;
    std::vector<std::vector<double>> comps;

    GridForm() = default;
    GridForm(const TorusModel& model, int degree);

    int fibers() const { return static_cast<int>(comps.size()); }
    long points() const {
        long p = 1;
        for (int i = 0; i < n; ++i) p *= res;
        return p;
    }
    GridForm& operator+=(const GridForm& o);
    GridForm& operator-=(const GridForm& o);
    GridForm& operator*=(double s);
};

GridForm operator+(GridForm a, const GridForm& b);
GridForm operator-(GridForm a, const GridForm& b);
GridForm operator*(double s, GridForm a);

// Vector field X on the grid, one field per coordinate; via the flat metric
// the components double as the 1-form X-flat.
struct VectorFieldGrid {
    int n = 0;
    int res = 0;
    std::vector<std::vector<double>> comps;
};

// Shared workspace: grid transforms plus the aliasing policy.
struct FormOps {
    explicit FormOps(const TorusModel& model, bool dealias_products = false);

    const TorusModel model;
    bool dealias = false;
    SpectralGrid grid;

    GridForm d(const GridForm& w);
    GridForm hodge_star(const GridForm& w) const;
    GridForm codifferential(const GridForm& w);
    GridForm contraction(const VectorFieldGrid& X, const GridForm& w);
    GridForm exterior_mult(const GridForm& one_form, const GridForm& w);
    GridForm lie_derivative(const VectorFieldGrid& X, const GridForm& w);
    GridForm lie_sharp(const VectorFieldGrid& X, const GridForm& w);

    double inner_product(const GridForm& a, const GridForm& b) const;
    std::vector<double> fiber_product(const GridForm& a, const GridForm& b) const;
    double norm(const GridForm& a) const { return std::sqrt(std::max(0.0, inner_product(a, a))); }

    std::vector<double> product(const std::vector<double>& a, const std::vector<double>& b) {
        return grid.multiply(a, b, dealias);
    }
};

// Witten-deformed operators for a fixed Morse function. Samples of h, dh and
// the Hessian are taken from the closed forms, so the only discretization in
// d(t), delta(t) is the pseudo-spectral derivative.
class WittenOps {
public:
    WittenOps(const TorusModel& model, const MorseFunctionSpec& spec,
              bool dealias_products = false);

    FormOps& ops() { return ops_; }
    const TorusModel& model() const { return ops_.model; }

    const std::vector<double>& h_field() const { return h_; }
    const VectorFieldGrid& grad_field() const { return grad_; }
    const std::vector<double>& grad_sq_field() const { return grad_sq_; }
    double max_hessian_eig() const { return hess_eig_max_; }

    GridForm witten_d(const GridForm& w, double t);
    GridForm witten_delta(const GridForm& w, double t);          // delta + t iota_{grad h}
    GridForm witten_delta_star(const GridForm& w, double t);     // star-conjugated route

    // composition definition delta(t) d(t) + d(t) delta(t)
    GridForm laplacian(const GridForm& w, double t);
    // split form: Delta + t * (zeroth-order Hessian term) + t^2 |grad h|^2
    GridForm laplacian_split(const GridForm& w, double t);
    // the zeroth-order middle term alone, evaluated pointwise from the Hessian
    GridForm zeroth_order_term(const GridForm& w);

    // Gaussian ground-state width (t * max Hessian eigenvalue)^{-1/2} must
    // stay above 4 grid spacings, else spectra are unreliable.
    void check_resolution(double t) const;
    static int required_resolution(const TorusModel& model, const MorseFunctionSpec& spec,
                                   double t);

private:
    FormOps ops_;
    std::vector<double> h_;
    VectorFieldGrid grad_;
    GridForm dh_; // grad as a 1-form
    std::vector<double> grad_sq_;
    std::vector<std::vector<double>> hess_; // upper triangle fields, (i<=j)
    double hess_eig_max_ = 0;

    struct V1Term {
        int fiber_in;
        int fiber_out;
        int hess_field; // index into hess_
        double coeff;
    };
    std::vector<std::vector<V1Term>> v1_terms_; // per degree q
    const std::vector<V1Term>& v1_for_degree(int q);
};

// Binary tensor container: "GFRM" magic, version, n, q, grid_res, fiber
// count, then row-major float64 grids per fiber in lexicographic order.
void save_form(const std::string& path, const GridForm& w);
GridForm load_form(const std::string& path);

// Band-limited random test forms: a few random cosine modes per fiber with
// |k|_inf <= kmax, sampled from the closed form.
GridForm random_bandlimited_form(const TorusModel& model, int q, int kmax, Rng& rng,
                                 int terms_per_fiber = 6);

// Coordinates of a flattened grid index (axis 0 slowest).
Eigen::VectorXd grid_point(const TorusModel& model, long flat_index);

template <typename F>
std::vector<double> sample_scalar(const TorusModel& model, F&& f) {
    long tot = model.total_points();
    std::vector<double> out(tot);
    for (long i = 0; i < tot; ++i) out[i] = f(grid_point(model, i));
    return out;
}

} // namespace whs

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

namespace whs {

// Matrix-free symmetric operator on R^dim.
struct LinOp {
    long dim = 0;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y(dim);
        apply(x, y);
        return y;
    }
};

struct EigOptions {
    double tol = 1e-8;       // residual <= tol * max(1, |lambda|)
    int max_iter = 3000;
    int block_extra = 4;     // block size = nev + block_extra
    uint64_t seed = 0x9e3779b97f4a7c15ull;
    bool throw_on_fail = true;
};

struct EigResult {
    Eigen::VectorXd values;    // ascending, size nev
    Eigen::MatrixXd vectors;   // dim x nev, orthonormal
    Eigen::VectorXd residuals; // per pair
    int iterations = 0;
    bool converged = false;
};

// Preconditioned block LOBPCG for the lowest nev eigenpairs of a symmetric
// positive semidefinite operator. Deterministic for a fixed seed and warm
// start. `constraints` columns (orthonormal) are deflated from the search
// space; `warm` seeds the block.
EigResult lobpcg(const LinOp& A, const LinOp* precond, int nev, const EigOptions& opt,
                 const Eigen::MatrixXd* warm = nullptr,
                 const Eigen::MatrixXd* constraints = nullptr);

// Dense assembly fallback for small operators (applies A to every unit
// vector). Exact and deterministic; used as the oracle path and for 1-d
// problems.
EigResult dense_lowest(const LinOp& A, int nev);

} // namespace whs

#include "whs/eigensolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "whs/fail.hpp"
#include "whs/util.hpp"

namespace whs {

namespace {

// Whitened orthonormal basis of the column span; drops near-dependent
// directions. Returns the combination matrix C with basis = S * C.
Eigen::MatrixXd whiten(const Eigen::MatrixXd& S, double drop_rel = 1e-13) {
    Eigen::MatrixXd G = S.transpose() * S;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    double gmax = es.eigenvalues().cwiseAbs().maxCoeff();
    int keep = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > drop_rel * gmax) ++keep;
    Eigen::MatrixXd C(S.cols(), keep);
    int c = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()[i] > drop_rel * gmax) {
            C.col(c++) = es.eigenvectors().col(i) / std::sqrt(es.eigenvalues()[i]);
        }
    }
    return C;
}

void project_out(const Eigen::MatrixXd& Y, Eigen::MatrixXd& X) {
    if (Y.cols() == 0) return;
    X -= Y * (Y.transpose() * X);
}

} // namespace

EigResult lobpcg(const LinOp& A, const LinOp* precond, int nev, const EigOptions& opt,
                 const Eigen::MatrixXd* warm, const Eigen::MatrixXd* constraints) {
    const long dim = A.dim;
    if (nev < 1 || dim < nev) throw ConfigError("lobpcg: bad nev");
    int m = std::min<long>(dim, nev + opt.block_extra);

    Eigen::MatrixXd Y(dim, 0);
    if (constraints && constraints->cols() > 0) Y = *constraints;

    Rng rng(opt.seed);
    Eigen::MatrixXd X(dim, m);
    if (warm && warm->rows() == dim && warm->cols() > 0) {
        int wc = std::min<int>(m, static_cast<int>(warm->cols()));
        X.leftCols(wc) = warm->leftCols(wc);
        for (int c = wc; c < m; ++c)
            for (long r = 0; r < dim; ++r) X(r, c) = rng.uniform(-1.0, 1.0);
    } else {
        for (int c = 0; c < m; ++c)
            for (long r = 0; r < dim; ++r) X(r, c) = rng.uniform(-1.0, 1.0);
    }
    project_out(Y, X);
    X = (X * whiten(X)).eval();
    m = static_cast<int>(X.cols());

    auto apply_block = [&](const Eigen::MatrixXd& B) {
        Eigen::MatrixXd R(dim, B.cols());
        Eigen::VectorXd in(dim), out(dim);
        for (int c = 0; c < B.cols(); ++c) {
            in = B.col(c);
            A.apply(in, out);
            R.col(c) = out;
        }
        return R;
    };

    Eigen::MatrixXd AX = apply_block(X);
    Eigen::MatrixXd P(dim, 0), AP(dim, 0);
    EigResult res;

    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        // Rayleigh-Ritz on [X W P]
        Eigen::MatrixXd XtAX = X.transpose() * AX;
        XtAX = 0.5 * (XtAX + XtAX.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(XtAX);
        Eigen::VectorXd theta = rr.eigenvalues();
        X = (X * rr.eigenvectors()).eval();
        AX = (AX * rr.eigenvectors()).eval();
        if (P.cols() > 0) {
            // keep P expressed relative to the rotated X basis
        }

        Eigen::MatrixXd R = AX - X * theta.asDiagonal();
        Eigen::VectorXd rnorm(nev);
        bool ok = true;
        for (int c = 0; c < nev; ++c) {
            rnorm[c] = R.col(c).norm();
            if (rnorm[c] > opt.tol * std::max(1.0, std::abs(theta[c]))) ok = false;
        }
        if (ok) {
            res.values = theta.head(nev);
            res.vectors = X.leftCols(nev);
            res.residuals = rnorm;
            res.iterations = iter;
            res.converged = true;
            return res;
        }
        if (iter == opt.max_iter) {
            res.values = theta.head(nev);
            res.vectors = X.leftCols(nev);
            res.residuals = rnorm;
            res.iterations = iter;
            res.converged = false;
            break;
        }

        Eigen::MatrixXd W(dim, m);
        if (precond) {
            Eigen::VectorXd in(dim), out(dim);
            for (int c = 0; c < m; ++c) {
                in = R.col(c);
                precond->apply(in, out);
                W.col(c) = out;
            }
        } else {
            W = R;
        }
        project_out(Y, W);
        project_out(X, W);
        Eigen::MatrixXd Cw = whiten(W, 1e-10);
        if (Cw.cols() == 0) { // residual space collapsed; restart P
            P.resize(dim, 0);
            AP.resize(dim, 0);
            continue;
        }
        W = (W * Cw).eval();
        Eigen::MatrixXd AW = apply_block(W);

        // subspace basis S = [X W P], A-products tracked through combinations
        Eigen::MatrixXd S(dim, X.cols() + W.cols() + P.cols());
        Eigen::MatrixXd AS(dim, S.cols());
        S.leftCols(X.cols()) = X;
        AS.leftCols(X.cols()) = AX;
        S.middleCols(X.cols(), W.cols()) = W;
        AS.middleCols(X.cols(), W.cols()) = AW;
        if (P.cols() > 0) {
            S.rightCols(P.cols()) = P;
            AS.rightCols(P.cols()) = AP;
        }
        Eigen::MatrixXd C = whiten(S, 1e-12);
        Eigen::MatrixXd Sw = S * C;
        Eigen::MatrixXd ASw = AS * C;
        Eigen::MatrixXd H = Sw.transpose() * ASw;
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        int take = std::min<int>(m, static_cast<int>(Sw.cols()));
        Eigen::MatrixXd V = es.eigenvectors().leftCols(take);

        Eigen::MatrixXd Xnew = Sw * V;
        Eigen::MatrixXd AXnew = ASw * V;

        // difference direction, kept orthogonal to the new block
        Eigen::MatrixXd Pnew = Xnew - X * (X.transpose() * Xnew);
        Eigen::MatrixXd APnew = AXnew - AX * (X.transpose() * Xnew);
        Eigen::MatrixXd Cp = whiten(Pnew, 1e-8);
        if (Cp.cols() > 0) {
            int pc = std::min<int>(m, static_cast<int>(Cp.cols()));
            P = (Pnew * Cp.leftCols(pc)).eval();
            AP = (APnew * Cp.leftCols(pc)).eval();
        } else {
            P.resize(dim, 0);
            AP.resize(dim, 0);
        }

        X = Xnew;
        AX = AXnew;
        project_out(Y, X);
        m = static_cast<int>(X.cols());
    }

    if (opt.throw_on_fail && !res.converged)
        throw NoConvergenceEigen("lobpcg: no convergence after " +
                                 std::to_string(opt.max_iter) + " iterations; worst residual " +
                                 format_double(res.residuals.maxCoeff()));
    return res;
}

EigResult dense_lowest(const LinOp& A, int nev) {
    const long dim = A.dim;
    if (dim > 6000) throw ConfigError("dense_lowest: dimension too large");
    Eigen::MatrixXd M(dim, dim);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim), col(dim);
    for (long j = 0; j < dim; ++j) {
        e[j] = 1.0;
        A.apply(e, col);
        M.col(j) = col;
        e[j] = 0.0;
    }
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EigResult r;
    nev = std::min<long>(nev, dim);
    r.values = es.eigenvalues().head(nev);
    r.vectors = es.eigenvectors().leftCols(nev);
    r.residuals = Eigen::VectorXd::Zero(nev);
    r.iterations = 1;
    r.converged = true;
    return r;
}

} // namespace whs

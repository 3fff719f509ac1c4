#pragma once

// Hermitian generalized eigensolver for pencils (A, M), A positive
// semidefinite, M positive definite.  Two paths behind one contract:
//
//  - dense reduction (Eigen's generalized self-adjoint solver) up to
//    dense_threshold free DOFs;
//  - above that, Rayleigh-Ritz on a block Krylov space of the shifted
//    inverse T = (A + sM)^{-1} M, built M-orthonormal with full
//    reorthogonalization and a deterministic seeded start.
//
// Every reported pair carries the residual certificate
//     ||Ax - lambda Mx|| / (||Ax|| + |lambda| ||Mx||)  <=  tol.
// That quotient degenerates for the kernel mode: for any computed null
// vector, numerator and denominator are both rounding-level, so pairs with
// |lambda| below kernel_floor(A, M) are certified with the backward error
//     ||Ax - lambda Mx|| / ((||A||_F + |lambda| ||M||_F) ||x||).
// pencil_residual applies the same rule and is exposed so tests can
// recompute every certificate.

#include "dpband/forms.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <limits>
#include <optional>

namespace dpband {

struct EigOptions {
    double tol = 1e-9;
    int dense_threshold = 3000;
    int max_basis = 0;  // 0: automatic
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
    bool want_vectors = false;
    bool force_dense = false;
    bool force_iterative = false;
    bool force_complex = false;
};

struct SpectrumSlice {
    std::vector<double> eigenvalues;  // ascending
    std::vector<double> residuals;
    int k_requested = 0;
    int k_converged = 0;
    std::optional<Eigen::MatrixXcd> vectors;
};

class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& msg, SpectrumSlice partial_)
        : std::runtime_error(msg), partial(std::move(partial_)) {}
    SpectrumSlice partial;
};

namespace detail {

template <class Scalar>
using SpMat = Eigen::SparseMatrix<Scalar>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline SpMatD real_part(const SpMatC& m) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(m.nonZeros());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMatC::InnerIterator it(m, k); it; ++it)
            if (it.value().real() != 0.0) t.emplace_back(it.row(), it.col(), it.value().real());
    SpMatD out(m.rows(), m.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

template <class Scalar>
double frob_norm(const SpMat<Scalar>& m) {
    double s = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (typename SpMat<Scalar>::InnerIterator it(m, k); it; ++it) s += std::norm(it.value());
    return std::sqrt(s);
}

struct SeededRng {
    std::uint64_t state;
    explicit SeededRng(std::uint64_t seed) : state(seed ? seed : 1) {}
    // splitmix64; maps to (-1, 1)
    double next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    }
    template <class Scalar>
    void fill(VecX<Scalar>& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if constexpr (std::is_same_v<Scalar, double>) v[i] = next();
            else v[i] = Scalar(next(), next());
        }
    }
};

} // namespace detail

inline double kernel_floor(double a_frob, double m_frob) {
    return 1e-8 * a_frob / std::max(m_frob, std::numeric_limits<double>::min());
}

template <class Scalar>
double pencil_residual(const detail::SpMat<Scalar>& A, const detail::SpMat<Scalar>& M, double lambda,
                       const detail::VecX<Scalar>& x, double a_frob, double m_frob) {
    const detail::VecX<Scalar> Ax = A * x;
    const detail::VecX<Scalar> Mx = M * x;
    const double num = (Ax - lambda * Mx).norm();
    double den = Ax.norm() + std::abs(lambda) * Mx.norm();
    if (std::abs(lambda) <= kernel_floor(a_frob, m_frob))
        den = (a_frob + std::abs(lambda) * m_frob) * x.norm();
    return num / std::max(den, std::numeric_limits<double>::min());
}

inline double pencil_residual(const SpMatC& A, const SpMatC& M, double lambda, const Eigen::VectorXcd& x) {
    return pencil_residual<Complex>(A, M, lambda, x, detail::frob_norm(A), detail::frob_norm(M));
}

namespace detail {

template <class Scalar>
struct PairSet {
    std::vector<double> lambda;
    std::vector<double> residual;
    MatX<Scalar> vectors;  // n x k
};

// Certify and, where needed, polish Ritz pairs by deflated inverse
// iteration with the shifted factorization.
template <class Scalar, class SolveFn>
void polish_pairs(const SpMat<Scalar>& A, const SpMat<Scalar>& M, PairSet<Scalar>& pairs, double tol,
                  double a_frob, double m_frob, SolveFn&& solve) {
    const int k = static_cast<int>(pairs.lambda.size());
    for (int i = 0; i < k; ++i) {
        if (pairs.residual[i] <= tol) continue;
        VecX<Scalar> x = pairs.vectors.col(i);
        for (int iter = 0; iter < 40; ++iter) {
            VecX<Scalar> y = solve(M * x);
            for (int j = 0; j < i; ++j) {
                const VecX<Scalar> xj = pairs.vectors.col(j);
                const Scalar c = (M * xj).dot(y);
                y -= c * xj;
            }
            const double ny = std::sqrt(std::real(y.dot(VecX<Scalar>(M * y))));
            if (!(ny > 0.0) || !std::isfinite(ny)) break;
            x = y / ny;
            const VecX<Scalar> Ax = A * x;
            const VecX<Scalar> Mx = M * x;
            const double lam = std::real(x.dot(Ax)) / std::real(x.dot(Mx));
            const double res = pencil_residual<Scalar>(A, M, lam, x, a_frob, m_frob);
            pairs.lambda[i] = lam;
            pairs.residual[i] = res;
            pairs.vectors.col(i) = x;
            if (res <= tol) break;
        }
    }
    // polishing can reorder near-degenerate values
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return pairs.lambda[a] < pairs.lambda[b]; });
    PairSet<Scalar> sorted;
    sorted.lambda.resize(k);
    sorted.residual.resize(k);
    sorted.vectors.resize(pairs.vectors.rows(), k);
    for (int i = 0; i < k; ++i) {
        sorted.lambda[i] = pairs.lambda[order[i]];
        sorted.residual[i] = pairs.residual[order[i]];
        sorted.vectors.col(i) = pairs.vectors.col(order[i]);
    }
    pairs = std::move(sorted);
}

template <class Scalar>
SpectrumSlice finish(const SpMat<Scalar>& A, const SpMat<Scalar>& M, PairSet<Scalar>& pairs, int k,
                     const EigOptions& opt, const char* path) {
    SpectrumSlice out;
    out.k_requested = k;
    out.eigenvalues = pairs.lambda;
    out.residuals = pairs.residual;
    out.k_converged = 0;
    for (int i = 0; i < k; ++i)
        if (pairs.residual[i] <= opt.tol) ++out.k_converged;
    if (opt.want_vectors) out.vectors = pairs.vectors.template cast<Complex>();
    if (out.k_converged < k) {
        throw SolverFailure(std::string(path) + " eigensolver: only " + std::to_string(out.k_converged) +
                                " of " + std::to_string(k) + " pairs certified at tol=" + std::to_string(opt.tol),
                            std::move(out));
    }
    return out;
}

inline void check_mass_matrix(const SpMatC& M) {
    Eigen::SimplicialLDLT<SpMatC> ldlt(M);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        const Eigen::VectorXcd d = ldlt.vectorD();
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (!(d[i].real() > 0.0)) { ok = false; break; }
    }
    if (!ok) throw std::invalid_argument("mass matrix must be Hermitian positive definite");
}

template <class Scalar>
double shift_for(const SpMat<Scalar>& A, const SpMat<Scalar>& M) {
    const double tr_a = A.diagonal().real().sum();
    const double tr_m = M.diagonal().real().sum();
    const double rho = std::max(tr_a, 0.0) / std::max(tr_m, std::numeric_limits<double>::min());
    return std::max(rho * 1e-6, 1e-12);
}

template <class Scalar>
SpectrumSlice dense_smallest(const SpMat<Scalar>& A, const SpMat<Scalar>& M, int k, const EigOptions& opt) {
    const MatX<Scalar> Ad(A);
    const MatX<Scalar> Md(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX<Scalar>> ges(Ad, Md,
                                                               Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success)
        throw SolverFailure("dense eigensolver did not converge", SpectrumSlice{{}, {}, k, 0, std::nullopt});

    const double a_frob = frob_norm(A), m_frob = frob_norm(M);
    PairSet<Scalar> pairs;
    pairs.lambda.resize(k);
    pairs.residual.resize(k);
    pairs.vectors = ges.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) {
        const VecX<Scalar> x = pairs.vectors.col(i);
        pairs.lambda[i] = ges.eigenvalues()[i];
        pairs.residual[i] = pencil_residual<Scalar>(A, M, pairs.lambda[i], x, a_frob, m_frob);
    }
    bool all_ok = true;
    for (double r : pairs.residual) all_ok = all_ok && r <= opt.tol;
    if (!all_ok) {
        const double s = shift_for(A, M);
        SpMat<Scalar> S = A + Scalar(s) * M;
        Eigen::SimplicialLDLT<SpMat<Scalar>> fact(S);
        if (fact.info() == Eigen::Success) {
            polish_pairs<Scalar>(A, M, pairs, opt.tol, a_frob, m_frob,
                                 [&](const VecX<Scalar>& b) { return VecX<Scalar>(fact.solve(b)); });
        }
    }
    return finish<Scalar>(A, M, pairs, k, opt, "dense");
}

template <class Scalar>
SpectrumSlice krylov_smallest(const SpMat<Scalar>& A, const SpMat<Scalar>& M, int k, const EigOptions& opt) {
    const int n = static_cast<int>(A.rows());
    const double s = shift_for(A, M);
    SpMat<Scalar> S = A + Scalar(s) * M;
    Eigen::SimplicialLDLT<SpMat<Scalar>> fact(S);
    if (fact.info() != Eigen::Success) {
        check_mass_matrix(SpMatC(M.template cast<Complex>()));
        throw std::runtime_error("shifted operator factorization failed");
    }

    const double a_frob = frob_norm(A), m_frob = frob_norm(M);
    const int m_max = opt.max_basis > 0 ? std::min(opt.max_basis, n)
                                        : std::min(n, std::max(8 * k + 40, 64));
    const int block = 2;

    std::vector<VecX<Scalar>> V, MV, TV;  // TV[i] = (A+sM)^{-1} M v_i once computed
    V.reserve(m_max);
    MV.reserve(m_max);
    TV.resize(m_max);
    std::vector<bool> has_tv(m_max, false);
    MatX<Scalar> H = MatX<Scalar>::Zero(m_max, m_max);
    SeededRng rng(opt.seed);

    // Appends w after two-pass M-orthogonalization; fills its H row against
    // every already-applied basis vector.  Returns false if w was dependent.
    auto append = [&](VecX<Scalar> w) -> bool {
        if (static_cast<int>(V.size()) >= m_max) return false;
        const double init = w.norm();
        if (!(init > 0.0)) return false;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < V.size(); ++i) w -= MV[i].dot(w) * V[i];
        VecX<Scalar> Mw = M * w;
        const double nw = std::sqrt(std::max(std::real(w.dot(Mw)), 0.0));
        if (!(nw > 1e-12 * init)) return false;
        w /= nw;
        Mw /= nw;
        const int idx = static_cast<int>(V.size());
        V.push_back(std::move(w));
        MV.push_back(std::move(Mw));
        for (int j = 0; j < idx; ++j)
            if (has_tv[j]) H(idx, j) = MV[idx].dot(TV[j]);
        return true;
    };

    auto apply_T = [&](int idx) {
        if (has_tv[idx]) return;
        TV[idx] = fact.solve(MV[idx]);
        has_tv[idx] = true;
        for (std::size_t i = 0; i < V.size(); ++i) H(i, idx) = MV[i].dot(TV[idx]);
    };

    {
        VecX<Scalar> w(n);
        for (int b = 0; b < block; ++b) {
            rng.fill<Scalar>(w);
            append(w);
        }
        if (V.empty()) throw std::runtime_error("could not seed the Krylov basis");
    }

    auto ritz = [&](PairSet<Scalar>& pairs) -> bool {
        int m = 0;
        while (m < static_cast<int>(V.size()) && has_tv[m]) ++m;
        if (m < k) return false;
        MatX<Scalar> Hm = H.topLeftCorner(m, m);
        Hm = Scalar(0.5) * (Hm + Hm.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es(Hm);
        if (es.info() != Eigen::Success) return false;
        pairs.lambda.assign(k, 0.0);
        pairs.residual.assign(k, 1.0);
        pairs.vectors.resize(n, k);
        bool all_ok = true;
        for (int i = 0; i < k; ++i) {
            const int col = m - 1 - i;  // theta descending = lambda ascending
            VecX<Scalar> x = VecX<Scalar>::Zero(n);
            for (int j = 0; j < m; ++j) x += es.eigenvectors()(j, col) * V[j];
            const double nx = std::sqrt(std::real(x.dot(VecX<Scalar>(M * x))));
            if (nx > 0.0) x /= nx;
            const VecX<Scalar> Ax = A * x;
            const VecX<Scalar> Mx = M * x;
            const double lam = std::real(x.dot(Ax)) / std::real(x.dot(Mx));
            pairs.vectors.col(i) = x;
            pairs.lambda[i] = lam;
            pairs.residual[i] = pencil_residual<Scalar>(A, M, lam, x, a_frob, m_frob);
            all_ok = all_ok && pairs.residual[i] <= opt.tol;
        }
        return all_ok;
    };

    PairSet<Scalar> pairs;
    std::vector<int> frontier;
    for (std::size_t i = 0; i < V.size(); ++i) frontier.push_back(static_cast<int>(i));
    int since_check = 0;
    bool certified = false;
    while (true) {
        for (int idx : frontier) apply_T(idx);
        std::vector<int> next;
        for (int idx : frontier)
            if (append(TV[idx])) next.push_back(static_cast<int>(V.size()) - 1);
        const bool full = static_cast<int>(V.size()) >= m_max;
        if (next.empty() && !full) {
            VecX<Scalar> w(n);
            rng.fill<Scalar>(w);
            if (append(w)) next.push_back(static_cast<int>(V.size()) - 1);
        }
        since_check += static_cast<int>(next.size());
        const bool exhausted = next.empty() || full;
        if ((static_cast<int>(V.size()) >= k + 2 && since_check >= 2 * block) || exhausted) {
            if (exhausted)
                for (std::size_t i = 0; i < V.size(); ++i) apply_T(static_cast<int>(i));
            since_check = 0;
            if (ritz(pairs)) {
                certified = true;
                break;
            }
            if (exhausted) break;
        }
        frontier = std::move(next);
    }

    if (!certified && !pairs.lambda.empty()) {
        polish_pairs<Scalar>(A, M, pairs, opt.tol, a_frob, m_frob,
                             [&](const VecX<Scalar>& b) { return VecX<Scalar>(fact.solve(b)); });
    }
    if (pairs.lambda.empty())
        throw SolverFailure("iterative eigensolver produced no Ritz pairs", SpectrumSlice{{}, {}, k, 0, std::nullopt});
    return finish<Scalar>(A, M, pairs, k, opt, "iterative");
}

template <class Scalar>
SpectrumSlice smallest_impl(const SpMat<Scalar>& A, const SpMat<Scalar>& M, int k, const EigOptions& opt) {
    const int n = static_cast<int>(A.rows());
    const bool dense = !opt.force_iterative && (opt.force_dense || n <= opt.dense_threshold);
    return dense ? dense_smallest<Scalar>(A, M, k, opt) : krylov_smallest<Scalar>(A, M, k, opt);
}

} // namespace detail

inline SpectrumSlice smallest_eigs(const Pencil& pencil, int k, const EigOptions& opt = {}) {
    const int n = static_cast<int>(pencil.A.rows());
    if (k < 1 || k > n) throw std::invalid_argument("requested eigenvalue count out of range");
    if (pencil.M.rows() != n || pencil.A.cols() != n)
        throw std::invalid_argument("pencil matrices must be square and of equal size");
    const bool dense = !opt.force_iterative && (opt.force_dense || n <= opt.dense_threshold);
    if (dense) detail::check_mass_matrix(pencil.M);
    if (pencil.real_valued && !opt.force_complex) {
        return detail::smallest_impl<double>(detail::real_part(pencil.A), detail::real_part(pencil.M), k, opt);
    }
    return detail::smallest_impl<Complex>(pencil.A, pencil.M, k, opt);
}

// Assemble, apply the effective unit-cell coupling, solve, and rescale the
// eigenvalues to the physical cell (division by epsilon^2).
inline SpectrumSlice solve_cell(const CellGeometry& geom, const MeshedCell& mesh, LidCondition lid, int k,
                                const EigOptions& opt = {}) {
    const AssembledForms forms = assemble(mesh, lid);
    const double coupling = effective_unit_coupling(geom);
    SpectrumSlice slice = smallest_eigs(total_operator(forms, coupling), k, opt);
    const double inv_eps2 = 1.0 / (geom.epsilon * geom.epsilon);
    for (double& v : slice.eigenvalues) v *= inv_eps2;
    return slice;
}

} // namespace dpband

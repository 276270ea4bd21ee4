#include "tubekit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace tubekit::num {

double inf_norm(const CMatrix& m) {
    double r = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) r = std::max(r, std::abs(m(i, j)));
    return r;
}

HermEig herm_eig(const CMatrix& m) {
    if (m.rows() != m.cols()) throw NumericsError("herm_eig: matrix is not square");
    const double scale = std::max(1.0, inf_norm(m));
    const double asym = inf_norm(CMatrix(m - m.adjoint()));
    if (asym > 1e-10 * scale) {
        std::ostringstream os;
        os << "herm_eig: input not Hermitian, max asymmetry " << asym;
        throw NumericsError(os.str());
    }
    // Work on the Hermitian part so the residual bound is meaningful.
    CMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw NumericsError("herm_eig: solver failed");
    HermEig out;
    out.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
    out.eigenvectors = solver.eigenvectors();
    CMatrix recon = out.eigenvectors * solver.eigenvalues().asDiagonal() *
                    out.eigenvectors.adjoint();
    const double resid = inf_norm(CMatrix(h - recon));
    if (resid > 1e-10 * std::max(1.0, inf_norm(h)))
        throw NumericsError("herm_eig: reconstruction residual " + std::to_string(resid));
    return out;
}

std::vector<double> singular_values(const CMatrix& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    std::vector<double> s(svd.singularValues().data(),
                          svd.singularValues().data() + svd.singularValues().size());
    return s;
}

CMatrix nullspace(const CMatrix& m, double rel_tol) {
    if (rel_tol <= 0 || rel_tol >= 1) throw NumericsError("nullspace: rel_tol out of (0,1)");
    if (m.rows() == 0 || m.cols() == 0) return CMatrix::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    if (smax == 0.0) return CMatrix::Identity(m.cols(), m.cols());
    Eigen::Index keep_from = sv.size();
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= rel_tol * smax) {
            keep_from = i;
            break;
        }
    }
    Eigen::Index k = m.cols() - keep_from;
    return svd.matrixV().rightCols(k);
}

int numerical_rank(const CMatrix& m, double rel_tol) {
    auto sv = singular_values(m);
    if (sv.empty() || sv[0] == 0.0) return 0;
    int r = 0;
    for (double s : sv)
        if (s > rel_tol * sv[0]) ++r;
    return r;
}

cplx RootOfUnity::value() const {
    return std::polar(1.0, 2.0 * std::numbers::pi * double(p) / double(q));
}

std::string RootOfUnity::str() const {
    return std::to_string(p) + "/" + std::to_string(q);
}

std::optional<RootOfUnity> snap_root_of_unity(cplx z, long q_max, double tol) {
    if (q_max < 1) throw NumericsError("snap_root_of_unity: q_max < 1");
    if (std::abs(std::abs(z) - 1.0) > tol) return std::nullopt;
    double t = std::arg(z) / (2.0 * std::numbers::pi);
    if (t < 0) t += 1.0;
    for (long q = 1; q <= q_max; ++q) {
        long p = std::lround(t * double(q)) % q;
        if (p < 0) p += q;
        RootOfUnity cand{p, q};
        if (std::abs(z - cand.value()) < tol) {
            // A competing admissible value at the same denominator means the
            // tolerance is too loose to decide.
            for (long dp : {-1L, 1L}) {
                long p2 = ((p + dp) % q + q) % q;
                if (p2 == p) continue;
                RootOfUnity other{p2, q};
                if (std::abs(z - other.value()) < tol)
                    throw NumericsError("snap_root_of_unity: ambiguous between " +
                                        cand.str() + " and " + other.str());
            }
            if (std::gcd(p, q) != 1 && q > 1) continue;  // found earlier at q/gcd
            return cand;
        }
    }
    return std::nullopt;
}

long default_qmax(int n) {
    long l = std::lcm<long, long>(std::lcm<long, long>(long(n) * n + 4, n), 12);
    return 4 * l;
}

}  // namespace tubekit::num

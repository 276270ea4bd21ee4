#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tubekit::num {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// Three-tier tolerances: rewriting noise stays below decomposition decisions,
// which stay below golden-comparison thresholds.
struct Tol {
    static constexpr double chop = 1e-12;
    static constexpr double decomp = 1e-9;
    static constexpr double compare = 1e-6;
};

struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool is_zero(cplx z, double tol = Tol::chop) {
    return std::abs(z.real()) < tol && std::abs(z.imag()) < tol;
}

double inf_norm(const CMatrix& m);

struct HermEig {
    std::vector<double> eigenvalues;  // ascending
    CMatrix eigenvectors;             // orthonormal columns
};

// Hermitian eigendecomposition. Rejects input whose asymmetry exceeds
// 1e-10 * max(1, |m|_inf); reconstruction residual is checked against
// 1e-10 * |m|_inf.
HermEig herm_eig(const CMatrix& m);

// Orthonormal basis of { v : |mv| <= rel_tol * sigma_max * |v| }.
// Returns a matrix with one column per basis vector (possibly 0 columns).
CMatrix nullspace(const CMatrix& m, double rel_tol = Tol::decomp);

// Singular values of m, descending.
std::vector<double> singular_values(const CMatrix& m);

// Numerical rank at a relative threshold.
int numerical_rank(const CMatrix& m, double rel_tol);

struct RootOfUnity {
    long p = 0;
    long q = 1;  // value e^{2 pi i p / q}, gcd(p, q) = 1, 0 <= p < q
    cplx value() const;
    std::string str() const;  // "p/q"
    bool operator==(const RootOfUnity& o) const { return p == o.p && q == o.q; }
    bool operator<(const RootOfUnity& o) const {
        return p * (double)o.q < o.p * (double)q;
    }
};

// Smallest-denominator root of unity within tol of z, or nullopt.
// Throws on genuine ambiguity (two admissible candidates at the minimal q).
std::optional<RootOfUnity> snap_root_of_unity(cplx z, long q_max, double tol = 1e-7);

// Default snapping denominator bound for a group of order n.
long default_qmax(int n);

// Neumaier compensated summation, switchable at run time for the largest cases.
struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

struct KahanCSum {
    KahanSum re, im;
    void add(cplx z) {
        re.add(z.real());
        im.add(z.imag());
    }
    cplx value() const { return {re.value(), im.value()}; }
};

}  // namespace tubekit::num

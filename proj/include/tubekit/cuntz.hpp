#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tubekit/ghdata.hpp"
#include "tubekit/numerics.hpp"

namespace tubekit::cuntz {

using num::cplx;

// A letter is S or T_g; g is the flat group-element index.
using Letter = std::uint8_t;
constexpr Letter kS = 0xFF;
inline Letter letter_T(int g) { return Letter(g); }
inline bool is_T(Letter l) { return l != kS; }

constexpr int kMaxWordLen = 12;   // hard storage bound
constexpr int kWordLenGuard = 10; // rewriting-runaway assertion threshold

struct Word {
    std::uint8_t len = 0;
    std::array<Letter, kMaxWordLen> a{};

    void push(Letter l);
    void append(const Word& w, int from = 0);
    bool operator==(const Word& o) const {
        if (len != o.len) return false;
        for (int i = 0; i < len; ++i)
            if (a[i] != o.a[i]) return false;
        return true;
    }
    static Word single(Letter l) {
        Word w;
        w.push(l);
        return w;
    }
};

// One monomial W * lambda^dec * V^*, with W and V star-free core words. The
// decoration is the crossed-product unitary of the de-equivariantized flavor;
// plain and graded terms keep dec = 0.
struct Term {
    Word w, v;
    std::uint8_t dec = 0;

    bool operator==(const Term& o) const { return dec == o.dec && w == o.w && v == o.v; }
    static Term one() { return Term{}; }
    static Term gen(Letter l) { return Term{Word::single(l), Word(), 0}; }
    static Term gen_adj(Letter l) { return Term{Word(), Word::single(l), 0}; }
    static Term lambda_pow(int e) { return Term{Word(), Word(), std::uint8_t(e & 1)}; }
};

struct TermHash {
    size_t operator()(const Term& t) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&](std::uint8_t b) {
            h ^= b;
            h *= 1099511628211ull;
        };
        mix(t.w.len);
        for (int i = 0; i < t.w.len; ++i) mix(t.w.a[i]);
        mix(0xAA);
        mix(t.v.len);
        for (int i = 0; i < t.v.len; ++i) mix(t.v.a[i]);
        mix(t.dec);
        return size_t(h);
    }
};

// Finite sum of monomials with complex coefficients; coefficients below the
// chop tolerance are dropped on normalization.
struct CuntzTerm {
    std::unordered_map<Term, cplx, TermHash> terms;

    void add(const Term& t, cplx c);
    CuntzTerm& operator+=(const CuntzTerm& o);
    CuntzTerm& operator*=(cplx c);
    void chop(double tol = num::Tol::chop);
    bool is_zero(double tol = num::Tol::chop) const;
    double max_abs() const;
    size_t size() const { return terms.size(); }
    std::string str(const groups::AbelianGroup& G) const;

    static CuntzTerm of(const Term& t, cplx c = 1.0) {
        CuntzTerm x;
        x.add(t, c);
        return x;
    }
};

double dist(const CuntzTerm& a, const CuntzTerm& b);

// Rewriting engine for one concrete category realization.
struct Engine {
    const ghdata::GHData* dat = nullptr;
    const groups::GroupAutomorphism* theta = nullptr;  // graded flavor
    bool lambda_active = false;                        // deequiv with nontrivial eps_z
    int z = -1;                                        // deequiv 2-torsion element
    std::vector<int> eps_z;                            // eps_z[g], +-1

    static Engine make(const ghdata::CategoryConfig& cfg);

    int eps(int g, int h) const { return dat->eps_(g, h); }
    int epsz(int g) const { return eps_z.empty() ? 1 : eps_z[g]; }

    // product of two monomials, contracted to normal form
    void mul_term(const Term& t1, cplx c1, const Term& t2, cplx c2, CuntzTerm& out) const;
    CuntzTerm mul(const CuntzTerm& x, const CuntzTerm& y) const;
    CuntzTerm mul(std::initializer_list<const CuntzTerm*> factors) const;

    static Term adjoint_term(const Term& t);
    CuntzTerm adjoint(const CuntzTerm& x) const;

    CuntzTerm apply_alpha(int g, const CuntzTerm& x) const;
    CuntzTerm apply_rho(const CuntzTerm& x) const;
    CuntzTerm apply_gamma(int k, const CuntzTerm& x) const;  // graded relabeling

    const CuntzTerm& rho_S() const;
    const CuntzTerm& rho_T(int g) const;

  private:
    mutable std::vector<CuntzTerm> rho_letter_cache_;  // [0..n-1] = T_g, [n] = S
    CuntzTerm apply_rho_word(const Word& w) const;
};

struct IdentityReport {
    struct Family {
        std::string name;
        double max_residual = 0;
        long cases = 0;
    };
    std::vector<Family> families;
    double max_residual = 0;
    std::string summary() const;
};

// Evaluates the generalized Haagerup Cuntz-algebra identity families (the
// contracted products of rho-images that every tube-algebra computation rests
// on) over all argument tuples, or a random subsample if `sample_cap` > 0 and
// the full sweep exceeds it.
IdentityReport verify_cuntz_identities(const ghdata::GHData& dat, long sample_cap = 0,
                                       std::uint64_t seed = 0xC0FFEE);

}  // namespace tubekit::cuntz

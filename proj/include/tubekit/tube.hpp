#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tubekit/cuntz.hpp"
#include "tubekit/ghdata.hpp"

namespace tubekit::tube {

using cuntz::CuntzTerm;
using cuntz::Term;
using ghdata::CategoryConfig;
using ghdata::Flavor;
using num::cplx;

// One object of the annular set: gamma^i alpha_g rho^r. The grade is 0
// except in the graded flavor; g is a flat group-element index (restricted to
// the chosen transversal in the de-equivariantized flavor).
struct Obj {
    std::int16_t gamma = 0;
    std::int16_t g = 0;
    bool rho = false;
    bool operator==(const Obj& o) const {
        return gamma == o.gamma && g == o.g && rho == o.rho;
    }
};

enum class LabelKind : std::uint8_t {
    GG = 0,        // (g k | 1 | k g)
    GRho,          // (g kr | 1 | kr -g)
    GToRho,        // (g kr | T... | kr hr)
    RhoToG,        // (hr kr | T...* | kr g)
    RhoRhoTT,      // (h1r kr | T T* | kr h2r)
    RhoRhoSS,      // (hr kr | S S* | kr (2k-h)r)
    RhoUnit,       // (hr k | 1 | k (h-2k)r)
};

struct BasisLabel {
    LabelKind kind = LabelKind::GG;
    std::int16_t i = 0, j = 0;               // grades
    std::int16_t g = 0, h = 0, h2 = 0, k = 0, m = 0;  // group element indices
    std::int8_t z1 = 0, z2 = 0;              // deequiv z-bits (0 or 1)
};

struct LabelInfo {
    BasisLabel label;
    int xi = 0, eta = 0;  // indices into the object list
    Obj zeta;
    Term term;            // basis element = sign * term
    double sign = 1.0;
};

// Sparse tube element over the enumerated basis, sorted by label index.
using SparseVec = std::vector<std::pair<int, cplx>>;

void sparse_add(SparseVec& acc, const SparseVec& x, cplx scale);
SparseVec sparse_scale(const SparseVec& x, cplx scale);
SparseVec sparse_normalize(std::unordered_map<int, cplx>& acc, double tol = num::Tol::chop);
double sparse_max_abs(const SparseVec& x);
SparseVec sparse_sub(const SparseVec& a, const SparseVec& b);

struct Channel {
    Obj nu;
    std::vector<CuntzTerm> isometries;
};

// The enumerated tube-algebra basis for one category configuration, plus the
// generic operations (product, adjoint, S0) evaluated through the Cuntz
// engine. Heap-allocate and keep put; the engine points into `cfg`.
class TubeAlgebra {
  public:
    static std::unique_ptr<TubeAlgebra> build(const CategoryConfig& cfg);

    TubeAlgebra(const TubeAlgebra&) = delete;
    TubeAlgebra& operator=(const TubeAlgebra&) = delete;

    const CategoryConfig& config() const { return cfg_; }
    const cuntz::Engine& engine() const { return engine_; }
    Flavor flavor() const { return cfg_.flavor; }

    // objects
    const std::vector<Obj>& objects() const { return objects_; }
    int object_index(const Obj& o) const;
    double obj_dim(const Obj& o) const { return o.rho ? cfg_.base.d : 1.0; }
    std::string obj_str(const Obj& o) const;
    Obj dual(const Obj& o) const;
    int grade_of_object(const Obj& o) const { return o.gamma; }
    double global_dimension() const;  // Lambda of this flavor

    // labels
    const std::vector<LabelInfo>& labels() const { return labels_; }
    int size() const { return int(labels_.size()); }
    const std::vector<int>& diagonal_labels() const { return diagonal_; }
    const std::vector<int>& corner_block(int xi, int eta) const;  // all (xi -> eta) labels
    const std::vector<int>& corner_algebra(int xi) const { return corner_block(xi, xi); }
    std::string label_str(int idx) const;

    // distinguished elements
    const SparseVec& unit() const { return unit_; }
    SparseVec unit_of(int xi) const;  // 1_xi
    const SparseVec& t_element() const { return t_; }

    // phi_Delta as a linear functional on basis coefficients
    cplx phi(const SparseVec& x) const;
    const std::vector<cplx>& phi_table() const { return phi_; }  // per label

    // generic structure operations (memoized where marked)
    SparseVec product_labels(int a, int b) const;          // memoized
    SparseVec product_labels_nocache(int a, int b) const;  // streaming path
    SparseVec adjoint_label(int a) const;                  // memoized
    SparseVec s0_label(int a) const;                       // memoized, diagonal only

    SparseVec product(const SparseVec& x, const SparseVec& y) const;
    SparseVec adjoint(const SparseVec& x) const;
    SparseVec s0(const SparseVec& x) const;  // diagonal support required

    // <x,y> = phi(y^* x)
    cplx inner(const SparseVec& x, const SparseVec& y) const;

    // fusion channels of zeta x zeta' with their summing isometries
    std::vector<Channel> fusion_channels(const Obj& zeta, const Obj& zeta2) const;

    // cache control (binary structure-constant cache)
    bool load_cache(const std::string& dir);
    bool save_cache(const std::string& dir) const;
    std::uint64_t content_hash() const { return hash_; }
    void set_cache_stats(long* hits, long* misses);

    // engine plumbing shared with the closed-form checks
    CuntzTerm apply_obj(const Obj& o, const CuntzTerm& x) const;
    SparseVec project(int xi, const Obj& nu, int eta, CuntzTerm Z, const char* what) const;
    SparseVec product_raw(int xi1, const Obj& zeta1, const Term& x1, double s1, int eta1,
                          int xi2, const Obj& zeta2, const Term& x2, double s2, int eta2) const;

  private:
    TubeAlgebra() = default;

    CategoryConfig cfg_;
    cuntz::Engine engine_;
    std::uint64_t hash_ = 0;
    bool lambda_active_ = false;

    std::vector<Obj> objects_;
    std::map<std::tuple<int, int, int>, int> obj_index_;
    std::vector<LabelInfo> labels_;
    std::vector<int> diagonal_;
    std::map<std::pair<int, int>, std::vector<int>> corner_blocks_;
    std::vector<int> empty_block_;
    // (xi, zeta-idx, eta) -> term -> (label, sign)
    std::unordered_map<std::uint64_t,
                       std::unordered_map<Term, std::pair<int, double>, cuntz::TermHash>>
        corner_lookup_;

    SparseVec unit_, t_;
    std::vector<cplx> phi_;

    mutable std::mutex memo_mutex_;
    mutable std::unordered_map<std::uint64_t, SparseVec> prod_memo_;
    mutable std::vector<std::unique_ptr<SparseVec>> adj_memo_, s0_memo_;
    mutable long cache_hits_ = 0, cache_misses_ = 0;

    struct Duality {
        CuntzTerm R, Rbar;
    };
    Duality duality(const Obj& o) const;

    Obj compose_inv(const Obj& u, const Obj& v) const;  // both invertible
    int theta_pow(int g, int k) const;

    void enumerate_objects();
    void enumerate_labels();
    void build_distinguished();
    CuntzTerm collapse_completeness(CuntzTerm leftover, int min_w, int min_v) const;
};

}  // namespace tubekit::tube

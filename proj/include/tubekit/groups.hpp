#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tubekit/numerics.hpp"

namespace tubekit::groups {

using num::cplx;

// Finite abelian group as a product of cyclic factors. Elements are flat
// indices 0..order-1; index = g_0 + n_0*g_1 + n_0*n_1*g_2 + ...
struct AbelianGroup {
    std::vector<int> factors;
    int order = 1;

    AbelianGroup() = default;
    explicit AbelianGroup(std::vector<int> f);

    int add(int a, int b) const { return add_tab_[a * order + b]; }
    int neg(int a) const { return neg_tab_[a]; }
    int sub(int a, int b) const { return add(a, neg(b)); }
    int times(int a, int k) const;  // k*a with k possibly negative

    std::vector<int> residues(int idx) const;
    int index(const std::vector<int>& r) const;
    std::string elem_str(int idx) const;  // "2" or "2,1"
    std::optional<int> parse_elem(const std::string& s) const;

    std::vector<int> two_torsion() const;  // { g : 2g = 0 }

    bool operator==(const AbelianGroup& o) const { return factors == o.factors; }

    static AbelianGroup parse(const std::string& spec);  // "Z4", "Z2xZ2", ...
    std::string spec() const;

  private:
    std::vector<int> add_tab_, neg_tab_;
};

// Character tau(g) = prod_f exp(2 pi i * l_f g_f / n_f), indexed by the dual
// label l (same index space as the group).
struct Character {
    const AbelianGroup* G = nullptr;
    int label = 0;
    std::vector<cplx> table;

    cplx operator()(int g) const { return table[g]; }
    Character conj() const;
    bool is_real() const;
};

std::vector<Character> characters(const AbelianGroup& G);

struct GroupAutomorphism {
    const AbelianGroup* G = nullptr;
    std::vector<int> image;  // image[g]
    int order = 1;           // smallest m with theta^m = id

    int apply(int g) const { return image[g]; }
    int apply_pow(int g, int k) const;  // theta^k(g), k may be negative
    static GroupAutomorphism make(const AbelianGroup& G, std::vector<int> image);
};

// Bookkeeping for a Z/2 de-equivariantization: z with 2z = 0, coset
// representatives G0 of {0,z}, projection pi and indicator w with
// pi(g) + w(g) z = g.
struct DeequivFrame {
    const AbelianGroup* G = nullptr;
    int z = 0;
    std::vector<int> g0;        // representative elements, ascending
    std::vector<int> pi;        // G index -> representative element
    std::vector<int> w;         // G index -> 0/1
    std::vector<int> g0_index;  // G index -> position in g0, or -1

    int m() const { return int(g0.size()); }
    static DeequivFrame make(const AbelianGroup& G, int z,
                             const std::vector<int>* g0_override = nullptr);
};

}  // namespace tubekit::groups

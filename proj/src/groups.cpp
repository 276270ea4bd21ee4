#include "tubekit/groups.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace tubekit::groups {

AbelianGroup::AbelianGroup(std::vector<int> f) : factors(std::move(f)) {
    order = 1;
    for (int n : factors) {
        if (n < 1) throw num::NumericsError("AbelianGroup: bad factor order");
        order *= n;
    }
    add_tab_.resize(order * order);
    neg_tab_.resize(order);
    for (int a = 0; a < order; ++a) {
        auto ra = residues(a);
        for (size_t f2 = 0; f2 < ra.size(); ++f2) ra[f2] = (factors[f2] - ra[f2]) % factors[f2];
        neg_tab_[a] = index(ra);
        for (int b = 0; b < order; ++b) {
            auto r = residues(a);
            auto rb = residues(b);
            for (size_t i = 0; i < r.size(); ++i) r[i] = (r[i] + rb[i]) % factors[i];
            add_tab_[a * order + b] = index(r);
        }
    }
}

int AbelianGroup::times(int a, int k) const {
    auto r = residues(a);
    for (size_t i = 0; i < r.size(); ++i) {
        long v = (long(r[i]) * long(k)) % factors[i];
        if (v < 0) v += factors[i];
        r[i] = int(v);
    }
    return index(r);
}

std::vector<int> AbelianGroup::residues(int idx) const {
    std::vector<int> r(factors.size());
    for (size_t i = 0; i < factors.size(); ++i) {
        r[i] = idx % factors[i];
        idx /= factors[i];
    }
    return r;
}

int AbelianGroup::index(const std::vector<int>& r) const {
    int idx = 0, mul = 1;
    for (size_t i = 0; i < factors.size(); ++i) {
        idx += (r[i] % factors[i]) * mul;
        mul *= factors[i];
    }
    return idx;
}

std::string AbelianGroup::elem_str(int idx) const {
    auto r = residues(idx);
    std::ostringstream os;
    for (size_t i = 0; i < r.size(); ++i) {
        if (i) os << ",";
        os << r[i];
    }
    return os.str();
}

std::optional<int> AbelianGroup::parse_elem(const std::string& s) const {
    std::vector<int> r;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            r.push_back(std::stoi(part));
        } catch (...) {
            return std::nullopt;
        }
    }
    if (r.size() != factors.size()) return std::nullopt;
    for (size_t i = 0; i < r.size(); ++i) r[i] = ((r[i] % factors[i]) + factors[i]) % factors[i];
    return index(r);
}

std::vector<int> AbelianGroup::two_torsion() const {
    std::vector<int> out;
    for (int g = 0; g < order; ++g)
        if (add(g, g) == 0) out.push_back(g);
    return out;
}

AbelianGroup AbelianGroup::parse(const std::string& spec) {
    std::vector<int> f;
    size_t i = 0;
    while (i < spec.size()) {
        if (spec[i] == 'x' || spec[i] == 'X') {
            ++i;
            continue;
        }
        if (spec[i] != 'Z' && spec[i] != 'z')
            throw num::NumericsError("bad group spec: " + spec);
        ++i;
        size_t j = i;
        while (j < spec.size() && std::isdigit((unsigned char)spec[j])) ++j;
        if (j == i) throw num::NumericsError("bad group spec: " + spec);
        f.push_back(std::stoi(spec.substr(i, j - i)));
        i = j;
    }
    if (f.empty()) throw num::NumericsError("bad group spec: " + spec);
    return AbelianGroup(f);
}

std::string AbelianGroup::spec() const {
    std::ostringstream os;
    for (size_t i = 0; i < factors.size(); ++i) {
        if (i) os << "x";
        os << "Z" << factors[i];
    }
    return os.str();
}

Character Character::conj() const {
    Character c{G, G->neg(label), {}};
    c.table.resize(table.size());
    for (size_t i = 0; i < table.size(); ++i) c.table[i] = std::conj(table[i]);
    return c;
}

bool Character::is_real() const {
    for (auto v : table)
        if (std::abs(v.imag()) > 1e-12) return false;
    return true;
}

std::vector<Character> characters(const AbelianGroup& G) {
    std::vector<Character> out;
    out.reserve(G.order);
    for (int l = 0; l < G.order; ++l) {
        Character c{&G, l, std::vector<cplx>(G.order)};
        auto lr = G.residues(l);
        for (int g = 0; g < G.order; ++g) {
            auto gr = G.residues(g);
            double frac = 0;
            for (size_t f = 0; f < G.factors.size(); ++f)
                frac += double(lr[f] * gr[f]) / double(G.factors[f]);
            c.table[g] = std::polar(1.0, 2.0 * std::numbers::pi * frac);
        }
        out.push_back(std::move(c));
    }
    return out;
}

int GroupAutomorphism::apply_pow(int g, int k) const {
    int kk = ((k % order) + order) % order;
    int r = g;
    for (int i = 0; i < kk; ++i) r = image[r];
    return r;
}

GroupAutomorphism GroupAutomorphism::make(const AbelianGroup& G, std::vector<int> image) {
    GroupAutomorphism th;
    th.G = &G;
    th.image = std::move(image);
    if ((int)th.image.size() != G.order)
        throw num::NumericsError("automorphism: image table size mismatch");
    std::vector<bool> seen(G.order, false);
    for (int g = 0; g < G.order; ++g) {
        if (th.image[g] < 0 || th.image[g] >= G.order || seen[th.image[g]])
            throw num::NumericsError("automorphism: not a bijection");
        seen[th.image[g]] = true;
    }
    for (int a = 0; a < G.order; ++a)
        for (int b = 0; b < G.order; ++b)
            if (th.image[G.add(a, b)] != G.add(th.image[a], th.image[b]))
                throw num::NumericsError("automorphism: not additive");
    // order
    std::vector<int> cur(th.image);
    th.order = 1;
    auto is_id = [&](const std::vector<int>& v) {
        for (int g = 0; g < G.order; ++g)
            if (v[g] != g) return false;
        return true;
    };
    while (!is_id(cur)) {
        std::vector<int> nxt(G.order);
        for (int g = 0; g < G.order; ++g) nxt[g] = th.image[cur[g]];
        cur = std::move(nxt);
        ++th.order;
        if (th.order > G.order + 1) throw num::NumericsError("automorphism: order overflow");
    }
    return th;
}

DeequivFrame DeequivFrame::make(const AbelianGroup& G, int z,
                                const std::vector<int>* g0_override) {
    if (G.add(z, z) != 0 || z == 0)
        throw num::NumericsError("deequiv frame: z must have order two");
    DeequivFrame fr;
    fr.G = &G;
    fr.z = z;
    fr.pi.assign(G.order, -1);
    fr.w.assign(G.order, 0);
    fr.g0_index.assign(G.order, -1);
    if (g0_override) {
        fr.g0 = *g0_override;
    } else {
        for (int g = 0; g < G.order; ++g) {
            int mate = G.add(g, z);
            if (g <= mate) fr.g0.push_back(g);
        }
    }
    std::sort(fr.g0.begin(), fr.g0.end());
    if ((int)fr.g0.size() * 2 != G.order)
        throw num::NumericsError("deequiv frame: G0 is not a transversal");
    for (size_t i = 0; i < fr.g0.size(); ++i) {
        int g = fr.g0[i];
        int mate = G.add(g, z);
        if (fr.g0_index[g] != -1 || fr.g0_index[mate] != -1)
            throw num::NumericsError("deequiv frame: G0 is not a transversal");
        fr.g0_index[g] = int(i);
        fr.pi[g] = g;
        fr.w[g] = 0;
        fr.pi[mate] = g;
        fr.w[mate] = 1;
    }
    return fr;
}

}  // namespace tubekit::groups

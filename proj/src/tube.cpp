#include "tubekit/tube.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tubekit::tube {

using groups::DeequivFrame;

void sparse_add(SparseVec& acc, const SparseVec& x, cplx scale) {
    if (x.empty() || scale == cplx(0)) return;
    SparseVec merged;
    merged.reserve(acc.size() + x.size());
    size_t i = 0, j = 0;
    while (i < acc.size() || j < x.size()) {
        if (j == x.size() || (i < acc.size() && acc[i].first < x[j].first)) {
            merged.push_back(acc[i++]);
        } else if (i == acc.size() || x[j].first < acc[i].first) {
            merged.emplace_back(x[j].first, x[j].second * scale);
            ++j;
        } else {
            cplx v = acc[i].second + x[j].second * scale;
            if (!num::is_zero(v)) merged.emplace_back(acc[i].first, v);
            ++i;
            ++j;
        }
    }
    acc = std::move(merged);
}

SparseVec sparse_scale(const SparseVec& x, cplx scale) {
    SparseVec out;
    out.reserve(x.size());
    for (auto& [i, c] : x) {
        cplx v = c * scale;
        if (!num::is_zero(v)) out.emplace_back(i, v);
    }
    return out;
}

SparseVec sparse_normalize(std::unordered_map<int, cplx>& acc, double tol) {
    SparseVec out;
    out.reserve(acc.size());
    for (auto& [i, c] : acc)
        if (!num::is_zero(c, tol)) out.emplace_back(i, c);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

double sparse_max_abs(const SparseVec& x) {
    double m = 0;
    for (auto& [i, c] : x) m = std::max(m, std::abs(c));
    return m;
}

SparseVec sparse_sub(const SparseVec& a, const SparseVec& b) {
    SparseVec out = a;
    sparse_add(out, b, -1.0);
    return out;
}

int TubeAlgebra::theta_pow(int g, int k) const {
    if (!cfg_.theta) return g;
    return cfg_.theta->apply_pow(g, k);
}

Obj TubeAlgebra::compose_inv(const Obj& u, const Obj& v) const {
    int m = cfg_.theta_order();
    Obj r;
    r.gamma = std::int16_t(((u.gamma + v.gamma) % m + m) % m);
    r.g = std::int16_t(cfg_.base.G.add(theta_pow(u.g, -v.gamma), v.g));
    r.rho = false;
    return r;
}

Obj TubeAlgebra::dual(const Obj& o) const {
    const auto& G = cfg_.base.G;
    int m = cfg_.theta_order();
    Obj r;
    if (cfg_.flavor == Flavor::Deequiv) {
        r.gamma = 0;
        r.g = std::int16_t(o.rho ? o.g : cfg_.frame->pi[G.neg(o.g)]);
        r.rho = o.rho;
        return r;
    }
    r.gamma = std::int16_t(((-o.gamma) % m + m) % m);
    int tg = theta_pow(o.g, o.gamma);
    r.g = std::int16_t(o.rho ? tg : G.neg(tg));
    r.rho = o.rho;
    return r;
}

double TubeAlgebra::global_dimension() const {
    const auto& dat = cfg_.base;
    switch (cfg_.flavor) {
        case Flavor::Plain:
            return dat.n * (1.0 + dat.d * dat.d);
        case Flavor::Graded:
            return cfg_.theta_order() * dat.n * (1.0 + dat.d * dat.d);
        case Flavor::Deequiv:
            return cfg_.frame->m() * (1.0 + dat.d * dat.d);
    }
    return 0;
}

int TubeAlgebra::object_index(const Obj& o) const {
    auto it = obj_index_.find({o.gamma, o.g, o.rho ? 1 : 0});
    if (it == obj_index_.end()) throw num::NumericsError("tube: unknown object");
    return it->second;
}

std::string TubeAlgebra::obj_str(const Obj& o) const {
    std::ostringstream os;
    if (o.gamma) os << "c^" << o.gamma << ".";
    os << (cfg_.flavor == Flavor::Deequiv ? "a~(" : "a(") << cfg_.base.G.elem_str(o.g)
       << ")";
    if (o.rho) os << "r";
    return os.str();
}

std::string TubeAlgebra::label_str(int idx) const {
    const LabelInfo& li = labels_[idx];
    std::ostringstream os;
    os << "(" << obj_str(objects_[li.xi]) << " " << obj_str(li.zeta) << " | "
       << CuntzTerm::of(li.term, li.sign).str(cfg_.base.G) << " | "
       << obj_str(objects_[li.eta]) << ")";
    return os.str();
}

void TubeAlgebra::enumerate_objects() {
    const auto& G = cfg_.base.G;
    int m = cfg_.theta_order();
    std::vector<int> gs;
    if (cfg_.flavor == Flavor::Deequiv)
        gs = cfg_.frame->g0;
    else
        for (int g = 0; g < G.order; ++g) gs.push_back(g);
    for (int rho = 0; rho <= 1; ++rho)
        for (int i = 0; i < (cfg_.flavor == Flavor::Graded ? m : 1); ++i)
            for (int g : gs) {
                Obj o{std::int16_t(i), std::int16_t(g), rho != 0};
                obj_index_[{o.gamma, o.g, rho}] = int(objects_.size());
                objects_.push_back(o);
            }
}

void TubeAlgebra::enumerate_labels() {
    const auto& G = cfg_.base.G;
    const int m = cfg_.flavor == Flavor::Graded ? cfg_.theta_order() : 1;

    auto push = [&](LabelKind kind, BasisLabel lbl, int xi, Obj zeta, int eta, Term term,
                    double sign) {
        lbl.kind = kind;
        LabelInfo li;
        li.label = lbl;
        li.xi = xi;
        li.eta = eta;
        li.zeta = zeta;
        li.term = term;
        li.sign = sign;
        int idx = int(labels_.size());
        labels_.push_back(li);
        corner_blocks_[{xi, eta}].push_back(idx);
        if (xi == eta) diagonal_.push_back(idx);
        std::uint64_t key =
            (std::uint64_t(xi) * objects_.size() + object_index(zeta)) * objects_.size() +
            eta;
        auto& slot = corner_lookup_[key][term];
        if (slot.second != 0.0) throw num::NumericsError("tube: duplicate basis term");
        slot = {idx, sign};
    };

    auto inv = [&](int i, int g) { return Obj{std::int16_t(i), std::int16_t(g), false}; };
    auto rho = [&](int i, int g) { return Obj{std::int16_t(i), std::int16_t(g), true}; };

    if (cfg_.flavor != Flavor::Deequiv) {
        auto th = [&](int g, int k) { return theta_pow(g, k); };
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < G.order; ++k) {
                        BasisLabel l;
                        l.i = std::int16_t(i);
                        l.j = std::int16_t(j);
                        l.g = std::int16_t(g);
                        l.k = std::int16_t(k);
                        int eta = G.sub(G.add(th(g, -j), k), th(k, -i));
                        push(LabelKind::GG, l, object_index(inv(i, g)), inv(j, k),
                             object_index(inv(i, eta)), Term::one(), 1.0);
                    }
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < G.order; ++k) {
                        BasisLabel l;
                        l.i = std::int16_t(i);
                        l.j = std::int16_t(j);
                        l.g = std::int16_t(g);
                        l.k = std::int16_t(k);
                        int eta = G.sub(G.sub(th(k, -i), th(g, -j)), k);
                        push(LabelKind::GRho, l, object_index(inv(i, g)), rho(j, k),
                             object_index(inv(i, eta)), Term::one(), 1.0);
                    }
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int h = 0; h < G.order; ++h)
                    for (int j = 0; j < m; ++j)
                        for (int k = 0; k < G.order; ++k) {
                            BasisLabel l;
                            l.i = std::int16_t(i);
                            l.j = std::int16_t(j);
                            l.g = std::int16_t(g);
                            l.h = std::int16_t(h);
                            l.k = std::int16_t(k);
                            int tdx = G.add(G.add(th(g, i), th(k, j)),
                                            th(G.sub(k, h), i + j));
                            Term t;
                            t.w.push(cuntz::letter_T(tdx));
                            push(LabelKind::GToRho, l, object_index(inv(i, g)), rho(j, k),
                                 object_index(rho(i, h)), t, 1.0);
                        }
        for (int i = 0; i < m; ++i)
            for (int h = 0; h < G.order; ++h)
                for (int g = 0; g < G.order; ++g)
                    for (int j = 0; j < m; ++j)
                        for (int k = 0; k < G.order; ++k) {
                            BasisLabel l;
                            l.i = std::int16_t(i);
                            l.j = std::int16_t(j);
                            l.g = std::int16_t(g);
                            l.h = std::int16_t(h);
                            l.k = std::int16_t(k);
                            int tdx = G.sub(G.add(th(h, i), th(k, j)),
                                            th(G.add(g, k), i + j));
                            Term t;
                            t.v.push(cuntz::letter_T(tdx));
                            push(LabelKind::RhoToG, l, object_index(rho(i, h)), rho(j, k),
                                 object_index(inv(i, g)), t, 1.0);
                        }
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int h = 0; h < G.order; ++h)
                    for (int j = 0; j < m; ++j)
                        for (int k = 0; k < G.order; ++k)
                            for (int mm = 0; mm < G.order; ++mm) {
                                BasisLabel l;
                                l.i = std::int16_t(i);
                                l.j = std::int16_t(j);
                                l.g = std::int16_t(g);
                                l.h = std::int16_t(h);
                                l.k = std::int16_t(k);
                                l.m = std::int16_t(mm);
                                int a = G.sub(G.add(mm, th(k, j)), th(h, i + j));
                                int b = G.sub(G.add(mm, th(g, i)), th(k, i + j));
                                Term t;
                                t.w.push(cuntz::letter_T(a));
                                t.v.push(cuntz::letter_T(b));
                                push(LabelKind::RhoRhoTT, l, object_index(rho(i, g)),
                                     rho(j, k), object_index(rho(i, h)), t, 1.0);
                            }
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < G.order; ++k) {
                        BasisLabel l;
                        l.i = std::int16_t(i);
                        l.j = std::int16_t(j);
                        l.g = std::int16_t(g);
                        l.k = std::int16_t(k);
                        int eta = G.sub(G.add(th(k, -i), k), th(g, -j));
                        Term t;
                        t.w.push(cuntz::kS);
                        t.v.push(cuntz::kS);
                        push(LabelKind::RhoRhoSS, l, object_index(rho(i, g)), rho(j, k),
                             object_index(rho(i, eta)), t, 1.0);
                    }
        for (int i = 0; i < m; ++i)
            for (int g = 0; g < G.order; ++g)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < G.order; ++k) {
                        BasisLabel l;
                        l.i = std::int16_t(i);
                        l.j = std::int16_t(j);
                        l.g = std::int16_t(g);
                        l.k = std::int16_t(k);
                        int eta = G.sub(G.sub(th(g, -j), k), th(k, -i));
                        push(LabelKind::RhoUnit, l, object_index(rho(i, g)), inv(j, k),
                             object_index(rho(i, eta)), Term::one(), 1.0);
                    }
        return;
    }

    // De-equivariantized flavor.
    const DeequivFrame& fr = *cfg_.frame;
    const int z = fr.z;
    auto epsz = [&](int g) { return engine_.epsz(g); };
    auto dec_of = [&](int e) { return std::uint8_t(lambda_active_ ? (e & 1) : 0); };
    for (int g : fr.g0)
        for (int k : fr.g0) {
            BasisLabel l;
            l.g = std::int16_t(g);
            l.k = std::int16_t(k);
            push(LabelKind::GG, l, object_index(inv(0, g)), inv(0, k),
                 object_index(inv(0, g)), Term::one(), 1.0);
        }
    for (int g : fr.g0)
        for (int k : fr.g0) {
            BasisLabel l;
            l.g = std::int16_t(g);
            l.k = std::int16_t(k);
            int wbit = fr.w[G.neg(g)];
            Term t;
            t.dec = dec_of(wbit);
            push(LabelKind::GRho, l, object_index(inv(0, g)), rho(0, k),
                 object_index(inv(0, fr.pi[G.neg(g)])), t, 1.0);
        }
    for (int g : fr.g0)
        for (int h : fr.g0)
            for (int k : fr.g0)
                for (int z0 = 0; z0 <= 1; ++z0) {
                    BasisLabel l;
                    l.g = std::int16_t(g);
                    l.h = std::int16_t(h);
                    l.k = std::int16_t(k);
                    l.z1 = std::int8_t(z0);
                    int tdx = G.add(G.sub(G.add(G.add(k, k), g), h), z0 ? z : 0);
                    Term t;
                    t.w.push(cuntz::letter_T(tdx));
                    t.dec = dec_of(z0);
                    push(LabelKind::GToRho, l, object_index(inv(0, g)), rho(0, k),
                         object_index(rho(0, h)), t, 1.0);
                }
    for (int h : fr.g0)
        for (int g : fr.g0)
            for (int k : fr.g0)
                for (int z0 = 0; z0 <= 1; ++z0) {
                    BasisLabel l;
                    l.g = std::int16_t(g);
                    l.h = std::int16_t(h);
                    l.k = std::int16_t(k);
                    l.z1 = std::int8_t(z0);
                    int tdx = G.add(G.sub(h, g), z0 ? z : 0);
                    Term t;
                    t.v.push(cuntz::letter_T(tdx));
                    t.dec = dec_of(z0);
                    double sign = (t.dec && epsz(tdx) < 0) ? -1.0 : 1.0;
                    push(LabelKind::RhoToG, l, object_index(rho(0, h)), rho(0, k),
                         object_index(inv(0, g)), t, sign);
                }
    for (int h1 : fr.g0)
        for (int h2 : fr.g0)
            for (int k : fr.g0)
                for (int g : fr.g0)
                    for (int z1 = 0; z1 <= 1; ++z1)
                        for (int z2 = 0; z2 <= 1; ++z2) {
                            BasisLabel l;
                            l.g = std::int16_t(h1);
                            l.h = std::int16_t(h2);
                            l.k = std::int16_t(k);
                            l.m = std::int16_t(g);
                            l.z1 = std::int8_t(z1);
                            l.z2 = std::int8_t(z2);
                            int a = G.add(G.add(G.sub(k, h2), g), z2 ? z : 0);
                            int b = G.add(G.add(G.sub(h1, k), g), z1 ? z : 0);
                            Term t;
                            t.w.push(cuntz::letter_T(a));
                            t.v.push(cuntz::letter_T(b));
                            t.dec = dec_of(z1 + z2);
                            double sign = (t.dec && epsz(b) < 0) ? -1.0 : 1.0;
                            push(LabelKind::RhoRhoTT, l, object_index(rho(0, h1)),
                                 rho(0, k), object_index(rho(0, h2)), t, sign);
                        }
    for (int h : fr.g0)
        for (int k : fr.g0) {
            BasisLabel l;
            l.g = std::int16_t(h);
            l.k = std::int16_t(k);
            int tgt = G.sub(G.add(k, k), h);
            Term t;
            t.w.push(cuntz::kS);
            t.v.push(cuntz::kS);
            t.dec = dec_of(fr.w[tgt]);
            push(LabelKind::RhoRhoSS, l, object_index(rho(0, h)), rho(0, k),
                 object_index(rho(0, fr.pi[tgt])), t, 1.0);
        }
    for (int h : fr.g0)
        for (int k : fr.g0) {
            BasisLabel l;
            l.g = std::int16_t(h);
            l.k = std::int16_t(k);
            int tgt = G.sub(h, G.add(k, k));
            Term t;
            t.dec = dec_of(fr.w[tgt]);
            push(LabelKind::RhoUnit, l, object_index(rho(0, h)), inv(0, k),
                 object_index(rho(0, fr.pi[tgt])), t, 1.0);
        }
}

TubeAlgebra::Duality TubeAlgebra::duality(const Obj& o) const {
    Duality du;
    if (o.rho) {
        du.R = CuntzTerm::of(Term::gen(cuntz::kS));
        du.Rbar = du.R;
        return du;
    }
    if (cfg_.flavor == Flavor::Deequiv) {
        const auto& fr = *cfg_.frame;
        int wbit = fr.w[cfg_.base.G.neg(o.g)];
        Term t = Term::lambda_pow(lambda_active_ ? wbit : 0);
        du.R = CuntzTerm::of(t);
        // The conjugate-side solution carries the sign that normalizes the
        // conjugate equations when eps_z is a nontrivial character.
        double s = (wbit && engine_.epsz(o.g) < 0) ? -1.0 : 1.0;
        du.Rbar = CuntzTerm::of(t, s);
        return du;
    }
    du.R = CuntzTerm::of(Term::one());
    du.Rbar = du.R;
    return du;
}

void TubeAlgebra::build_distinguished() {
    std::unordered_map<int, cplx> unit_acc, t_acc;
    phi_.assign(labels_.size(), cplx(0));
    for (int idx = 0; idx < int(labels_.size()); ++idx) {
        const auto& li = labels_[idx];
        bool zeta_unit = !li.zeta.rho && li.zeta.g == 0 && li.zeta.gamma == 0;
        if (zeta_unit && li.xi == li.eta) {
            // X is the scalar 1 on these labels
            unit_acc[idx] += 1.0 / li.sign;
            double dx = obj_dim(objects_[li.xi]);
            phi_[idx] = li.sign * dx * dx;
        }
    }
    unit_ = sparse_normalize(unit_acc);
    // t = sum_xi d(xi) (xi xibar | R Rbar^* | xibar xi)
    for (int xi = 0; xi < int(objects_.size()); ++xi) {
        const Obj& o = objects_[xi];
        Obj ob = dual(o);
        auto du = duality(o);
        CuntzTerm Z = engine_.mul(du.R, engine_.adjoint(du.Rbar));
        SparseVec part = project(xi, ob, xi, Z, "t-element");
        for (auto& [l, c] : part) t_acc[l] += obj_dim(o) * c;
    }
    t_ = sparse_normalize(t_acc);
}

cplx TubeAlgebra::phi(const SparseVec& x) const {
    cplx s = 0;
    for (auto& [i, c] : x) s += c * phi_[i];
    return s;
}

SparseVec TubeAlgebra::unit_of(int xi) const {
    SparseVec out;
    for (auto& [i, c] : unit_)
        if (labels_[i].xi == xi) out.emplace_back(i, c);
    return out;
}

const std::vector<int>& TubeAlgebra::corner_block(int xi, int eta) const {
    auto it = corner_blocks_.find({xi, eta});
    return it == corner_blocks_.end() ? empty_block_ : it->second;
}

CuntzTerm TubeAlgebra::apply_obj(const Obj& o, const CuntzTerm& x) const {
    CuntzTerm r = o.rho ? engine_.apply_rho(x) : x;
    if (o.g != 0) r = engine_.apply_alpha(o.g, r);
    if (o.gamma) r = engine_.apply_gamma(o.gamma, r);
    return r;
}

std::vector<Channel> TubeAlgebra::fusion_channels(const Obj& z1, const Obj& z2) const {
    const auto& G = cfg_.base.G;
    std::vector<Channel> out;
    if (cfg_.flavor != Flavor::Deequiv) {
        Obj u1{z1.gamma, z1.g, false};
        Obj u2{z2.gamma, std::int16_t(z1.rho ? G.neg(z2.g) : z2.g), false};
        Obj w = compose_inv(u1, u2);
        if (!z1.rho && !z2.rho) {
            out.push_back({w, {CuntzTerm::of(Term::one())}});
        } else if (z1.rho != z2.rho) {
            w.rho = true;
            out.push_back({w, {CuntzTerm::of(Term::one())}});
        } else {
            out.push_back({w, {CuntzTerm::of(Term::gen(cuntz::kS))}});
            for (int q = 0; q < G.order; ++q) {
                Obj nu{w.gamma, std::int16_t(q), true};
                CuntzTerm iso =
                    apply_obj(w, CuntzTerm::of(Term::gen(cuntz::letter_T(G.sub(q, w.g)))));
                out.push_back({nu, {iso}});
            }
        }
        return out;
    }
    const auto& fr = *cfg_.frame;
    auto lam = [&](int wbit) { return Term::lambda_pow(lambda_active_ ? wbit : 0); };
    if (!z1.rho && !z2.rho) {
        int c = G.add(z1.g, z2.g);
        Obj nu{0, std::int16_t(fr.pi[c]), false};
        out.push_back({nu, {CuntzTerm::of(lam(fr.w[c]))}});
    } else if (z1.rho != z2.rho) {
        int c = z1.rho ? G.sub(z1.g, z2.g) : G.add(z1.g, z2.g);
        Obj nu{0, std::int16_t(fr.pi[c]), true};
        out.push_back({nu, {CuntzTerm::of(lam(fr.w[c]))}});
    } else {
        int c = G.sub(z1.g, z2.g);
        Term s;
        s.w.push(cuntz::kS);
        s.dec = lam(fr.w[c]).dec;
        out.push_back({Obj{0, std::int16_t(fr.pi[c]), false}, {CuntzTerm::of(s)}});
        for (int h : fr.g0) {
            Obj nu{0, std::int16_t(h), true};
            Term i1 = Term::gen(cuntz::letter_T(G.add(h, c)));
            Term i2 = Term::gen(cuntz::letter_T(G.add(G.add(h, c), fr.z)));
            i2.dec = lam(1).dec;
            out.push_back({nu, {CuntzTerm::of(i1), CuntzTerm::of(i2)}});
        }
    }
    return out;
}

CuntzTerm TubeAlgebra::collapse_completeness(CuntzTerm leftover, int min_w,
                                              int min_v) const {
    // A sum over all generator extensions (W x, V x) with matching
    // coefficients is the expanded form of (W, V); contract such families.
    // Only terms strictly longer than the corner's basis shapes are touched,
    // so collapsing cannot undo the expansion pass.
    const int n = cfg_.base.n;
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_map<Term, std::vector<std::pair<cuntz::Letter, cplx>>,
                           cuntz::TermHash>
            buckets;
        for (auto& [t, c] : leftover.terms) {
            if (t.w.len == 0 || t.v.len == 0) continue;
            if (int(t.w.len) <= min_w || int(t.v.len) <= min_v) continue;
            cuntz::Letter lw = t.w.a[t.w.len - 1], lv = t.v.a[t.v.len - 1];
            if (lw != lv) continue;
            Term parent = t;
            --parent.w.len;
            --parent.v.len;
            buckets[parent].emplace_back(lw, c);
        }
        for (auto& [parent, kids] : buckets) {
            if (int(kids.size()) != n + 1) continue;
            // coefficient of the contracted parent, adjusted for the lambda
            // sign each extension letter picks up crossing the decoration
            cplx ref = 0;
            bool ok = true;
            std::vector<cplx> adjusted;
            for (auto& [letter, c] : kids) {
                double s = 1.0;
                if (parent.dec && cuntz::is_T(letter)) s = engine_.epsz(letter);
                adjusted.push_back(c * s);
            }
            ref = adjusted[0];
            for (auto& c : adjusted)
                if (std::abs(c - ref) > num::Tol::chop * 10) ok = false;
            if (!ok || num::is_zero(ref)) continue;
            for (auto& [letter, c] : kids) {
                Term child = parent;
                child.w.push(letter);
                child.v.push(letter);
                leftover.terms.erase(child);
            }
            leftover.add(parent, ref);
            changed = true;
        }
    }
    return leftover;
}

SparseVec TubeAlgebra::project(int xi, const Obj& nu, int eta, CuntzTerm Z,
                               const char* what) const {
    Z.chop();
    std::uint64_t key =
        (std::uint64_t(xi) * objects_.size() + object_index(nu)) * objects_.size() + eta;
    auto mapit = corner_lookup_.find(key);
    std::unordered_map<int, cplx> acc;
    CuntzTerm leftover;
    for (auto& [t, c] : Z.terms) {
        if (mapit != corner_lookup_.end()) {
            auto it = mapit->second.find(t);
            if (it != mapit->second.end()) {
                acc[it->second.first] += c * it->second.second;
                continue;
            }
        }
        leftover.add(t, c);
    }
    if (!leftover.is_zero(num::Tol::decomp)) {
        // Longest basis word shape in this corner, for the expansion bound.
        int maxw = 0, maxv = 0;
        if (mapit != corner_lookup_.end())
            for (auto& [bt, slot] : mapit->second) {
                maxw = std::max(maxw, int(bt.w.len));
                maxv = std::max(maxv, int(bt.v.len));
            }
        auto match_pass = [&]() {
            for (auto it = leftover.terms.begin(); it != leftover.terms.end();) {
                bool matched = false;
                if (mapit != corner_lookup_.end()) {
                    auto bit = mapit->second.find(it->first);
                    if (bit != mapit->second.end()) {
                        acc[bit->second.first] += it->second * bit->second.second;
                        matched = true;
                    }
                }
                it = matched ? leftover.terms.erase(it) : std::next(it);
            }
        };
        for (int pass = 0; pass < 8 && !leftover.is_zero(num::Tol::decomp); ++pass) {
            leftover = collapse_completeness(std::move(leftover), maxw, maxv);
            match_pass();
            // Expand the completeness relation on terms that are strictly
            // shorter than the corner's basis shapes, one letter at a time.
            CuntzTerm expanded;
            bool did_expand = false;
            for (auto& [t, c] : leftover.terms) {
                if (int(t.w.len) < maxw && int(t.v.len) < maxv &&
                    !num::is_zero(c, num::Tol::decomp)) {
                    did_expand = true;
                    for (int x = 0; x <= cfg_.base.n; ++x) {
                        cuntz::Letter l =
                            x == cfg_.base.n ? cuntz::kS : cuntz::letter_T(x);
                        Term child = t;
                        child.w.push(l);
                        child.v.push(l);
                        double s = 1.0;
                        if (t.dec && cuntz::is_T(l)) s = engine_.epsz(l);
                        expanded.add(child, c * s);
                    }
                } else {
                    expanded.add(t, c);
                }
            }
            leftover = std::move(expanded);
            if (!did_expand) break;
        }
        if (!leftover.is_zero(num::Tol::decomp)) {
            std::ostringstream os;
            os << "tube: projection residual " << leftover.max_abs() << " in " << what
               << " on corner (" << obj_str(objects_[xi]) << ", " << obj_str(nu) << ", "
               << obj_str(objects_[eta]) << "): " << leftover.str(cfg_.base.G);
            throw num::NumericsError(os.str());
        }
    }
    return sparse_normalize(acc);
}

SparseVec TubeAlgebra::product_raw(int xi1, const Obj& zeta1, const Term& x1, double s1,
                                   int eta1, int xi2, const Obj& zeta2, const Term& x2,
                                   double s2, int eta2) const {
    if (eta1 != xi2) return {};
    const Obj& xiobj = objects_[xi1];
    CuntzTerm X = CuntzTerm::of(x1, s1);
    CuntzTerm Y = apply_obj(zeta1, CuntzTerm::of(x2, s2));
    CuntzTerm YX = engine_.mul(Y, X);
    SparseVec out;
    for (const Channel& ch : fusion_channels(zeta1, zeta2)) {
        CuntzTerm Z;
        for (const CuntzTerm& iso : ch.isometries) {
            CuntzTerm mid = engine_.mul(engine_.adjoint(iso), YX);
            mid = engine_.mul(mid, apply_obj(xiobj, iso));
            Z += mid;
        }
        Z.chop();
        if (Z.terms.empty()) continue;
        SparseVec part = project(xi1, ch.nu, eta2, std::move(Z), "product");
        sparse_add(out, part, 1.0);
    }
    return out;
}

SparseVec TubeAlgebra::product_labels_nocache(int a, int b) const {
    const LabelInfo& la = labels_[a];
    const LabelInfo& lb = labels_[b];
    return product_raw(la.xi, la.zeta, la.term, la.sign, la.eta, lb.xi, lb.zeta, lb.term,
                       lb.sign, lb.eta);
}

SparseVec TubeAlgebra::product_labels(int a, int b) const {
    std::uint64_t key = std::uint64_t(a) * labels_.size() + b;
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = prod_memo_.find(key);
        if (it != prod_memo_.end()) {
            ++cache_hits_;
            return it->second;
        }
    }
    SparseVec r = product_labels_nocache(a, b);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    ++cache_misses_;
    prod_memo_.emplace(key, r);
    return r;
}

SparseVec TubeAlgebra::adjoint_label(int a) const {
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        if (adj_memo_[a]) return *adj_memo_[a];
    }
    const LabelInfo& li = labels_[a];
    const Obj& zeta = li.zeta;
    Obj zbar = dual(zeta);
    auto du = duality(zeta);
    // d(zeta) (eta zbar | rho_zbar(rho_xi(Rbar^*) X^*) R | zbar xi)
    CuntzTerm inner = engine_.mul(apply_obj(objects_[li.xi], engine_.adjoint(du.Rbar)),
                                  engine_.adjoint(CuntzTerm::of(li.term, li.sign)));
    CuntzTerm Z = engine_.mul(apply_obj(zbar, inner), du.R);
    Z *= obj_dim(zeta);
    SparseVec out = project(li.eta, zbar, li.xi, std::move(Z), "adjoint");
    std::lock_guard<std::mutex> lock(memo_mutex_);
    if (!adj_memo_[a]) adj_memo_[a] = std::make_unique<SparseVec>(out);
    return out;
}

SparseVec TubeAlgebra::s0_label(int a) const {
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        if (s0_memo_[a]) return *s0_memo_[a];
    }
    const LabelInfo& li = labels_[a];
    if (li.xi != li.eta) throw num::NumericsError("s0: off-diagonal label");
    const Obj& eta = li.zeta;  // the annular object of the label
    Obj ebar = dual(eta);
    auto du = duality(eta);
    // (ebar xi | R^* rho_ebar(X rho_xi(Rbar)) | xi ebar)
    CuntzTerm inner = engine_.mul(CuntzTerm::of(li.term, li.sign),
                                  apply_obj(objects_[li.xi], du.Rbar));
    CuntzTerm Z = engine_.mul(engine_.adjoint(du.R), apply_obj(ebar, inner));
    SparseVec out =
        project(object_index(ebar), objects_[li.xi], object_index(ebar), std::move(Z), "s0");
    std::lock_guard<std::mutex> lock(memo_mutex_);
    if (!s0_memo_[a]) s0_memo_[a] = std::make_unique<SparseVec>(out);
    return out;
}

SparseVec TubeAlgebra::product(const SparseVec& x, const SparseVec& y) const {
    std::unordered_map<int, cplx> acc;
    for (auto& [a, ca] : x)
        for (auto& [b, cb] : y) {
            if (labels_[a].eta != labels_[b].xi) continue;
            for (auto& [l, c] : product_labels(a, b)) acc[l] += ca * cb * c;
        }
    return sparse_normalize(acc);
}

SparseVec TubeAlgebra::adjoint(const SparseVec& x) const {
    std::unordered_map<int, cplx> acc;
    for (auto& [a, ca] : x)
        for (auto& [l, c] : adjoint_label(a)) acc[l] += std::conj(ca) * c;
    return sparse_normalize(acc);
}

SparseVec TubeAlgebra::s0(const SparseVec& x) const {
    std::unordered_map<int, cplx> acc;
    for (auto& [a, ca] : x)
        for (auto& [l, c] : s0_label(a)) acc[l] += ca * c;
    return sparse_normalize(acc);
}

cplx TubeAlgebra::inner(const SparseVec& x, const SparseVec& y) const {
    return phi(product(adjoint(y), x));
}

std::unique_ptr<TubeAlgebra> TubeAlgebra::build(const CategoryConfig& cfg) {
    std::unique_ptr<TubeAlgebra> t(new TubeAlgebra());
    t->cfg_ = cfg;
    t->engine_ = cuntz::Engine::make(t->cfg_);
    t->lambda_active_ = t->engine_.lambda_active;
    t->hash_ = ghdata::content_hash(t->cfg_);
    t->enumerate_objects();
    t->enumerate_labels();
    t->adj_memo_.resize(t->labels_.size());
    t->s0_memo_.resize(t->labels_.size());
    t->build_distinguished();
    return t;
}

void TubeAlgebra::set_cache_stats(long* hits, long* misses) {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    if (hits) *hits = cache_hits_;
    if (misses) *misses = cache_misses_;
}

namespace {
void write_u64(std::ostream& os, std::uint64_t v) { os.write((const char*)&v, 8); }
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read((char*)&v, 8);
    return v;
}
void write_sparse(std::ostream& os, const SparseVec& v) {
    write_u64(os, v.size());
    for (auto& [i, c] : v) {
        write_u64(os, std::uint64_t(i));
        double re = c.real(), im = c.imag();
        os.write((const char*)&re, 8);
        os.write((const char*)&im, 8);
    }
}
SparseVec read_sparse(std::istream& is) {
    SparseVec v(read_u64(is));
    for (auto& [i, c] : v) {
        i = int(read_u64(is));
        double re, im;
        is.read((char*)&re, 8);
        is.read((char*)&im, 8);
        c = {re, im};
    }
    return v;
}
constexpr std::uint64_t kCacheMagic = 0x54424b4331ull;  // "TBKC1"
}  // namespace

bool TubeAlgebra::save_cache(const std::string& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.tkc", (unsigned long long)hash_);
    std::ofstream os(std::filesystem::path(dir) / name, std::ios::binary);
    if (!os) return false;
    std::lock_guard<std::mutex> lock(memo_mutex_);
    write_u64(os, kCacheMagic);
    write_u64(os, hash_);
    write_u64(os, labels_.size());
    write_u64(os, prod_memo_.size());
    for (auto& [key, v] : prod_memo_) {
        write_u64(os, key);
        write_sparse(os, v);
    }
    auto write_table = [&](const std::vector<std::unique_ptr<SparseVec>>& tab) {
        std::uint64_t cnt = 0;
        for (auto& p : tab)
            if (p) ++cnt;
        write_u64(os, cnt);
        for (size_t i = 0; i < tab.size(); ++i)
            if (tab[i]) {
                write_u64(os, i);
                write_sparse(os, *tab[i]);
            }
    };
    write_table(adj_memo_);
    write_table(s0_memo_);
    return bool(os);
}

bool TubeAlgebra::load_cache(const std::string& dir) {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.tkc", (unsigned long long)hash_);
    std::ifstream is(std::filesystem::path(dir) / name, std::ios::binary);
    if (!is) return false;
    if (read_u64(is) != kCacheMagic) return false;
    if (read_u64(is) != hash_) return false;
    if (read_u64(is) != labels_.size()) return false;
    std::lock_guard<std::mutex> lock(memo_mutex_);
    std::uint64_t np = read_u64(is);
    for (std::uint64_t i = 0; i < np && is; ++i) {
        std::uint64_t key = read_u64(is);
        prod_memo_[key] = read_sparse(is);
    }
    auto read_table = [&](std::vector<std::unique_ptr<SparseVec>>& tab) {
        std::uint64_t cnt = read_u64(is);
        for (std::uint64_t i = 0; i < cnt && is; ++i) {
            std::uint64_t idx = read_u64(is);
            tab[idx] = std::make_unique<SparseVec>(read_sparse(is));
        }
    };
    read_table(adj_memo_);
    read_table(s0_memo_);
    return bool(is) || is.eof();
}

}  // namespace tubekit::tube

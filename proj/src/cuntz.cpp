#include "tubekit/cuntz.hpp"

#include <cassert>
#include <cmath>
#include <random>
#include <sstream>

namespace tubekit::cuntz {

void Word::push(Letter l) {
    if (len >= kMaxWordLen) throw num::NumericsError("cuntz: word overflow");
    a[len++] = l;
}

void Word::append(const Word& w, int from) {
    for (int i = from; i < w.len; ++i) push(w.a[i]);
}

void CuntzTerm::add(const Term& t, cplx c) {
    if (c == cplx(0)) return;
    auto [it, fresh] = terms.try_emplace(t, c);
    if (!fresh) {
        it->second += c;
        if (num::is_zero(it->second)) terms.erase(it);
    }
}

CuntzTerm& CuntzTerm::operator+=(const CuntzTerm& o) {
    for (auto& [t, c] : o.terms) add(t, c);
    return *this;
}

CuntzTerm& CuntzTerm::operator*=(cplx c) {
    if (c == cplx(0)) {
        terms.clear();
        return *this;
    }
    for (auto& [t, v] : terms) v *= c;
    return *this;
}

void CuntzTerm::chop(double tol) {
    for (auto it = terms.begin(); it != terms.end();)
        it = num::is_zero(it->second, tol) ? terms.erase(it) : std::next(it);
}

bool CuntzTerm::is_zero(double tol) const {
    for (auto& [t, c] : terms)
        if (!num::is_zero(c, tol)) return false;
    return true;
}

double CuntzTerm::max_abs() const {
    double m = 0;
    for (auto& [t, c] : terms) m = std::max(m, std::abs(c));
    return m;
}

std::string CuntzTerm::str(const groups::AbelianGroup& G) const {
    std::ostringstream os;
    auto word_str = [&](const Word& w) {
        std::string s;
        for (int i = 0; i < w.len; ++i) {
            if (is_T(w.a[i]))
                s += "T(" + G.elem_str(w.a[i]) + ")";
            else
                s += "S";
        }
        return s;
    };
    bool first = true;
    for (auto& [t, c] : terms) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.real() << (c.imag() >= 0 ? "+" : "") << c.imag() << "i)";
        os << word_str(t.w);
        if (t.dec) os << "h";
        if (t.v.len) os << "[" << word_str(t.v) << "]*";
    }
    if (first) os << "0";
    return os.str();
}

double dist(const CuntzTerm& a, const CuntzTerm& b) {
    CuntzTerm d = a;
    for (auto& [t, c] : b.terms) d.add(t, -c);
    return d.max_abs();
}

Engine Engine::make(const ghdata::CategoryConfig& cfg) {
    Engine e;
    e.dat = &cfg.base;
    if (cfg.flavor == ghdata::Flavor::Graded) e.theta = &*cfg.theta;
    if (cfg.flavor == ghdata::Flavor::Deequiv) {
        e.z = cfg.frame->z;
        e.eps_z.resize(cfg.base.n);
        bool trivial = true;
        for (int g = 0; g < cfg.base.n; ++g) {
            e.eps_z[g] = cfg.base.eps_(e.z, g);
            trivial = trivial && e.eps_z[g] == 1;
        }
        // When eps_z is identically 1 the crossed-product unitary acts
        // trivially on the Cuntz algebra and can be identified with 1.
        e.lambda_active = !trivial;
    }
    e.rho_T(0);  // build the letter-image cache before any concurrent use
    return e;
}

namespace {
// Sign picked up moving lambda^e across a core word: each T_g contributes
// eps_z(g)^e, S contributes +1.
int lambda_cross_sign(const std::vector<int>& eps_z, int e, const Word& w, int from) {
    if (!e || eps_z.empty()) return 1;
    int s = 1;
    for (int i = from; i < w.len; ++i)
        if (is_T(w.a[i])) s *= eps_z[w.a[i]];
    return s;
}
}  // namespace

void Engine::mul_term(const Term& t1, cplx c1, const Term& t2, cplx c2, CuntzTerm& out) const {
    // element: W1 d1 V1* W2 d2 V2*
    int i = 0;
    const int nv = t1.v.len, nw = t2.w.len;
    while (i < nv && i < nw) {
        if (t1.v.a[i] != t2.w.a[i]) return;  // orthogonal isometries
        ++i;
    }
    cplx c = c1 * c2;
    Term r;
    r.dec = std::uint8_t((t1.dec + t2.dec) & 1);
    if (i == nv) {
        // V1 fully contracted; remainder of W2 crosses d1 to the left word.
        r.w = t1.w;
        if (t1.dec) c *= double(lambda_cross_sign(eps_z, t1.dec, t2.w, i));
        r.w.append(t2.w, i);
        r.v = t2.v;
    } else {
        // W2 fully contracted; remainder of V1 crosses d2.
        r.w = t1.w;
        if (t2.dec) c *= double(lambda_cross_sign(eps_z, t2.dec, t1.v, i));
        r.v = t2.v;
        r.v.append(t1.v, i);
    }
    if (r.w.len > kWordLenGuard || r.v.len > kWordLenGuard)
        throw num::NumericsError("cuntz: rewriting runaway (word length > guard)");
    out.add(r, c);
}

CuntzTerm Engine::mul(const CuntzTerm& x, const CuntzTerm& y) const {
    CuntzTerm out;
    for (auto& [t1, c1] : x.terms)
        for (auto& [t2, c2] : y.terms) mul_term(t1, c1, t2, c2, out);
    out.chop();
    return out;
}

CuntzTerm Engine::mul(std::initializer_list<const CuntzTerm*> factors) const {
    CuntzTerm acc = CuntzTerm::of(Term::one());
    for (const CuntzTerm* f : factors) acc = mul(acc, *f);
    return acc;
}

Term Engine::adjoint_term(const Term& t) {
    return Term{t.v, t.w, t.dec};  // lambda is self-adjoint of order two
}

CuntzTerm Engine::adjoint(const CuntzTerm& x) const {
    CuntzTerm out;
    for (auto& [t, c] : x.terms) out.add(adjoint_term(t), std::conj(c));
    return out;
}

CuntzTerm Engine::apply_alpha(int g, const CuntzTerm& x) const {
    const auto& G = dat->G;
    int g2 = G.add(g, g);
    CuntzTerm out;
    for (auto& [t, c] : x.terms) {
        Term r = t;
        double sign = 1;
        for (int i = 0; i < r.w.len; ++i)
            if (is_T(r.w.a[i])) {
                sign *= eps(g, r.w.a[i]);
                r.w.a[i] = Letter(G.add(r.w.a[i], g2));
            }
        for (int i = 0; i < r.v.len; ++i)
            if (is_T(r.v.a[i])) {
                sign *= eps(g, r.v.a[i]);
                r.v.a[i] = Letter(G.add(r.v.a[i], g2));
            }
        cplx cc = c * sign;
        if (r.dec) cc *= double(epsz(g));  // alpha_g(lambda) = eps_z(g) lambda
        out.add(r, cc);
    }
    return out;
}

CuntzTerm Engine::apply_gamma(int k, const CuntzTerm& x) const {
    if (!theta) throw num::NumericsError("apply_gamma: engine has no automorphism");
    CuntzTerm out;
    for (auto& [t, c] : x.terms) {
        Term r = t;
        for (int i = 0; i < r.w.len; ++i)
            if (is_T(r.w.a[i])) r.w.a[i] = Letter(theta->apply_pow(r.w.a[i], k));
        for (int i = 0; i < r.v.len; ++i)
            if (is_T(r.v.a[i])) r.v.a[i] = Letter(theta->apply_pow(r.v.a[i], k));
        out.add(r, c);
    }
    return out;
}

const CuntzTerm& Engine::rho_S() const {
    if (rho_letter_cache_.empty()) rho_T(0);  // builds the cache
    return rho_letter_cache_[dat->n];
}

const CuntzTerm& Engine::rho_T(int g) const {
    if (rho_letter_cache_.empty()) {
        const auto& G = dat->G;
        const int n = dat->n;
        const double d = dat->d, sd = std::sqrt(dat->d);
        rho_letter_cache_.resize(n + 1);
        for (int gg = 0; gg < n; ++gg) {
            // rho(T_g) = eps_g(-g) [ eta_{-g} T_{-g} S S^*
            //                        + conj(eta_{-g})/sqrt(d) S T_{-g}^*
            //                        + sum_{h,k} A_{-g}(h,k) T_{h-g} T_{h+k-g} T_{k-g}^* ]
            CuntzTerm r;
            int mg = G.neg(gg);
            double e = eps(gg, mg);
            cplx etam = dat->eta[mg];
            Term t1;
            t1.w.push(letter_T(mg));
            t1.w.push(kS);
            t1.v.push(kS);
            r.add(t1, e * etam);
            Term t2;
            t2.w.push(kS);
            t2.v.push(letter_T(mg));
            r.add(t2, e * std::conj(etam) / sd);
            for (int h = 0; h < n; ++h)
                for (int k = 0; k < n; ++k) {
                    Term t3;
                    t3.w.push(letter_T(G.sub(h, gg)));
                    t3.w.push(letter_T(G.sub(G.add(h, k), gg)));
                    t3.v.push(letter_T(G.sub(k, gg)));
                    r.add(t3, e * dat->A_(mg, h, k));
                }
            r.chop();
            rho_letter_cache_[gg] = std::move(r);
        }
        // rho(S) = (1/d) S + (1/sqrt d) sum_g T_g T_g
        CuntzTerm rs;
        rs.add(Term::gen(kS), 1.0 / d);
        for (int gg = 0; gg < n; ++gg) {
            Term t;
            t.w.push(letter_T(gg));
            t.w.push(letter_T(gg));
            rs.add(t, 1.0 / sd);
        }
        rho_letter_cache_[n] = std::move(rs);
    }
    return rho_letter_cache_[g];
}

CuntzTerm Engine::apply_rho_word(const Word& w) const {
    CuntzTerm acc = CuntzTerm::of(Term::one());
    for (int i = 0; i < w.len; ++i) {
        const CuntzTerm& img = is_T(w.a[i]) ? rho_T(w.a[i]) : rho_S();
        acc = mul(acc, img);
    }
    return acc;
}

CuntzTerm Engine::apply_rho(const CuntzTerm& x) const {
    CuntzTerm out;
    for (auto& [t, c] : x.terms) {
        CuntzTerm lhs = apply_rho_word(t.w);
        if (t.dec) lhs = mul(lhs, CuntzTerm::of(Term::lambda_pow(t.dec)));  // rho(lambda) = lambda
        CuntzTerm rhs = adjoint(apply_rho_word(t.v));
        CuntzTerm prod = mul(lhs, rhs);
        prod *= c;
        out += prod;
    }
    out.chop();
    return out;
}

std::string IdentityReport::summary() const {
    std::ostringstream os;
    for (auto& f : families)
        os << f.name << ": max residual " << f.max_residual << " over " << f.cases
           << " cases\n";
    os << "overall max residual " << max_residual;
    return os.str();
}

IdentityReport verify_cuntz_identities(const ghdata::GHData& dat, long sample_cap,
                                       std::uint64_t seed) {
    ghdata::CategoryConfig cfg;
    cfg.flavor = ghdata::Flavor::Plain;
    cfg.base = dat;
    Engine E = Engine::make(cfg);
    const auto& G = dat.G;
    const int n = dat.n;
    const double d = dat.d;

    auto T = [&](int a) { return CuntzTerm::of(Term::gen(letter_T(a))); };
    auto Ts = [&](int a) { return CuntzTerm::of(Term::gen_adj(letter_T(a))); };
    CuntzTerm S = CuntzTerm::of(Term::gen(kS));
    CuntzTerm Ss = CuntzTerm::of(Term::gen_adj(kS));
    CuntzTerm SSs = E.mul(S, Ss);
    auto TT = [&](int a, int b) { return E.mul(T(a), Ts(b)); };
    auto one = [&](cplx c) { return CuntzTerm::of(Term::one(), c); };
    auto rho = [&](const CuntzTerm& x) { return E.apply_rho(x); };
    auto eps = [&](int g, int h) { return double(dat.eps_(g, h)); };
    auto A = [&](int g, int h, int k) { return dat.A_(g, h, k); };
    auto neg = [&](int a) { return G.neg(a); };
    auto add = [&](int a, int b) { return G.add(a, b); };
    auto sub = [&](int a, int b) { return G.sub(a, b); };

    IdentityReport rep;
    std::mt19937_64 rng(seed);

    // Sweep over `arity` free group arguments, evaluating lhs-vs-rhs builders.
    auto run = [&](const std::string& name, int arity,
                   auto&& eval /* (args)->double residual */) {
        IdentityReport::Family fam{name, 0, 0};
        long total = 1;
        for (int i = 0; i < arity; ++i) total *= n;
        bool sampling = sample_cap > 0 && total > sample_cap;
        long runs = sampling ? sample_cap : total;
        std::vector<int> args(arity, 0);
        for (long it = 0; it < runs; ++it) {
            if (sampling) {
                for (int i = 0; i < arity; ++i) args[i] = int(rng() % n);
            } else {
                long v = it;
                for (int i = 0; i < arity; ++i) {
                    args[i] = int(v % n);
                    v /= n;
                }
            }
            fam.max_residual = std::max(fam.max_residual, eval(args));
            ++fam.cases;
        }
        rep.families.push_back(fam);
        rep.max_residual = std::max(rep.max_residual, fam.max_residual);
    };

    run("S* r(T_a) S", 1, [&](const std::vector<int>& q) {
        auto r1 = rho(T(q[0]));
        auto lhs = E.mul({&Ss, &r1, &S});
        return lhs.max_abs();
    });
    run("S* r(T_a) T_b* r(S)", 2, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1];
        auto r1 = rho(T(a)), rs = rho(S);
        auto tb = Ts(b);
        auto lhs = E.mul({&Ss, &r1, &tb, &rs});
        auto rhs = one((a == neg(b) ? eps(a, neg(a)) / d : 0.0));
        return dist(lhs, rhs);
    });
    run("S* r(T_a T_b*) SS* r(S)", 2, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1];
        auto r1 = rho(TT(a, b)), rs = rho(S);
        auto lhs = E.mul({&Ss, &r1, &SSs, &rs});
        auto rhs = one((a == b ? eps(a, neg(a)) * eps(b, neg(b)) / (d * d) : 0.0));
        return dist(lhs, rhs);
    });
    run("S* r(SS*) SS* r(S)", 0, [&](const std::vector<int>&) {
        auto r1 = rho(SSs), rs = rho(S);
        auto lhs = E.mul({&Ss, &r1, &SSs, &rs});
        return dist(lhs, one(1.0 / (d * d * d)));
    });
    run("S* r(SS*) T_a T_b* r(S)", 2, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1];
        auto r1 = rho(SSs), rs = rho(S);
        auto tt = TT(a, b);
        auto lhs = E.mul({&Ss, &r1, &tt, &rs});
        return dist(lhs, one(a == b ? 1.0 / (d * d) : 0.0));
    });
    run("T_a* r(SS*) SS* r(T_b)", 2, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1];
        auto r1 = rho(SSs), r2 = rho(T(b));
        auto ta = Ts(a);
        auto lhs = E.mul({&ta, &r1, &SSs, &r2});
        auto rhs = TT(a, neg(b));
        rhs *= eps(b, neg(b)) / (d * d);
        return dist(lhs, rhs);
    });
    run("T_a* r(SS*) T_b T_c* r(T_e)", 4, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1], c = q[2], e = q[3];
        auto r1 = rho(SSs), r2 = rho(T(e));
        auto ta = Ts(a);
        auto tt = TT(b, c);
        auto lhs = E.mul({&ta, &r1, &tt, &r2});
        auto rhs = TT(a, sub(sub(b, c), e));
        rhs *= eps(e, neg(e)) / d * A(neg(e), add(c, e), sub(b, c));
        return dist(lhs, rhs);
    });
    run("T_a* r(T_b) T_c", 3, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1], c = q[2];
        auto r1 = rho(T(b));
        auto ta = Ts(a), tc = T(c);
        auto lhs = E.mul({&ta, &r1, &tc});
        auto rhs = T(add(add(a, b), c));
        rhs *= eps(b, neg(b)) * A(neg(b), add(b, a), add(b, c));
        return dist(lhs, rhs);
    });
    run("S* r(T_a T_b*) T_c T_e* r(S)", 4, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1], c = q[2], e = q[3];
        auto r1 = rho(TT(a, b)), rs = rho(S);
        auto tt = TT(c, e);
        auto lhs = E.mul({&Ss, &r1, &tt, &rs});
        cplx coeff = 0;
        if (sub(add(b, c), a) == e)
            coeff = eps(a, neg(a)) * eps(b, neg(b)) / d * A(neg(b), sub(b, a), add(b, c));
        return dist(lhs, one(coeff));
    });
    run("T_a* r(T_b T_c*) T_e T_f* r(T_g)", 6, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1], c = q[2], e = q[3], f = q[4], g = q[5];
        auto rtb = rho(T(b)), rtg = rho(T(g));
        auto rtc = E.adjoint(rho(T(c)));
        auto ta = Ts(a);
        auto tt = TT(e, f);
        auto lhs = E.mul({&ta, &rtb, &rtc, &tt, &rtg});
        CuntzTerm rhs;
        double pre = eps(b, neg(b)) * eps(c, neg(c)) * eps(g, neg(g));
        if (a == neg(b) && c == neg(e) && f == neg(g)) {
            auto t = SSs;
            t *= pre;
            rhs += t;
        }
        for (int j = 0; j < n; ++j) {
            cplx co = pre * A(neg(b), add(a, b), add(sub(b, c), j)) *
                      A(neg(g), add(f, g), add(sub(e, f), j)) * A(neg(c), j, add(c, e));
            auto t = TT(add(add(j, sub(b, c)), a), sub(add(j, sub(e, f)), g));
            t *= co;
            rhs += t;
        }
        rhs.chop();
        return dist(lhs, rhs);
    });
    run("T_a* r(T_b) T_c* r(T_e)", 4, [&](const std::vector<int>& q) {
        int a = q[0], b = q[1], c = q[2], e = q[3];
        auto r1 = rho(T(b)), r2 = rho(T(e));
        auto ta = Ts(a), tc = Ts(c);
        auto lhs = E.mul({&ta, &r1, &tc, &r2});
        CuntzTerm rhs;
        double pre = eps(b, neg(b)) * eps(e, neg(e));
        if (a == neg(b) && c == neg(e)) {
            auto t = SSs;
            t *= pre;
            rhs += t;
        }
        for (int j = 0; j < n; ++j) {
            cplx co = pre * A(neg(b), add(a, b), add(add(b, c), j)) * A(neg(e), add(c, e), j);
            auto t = TT(add(add(add(a, b), c), j), sub(j, e));
            t *= co;
            rhs += t;
        }
        rhs.chop();
        return dist(lhs, rhs);
    });

    return rep;
}

}  // namespace tubekit::cuntz

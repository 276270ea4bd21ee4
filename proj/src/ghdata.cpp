#include "tubekit/ghdata.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tubekit::ghdata {

using nlohmann::json;

void GHData::init_scalars() {
    n = G.order;
    d = (n + std::sqrt(double(n) * n + 4.0)) / 2.0;  // positive root of d^2 = n d + 1
    Lambda = n * (1.0 + d * d);
    if (A.empty()) A.assign(size_t(n) * n * n, cplx(0));
    if (eps.empty()) eps.assign(size_t(n) * n, 1);
    if (eta.empty()) eta.assign(size_t(n), cplx(1));
}

bool ValidationReport::ok(double tol) const {
    return max_cocycle_violation < tol && max_shift_violation < tol &&
           max_eta_violation < tol && max_equiv_violation < tol &&
           max_frame_violation < tol;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "cocycle " << max_cocycle_violation << ", shift " << max_shift_violation
       << ", eta " << max_eta_violation << ", equivariance " << max_equiv_violation
       << ", frame " << max_frame_violation;
    return os.str();
}

ValidationReport validate(const GHData& dat) {
    ValidationReport rep;
    const auto& G = dat.G;
    const int n = dat.n;
    for (int h = 0; h < n; ++h)
        for (int k = 0; k < n; ++k)
            for (int g = 0; g < n; ++g) {
                double v = std::abs(double(dat.eps_(G.add(h, k), g)) -
                                    double(dat.eps_(h, g)) *
                                        double(dat.eps_(k, G.add(g, G.add(h, h)))));
                rep.max_cocycle_violation = std::max(rep.max_cocycle_violation, v);
            }
    for (int g = 0; g < n; ++g)
        for (int h = 0; h < n; ++h)
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) {
                    int g2h = G.add(g, G.add(h, h));
                    double sign = double(dat.eps_(h, g)) * dat.eps_(h, G.add(g, p)) *
                                  dat.eps_(h, G.add(g, q)) *
                                  dat.eps_(h, G.add(g, G.add(p, q)));
                    double v = std::abs(dat.A_(g2h, p, q) - sign * dat.A_(g, p, q));
                    rep.max_shift_violation = std::max(rep.max_shift_violation, v);
                }
    for (int g = 0; g < n; ++g) {
        cplx e = dat.eta[g];
        rep.max_eta_violation =
            std::max(rep.max_eta_violation, std::abs(e * e * e - cplx(1)));
    }
    return rep;
}

ValidationReport validate(const CategoryConfig& cfg) {
    ValidationReport rep = validate(cfg.base);
    const auto& dat = cfg.base;
    const auto& G = dat.G;
    if (cfg.flavor == Flavor::Graded && cfg.theta) {
        for (int g = 0; g < dat.n; ++g)
            for (int h = 0; h < dat.n; ++h) {
                double v = std::abs(double(dat.eps_(cfg.theta->apply(h), cfg.theta->apply(g))) -
                                    double(dat.eps_(h, g)));
                rep.max_equiv_violation = std::max(rep.max_equiv_violation, v);
                for (int k = 0; k < dat.n; ++k) {
                    double va = std::abs(
                        dat.A_(cfg.theta->apply(g), cfg.theta->apply(h), cfg.theta->apply(k)) -
                        dat.A_(g, h, k));
                    rep.max_equiv_violation = std::max(rep.max_equiv_violation, va);
                }
            }
    }
    if (cfg.flavor == Flavor::Deequiv && cfg.frame) {
        int z = cfg.frame->z;
        for (int a = 0; a < dat.n; ++a)
            for (int b = 0; b < dat.n; ++b) {
                double v = std::abs(double(dat.eps_(z, G.add(a, b))) -
                                    double(dat.eps_(z, a)) * double(dat.eps_(z, b)));
                rep.max_frame_violation = std::max(rep.max_frame_violation, v);
            }
        rep.max_frame_violation =
            std::max(rep.max_frame_violation, std::abs(double(dat.eps_(z, z)) - 1.0));
    }
    return rep;
}

namespace {

// A_{g+2h}(p,q) = eps_h(g) eps_h(g+p) eps_h(g+q) eps_h(g+p+q) A_g(p,q)
void apply_shift(GHData& dat, int g, int h) {
    const auto& G = dat.G;
    int tgt = G.add(g, G.add(h, h));
    for (int p = 0; p < dat.n; ++p)
        for (int q = 0; q < dat.n; ++q) {
            double sign = double(dat.eps_(h, g)) * dat.eps_(h, G.add(g, p)) *
                          dat.eps_(h, G.add(g, q)) * dat.eps_(h, G.add(g, G.add(p, q)));
            dat.A_(tgt, p, q) = sign * dat.A_(g, p, q);
        }
}

void set_matrix(GHData& dat, int g, const std::vector<std::vector<cplx>>& M) {
    for (int h = 0; h < dat.n; ++h)
        for (int k = 0; k < dat.n; ++k) dat.A_(g, h, k) = M[h][k];
}

std::vector<std::vector<cplx>> hadamard(const std::vector<std::vector<cplx>>& A,
                                        const std::vector<std::vector<double>>& B) {
    auto R = A;
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < A[i].size(); ++j) R[i][j] = A[i][j] * B[i][j];
    return R;
}

GHData make_z4_base() {
    GHData dat;
    dat.G = AbelianGroup({4});
    dat.init_scalars();
    const double d = dat.d;  // 2 + sqrt(5)
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h) dat.eps_(g, h) = 1;
    dat.eps_(1, 3) = -1;
    dat.eps_(3, 1) = -1;
    for (int h = 0; h < 4; ++h) dat.eps_(2, h) = (h % 2 == 0) ? 1 : -1;

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const cplx a(-phi, std::sqrt(phi));
    const cplx ab = std::conj(a);
    const double s = 1.0 / (d - 1.0);
    std::vector<std::vector<cplx>> A = {
        {s * (d - 2), -s, -s, -s},
        {-s, -s, s * a, -s * a},
        {-s, s * ab, -s, s * a},
        {-s, -s * ab, s * ab, -s},
    };
    // Sign table fixed by the rho-unitarity relations; see the data tests.
    std::vector<std::vector<double>> B1 = {
        {1, 1, 1, 1},
        {1, 1, 1, -1},
        {1, 1, -1, -1},
        {1, -1, -1, -1},
    };
    set_matrix(dat, 0, A);
    set_matrix(dat, 1, hadamard(A, B1));
    apply_shift(dat, 0, 1);  // A_2
    apply_shift(dat, 1, 1);  // A_3
    return dat;
}

GHData make_z2xz2_base() {
    GHData dat;
    dat.G = AbelianGroup({2, 2});
    dat.init_scalars();
    const double d = dat.d;
    // Elements ordered 0, a=(1,0), b=(0,1), c=(1,1); indices 0,1,2,3.
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h) dat.eps_(g, h) = 1;
    const int a = 1, b = 2, c = 3;
    dat.eps_(a, a) = dat.eps_(b, b) = dat.eps_(c, c) = -1;
    dat.eps_(a, c) = dat.eps_(b, a) = dat.eps_(c, b) = -1;

    const double s = 1.0 / (d - 1.0);
    const double rd = std::sqrt(d);
    std::vector<std::vector<cplx>> A = {
        {s * (d - 2), -s, -s, -s},
        {-s, -s, s * rd, s * rd},
        {-s, s * rd, -s, s * rd},
        {-s, s * rd, s * rd, -s},
    };
    std::vector<std::vector<double>> Ba = {
        {1, 1, 1, 1},
        {1, -1, 1, -1},
        {1, 1, -1, -1},
        {1, -1, -1, 1},
    };
    std::vector<std::vector<double>> Bb = {
        {1, 1, 1, 1},
        {1, 1, -1, -1},
        {1, -1, -1, 1},
        {1, -1, 1, -1},
    };
    std::vector<std::vector<double>> Bc = {
        {1, 1, 1, 1},
        {1, -1, -1, 1},
        {1, -1, 1, -1},
        {1, 1, -1, -1},
    };
    set_matrix(dat, 0, A);
    set_matrix(dat, a, hadamard(A, Ba));
    set_matrix(dat, b, hadamard(A, Bb));
    set_matrix(dat, c, hadamard(A, Bc));
    return dat;
}

// Cocycle closure: eps_{h+k}(g) = eps_h(g) eps_k(g + 2h), starting from the
// generator rows. `known[g]` marks rows already filled.
void close_epsilon(GHData& dat, std::vector<bool>& known) {
    const auto& G = dat.G;
    bool progress = true;
    while (progress) {
        progress = false;
        for (int h = 0; h < dat.n; ++h) {
            if (!known[h]) continue;
            for (int k = 0; k < dat.n; ++k) {
                if (!known[k]) continue;
                int hk = G.add(h, k);
                if (known[hk]) continue;
                for (int g = 0; g < dat.n; ++g)
                    dat.eps_(hk, g) =
                        dat.eps_(h, g) * dat.eps_(k, G.add(g, G.add(h, h)));
                known[hk] = true;
                progress = true;
            }
        }
    }
    for (int g = 0; g < dat.n; ++g)
        if (!known[g]) throw num::NumericsError("epsilon generators do not span the group");
}

GHData make_ah_base() {
    GHData dat;
    dat.G = AbelianGroup({4, 2});
    dat.init_scalars();
    const double d = dat.d;  // 4 + sqrt(17)

    // Element order (0,0),(1,0),(2,0),(3,0),(0,1),(1,1),(2,1),(3,1) matches
    // flat indices 0..7 for factors (4,2).
    const int e10 = 1, e01 = 4;

    std::vector<bool> known(8, false);
    for (int g = 0; g < 8; ++g)
        for (int h = 0; h < 8; ++h) dat.eps_(g, h) = 1;
    known[0] = true;
    // generator row (1,0): -1 on (2,1) and (3,1)
    dat.eps_(e10, dat.G.index({2, 1})) = -1;
    dat.eps_(e10, dat.G.index({3, 1})) = -1;
    known[e10] = true;
    known[e01] = true;  // identically +1
    close_epsilon(dat, known);

    // Scalar constants; the square-root branches are fixed by the unitarity
    // of rho on the generated Cuntz relations (checked in tests).
    const cplx cC = (cplx(1.0 - d) + cplx(0, 1) * std::sqrt(10.0 * d - 2.0)) / 4.0;
    const cplx cF = std::sqrt(cplx(d - 1.0, -std::sqrt(26.0 * d + 2.0)) / 2.0);
    const cplx cG = 0.5 * std::sqrt(cplx(-3.0 * d - 1.0, std::sqrt(50.0 * d + 6.0)));
    const cplx cH = (cplx(d + 3.0) - cplx(0, 1) * std::sqrt(2.0 * d - 10.0)) / 4.0;
    const cplx isd(0, std::sqrt(d));
    const cplx c = cC, f = cF, g = cG, h = cH;
    auto cj = [](cplx z) { return std::conj(z); };

    const double s = 1.0 / (d - 1.0);
    std::vector<std::vector<cplx>> A = {
        {d - 2, -1, -1, -1, -1, -1, -1, -1},
        {-1, -1, c, c, -f, f, -g, -g},
        {-1, cj(c), -1, c, isd, h, -isd, cj(h)},
        {-1, cj(c), cj(c), -1, -cj(f), -cj(g), cj(g), -cj(f)},
        {-1, -cj(f), -isd, -f, -1, -f, isd, -cj(f)},
        {-1, cj(f), cj(h), -g, -cj(f), -1, g, -cj(h)},
        {-1, -cj(g), isd, g, -isd, cj(g), -1, -g},
        {-1, -cj(g), h, -f, -f, -h, -cj(g), -1},
    };
    for (auto& row : A)
        for (auto& v : row) v *= s;

    std::vector<std::vector<double>> B10 = {
        {1, 1, 1, 1, 1, 1, 1, 1},
        {1, 1, 1, 1, 1, 1, -1, -1},
        {1, 1, 1, 1, 1, -1, 1, -1},
        {1, 1, 1, 1, -1, 1, 1, -1},
        {1, 1, 1, -1, 1, 1, 1, -1},
        {1, 1, -1, 1, 1, 1, 1, -1},
        {1, -1, 1, 1, 1, 1, 1, -1},
        {1, -1, -1, -1, -1, -1, -1, 1},
    };
    std::vector<std::vector<double>> B01 = {
        {1, 1, 1, 1, 1, 1, 1, 1},
        {1, 1, 1, -1, 1, 1, 1, -1},
        {1, 1, -1, -1, 1, 1, -1, -1},
        {1, -1, -1, -1, 1, -1, -1, -1},
        {1, 1, 1, 1, 1, 1, 1, 1},
        {1, 1, 1, -1, 1, 1, 1, -1},
        {1, 1, -1, -1, 1, 1, -1, -1},
        {1, -1, -1, -1, 1, -1, -1, -1},
    };
    std::vector<std::vector<double>> B11 = {
        {1, 1, 1, 1, 1, 1, 1, 1},
        {1, 1, -1, 1, 1, 1, 1, -1},
        {1, -1, -1, 1, 1, 1, -1, -1},
        {1, 1, 1, -1, -1, 1, 1, 1},
        {1, 1, 1, -1, 1, 1, 1, -1},
        {1, 1, 1, 1, 1, 1, -1, -1},
        {1, 1, -1, 1, 1, -1, -1, -1},
        {1, -1, -1, 1, -1, -1, -1, -1},
    };
    set_matrix(dat, 0, A);
    set_matrix(dat, dat.G.index({1, 0}), hadamard(A, B10));
    set_matrix(dat, dat.G.index({0, 1}), hadamard(A, B01));
    set_matrix(dat, dat.G.index({1, 1}), hadamard(A, B11));
    apply_shift(dat, dat.G.index({0, 0}), e10);  // A_(2,0)
    apply_shift(dat, dat.G.index({1, 0}), e10);  // A_(3,0)
    apply_shift(dat, dat.G.index({0, 1}), e10);  // A_(2,1)
    apply_shift(dat, dat.G.index({1, 1}), e10);  // A_(3,1)
    return dat;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"z4", "z2xz2", "fourfourfourtwo", "ah", "twod2"};
}

std::vector<std::string> reference_only_presets() { return {"z8-reference"}; }

CategoryConfig preset(const std::string& name) {
    CategoryConfig cfg;
    cfg.name = name;
    if (name == "z4") {
        cfg.flavor = Flavor::Plain;
        cfg.base = make_z4_base();
    } else if (name == "z2xz2") {
        cfg.flavor = Flavor::Plain;
        cfg.base = make_z2xz2_base();
    } else if (name == "fourfourfourtwo") {
        cfg.flavor = Flavor::Graded;
        cfg.base = make_z2xz2_base();
        // theta cycles the nonzero elements a -> b -> c -> a
        cfg.theta = GroupAutomorphism::make(cfg.base.G, {0, 2, 3, 1});
    } else if (name == "ah") {
        cfg.flavor = Flavor::Deequiv;
        cfg.base = make_ah_base();
        int z = cfg.base.G.index({0, 1});
        std::vector<int> g0 = {0, 1, 2, 3};  // Z4 x {0}
        cfg.frame = DeequivFrame::make(cfg.base.G, z, &g0);
    } else if (name == "twod2") {
        cfg.flavor = Flavor::Deequiv;
        cfg.base = make_z4_base();
        cfg.frame = DeequivFrame::make(cfg.base.G, 2);
    } else {
        throw num::NumericsError("unknown preset: " + name);
    }
    auto rep = validate(cfg);
    if (!rep.ok(1e-10))
        throw num::NumericsError("preset " + name + " failed validation: " + rep.summary());
    return cfg;
}

CategoryConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    CategoryConfig cfg;
    cfg.name = j.value("name", std::string("custom"));
    cfg.base.G = AbelianGroup::parse(j.at("group").get<std::string>());
    cfg.base.init_scalars();
    auto parse_elem = [&](const std::string& s) {
        auto e = cfg.base.G.parse_elem(s);
        if (!e) throw num::NumericsError("bad group element: " + s);
        return *e;
    };
    for (auto& [key, val] : j.at("A").items()) {
        std::stringstream ss(key);
        std::string p1, p2, p3;
        if (!std::getline(ss, p1, ';') || !std::getline(ss, p2, ';') ||
            !std::getline(ss, p3, ';'))
            throw num::NumericsError("bad A key (want \"g;h;k\"): " + key);
        cfg.base.A_(parse_elem(p1), parse_elem(p2), parse_elem(p3)) =
            cplx(val.at(0).get<double>(), val.at(1).get<double>());
    }
    for (auto& [key, val] : j.at("epsilon").items()) {
        std::stringstream ss(key);
        std::string p1, p2;
        if (!std::getline(ss, p1, ';') || !std::getline(ss, p2, ';'))
            throw num::NumericsError("bad epsilon key (want \"g;h\"): " + key);
        int v = val.get<int>();
        if (v != 1 && v != -1) throw num::NumericsError("epsilon values must be +-1");
        cfg.base.eps_(parse_elem(p1), parse_elem(p2)) = v;
    }
    if (j.contains("eta"))
        for (auto& [key, val] : j.at("eta").items())
            cfg.base.eta[parse_elem(key)] =
                cplx(val.at(0).get<double>(), val.at(1).get<double>());
    if (j.contains("theta") && j.contains("z"))
        throw num::NumericsError("config cannot carry both theta and z");
    if (j.contains("theta")) {
        std::vector<int> image(cfg.base.n, -1);
        for (auto& [key, val] : j.at("theta").items())
            image[parse_elem(key)] = parse_elem(val.get<std::string>());
        cfg.flavor = Flavor::Graded;
        cfg.theta = GroupAutomorphism::make(cfg.base.G, image);
    } else if (j.contains("z")) {
        int z = parse_elem(j.at("z").get<std::string>());
        std::optional<std::vector<int>> g0;
        if (j.contains("g0")) {
            g0.emplace();
            for (auto& s : j.at("g0")) g0->push_back(parse_elem(s.get<std::string>()));
        }
        cfg.flavor = Flavor::Deequiv;
        cfg.frame = DeequivFrame::make(cfg.base.G, z, g0 ? &*g0 : nullptr);
    }
    return cfg;
}

CategoryConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw num::NumericsError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::uint64_t content_hash(const CategoryConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, size_t nbytes) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < nbytes; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    int version = 3;  // bump when the basis enumeration or cache layout changes
    mix(&version, sizeof version);
    int fl = int(cfg.flavor);
    mix(&fl, sizeof fl);
    for (int f : cfg.base.G.factors) mix(&f, sizeof f);
    for (auto& z : cfg.base.A) {
        double re = z.real(), im = z.imag();
        mix(&re, sizeof re);
        mix(&im, sizeof im);
    }
    for (int e : cfg.base.eps) mix(&e, sizeof e);
    for (auto& z : cfg.base.eta) {
        double re = z.real(), im = z.imag();
        mix(&re, sizeof re);
        mix(&im, sizeof im);
    }
    if (cfg.theta)
        for (int v : cfg.theta->image) mix(&v, sizeof v);
    if (cfg.frame) {
        mix(&cfg.frame->z, sizeof cfg.frame->z);
        for (int v : cfg.frame->g0) mix(&v, sizeof v);
    }
    return h;
}

}  // namespace tubekit::ghdata

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tubekit/groups.hpp"
#include "tubekit/numerics.hpp"

namespace tubekit::ghdata {

using groups::AbelianGroup;
using groups::DeequivFrame;
using groups::GroupAutomorphism;
using num::cplx;

// Defining data of a generalized Haagerup category: the group G, the complex
// constants A_g(h,k), the signs eps_g(h), and the cube roots eta_g, together
// with the derived scalars d (positive root of d^2 = n d + 1) and the global
// dimension Lambda = n (1 + d^2).
struct GHData {
    AbelianGroup G;
    int n = 0;
    double d = 0, Lambda = 0;
    std::vector<cplx> A;    // n^3, [g][h][k]
    std::vector<int> eps;   // n^2, [g][h], values +-1
    std::vector<cplx> eta;  // n, cube roots of unity

    cplx A_(int g, int h, int k) const { return A[(g * n + h) * n + k]; }
    cplx& A_(int g, int h, int k) { return A[(g * n + h) * n + k]; }
    int eps_(int g, int h) const { return eps[g * n + h]; }
    int& eps_(int g, int h) { return eps[g * n + h]; }
    double mu() const { return Lambda / (Lambda - 4.0); }

    void init_scalars();  // sets n, d, Lambda from G
};

struct EquivariantizationConfig {
    GHData base;
    GroupAutomorphism theta;
    int m = 1;  // order of theta
};

struct DeequivariantizationConfig {
    GHData base;
    DeequivFrame frame;
};

enum class Flavor { Plain, Graded, Deequiv };

// One bundle carrying any of the three configurations; `flavor` selects which
// optional parts are meaningful.
struct CategoryConfig {
    std::string name;  // preset name or "custom"
    Flavor flavor = Flavor::Plain;
    GHData base;
    std::optional<GroupAutomorphism> theta;  // Graded
    std::optional<DeequivFrame> frame;       // Deequiv

    int theta_order() const { return theta ? theta->order : 1; }
};

struct ValidationReport {
    double max_cocycle_violation = 0;  // eps_{h+k}(g) = eps_h(g) eps_k(g+2h)
    double max_shift_violation = 0;    // A_{g+2h}(p,q) shift relation
    double max_eta_violation = 0;      // eta_g^3 = 1
    double max_equiv_violation = 0;    // theta-invariance of eps and A (Graded)
    double max_frame_violation = 0;    // eps_z character, eps_z(z) = 1 (Deequiv)
    bool ok(double tol = num::Tol::chop) const;
    std::string summary() const;
};

ValidationReport validate(const GHData& data);
ValidationReport validate(const CategoryConfig& cfg);

// Presets: z4, z2xz2, fourfourfourtwo, ah, twod2.
CategoryConfig preset(const std::string& name);
std::vector<std::string> preset_names();           // computable presets
std::vector<std::string> reference_only_presets(); // stored modular data only

// JSON input with schema
// {"group": "Z4", "A": {"g;h;k": [re,im], ...}, "epsilon": {"g;h": +-1, ...},
//  "eta": {"g": [re,im]}?, "theta": {"g": "h", ...}?, "z": "g"?, "g0": ["g",...]?}
CategoryConfig config_from_json_text(const std::string& text);
CategoryConfig config_from_json_file(const std::string& path);

// Content hash of everything that determines the tube algebra (used to key
// the structure-constant cache).
std::uint64_t content_hash(const CategoryConfig& cfg);

}  // namespace tubekit::ghdata

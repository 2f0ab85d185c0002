#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "diagram.hpp"
#include "rational.hpp"

namespace wtcalc {

// A family of per-degree normalization coefficients. The base is a power law
// coefficient(k) = 2^{(a*k+b)/4} in quarter-log2 units; individual degrees
// may carry exact overrides (used by the condition tables and by models built
// from solver output). Every coefficient is an exact power of 2^{1/4}.
struct CoeffFamily {
    Rat a{0}, b{0};
    std::map<int, Rat> overrides;

    CoeffFamily() = default;
    CoeffFamily(Rat a_, Rat b_) : a(a_), b(b_) {}

    Rat exponent(int k) const {
        if (auto it = overrides.find(k); it != overrides.end()) return it->second;
        return a * k + b;
    }
    double at(int k) const { return std::exp2(boost::rational_cast<double>(exponent(k)) / 4.0); }
    bool pure_power_law() const { return overrides.empty(); }
};

enum class CalculusTag { ZX, ZH, Hybrid };

// Coefficient assignment turning diagrams into tensors. The calculus tag
// controls which generators the model licenses: alpha is ZX-only, beta is
// ZH-only (phase-free Z spiders pass as white dots), and nu takes the union
// including nu boxes.
struct Model {
    std::string name = "custom";
    CalculusTag tag = CalculusTag::Hybrid;
    CoeffFamily u;  // Z spiders and white dots
    CoeffFamily v;  // X spiders
    CoeffFamily g;  // gray dots
    CoeffFamily h;  // H-boxes
    Rat xi_exp{0};              // not-dot scale, 2^{xi_exp/4}
    double hadamard_scale = 1.0;  // ZX Hadamard box prefactor (1 for all named models)

    double xi() const { return std::exp2(boost::rational_cast<double>(xi_exp) / 4.0); }

    bool allows(const Node& n) const {
        switch (tag) {
            case CalculusTag::Hybrid:
                return true;
            case CalculusTag::ZX:
                return n.kind == Kind::ZSpider || n.kind == Kind::XSpider || n.kind == Kind::Hadamard;
            case CalculusTag::ZH:
                switch (n.kind) {
                    case Kind::WhiteDot:
                    case Kind::HBox:
                    case Kind::GrayDot:
                    case Kind::NotDot:
                        return true;
                    case Kind::ZSpider: {
                        double p = std::fmod(std::fabs(n.phase), 2 * M_PI);
                        return p < 1e-12 || std::fabs(p - 2 * M_PI) < 1e-12;
                    }
                    default:
                        return false;
                }
        }
        return false;
    }
};

inline Model model_alpha() {
    Model m;
    m.name = "alpha";
    m.tag = CalculusTag::ZX;
    // all coefficients 1
    return m;
}

inline Model model_beta() {
    Model m;
    m.name = "beta";
    m.tag = CalculusTag::ZH;
    return m;
}

inline Model model_nu() {
    Model m;
    m.name = "nu";
    m.tag = CalculusTag::Hybrid;
    m.u = CoeffFamily(Rat(1), Rat(-2));   // u_k = 2^{(k-2)/4}
    m.v = CoeffFamily(Rat(1), Rat(-2));
    m.g = CoeffFamily(Rat(-1), Rat(2));   // g_k = 2^{-(k-2)/4}
    m.h = CoeffFamily(Rat(-1), Rat(0));   // h_k = 2^{-k/4}
    return m;
}

// Ockhamic ZX model for the condition tables: a single shared family for
// green and red dots (nu defaults plus exact quarter-log overrides), unitary
// Hadamard.
inline Model ockhamic_zx(const std::map<int, Rat>& u_overrides) {
    Model m = model_nu();
    m.name = "ockhamic-zx";
    m.u.overrides = u_overrides;
    m.v.overrides = u_overrides;
    return m;
}

// Ockhamic ZH model: independent u, g, h families over nu defaults.
inline Model ockhamic_zh(const std::map<int, Rat>& u_overrides, const std::map<int, Rat>& g_overrides = {},
                         const std::map<int, Rat>& h_overrides = {}) {
    Model m = model_nu();
    m.name = "ockhamic-zh";
    m.u.overrides = u_overrides;
    m.v.overrides = u_overrides;
    m.g.overrides = g_overrides;
    m.h.overrides = h_overrides;
    return m;
}

// Custom model file: lines "FAMILY K QUARTERLOG" with coefficient
// 2^{QUARTERLOG/4} (QUARTERLOG a rational p/q), or "xi QUARTERLOG".
// Unlisted coefficients keep the nu-model defaults. '#' starts a comment.
inline Model parse_model_file(std::istream& in) {
    Model m = model_nu();
    m.name = "custom";
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string fam;
        if (!(ls >> fam)) continue;
        auto fail = [&](const std::string& why) {
            throw std::runtime_error("model file line " + std::to_string(lineno) + ": " + why);
        };
        if (fam == "xi") {
            std::string q;
            if (!(ls >> q)) fail("expected 'xi QUARTERLOG'");
            m.xi_exp = parse_rational(q);
            continue;
        }
        int k;
        std::string q;
        if (!(ls >> k >> q)) fail("expected 'FAMILY K QUARTERLOG'");
        Rat r = parse_rational(q);
        if (fam == "u") m.u.overrides[k] = r;
        else if (fam == "v") m.v.overrides[k] = r;
        else if (fam == "g") m.g.overrides[k] = r;
        else if (fam == "h") m.h.overrides[k] = r;
        else fail("unknown family '" + fam + "' (want u, v, g, h or xi)");
    }
    return m;
}

inline Model load_model(const std::string& spec) {
    if (spec == "alpha") return model_alpha();
    if (spec == "beta") return model_beta();
    if (spec == "nu") return model_nu();
    std::string path = spec;
    if (path.rfind("file:", 0) == 0) path = path.substr(5);
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file '" + path + "'");
    return parse_model_file(f);
}

} // namespace wtcalc

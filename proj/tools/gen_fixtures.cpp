// Regenerates the rule fixture files under rules/: one representative
// instantiation per schema, as <family>/<name>/<binding-key>.lhs.json and
// .rhs.json pairs. Run from the repository root:
//     ./build/wtcalc-gen-fixtures rules

#include <filesystem>
#include <fstream>
#include <iostream>

#include <wtcalc/rules.hpp>

using namespace wtcalc;
namespace fs = std::filesystem;

namespace {

Bindings default_bindings(const RuleSchema& s) {
    Bindings b;
    for (const auto& ap : s.arities) b.arity[ap.name] = std::max(ap.lo, 1);
    for (const auto& an : s.angles) b.angle[an.name] = M_PI / 4;
    for (const auto& cp : s.cparams) b.cparam[cp.name] = Complex(2, 0);
    return b;
}

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '=' || c == '+') c = '_';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: wtcalc-gen-fixtures OUTPUT_DIR\n";
        return 2;
    }
    fs::path root = argv[1];
    int count = 0;
    for (const auto& schema : catalogue()) {
        Bindings b = default_bindings(schema);
        RuleInstance inst = instantiate(schema, b);
        fs::path dir = root / schema.family / schema.name;
        fs::create_directories(dir);
        std::string key = b.key().empty() ? "default" : sanitize(b.key());
        std::ofstream(dir / (key + ".lhs.json")) << serialize(inst.lhs);
        std::ofstream(dir / (key + ".rhs.json")) << serialize(inst.rhs);
        ++count;
    }
    std::cout << "wrote " << count << " fixture pairs under " << root << "\n";
    return 0;
}

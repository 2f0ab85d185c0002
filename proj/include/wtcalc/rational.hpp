#pragma once

#include <boost/rational.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wtcalc {

using Rat = boost::rational<long long>;

// Quarter-log2 exponent: a positive coefficient c represented as c = 2^{q/4}.
// All normalization coefficients in this library are powers of 2^{1/4}, so an
// exact rational q captures them without rounding.
struct Exponent {
    Rat q{0};

    Exponent() = default;
    Exponent(Rat r) : q(r) {}
    Exponent(long long n) : q(n) {}

    double value() const { return std::exp2(boost::rational_cast<double>(q) / 4.0); }

    friend bool operator==(const Exponent& a, const Exponent& b) { return a.q == b.q; }
    friend bool operator!=(const Exponent& a, const Exponent& b) { return a.q != b.q; }
};

// Parses "p", "p/q" or "-p/q" into a rational.
inline Rat parse_rational(const std::string& s) {
    auto bad = [&] { throw std::runtime_error("bad rational: '" + s + "'"); };
    if (s.empty()) bad();
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rat(std::stoll(s));
        long long num = std::stoll(s.substr(0, slash));
        long long den = std::stoll(s.substr(slash + 1));
        if (den == 0) bad();
        return Rat(num, den);
    } catch (const std::invalid_argument&) {
        bad();
    } catch (const std::out_of_range&) {
        bad();
    }
    return Rat(0);
}

inline std::string rational_str(const Rat& r) {
    std::string s = std::to_string(r.numerator());
    if (r.denominator() != 1) s += "/" + std::to_string(r.denominator());
    return s;
}

} // namespace wtcalc

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace wtcalc {

using Complex = std::complex<double>;

// Dense complex tensor over qubit legs. Entry order: the index is read as a
// bitstring with the FIRST leg most significant. For a diagram the legs are
// ordered (outputs..., inputs...).
struct Tensor {
    int legs = 0;
    std::vector<Complex> data;

    Tensor() : data(1, Complex(1.0, 0.0)) {}
    explicit Tensor(int n) : legs(n), data(size_t(1) << n, Complex(0.0, 0.0)) {}

    size_t size() const { return data.size(); }
    Complex& at(size_t i) { return data[i]; }
    const Complex& at(size_t i) const { return data[i]; }

    static Tensor scalar(Complex v) {
        Tensor t;
        t.data[0] = v;
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : data) m = std::max(m, std::abs(z));
        return m;
    }
};

// Matrix view of a tensor with `n_out` output legs (rows) and the remaining
// legs as columns; used by tests and the functoriality checks.
struct Matrix {
    size_t rows = 1, cols = 1;
    std::vector<Complex> a;

    Complex& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    const Complex& operator()(size_t r, size_t c) const { return a[r * cols + c]; }
};

inline Matrix as_matrix(const Tensor& t, int n_out) {
    Matrix m;
    m.rows = size_t(1) << n_out;
    m.cols = size_t(1) << (t.legs - n_out);
    m.a = t.data;
    return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix r;
    r.rows = a.rows;
    r.cols = b.cols;
    r.a.assign(r.rows * r.cols, Complex(0, 0));
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t k = 0; k < a.cols; ++k) {
            Complex v = a(i, k);
            if (v == Complex(0, 0)) continue;
            for (size_t j = 0; j < b.cols; ++j) r(i, j) += v * b(k, j);
        }
    return r;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix r;
    r.rows = a.rows * b.rows;
    r.cols = a.cols * b.cols;
    r.a.assign(r.rows * r.cols, Complex(0, 0));
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t j = 0; j < a.cols; ++j)
            for (size_t k = 0; k < b.rows; ++k)
                for (size_t l = 0; l < b.cols; ++l)
                    r(i * b.rows + k, j * b.cols + l) = a(i, j) * b(k, l);
    return r;
}

// ---------------------------------------------------------------------------
// Comparison with proportionality-factor extraction.

struct CompareResult {
    enum class Verdict { Equal, Proportional, Different } verdict;
    Complex lambda{1.0, 0.0};  // t1 = lambda * t2 when Proportional
    double max_dev = 0.0;

    bool equal() const { return verdict == Verdict::Equal; }
    bool proportional() const { return verdict == Verdict::Proportional; }
};

// Equal if max|t1-t2| <= tol*max(1, maxmag). Otherwise the proportionality
// pivot is the max-magnitude entry of t2 (avoids division blow-up near
// zeros). Two all-zero tensors are Equal; exactly one all-zero is Different.
inline CompareResult compare(const Tensor& t1, const Tensor& t2, double tol = 1e-9) {
    if (t1.legs != t2.legs) throw std::invalid_argument("compare: leg count mismatch");
    double m1 = t1.max_abs(), m2 = t2.max_abs();
    double scale = std::max(1.0, std::max(m1, m2));
    if (m1 == 0.0 && m2 == 0.0) return {CompareResult::Verdict::Equal, {1, 0}, 0.0};
    if (m1 == 0.0 || m2 == 0.0) {
        double dev = 0.0;
        for (size_t i = 0; i < t1.size(); ++i) dev = std::max(dev, std::abs(t1.at(i) - t2.at(i)));
        return {CompareResult::Verdict::Different, {1, 0}, dev};
    }
    double dev = 0.0;
    for (size_t i = 0; i < t1.size(); ++i) dev = std::max(dev, std::abs(t1.at(i) - t2.at(i)));
    if (dev <= tol * scale) return {CompareResult::Verdict::Equal, {1, 0}, dev};

    size_t pivot = 0;
    double best = -1.0;
    for (size_t i = 0; i < t2.size(); ++i)
        if (std::abs(t2.at(i)) > best) { best = std::abs(t2.at(i)); pivot = i; }
    Complex lambda = t1.at(pivot) / t2.at(pivot);
    double dev2 = 0.0;
    for (size_t i = 0; i < t1.size(); ++i) dev2 = std::max(dev2, std::abs(t1.at(i) - lambda * t2.at(i)));
    if (dev2 <= tol * scale) return {CompareResult::Verdict::Proportional, lambda, dev2};
    return {CompareResult::Verdict::Different, lambda, dev};
}

// Text dump: one line per entry, "bitstring re im", lexicographic bitstring
// order, 17 significant digits.
inline std::string dump_tensor(const Tensor& t) {
    std::string out;
    char buf[96];
    for (size_t i = 0; i < t.size(); ++i) {
        std::string bits;
        for (int k = t.legs - 1; k >= 0; --k) bits += char('0' + ((i >> k) & 1));
        std::snprintf(buf, sizeof buf, "%s %.17g %.17g\n", bits.c_str(), t.at(i).real(), t.at(i).imag());
        out += buf;
    }
    return out;
}

} // namespace wtcalc

#pragma once
// Private helpers so generic code reads the same for double and ext_real.

#include <cmath>
#include <complex>
#include <string>

#include "kvd/scalar.hpp"

namespace kvd::detail {

using std::abs;
using std::cos;
using std::cosh;
using std::exp;
using std::log;
using std::sin;
using std::sinh;
using std::sqrt;
using boost::multiprecision::abs;
using boost::multiprecision::cos;
using boost::multiprecision::cosh;
using boost::multiprecision::exp;
using boost::multiprecision::log;
using boost::multiprecision::sin;
using boost::multiprecision::sinh;
using boost::multiprecision::sqrt;

template <class R>
long nearest_int(const R& v) {
    using std::floor;
    using boost::multiprecision::floor;
    return static_cast<long>(floor(v + R(0.5)));
}

template <class R>
cplx<R> mul_i(const cplx<R>& z) {
    return cplx<R>(-z.imag(), z.real());
}

template <class R>
std::string fmt_c(const cplx<R>& z) {
    auto d = to_cdouble<R>(z);
    return "(" + std::to_string(d.real()) + "," + std::to_string(d.imag()) + ")";
}

}  // namespace kvd::detail

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

namespace kvd {

// 50 significant digits, used by oracles and the --precision ext mode.
using ext_real = boost::multiprecision::cpp_bin_float_50;
using ext_complex = boost::multiprecision::cpp_complex_50;

template <class R>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    using complex = std::complex<double>;
    static constexpr int digits10 = 15;
};

template <>
struct scalar_traits<ext_real> {
    using complex = ext_complex;
    static constexpr int digits10 = 50;
};

template <class R>
using cplx = typename scalar_traits<R>::complex;

template <class R>
using cvec = std::vector<cplx<R>>;

template <class R>
inline R pi() {
    return boost::math::constants::pi<R>();
}

template <class R>
inline cplx<R> imag_unit() {
    return cplx<R>(R(0), R(1));
}

// Unit roundoff of the scalar type.
template <class R>
inline R unit_roundoff() {
    return std::numeric_limits<R>::epsilon();
}

template <class R>
inline double to_double(const R& v) {
    return static_cast<double>(v);
}

template <class R>
inline std::complex<double> to_cdouble(const cplx<R>& z) {
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

template <class R>
inline cplx<R> from_cdouble(const std::complex<double>& z) {
    return cplx<R>(R(z.real()), R(z.imag()));
}

template <class R>
inline bool is_finite(const cplx<R>& z) {
    using std::isfinite;
    using boost::multiprecision::isfinite;
    return isfinite(z.real()) && isfinite(z.imag());
}

}  // namespace kvd

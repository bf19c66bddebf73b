#pragma once
// Shared helpers for the unit tests. Reference values were computed independently
// with mpmath at 40 digits (series, products and quadrature written from the definitions).

#include <complex>

#include "kvd/scalar.hpp"

namespace kvd::test {

using C = std::complex<double>;

inline double rel(C got, C want) { return std::abs(got - want) / std::abs(want); }

template <class R>
double rel(const cplx<R>& got, const cplx<R>& want) {
    return to_double<R>(R(abs(got - want) / abs(want)));
}

}  // namespace kvd::test

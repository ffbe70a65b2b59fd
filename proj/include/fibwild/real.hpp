#pragma once

/** @file real.hpp
 *  @brief Floating point types used across the library and precision dispatch.
 */

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fibwild {

namespace bmp = boost::multiprecision;

using BigInt = bmp::cpp_int;
using Quad = bmp::number<bmp::cpp_bin_float<113, bmp::digit_base_2>, bmp::et_off>;
using Oct = bmp::number<bmp::cpp_bin_float<256, bmp::digit_base_2>, bmp::et_off>;

template <class Real>
constexpr int mantissa_bits() { return std::numeric_limits<Real>::digits; }

template <class Real>
Real from_string(const std::string& s)
{
    if constexpr (std::is_same_v<Real, double>) {
        return std::stod(s);
    } else {
        return Real(s);
    }
}

template <class Real>
std::string to_string_full(const Real& x)
{
    std::ostringstream os;
    os.precision(std::numeric_limits<Real>::max_digits10);
    os << x;
    return os.str();
}

template <class Real>
Real to_real(const BigInt& v)
{
    return v.template convert_to<Real>();
}

template <class Real>
double to_double(const Real& x)
{
    if constexpr (std::is_same_v<Real, double>) {
        return x;
    } else {
        return x.template convert_to<double>();
    }
}

template <class Real>
Real golden_ratio()
{
    using std::sqrt;
    return (1 + sqrt(Real(5))) / 2;
}

template <class Real>
Real pi_value()
{
    if constexpr (std::is_same_v<Real, double>) {
        return 3.141592653589793238462643383279502884;
    } else {
        return boost::math::constants::pi<Real>();
    }
}

/// Calls fn with a value-initialized Real matching the requested mantissa width.
template <class Fn>
decltype(auto) with_precision(int bits, Fn&& fn)
{
    switch (bits) {
    case 53:
        return fn(double{});
    case 113:
        return fn(Quad{});
    case 256:
        return fn(Oct{});
    default:
        throw std::invalid_argument("precision_bits must be one of 53, 113, 256");
    }
}

} // namespace fibwild

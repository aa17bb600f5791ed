#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "besi/bessel.hpp"

using besi::bessel_k_ratio;
using besi::bessel_k_scaled;
using besi::log_bessel_k;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big big_k(double nu, double x) { return boost::math::cyl_bessel_k(Big(nu), Big(x)); }

const double kOrders[] = {-2.3, -0.5, 0.0, 0.001, 0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.7, 5.0, 7.25, 10.0};
const double kArgs[] = {1e-6, 1e-4, 0.01, 0.1, 0.5, 1.0, 1.99, 2.0, 2.01, 3.0, 7.5, 15.0, 30.0, 50.0};

}  // namespace

TEST(Bessel, LogKMatchesHighPrecision) {
    for (double nu : kOrders) {
        for (double x : kArgs) {
            const double oracle = static_cast<double>(log(big_k(nu, x)));
            EXPECT_NEAR(log_bessel_k(nu, x), oracle, 1e-13 * std::max(1.0, std::abs(oracle)))
                << "nu=" << nu << " x=" << x;
        }
    }
}

TEST(Bessel, ScaledKMatchesHighPrecision) {
    for (double nu : kOrders) {
        for (double x : {0.01, 0.7, 3.0, 40.0}) {
            const double oracle = static_cast<double>(exp(Big(x)) * big_k(nu, x));
            EXPECT_NEAR(bessel_k_scaled(nu, x), oracle, 1e-13 * oracle) << "nu=" << nu << " x=" << x;
        }
    }
}

TEST(Bessel, RatioMatchesHighPrecision) {
    for (double nu : kOrders) {
        for (double x : kArgs) {
            const double oracle = static_cast<double>(big_k(nu, x) / big_k(nu - 1.0, x));
            EXPECT_NEAR(bessel_k_ratio(nu, x), oracle, 1e-12 * oracle) << "nu=" << nu << " x=" << x;
        }
    }
}

TEST(Bessel, HalfOrderClosedForm) {
    // K_{1/2}(x) = sqrt(pi / (2x)) e^{-x}
    for (double x : {1e-3, 0.5, 2.0, 9.0}) {
        EXPECT_NEAR(bessel_k_scaled(0.5, x), std::sqrt(M_PI / (2.0 * x)), 1e-14 * std::sqrt(M_PI / (2.0 * x)));
    }
}

TEST(Bessel, RatioTendsToOneForLargeArgument) {
    for (double nu : {1.0, 2.5, 4.0}) EXPECT_NEAR(bessel_k_ratio(nu, 50.0), 1.0, 0.1);
    EXPECT_NEAR(bessel_k_ratio(0.5, 1e3), 1.0, 1e-3);
}

TEST(Bessel, SymmetricInOrder) {
    for (double x : {0.1, 1.0, 10.0}) EXPECT_DOUBLE_EQ(log_bessel_k(-1.7, x), log_bessel_k(1.7, x));
}

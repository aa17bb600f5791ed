#pragma once

namespace besi {

/// Modified Bessel functions of the second kind for real order and x > 0.
///
/// Values for |mu| <= 1/2 come from Temme's series (x <= 2) or Steed's
/// continued fraction (x > 2); higher orders use the forward recurrence,
/// which is stable for K. Raw values overflow near x -> 0 and underflow
/// near x ~ 700, so callers should prefer the scaled or log forms.

/// e^x K_nu(x). Throws NumericalError if the result overflows.
double bessel_k_scaled(double nu, double x);

/// log K_nu(x); finite for every x > 0 and moderate nu.
double log_bessel_k(double nu, double x);

/// K_nu(x) / K_{nu-1}(x) computed without forming either factor.
double bessel_k_ratio(double nu, double x);

}  // namespace besi

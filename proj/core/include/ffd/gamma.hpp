#pragma once

namespace ffd {

/// Gamma function for positive real arguments.
/// Lanczos approximation, accurate to ~15 significant digits.
/// Throws std::domain_error for x <= 0 (poles and the reflection
/// half-line are outside the supported domain).
double gamma_fn(double x);

/// log(Gamma(x)) for x > 0. Same accuracy and domain policy as gamma_fn.
double log_gamma(double x);

} // namespace ffd

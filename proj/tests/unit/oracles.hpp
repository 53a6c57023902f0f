#pragma once

#include <cmath>

namespace pmto::testing {

// Scalar transcription of the crane objective, written independently of the
// library's grouping of terms.
inline double crane_oracle(double t1, double t2, double t3, double m1, double m2, double l, double W) {
  const double g = 9.81, v = 0.7, w = 1e6, delta = 0.01, fmin = 0.0, fmax = 2.41e4;
  const double Om = std::sqrt(g * (m1 + m2) / (m1 * l));
  const double Om0 = std::sqrt(g / l);
  const double T = t1 + t2 + t3;
  const double s = (fmax - fmin) * (std::sin(t3 * Om) - std::sin((t2 + t3) * Om)) + (fmax - W) * std::sin(T * Om);
  const double c = fmax - W - (fmax - fmin) * (std::cos(t3 * Om) - std::cos((t2 + t3) * Om)) +
                   (W - fmax) * std::cos(T * Om);
  const double te2 = m1 * v * Om * Om * Om - Om * Om0 * Om0 * (fmin * t2 + fmax * (t1 + t3) - T * W) + Om0 * Om0 * s;
  const double te = m2 / (2 * m1 * m1 * std::pow(Om, 6)) *
                    (Om * Om * std::pow(Om0, 4) * c * c + std::pow(Om0, 4) * s * s + te2 * te2);
  const double E = te >= delta ? w * te : 0.0;
  return 2 * E / (m2 * v * v) + T * Om / (2 * M_PI);
}

inline double truss_oracle(double p1, double p2, double p3) {
  const double f1 = p1 * std::sqrt(16 + p3 * p3) + p2 * std::sqrt(1 + p3 * p3);
  const double f2 = 20 * std::sqrt(16 + p3 * p3) / (p1 * p3);
  return 10.0 * f1 + 1e-5 * f2;
}

}  // namespace pmto::testing

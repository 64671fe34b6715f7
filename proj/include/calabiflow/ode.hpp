#pragma once

#include <functional>

namespace calabi {

// One classical fourth-order Runge-Kutta step for a scalar ODE y' = f(t, y).
inline double rk4_step(const std::function<double(double, double)>& f, double t, double y, double dt) {
  const double k1 = f(t, y);
  const double k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
  const double k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
  const double k4 = f(t + dt, y + dt * k3);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline double rk4_integrate(const std::function<double(double, double)>& f, double t0, double y0, double t1,
                            int steps) {
  const double dt = (t1 - t0) / steps;
  double y = y0;
  for (int i = 0; i < steps; ++i) y = rk4_step(f, t0 + i * dt, y, dt);
  return y;
}

}  // namespace calabi

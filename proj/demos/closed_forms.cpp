// closed_forms — biased-diffusion predictions for a load started in |n0>:
// energy, entropy and ergotropy growth for given drift v and diffusion D.

#include "qtm/qtm.hpp"

#include <iostream>

int main() {
    using namespace qtm;
    const double v = 6.5e-5, D = 3.3e-4, n0 = 20.0, omega_l = 3.0;
    std::cout << "t,E_l,S,W\n";
    for (double t = 2500.0; t <= 2e4; t += 2500.0) {
        std::cout << fmt_num(t) << "," << fmt_num(analytic_energy(t, v, D, n0, omega_l)) << ","
                  << fmt_num(analytic_entropy(t, D)) << "," << fmt_num(analytic_ergotropy(t, v, D, n0, omega_l)) << "\n";
    }
    // KMS: upward and downward bath rates differ by the Boltzmann factor
    const BathSpec hot{0.005, 1.0, 0.4, BathLabel::Hot};
    std::cout << "gamma(+4) = " << fmt_num(bath_rate(4.0, hot)) << ", gamma(-4) = " << fmt_num(bath_rate(-4.0, hot)) << "\n";
}

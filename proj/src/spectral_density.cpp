#include "qcl/spectral_density.hpp"

#include "qcl/errors.hpp"

namespace qcl {

void SpectralDensity::validate() const {
    if (!(w_max > w_min)) throw ConfigError("SpectralDensity: empty support");
    if (!J || !J_analytic) throw ConfigError("SpectralDensity: missing J callable");
    const int probes = 257;
    for (int i = 0; i < probes; ++i) {
        const double w = w_min + (w_max - w_min) * i / (probes - 1);
        if (J(w) < 0.0) throw ConfigError("SpectralDensity: J < 0 on support");
    }
}

SpectralDensity SpectralDensity::flat_band(double g, double w_min, double w_max) {
    SpectralDensity sd;
    sd.w_min = w_min;
    sd.w_max = w_max;
    const double g2 = g * g;
    sd.J = [g2](double) { return g2; };
    sd.J_analytic = [g2](cplx) { return cplx(g2, 0.0); };
    sd.validate();
    return sd;
}

SpectralDensity SpectralDensity::parabolic_band(double g, double w_min, double w_max) {
    SpectralDensity sd;
    sd.w_min = w_min;
    sd.w_max = w_max;
    const double g2 = g * g;
    const double c = 0.5 * (w_min + w_max);
    const double half = 0.5 * (w_max - w_min);
    sd.J = [=](double w) {
        const double u = (w - c) / half;
        return g2 * (1.0 - u * u);
    };
    sd.J_analytic = [=](cplx z) {
        const cplx u = (z - c) / half;
        return g2 * (1.0 - u * u);
    };
    sd.validate();
    return sd;
}

} // namespace qcl

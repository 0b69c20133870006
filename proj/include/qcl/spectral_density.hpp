#pragma once

#include <functional>

#include "qcl/numerics.hpp"

namespace qcl {

// Bath spectral density J(w) = n(w)|lambda_w|^2 on a finite support, together
// with an analytic extension off the real axis (needed on the second sheet).
struct SpectralDensity {
    double w_min = 0.0;
    double w_max = 0.0;
    std::function<double(double)> J;        // real axis, support only
    std::function<cplx(cplx)> J_analytic;   // extension used below the cut

    // 0 outside the support, J inside.
    double operator()(double w) const {
        return (w < w_min || w > w_max) ? 0.0 : J(w);
    }

    void validate() const;

    // J = g^2 constant on [w_min, w_max]; extension is the constant itself.
    static SpectralDensity flat_band(double g, double w_min, double w_max);

    // J = g^2 (1 - u^2), u = (w - c)/(W/2); polynomial extension.
    static SpectralDensity parabolic_band(double g, double w_min, double w_max);
};

} // namespace qcl

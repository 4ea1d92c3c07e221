#include "revert/kernels.hpp"

#include <cmath>
#include <limits>

namespace revert {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

void check_distance(double d) {
    if (!std::isfinite(d) || d < 0.0) {
        throw std::invalid_argument("kernel distance must be finite and non-negative, got " +
                                    std::to_string(d));
    }
}

}  // namespace

std::string_view to_string(KernelKind kind) noexcept {
    switch (kind) {
        case KernelKind::SquaredExponential: return "se";
        case KernelKind::RationalQuadratic: return "rq";
        case KernelKind::Matern32: return "matern";
    }
    return "?";
}

KernelKind parse_kernel_kind(std::string_view text) {
    if (text == "se" || text == "squared_exponential") return KernelKind::SquaredExponential;
    if (text == "rq" || text == "rational_quadratic") return KernelKind::RationalQuadratic;
    if (text == "matern" || text == "matern32") return KernelKind::Matern32;
    throw std::invalid_argument("unknown kernel kind '" + std::string(text) + "'");
}

void KernelModel::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
        throw std::invalid_argument("kernel lengthscale must be positive");
    }
    if (kind == KernelKind::RationalQuadratic && (!(rq_alpha > 0.0) || !std::isfinite(rq_alpha))) {
        throw std::invalid_argument("rq_alpha must be positive");
    }
}

double log_kernel_eval(const KernelModel& k, double d) {
    check_distance(d);
    const double l = k.lengthscale;
    switch (k.kind) {
        case KernelKind::SquaredExponential: return -0.5 * (d * d) / (l * l);
        case KernelKind::RationalQuadratic:
            return -k.rq_alpha * std::log1p((d * d) / (2.0 * k.rq_alpha * l * l));
        case KernelKind::Matern32: {
            const double s = kSqrt3 * d / l;
            return std::log1p(s) - s;
        }
    }
    return 0.0;
}

double kernel_eval(const KernelModel& k, double d) {
    check_distance(d);
    const double l = k.lengthscale;
    switch (k.kind) {
        case KernelKind::SquaredExponential: return std::exp(-0.5 * (d * d) / (l * l));
        case KernelKind::RationalQuadratic:
            return std::exp(-k.rq_alpha * std::log1p((d * d) / (2.0 * k.rq_alpha * l * l)));
        case KernelKind::Matern32: {
            const double s = kSqrt3 * d / l;
            return (1.0 + s) * std::exp(-s);
        }
    }
    return 0.0;
}

double kernel_radial_factor(const KernelModel& k, double d) {
    check_distance(d);
    const double l = k.lengthscale;
    const double l2 = l * l;
    switch (k.kind) {
        case KernelKind::SquaredExponential: return -std::exp(-0.5 * (d * d) / l2) / l2;
        case KernelKind::RationalQuadratic: {
            const double a = k.rq_alpha;
            return -std::exp(-(a + 1.0) * std::log1p((d * d) / (2.0 * a * l2))) / l2;
        }
        case KernelKind::Matern32: return -3.0 * std::exp(-kSqrt3 * d / l) / l2;
    }
    return 0.0;
}

double kernel_derivative(const KernelModel& k, double d) {
    return kernel_radial_factor(k, d) * d;
}

double kernel_gradient_prior_variance(const KernelModel& k) {
    const double l2 = k.lengthscale * k.lengthscale;
    return k.kind == KernelKind::Matern32 ? 3.0 / l2 : 1.0 / l2;
}

double reverting(const KernelModel& k, double o) {
    if (std::isnan(o) || o > 1.0) {
        throw std::invalid_argument("reverting expects a latent value in (0, 1]; cap first");
    }
    if (o <= 0.0) throw FieldNotPositive();
    if (o == 1.0) return 0.0;

    const double l = k.lengthscale;
    const double log_o = std::log(o);
    switch (k.kind) {
        case KernelKind::SquaredExponential: return l * std::sqrt(-2.0 * log_o);
        case KernelKind::RationalQuadratic: {
            const double a = k.rq_alpha;
            return std::sqrt(2.0 * a * l * l * std::expm1(-log_o / a));
        }
        case KernelKind::Matern32: {
            // Monotone decreasing kernel: bisection on a bracket that is
            // doubled from 5l until it encloses the root.
            double lo = 0.0;
            double hi = 5.0 * l;
            while (log_kernel_eval(k, hi) >= log_o) {
                lo = hi;
                hi *= 2.0;
                if (!std::isfinite(hi)) throw FieldNotPositive();
            }
            for (int it = 0; it < 400; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (hi - lo <= std::max(1e-10 * mid, 1e-12 * l)) break;
                if (log_kernel_eval(k, mid) >= log_o) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

}  // namespace revert

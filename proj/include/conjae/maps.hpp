// One-dimensional chaotic interval maps and the closed-form tent/logistic
// conjugacy. All functions are pure and allocation-free; specs are immutable
// value types, safe to evaluate from any thread.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace conjae {

enum class MapKind {
    Tent,
    Logistic,
    Custom,
    KatsuraFukuda,
    Doubling,
    PomeauManneville,
};

inline const char* map_kind_name(MapKind k) {
    switch (k) {
        case MapKind::Tent: return "tent";
        case MapKind::Logistic: return "logistic";
        case MapKind::Custom: return "custom";
        case MapKind::KatsuraFukuda: return "katsura-fukuda";
        case MapKind::Doubling: return "doubling";
        case MapKind::PomeauManneville: return "pomeau-manneville";
    }
    return "?";
}

inline MapKind map_kind_from_name(const std::string& s) {
    if (s == "tent") return MapKind::Tent;
    if (s == "logistic") return MapKind::Logistic;
    if (s == "custom") return MapKind::Custom;
    if (s == "katsura-fukuda" || s == "kf") return MapKind::KatsuraFukuda;
    if (s == "doubling") return MapKind::Doubling;
    if (s == "pomeau-manneville" || s == "pm") return MapKind::PomeauManneville;
    throw std::invalid_argument("unknown map name: " + s);
}

// Which chaotic map to evaluate and its parameters. Unused parameters are
// ignored (e.g. mu for the logistic map).
struct MapSpec {
    MapKind kind = MapKind::Logistic;
    double mu = 2.0;  // tent slope
    double r = 4.0;   // logistic / Katsura-Fukuda parameter
    double z = 1.5;   // Pomeau-Manneville exponent, > 1
    double a = 1.0;   // Pomeau-Manneville coefficient, > 0

    static MapSpec tent(double mu) { return {MapKind::Tent, mu, 0, 0, 0}; }
    static MapSpec logistic(double r) { return {MapKind::Logistic, 0, r, 0, 0}; }
    static MapSpec custom() { return {MapKind::Custom, 0, 0, 0, 0}; }
    static MapSpec katsura_fukuda(double r) { return {MapKind::KatsuraFukuda, 0, r, 0, 0}; }
    static MapSpec doubling() { return {MapKind::Doubling, 0, 0, 0, 0}; }
    static MapSpec pomeau_manneville(double z, double a = 1.0) {
        return {MapKind::PomeauManneville, 0, 0, z, a};
    }
};

inline void validate_spec(const MapSpec& s) {
    switch (s.kind) {
        case MapKind::Tent:
            if (!(s.mu > 0.0 && s.mu <= 2.0)) throw std::domain_error("tent slope must be in (0, 2]");
            break;
        case MapKind::Logistic:
            if (!(s.r > 0.0 && s.r <= 4.0)) throw std::domain_error("logistic r must be in (0, 4]");
            break;
        case MapKind::KatsuraFukuda:
            if (!(s.r > 0.0 && s.r < 1.0)) throw std::domain_error("Katsura-Fukuda r must be in (0, 1)");
            break;
        case MapKind::PomeauManneville:
            if (!(s.z > 1.0)) throw std::domain_error("Pomeau-Manneville z must be > 1");
            if (!(s.a > 0.0)) throw std::domain_error("Pomeau-Manneville a must be > 0");
            break;
        case MapKind::Custom:
        case MapKind::Doubling:
            break;
    }
}

// Counts the (rare) events where the custom map's image exceeds [0,1] by
// float drift and gets clamped back.
inline std::atomic<std::uint64_t>& custom_clamp_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

// x - floor(x); exact 1.0 reduces to 0.0.
inline double mod1(double x) {
    double y = x - std::floor(x);
    return (y >= 1.0) ? 0.0 : y;
}

// One application of the map. Domain is [0,1); the image lies in [0,1]
// (doubling and Pomeau-Manneville reduce mod 1 back into [0,1)).
inline double eval_map(const MapSpec& spec, double x) {
    validate_spec(spec);
    if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("map input must lie in [0,1)");
    switch (spec.kind) {
        case MapKind::Tent:
            return (x < 0.5) ? spec.mu * x : spec.mu * (1.0 - x);
        case MapKind::Logistic:
            return spec.r * x * (1.0 - x);
        case MapKind::Custom: {
            double sx = std::sqrt(x);
            double y = 16.0 * x * (1.0 - sx) * (1.0 - sx);
            if (y > 1.0) {
                custom_clamp_count().fetch_add(1, std::memory_order_relaxed);
                y = 1.0;
            }
            return y;
        }
        case MapKind::KatsuraFukuda: {
            double d = 1.0 - spec.r * x * x;
            return 4.0 * x * (1.0 - x) * (1.0 - spec.r * x) / (d * d);
        }
        case MapKind::Doubling:
            return mod1(2.0 * x);
        case MapKind::PomeauManneville:
            return mod1(x + spec.a * std::pow(x, spec.z));
    }
    throw std::logic_error("unreachable map kind");
}

// Half-width of the domain guard around [0,1] applied before arcsin/sqrt.
inline constexpr double kPhiEps = 1e-7;

inline double clamp01(double x) {
    if (std::isnan(x)) throw std::domain_error("NaN passed to conjugacy transform");
    return (x < 0.0) ? 0.0 : (x > 1.0) ? 1.0 : x;
}

// phi(x) = (2/pi) asin(sqrt(x)): sends logistic(r=4) orbits to tent(mu=2) orbits.
inline double phi(double x) { return (2.0 / M_PI) * std::asin(std::sqrt(clamp01(x))); }

// phi^{-1}(y) = sin^2(pi y / 2).
inline double phi_inverse(double y) {
    double s = std::sin(0.5 * M_PI * clamp01(y));
    return s * s;
}

// phi^{-1}(T_2(phi(y))): analytically equal to the logistic map at r = 4,
// but computed through the tent-map composition.
inline double latent_logistic_step(double y) {
    double u = phi(y);
    double t = (u < 0.5) ? 2.0 * u : 2.0 * (1.0 - u);
    return phi_inverse(t);
}

// Derivative of latent_logistic_step at interior y in (0,1). Blows up at the
// endpoints (phi' is singular there); callers clamp first.
inline double latent_logistic_step_deriv(double y) {
    double u = phi(y);
    double t = (u < 0.5) ? 2.0 * u : 2.0 * (1.0 - u);
    double dphi = 1.0 / (M_PI * std::sqrt(y * (1.0 - y)));
    double dtent = (u < 0.5) ? 2.0 : -2.0;
    double dphiinv = 0.5 * M_PI * std::sin(M_PI * t);
    return dphiinv * dtent * dphi;
}

// [x0, f(x0), ..., f^{n-1}(x0)], length n. Stored values stay in [0,1];
// iteration continues from mod1 of the value since eval_map's domain is [0,1)
// (f(1) = 0 for every implemented map).
inline std::vector<double> orbit(const MapSpec& spec, double x0, std::size_t n) {
    if (n < 1) throw std::invalid_argument("orbit length must be >= 1");
    std::vector<double> out;
    out.reserve(n);
    out.push_back(x0);
    for (std::size_t i = 1; i < n; ++i) {
        out.push_back(eval_map(spec, mod1(out.back())));
    }
    return out;
}

}  // namespace conjae

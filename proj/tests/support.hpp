#pragma once

#include "rsmv/config.hpp"
#include "rsmv/error.hpp"
#include "rsmv/frontier.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace rsmv::testing {

inline MarketSpec scalar_market(double r, double mu, double sigma, double T = 1.0) {
    MarketSpec spec;
    spec.horizon = T;
    spec.regimes = {{{0.0, r, {mu}, {{sigma}}}}};
    return spec;
}

/// Single regime, single stock, constant coefficients and constant density.
inline std::shared_ptr<const Model> scalar_model(double r, double mu, double sigma, double f, double x0 = 1.0,
                                                 double T = 1.0) {
    return std::make_shared<const Model>(Model{validate_generator({{0.0}}), build_market(scalar_market(r, mu, sigma, T)),
                                               build_horizon({{0.0, f}}, T), x0, 0});
}

/// Example parameters r = 0.1, mu = 0.3, sigma = 0.5, T = 1, x0 = 1.
inline std::shared_ptr<const Model> example_model(double f) { return scalar_model(0.1, 0.3, 0.5, f); }

/// Two regimes, one stock, fast switching so the jump part of Delta matters.
inline ModelConfig switching_config(double f, double q12 = 4.0, double q21 = 6.0) {
    ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.generator = {{-q12, q12}, {q21, -q21}};
    cfg.market.horizon = 1.0;
    cfg.market.regimes = {{{0.0, 0.12, {0.45}, {{0.4}}}}, {{0.0, 0.02, {0.0}, {{0.6}}}}};
    cfg.density = {{0.0, f}};
    cfg.x0 = 1.0;
    cfg.initial_regime = 0;
    return cfg;
}

/// Two regimes, two stocks, non-symmetric sigma, piecewise schedules.
inline ModelConfig two_asset_config(double f) {
    ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.generator = {{-2.0, 2.0}, {3.0, -3.0}};
    cfg.market.horizon = 1.0;
    cfg.market.regimes = {
        {{0.0, 0.08, {0.25, 0.18}, {{0.4, 0.1}, {0.05, 0.3}}}, {0.5, 0.1, {0.3, 0.2}, {{0.45, 0.1}, {0.05, 0.3}}}},
        {{0.0, 0.02, {0.05, 0.08}, {{0.6, 0.0}, {0.2, 0.5}}}}};
    cfg.density = {{0.0, f}, {0.6, 2.0 * f}};
    cfg.x0 = 1.0;
    cfg.initial_regime = 0;
    return cfg;
}

template <class F>
std::string error_code_of(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace rsmv::testing

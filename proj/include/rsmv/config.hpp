#pragma once

#include "rsmv/frontier.hpp"
#include "rsmv/horizon.hpp"
#include "rsmv/market.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace rsmv {

struct RunConfig {
    std::optional<double> h;  // backward grid step; default kDefaultRelativeStep * T
    long paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 20240917;
    bool antithetic = false;
};

/// Parsed but not yet validated model configuration. Regimes are 0-based
/// here; the JSON file numbers them from 1.
struct ModelConfig {
    double horizon = 1.0;
    std::vector<std::vector<double>> generator;
    MarketSpec market;
    std::vector<DensitySegment> density;
    double epsilon = kDefaultSurvivalMargin;
    double x0 = 1.0;
    int initial_regime = 0;
    RunConfig run;
    std::vector<double> z;

    double grid_step() const { return run.h.value_or(kDefaultRelativeStep * horizon); }
};

/// Throws ValidationError(ConfigParse) on malformed or missing fields.
ModelConfig parse_config(const nlohmann::json& doc);
ModelConfig load_config(const std::filesystem::path& path);

/// Runs every component validator; throws the first ValidationError.
std::shared_ptr<const Model> build_model(const ModelConfig& cfg);

} // namespace rsmv

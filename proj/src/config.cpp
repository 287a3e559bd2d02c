#include "rsmv/config.hpp"

#include "rsmv/error.hpp"

#include <cmath>
#include <fstream>

namespace rsmv {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError("ConfigParse", where + ": missing field \"" + key + "\"");
    }
    return obj.at(key);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ValidationError("ConfigParse", where + ": expected a number");
    return v.get<double>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ValidationError("ConfigParse", where + ": expected a number or array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, where));
    return out;
}

std::vector<std::vector<double>> matrix(const json& v, const std::string& where) {
    if (v.is_number()) return {{v.get<double>()}};
    if (!v.is_array()) throw ValidationError("ConfigParse", where + ": expected a matrix");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) out.push_back(number_list(row, where));
    return out;
}

} // namespace

ModelConfig parse_config(const json& doc) {
    ModelConfig cfg;
    try {
        cfg.horizon = number(require(doc, "T", "config"), "T");
        cfg.generator = matrix(require(doc, "generator", "config"), "generator");

        const auto& market = require(doc, "market", "config");
        cfg.market.horizon = cfg.horizon;
        if (market.contains("delta_floor")) cfg.market.delta_floor = number(market["delta_floor"], "market.delta_floor");
        if (market.contains("allow_zero_rate")) cfg.market.allow_zero_rate = market["allow_zero_rate"].get<bool>();
        const auto& regimes = require(market, "regimes", "market");
        if (!regimes.is_array()) throw ValidationError("ConfigParse", "market.regimes: expected an array");
        for (std::size_t i = 0; i < regimes.size(); ++i) {
            const std::string where = "market.regimes[" + std::to_string(i) + "]";
            std::vector<MarketSegmentSpec> sched;
            for (const auto& s : regimes[i]) {
                MarketSegmentSpec seg;
                seg.t_start = s.contains("t_start") ? number(s["t_start"], where + ".t_start") : 0.0;
                seg.r = number(require(s, "r", where), where + ".r");
                seg.mu = number_list(require(s, "mu", where), where + ".mu");
                seg.sigma = matrix(require(s, "sigma", where), where + ".sigma");
                sched.push_back(std::move(seg));
            }
            cfg.market.regimes.push_back(std::move(sched));
        }

        if (doc.contains("horizon")) {
            const auto& hz = doc["horizon"];
            if (hz.contains("epsilon")) cfg.epsilon = number(hz["epsilon"], "horizon.epsilon");
            for (const auto& d : require(hz, "density", "horizon")) {
                cfg.density.push_back({d.contains("t_start") ? number(d["t_start"], "horizon.density.t_start") : 0.0,
                                       number(require(d, "f", "horizon.density"), "horizon.density.f")});
            }
        } else {
            cfg.density.push_back({0.0, 0.0});
        }

        if (doc.contains("initial")) {
            const auto& init = doc["initial"];
            if (init.contains("x0")) cfg.x0 = number(init["x0"], "initial.x0");
            if (init.contains("regime")) {
                if (!init["regime"].is_number_integer()) {
                    throw ValidationError("ConfigParse", "initial.regime: expected an integer");
                }
                cfg.initial_regime = init["regime"].get<int>() - 1;
            }
        }

        if (doc.contains("run")) {
            const auto& run = doc["run"];
            if (run.contains("h") && !run["h"].is_null()) cfg.run.h = number(run["h"], "run.h");
            if (run.contains("paths")) cfg.run.paths = run["paths"].get<long>();
            if (run.contains("dt")) cfg.run.dt = number(run["dt"], "run.dt");
            if (run.contains("seed")) cfg.run.seed = run["seed"].get<std::uint64_t>();
            if (run.contains("antithetic")) cfg.run.antithetic = run["antithetic"].get<bool>();
        }
        if (doc.contains("z")) cfg.z = number_list(doc["z"], "z");
    } catch (const json::exception& e) {
        throw ValidationError("ConfigParse", e.what());
    }
    return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("ConfigParse", "cannot open config " + path.string());
    try {
        return parse_config(json::parse(in));
    } catch (const json::exception& e) {
        throw ValidationError("ConfigParse", e.what());
    }
}

std::shared_ptr<const Model> build_model(const ModelConfig& cfg) {
    auto gen = validate_generator(cfg.generator);
    auto market = build_market(cfg.market);
    auto horizon = build_horizon(cfg.density, cfg.horizon, cfg.epsilon);
    if (gen.n_regimes() != market.n_regimes()) {
        throw ValidationError("DimensionMismatch", "generator and market disagree on the number of regimes");
    }
    if (cfg.initial_regime < 0 || cfg.initial_regime >= gen.n_regimes()) {
        throw ValidationError("BadRegime", "initial.regime must lie in 1..N");
    }
    if (!std::isfinite(cfg.x0)) throw ValidationError("ConfigParse", "initial.x0 must be finite");
    return std::make_shared<const Model>(Model{std::move(gen), std::move(market), std::move(horizon), cfg.x0,
                                               cfg.initial_regime});
}

} // namespace rsmv

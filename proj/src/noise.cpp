#include "evspde/noise.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evspde/csv.hpp"

namespace evspde::noise {

NoiseModel::NoiseModel(std::vector<double> sigma, bool canonical)
    : sigma_(std::move(sigma))
    , canonical_(canonical)
{
    for (double s : sigma_) {
        hs_sq_ += s * s;
    }
}

NoiseModel NoiseModel::canonical(int modes)
{
    if (modes < 1) {
        throw std::invalid_argument("NoiseModel: truncation level J must be >= 1");
    }
    std::vector<double> sigma(modes);
    for (int j = 1; j <= modes; ++j) {
        sigma[j - 1] = 1.0 / j;
    }
    return NoiseModel(std::move(sigma), true);
}

NoiseModel NoiseModel::custom(std::vector<double> sigma)
{
    if (sigma.empty()) {
        throw std::invalid_argument("NoiseModel: sigma list must not be empty");
    }
    for (std::size_t j = 0; j < sigma.size(); ++j) {
        if (!(sigma[j] > 0.0) || !std::isfinite(sigma[j])) {
            throw std::invalid_argument("NoiseModel: sigma_" + std::to_string(j + 1) + " must be positive");
        }
    }
    return NoiseModel(std::move(sigma), false);
}

std::string NoiseModel::describe() const
{
    if (canonical_) {
        return "canonical(J=" + std::to_string(size()) + ")";
    }
    std::string s = "custom(";
    for (std::size_t j = 0; j < sigma_.size(); ++j) {
        s += (j ? ";" : "") + format_double(sigma_[j]);
    }
    return s + ")";
}

double hs_norm(const NoiseModel& model) { return std::sqrt(model.hs_norm_sq()); }

WienerIncrement sample_increment(const NoiseModel& model, double dt, CounterEngine& engine)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("sample_increment: dt must be > 0");
    }
    WienerIncrement inc{dt, Vec(model.size())};
    const double root = std::sqrt(dt);
    for (int j = 0; j < model.size(); ++j) {
        inc.xi(j) = root * model.sigma()[j] * standard_normal(engine);
    }
    return inc;
}

WienerIncrement NoiseStream::increment(const NoiseModel& model, double dt, std::uint64_t step) const
{
    CounterEngine engine(derive_seed(master_, replica_, step));
    return sample_increment(model, dt, engine);
}

WienerIncrement pushforward_increment(const geometry::PullbackMap& map, double t, const WienerIncrement& inc)
{
    return {inc.dt, map.push(inc.xi, t)};
}

Vec embed(const WienerIncrement& inc, int dim)
{
    if (inc.xi.size() > dim) {
        throw std::invalid_argument("embed: noise truncation J = " + std::to_string(inc.xi.size())
                                    + " exceeds basis dimension " + std::to_string(dim));
    }
    Vec out = Vec::Zero(dim);
    out.head(inc.xi.size()) = inc.xi;
    return out;
}

WienerIncrement combine(const std::vector<WienerIncrement>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("combine: no increments");
    }
    WienerIncrement out{0.0, Vec::Zero(parts.front().xi.size())};
    for (const auto& p : parts) {
        out.dt += p.dt;
        out.xi += p.xi;
    }
    return out;
}

void IncrementLog::record(std::uint64_t step, const WienerIncrement& inc) { rows_.emplace_back(step, inc); }

std::string IncrementLog::csv() const
{
    CsvBuilder csv({"step", "j", "xi"});
    for (const auto& [step, inc] : rows_) {
        for (int j = 0; j < inc.xi.size(); ++j) {
            csv.cell(static_cast<long long>(step)).cell(j + 1).cell(inc.xi(j)).end_row();
        }
    }
    return csv.str();
}

} // namespace evspde::noise

#include "evp/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace evp {

ParticleMeasure ParticleMeasure::uniform_grid(int d, std::size_t n) {
    ParticleMeasure mu(d);
    double lw = -std::log(static_cast<double>(d == 2 ? n * n : n));
    if (d == 1) {
        for (std::size_t i = 0; i < n; ++i)
            mu.push_back(TorusPoint({static_cast<double>(i) / static_cast<double>(n)}), lw);
    } else if (d == 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                mu.push_back(TorusPoint({static_cast<double>(i) / static_cast<double>(n),
                                         static_cast<double>(j) / static_cast<double>(n)}),
                             lw);
    } else {
        throw Error("uniform_grid: only d=1,2 supported");
    }
    mu.normalize();
    return mu;
}

ParticleMeasure ParticleMeasure::from_points(int d, const std::vector<TorusPoint>& pts) {
    if (pts.empty()) throw Error("from_points: empty measure");
    ParticleMeasure mu(d);
    double lw = -std::log(static_cast<double>(pts.size()));
    for (const auto& z : pts) mu.push_back(z, lw);
    mu.normalize();
    return mu;
}

ParticleMeasure ParticleMeasure::weighted_grid(std::size_t n,
                                               const std::function<double(double)>& logdens) {
    ParticleMeasure mu(1);
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(n);
        mu.push_back(TorusPoint({t}), logdens(t));
    }
    mu.normalize();
    return mu;
}

double ParticleMeasure::log_mass() const {
    LogSumAcc acc;
    for (double lw : logw_) acc.add(lw);
    return acc.value();
}

void ParticleMeasure::normalize() {
    if (empty()) throw Error("normalize: empty measure");
    double lm = log_mass();
    for (double& lw : logw_) lw -= lm;
}

double ParticleMeasure::integrate(const std::function<double(const TorusPoint&)>& phi) const {
    if (empty()) throw Error("integrate: empty measure");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += std::exp(logw_[i]) * phi(point(i));
    return s;
}

void ParticleMeasure::compact(double merge_radius, std::size_t cap) {
    if (empty()) throw Error("compact: empty measure");
    std::vector<double> nc;
    std::vector<double> nw;
    if (merge_radius > 0.0) {
        // Bucket by quantized coordinates; representative = heaviest in bucket.
        std::map<std::vector<long long>, std::pair<std::size_t, LogSumAcc>> buckets;
        for (std::size_t i = 0; i < size(); ++i) {
            std::vector<long long> key(static_cast<std::size_t>(d_));
            for (int k = 0; k < d_; ++k)
                key[static_cast<std::size_t>(k)] =
                    static_cast<long long>(std::floor(coord(i, k) / merge_radius));
            auto& slot = buckets[key];
            if (slot.second.empty() || logw_[i] > logw_[slot.first]) slot.first = i;
            slot.second.add(logw_[i]);
        }
        nc.reserve(buckets.size() * static_cast<std::size_t>(d_));
        nw.reserve(buckets.size());
        for (const auto& [key, slot] : buckets) {
            for (int k = 0; k < d_; ++k) nc.push_back(coord(slot.first, k));
            nw.push_back(slot.second.value());
        }
    } else {
        nc = coords_;
        nw = logw_;
    }

    if (cap > 0 && nw.size() > cap) {
        std::vector<std::size_t> idx(nw.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&nw](std::size_t a, std::size_t b) {
            return nw[a] > nw[b];
        });
        idx.resize(cap);
        std::sort(idx.begin(), idx.end()); // keep original order for determinism
        std::vector<double> cc, cw;
        cc.reserve(cap * static_cast<std::size_t>(d_));
        cw.reserve(cap);
        for (std::size_t i : idx) {
            for (int k = 0; k < d_; ++k) cc.push_back(nc[i * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]);
            cw.push_back(nw[i]);
        }
        nc = std::move(cc);
        nw = std::move(cw);
    }

    coords_ = std::move(nc);
    logw_ = std::move(nw);
    normalize();
}

nlohmann::json ParticleMeasure::to_json() const {
    nlohmann::json atoms = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
        nlohmann::json z = nlohmann::json::array();
        for (int k = 0; k < d_; ++k) z.push_back(coord(i, k));
        atoms.push_back({{"z", z}, {"logw", logw_[i]}});
    }
    return nlohmann::json{{"d", d_}, {"atoms", atoms}};
}

ParticleMeasure ParticleMeasure::from_json(const nlohmann::json& j) {
    ParticleMeasure mu(j.at("d").get<int>());
    for (const auto& a : j.at("atoms"))
        mu.push_back(TorusPoint(a.at("z").get<std::vector<double>>()), a.at("logw").get<double>());
    return mu;
}

} // namespace evp

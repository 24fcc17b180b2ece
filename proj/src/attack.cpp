#include "kge/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace kge {

const char* to_string(Surface s) {
    switch (s) {
        case Surface::None: return "none";
        case Surface::GP: return "gp";
        case Surface::LP: return "lp";
        case Surface::PP: return "pp";
    }
    return "?";
}

Surface surface_from_string(std::string_view name) {
    if (name == "none") return Surface::None;
    if (name == "gp") return Surface::GP;
    if (name == "lp") return Surface::LP;
    if (name == "pp") return Surface::PP;
    throw std::invalid_argument("unknown attack surface: " + std::string(name));
}

const char* to_string(PpMode m) { return m == PpMode::Persistent ? "persistent" : "transient"; }

PpMode pp_mode_from_string(std::string_view name) {
    if (name == "persistent") return PpMode::Persistent;
    if (name == "transient") return PpMode::Transient;
    throw std::invalid_argument("unknown pp mode: " + std::string(name));
}

void AttackConfig::validate() const {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("attack ratio must be in [0,1]");
    if (!(noise.low < noise.high)) throw std::invalid_argument("noise requires low < high");
}

std::vector<std::size_t> select_subset(std::size_t n, double k, Rng& rng) {
    const auto count =
        static_cast<std::size_t>(std::llround(k * static_cast<double>(n)));
    std::vector<std::size_t> picked;
    if (count == 0) return picked;
    if (count > n) throw std::invalid_argument("selection larger than the batch");

    // partial Fisher-Yates over [0, n)
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    picked.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(picked.begin(), picked.end());
    return picked;
}

void perturb_graph(MiniBatch& batch, double k, std::int32_t num_entities,
                   std::int32_t num_relations, Rng& rng) {
    auto picked = select_subset(batch.examples.size(), k, rng);
    for (auto i : picked) {
        auto& ex = batch.examples[i];
        if (rng.coin() == 0) {
            ex.head = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_entities)));
        } else {
            ex.rel = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_relations)));
        }
    }
}

void perturb_labels(MiniBatch& batch, double k, Rng& rng) {
    auto picked = select_subset(batch.examples.size(), k, rng);
    for (auto i : picked) batch.examples[i].inverted = !batch.examples[i].inverted;
}

void RowBackup::restore(Model& model) const {
    for (const auto& [row, values] : ent_rows) {
        std::memcpy(model.ent.row(row), values.data(), values.size() * sizeof(double));
    }
    for (const auto& [row, values] : rel_rows) {
        std::memcpy(model.rel.row(row), values.data(), values.size() * sizeof(double));
    }
}

RowBackup perturb_params(Model& model, const MiniBatch& batch, double k, const NoiseSpec& noise,
                         Rng& rng) {
    RowBackup backup;
    auto picked = select_subset(batch.examples.size(), k, rng);
    if (picked.empty()) return backup;

    std::vector<std::uint8_t> ent_saved(static_cast<std::size_t>(model.cfg.num_entities), 0);
    std::vector<std::uint8_t> rel_saved(static_cast<std::size_t>(model.cfg.num_relations), 0);
    const int d = model.cfg.dim;
    const int rd = model.cfg.relation_dim();

    for (auto i : picked) {
        const auto& ex = batch.examples[i];
        if (rng.coin() == 0) {
            if (!ent_saved[static_cast<std::size_t>(ex.head)]) {
                ent_saved[static_cast<std::size_t>(ex.head)] = 1;
                const double* row = model.ent.row(ex.head);
                backup.ent_rows.emplace_back(
                    ex.head, std::vector<double>(row, row + model.ent.cols));
            }
            double* row = model.ent.row(ex.head);
            for (int c = 0; c < d; ++c) row[c] += rng.uniform(noise.low, noise.high);
        } else {
            if (!rel_saved[static_cast<std::size_t>(ex.rel)]) {
                rel_saved[static_cast<std::size_t>(ex.rel)] = 1;
                const double* row = model.rel.row(ex.rel);
                backup.rel_rows.emplace_back(ex.rel, std::vector<double>(row, row + rd));
            }
            double* row = model.rel.row(ex.rel);
            for (int c = 0; c < rd; ++c) row[c] += rng.uniform(noise.low, noise.high);
        }
    }
    return backup;
}

RowBackup apply_attack(const AttackConfig& cfg, MiniBatch& batch, Model& model, Rng& rng) {
    cfg.validate();
    switch (cfg.surface) {
        case Surface::None:
            return {};
        case Surface::GP:
            perturb_graph(batch, cfg.ratio, model.cfg.num_entities, model.cfg.num_relations, rng);
            return {};
        case Surface::LP:
            perturb_labels(batch, cfg.ratio, rng);
            return {};
        case Surface::PP:
            return perturb_params(model, batch, cfg.ratio, cfg.noise, rng);
    }
    throw std::invalid_argument("unknown attack surface");
}

}  // namespace kge

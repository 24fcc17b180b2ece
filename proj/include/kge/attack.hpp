#pragma once

#include <string_view>

#include "kge/dataset.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"

namespace kge {

enum class Surface { None, GP, LP, PP };
enum class PpMode { Persistent, Transient };

const char* to_string(Surface s);
Surface surface_from_string(std::string_view name);
const char* to_string(PpMode m);
PpMode pp_mode_from_string(std::string_view name);

struct NoiseSpec {
    double low = -0.1;
    double high = 0.1;
};

struct AttackConfig {
    Surface surface = Surface::None;
    double ratio = 0.0;
    NoiseSpec noise;
    PpMode pp_mode = PpMode::Persistent;

    void validate() const;
};

// Exactly round(k*n) distinct indices (half away from zero), uniform without
// replacement, returned sorted.
std::vector<std::size_t> select_subset(std::size_t n, double k, Rng& rng);

// Replaces the head with a uniform entity or the relation with a uniform
// relation (fair coin per selected example); labels stay untouched.
void perturb_graph(MiniBatch& batch, double k, std::int32_t num_entities,
                   std::int32_t num_relations, Rng& rng);

// Inverts the full label vector of each selected example.
void perturb_labels(MiniBatch& batch, double k, Rng& rng);

// Pristine copies of parameter rows modified by perturb_params, for the
// transient mode's bit-exact restore.
struct RowBackup {
    std::vector<std::pair<std::int32_t, std::vector<double>>> ent_rows;
    std::vector<std::pair<std::int32_t, std::vector<double>>> rel_rows;

    bool empty() const { return ent_rows.empty() && rel_rows.empty(); }
    void restore(Model& model) const;
};

// Adds a fresh uniform noise vector to the head-entity row (the embedding
// vector proper; MuRE's bias scalar stays) or the full relation row, fair coin
// per selected example.
RowBackup perturb_params(Model& model, const MiniBatch& batch, double k, const NoiseSpec& noise,
                         Rng& rng);

// Dispatches the configured surface onto one batch. Selections and coin flips
// come from rng, which the training loop derives per (epoch, batch). The
// returned backup is non-empty only for PP; the caller restores it after the
// backward pass when pp_mode is transient.
RowBackup apply_attack(const AttackConfig& cfg, MiniBatch& batch, Model& model, Rng& rng);

}  // namespace kge

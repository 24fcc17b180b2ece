#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kge/rng.hpp"

namespace kge {

struct Triple {
    std::int32_t h = 0;
    std::int32_t r = 0;
    std::int32_t t = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// packs (h, r) into a single map key; entity/relation counts stay well below 2^31
inline std::uint64_t pair_key(std::int32_t h, std::int32_t r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 32) |
           static_cast<std::uint32_t>(r);
}

inline std::uint64_t triple_key(const Triple& t) {
    return splitmix64(pair_key(t.h, t.r)) ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.t));
}

// Dense, deterministic string<->id dictionaries. Ids are assigned by first
// appearance over train, then valid, then test.
struct Vocab {
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::unordered_map<std::string, std::int32_t> entity_to_id;
    std::unordered_map<std::string, std::int32_t> relation_to_id;

    std::int32_t num_entities() const { return static_cast<std::int32_t>(entities.size()); }
    std::int32_t num_relations() const { return static_cast<std::int32_t>(relations.size()); }

    std::int32_t add_entity(const std::string& name);
    std::int32_t add_relation(const std::string& name);

    // order-sensitive hash of all dictionary entries; stored in checkpoints
    std::uint64_t fingerprint() const;
};

using RawTriple = std::array<std::string, 3>;

// Reads one split file: UTF-8, one `head TAB relation TAB tail` per line.
// Malformed lines are hard errors reported with their line number.
std::vector<RawTriple> load_split(const std::string& path);

struct KnowledgeGraph {
    Vocab vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    // duplicates dropped per split, in (train, valid, test) order
    std::array<std::size_t, 3> dropped_duplicates{0, 0, 0};
};

KnowledgeGraph build_graph(const std::vector<RawTriple>& train,
                           const std::vector<RawTriple>& valid,
                           const std::vector<RawTriple>& test);

// Loads <dir>/{train,valid,test}.txt and warns on stderr about dropped duplicates.
KnowledgeGraph load_dataset(const std::string& dir);

// Adds an inverse triple (t, r2+|R|, h) for every triple of every split,
// doubling the relation vocabulary (names suffixed "_inverse").
void add_reciprocal_relations(KnowledgeGraph& graph);

// One KvsAll data point: a unique (head, relation) pair plus the binary tail
// label vector over all entities. The vector is stored as the sorted list of
// positive entity ids plus an inversion flag so that label perturbation is a
// flag flip instead of an |E|-bit rewrite.
struct KvsAllExample {
    std::int32_t head = 0;
    std::int32_t rel = 0;
    std::vector<std::int32_t> tails;  // sorted ascending, non-empty on construction
    bool inverted = false;

    bool label(std::int32_t entity) const {
        bool in = std::binary_search(tails.begin(), tails.end(), entity);
        return in != inverted;
    }

    // number of 1-bits in the label vector
    std::size_t positives(std::int32_t num_entities) const {
        return inverted ? static_cast<std::size_t>(num_entities) - tails.size() : tails.size();
    }

    friend bool operator==(const KvsAllExample&, const KvsAllExample&) = default;
};

// Groups the train split into KvsAll examples, ordered by first appearance of
// each (h, r) pair.
std::vector<KvsAllExample> build_kvsall(const std::vector<Triple>& train,
                                        std::int32_t num_entities);

struct MiniBatch {
    std::vector<KvsAllExample> examples;
    int epoch = 0;
    int index = 0;
};

// One epoch's batches: a seeded uniform shuffle of the dataset cut into
// batches of size m (the last may be short). Examples are copied so batch
// transforms never touch the dataset itself.
std::vector<MiniBatch> make_epoch_batches(const std::vector<KvsAllExample>& dataset,
                                          std::size_t batch_size, int epoch, Rng& rng);

struct DatasetStats {
    std::string name;
    std::int64_t num_entities = 0;
    std::int64_t num_relations = 0;
    std::int64_t train = 0;
    std::int64_t valid = 0;
    std::int64_t test = 0;
    double train_degree = 0.0;  // |train| / |E|
};

DatasetStats degree_stats(const KnowledgeGraph& graph, const std::string& name = "");

}  // namespace kge

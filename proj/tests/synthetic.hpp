#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "kge/dataset.hpp"
#include "kge/rng.hpp"

namespace kge::testing {

// Random graph with duplicate-free splits, every entity/relation id in use by
// construction of the vocab (names are just e<i>/r<i>).
inline KnowledgeGraph random_graph(int num_entities, int num_relations, int n_train, int n_valid,
                                   int n_test, std::uint64_t seed) {
    KnowledgeGraph g;
    for (int i = 0; i < num_entities; ++i) g.vocab.add_entity("e" + std::to_string(i));
    for (int i = 0; i < num_relations; ++i) g.vocab.add_relation("r" + std::to_string(i));

    Rng rng(derive_seed(seed, "synthetic-graph"));
    std::set<std::tuple<int, int, int>> seen;
    auto fill = [&](std::vector<Triple>& split, int n) {
        while (static_cast<int>(split.size()) < n) {
            Triple t;
            t.h = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_entities)));
            t.r = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_relations)));
            t.t = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(num_entities)));
            if (seen.insert({t.h, t.r, t.t}).second) split.push_back(t);
        }
    };
    fill(g.train, n_train);
    fill(g.valid, n_valid);
    fill(g.test, n_test);
    return g;
}

inline void write_split(const std::filesystem::path& file, const Vocab& vocab,
                        const std::vector<Triple>& triples) {
    std::ofstream out(file, std::ios::trunc);
    for (const auto& t : triples) {
        out << vocab.entities[static_cast<std::size_t>(t.h)] << '\t'
            << vocab.relations[static_cast<std::size_t>(t.r)] << '\t'
            << vocab.entities[static_cast<std::size_t>(t.t)] << '\n';
    }
}

inline void write_dataset_dir(const std::filesystem::path& dir, const KnowledgeGraph& g) {
    std::filesystem::create_directories(dir);
    write_split(dir / "train.txt", g.vocab, g.train);
    write_split(dir / "valid.txt", g.vocab, g.valid);
    write_split(dir / "test.txt", g.vocab, g.test);
}

// Fresh scratch directory per test; wiped on entry so reruns start clean.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kge_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace kge::testing

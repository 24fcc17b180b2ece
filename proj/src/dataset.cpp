#include "kge/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace kge {

std::int32_t Vocab::add_entity(const std::string& name) {
    auto [it, inserted] = entity_to_id.try_emplace(name, num_entities());
    if (inserted) entities.push_back(name);
    return it->second;
}

std::int32_t Vocab::add_relation(const std::string& name) {
    auto [it, inserted] = relation_to_id.try_emplace(name, num_relations());
    if (inserted) relations.push_back(name);
    return it->second;
}

std::uint64_t Vocab::fingerprint() const {
    std::uint64_t h = fnv1a("vocab");
    h = splitmix64(h ^ static_cast<std::uint64_t>(entities.size()));
    for (const auto& e : entities) h = splitmix64(h ^ fnv1a(e));
    h = splitmix64(h ^ static_cast<std::uint64_t>(relations.size()));
    for (const auto& r : relations) h = splitmix64(h ^ fnv1a(r));
    return h;
}

std::vector<RawTriple> load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split file: " + path);

    std::vector<RawTriple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        auto tab1 = line.find('\t');
        auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected exactly 3 tab-separated fields");
        }
        RawTriple t{line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                    line.substr(tab2 + 1)};
        if (t[0].empty() || t[1].empty() || t[2].empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty field");
        }
        out.push_back(std::move(t));
    }
    return out;
}

KnowledgeGraph build_graph(const std::vector<RawTriple>& train,
                           const std::vector<RawTriple>& valid,
                           const std::vector<RawTriple>& test) {
    KnowledgeGraph g;
    const std::vector<RawTriple>* splits[3] = {&train, &valid, &test};
    std::vector<Triple>* out[3] = {&g.train, &g.valid, &g.test};

    for (int s = 0; s < 3; ++s) {
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(splits[s]->size() * 2);
        out[s]->reserve(splits[s]->size());
        for (const auto& raw : *splits[s]) {
            Triple t{g.vocab.add_entity(raw[0]), g.vocab.add_relation(raw[1]),
                     g.vocab.add_entity(raw[2])};
            if (!seen.insert(triple_key(t)).second) {
                ++g.dropped_duplicates[static_cast<std::size_t>(s)];
                continue;
            }
            out[s]->push_back(t);
        }
    }
    return g;
}

KnowledgeGraph load_dataset(const std::string& dir) {
    auto train = load_split(dir + "/train.txt");
    auto valid = load_split(dir + "/valid.txt");
    auto test = load_split(dir + "/test.txt");
    auto g = build_graph(train, valid, test);

    static const char* names[3] = {"train", "valid", "test"};
    for (int s = 0; s < 3; ++s) {
        if (g.dropped_duplicates[static_cast<std::size_t>(s)] > 0) {
            std::fprintf(stderr, "[dataset] %s: dropped %zu duplicate %s triples\n", dir.c_str(),
                         g.dropped_duplicates[static_cast<std::size_t>(s)], names[s]);
        }
    }
    return g;
}

void add_reciprocal_relations(KnowledgeGraph& graph) {
    const auto base = graph.vocab.num_relations();
    for (std::int32_t r = 0; r < base; ++r) {
        graph.vocab.add_relation(graph.vocab.relations[static_cast<std::size_t>(r)] + "_inverse");
    }
    for (auto* split : {&graph.train, &graph.valid, &graph.test}) {
        const auto n = split->size();
        split->reserve(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            const Triple& t = (*split)[i];
            split->push_back(Triple{t.t, t.r + base, t.h});
        }
    }
}

std::vector<KvsAllExample> build_kvsall(const std::vector<Triple>& train,
                                        std::int32_t num_entities) {
    std::unordered_map<std::uint64_t, std::size_t> index;
    index.reserve(train.size() * 2);
    std::vector<KvsAllExample> out;

    for (const auto& t : train) {
        auto key = pair_key(t.h, t.r);
        auto [it, inserted] = index.try_emplace(key, out.size());
        if (inserted) out.push_back(KvsAllExample{t.h, t.r, {}, false});
        out[it->second].tails.push_back(t.t);
    }
    for (auto& ex : out) {
        std::sort(ex.tails.begin(), ex.tails.end());
        ex.tails.erase(std::unique(ex.tails.begin(), ex.tails.end()), ex.tails.end());
        if (!ex.tails.empty() && ex.tails.back() >= num_entities) {
            throw std::runtime_error("tail id out of range in KvsAll construction");
        }
    }
    return out;
}

std::vector<MiniBatch> make_epoch_batches(const std::vector<KvsAllExample>& dataset,
                                          std::size_t batch_size, int epoch, Rng& rng) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<MiniBatch> batches;
    batches.reserve((dataset.size() + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        MiniBatch b;
        b.epoch = epoch;
        b.index = static_cast<int>(batches.size());
        const auto end = std::min(order.size(), start + batch_size);
        b.examples.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            b.examples.push_back(dataset[order[i]]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

DatasetStats degree_stats(const KnowledgeGraph& graph, const std::string& name) {
    DatasetStats s;
    s.name = name;
    s.num_entities = graph.vocab.num_entities();
    s.num_relations = graph.vocab.num_relations();
    s.train = static_cast<std::int64_t>(graph.train.size());
    s.valid = static_cast<std::int64_t>(graph.valid.size());
    s.test = static_cast<std::int64_t>(graph.test.size());
    s.train_degree = s.num_entities > 0
                         ? static_cast<double>(s.train) / static_cast<double>(s.num_entities)
                         : 0.0;
    return s;
}

}  // namespace kge

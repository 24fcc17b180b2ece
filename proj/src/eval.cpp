#include "kge/eval.hpp"

#include <algorithm>

#include "kge/kernels.hpp"

namespace kge {

const char* to_string(RankMode m) { return m == RankMode::Raw ? "raw" : "filtered"; }

RankMode rank_mode_from_string(std::string_view name) {
    if (name == "raw") return RankMode::Raw;
    if (name == "filtered") return RankMode::Filtered;
    throw std::invalid_argument("unknown rank mode: " + std::string(name));
}

const char* to_string(TieRule t) {
    switch (t) {
        case TieRule::Mean: return "mean";
        case TieRule::Optimistic: return "optimistic";
        case TieRule::Pessimistic: return "pessimistic";
    }
    return "?";
}

TieRule tie_rule_from_string(std::string_view name) {
    if (name == "mean") return TieRule::Mean;
    if (name == "optimistic") return TieRule::Optimistic;
    if (name == "pessimistic") return TieRule::Pessimistic;
    throw std::invalid_argument("unknown tie rule: " + std::string(name));
}

FilterIndex FilterIndex::build(const KnowledgeGraph& graph) {
    FilterIndex idx;
    idx.tails.reserve((graph.train.size() + graph.valid.size() + graph.test.size()) * 2);
    for (const auto* split : {&graph.train, &graph.valid, &graph.test}) {
        for (const auto& t : *split) idx.tails[pair_key(t.h, t.r)].push_back(t.t);
    }
    for (auto& [key, list] : idx.tails) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return idx;
}

const std::vector<std::int32_t>* FilterIndex::lookup(std::int32_t h, std::int32_t r) const {
    auto it = tails.find(pair_key(h, r));
    return it == tails.end() ? nullptr : &it->second;
}

double rank_of_tail(const double* scores, std::int32_t num_entities, std::int32_t true_tail,
                    const std::vector<std::int32_t>* filter, RankMode mode, TieRule tie) {
    const double st = scores[true_tail];
    std::int64_t greater = 0;
    std::int64_t equal = 0;

    if (mode == RankMode::Filtered && filter != nullptr) {
        // competitors = everything except the other known-true tails
        auto it = filter->begin();
        for (std::int32_t e = 0; e < num_entities; ++e) {
            while (it != filter->end() && *it < e) ++it;
            const bool known_true = it != filter->end() && *it == e;
            if (e == true_tail || known_true) continue;
            if (scores[e] > st) ++greater;
            else if (scores[e] == st) ++equal;
        }
    } else {
        for (std::int32_t e = 0; e < num_entities; ++e) {
            if (e == true_tail) continue;
            if (scores[e] > st) ++greater;
            else if (scores[e] == st) ++equal;
        }
    }

    switch (tie) {
        case TieRule::Optimistic: return static_cast<double>(1 + greater);
        case TieRule::Pessimistic: return static_cast<double>(1 + greater + equal);
        case TieRule::Mean: break;
    }
    return 1.0 + static_cast<double>(greater) + static_cast<double>(equal) / 2.0;
}

EvalReport evaluate(const Model& model, const std::vector<Triple>& split,
                    const FilterIndex& filter, RankMode mode, TieRule tie,
                    std::vector<double>* ranks_out) {
    const auto n = split.size();
    std::vector<double> ranks(n);

#pragma omp parallel
    {
        std::vector<double> scores(static_cast<std::size_t>(model.cfg.num_entities));
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            const Triple& tr = split[static_cast<std::size_t>(i)];
            score_tails(model, tr.h, tr.r, scores.data());
            ranks[static_cast<std::size_t>(i)] =
                rank_of_tail(scores.data(), model.cfg.num_entities, tr.t,
                             filter.lookup(tr.h, tr.r), mode, tie);
        }
    }

    EvalReport rep;
    rep.mode = mode;
    rep.n_evaluated = static_cast<std::int64_t>(n);
    for (double r : ranks) {
        rep.mrr += 1.0 / r;
        rep.hits1 += r <= 1.0 ? 1.0 : 0.0;
        rep.hits3 += r <= 3.0 ? 1.0 : 0.0;
        rep.hits10 += r <= 10.0 ? 1.0 : 0.0;
    }
    if (n > 0) {
        rep.mrr /= static_cast<double>(n);
        rep.hits1 /= static_cast<double>(n);
        rep.hits3 /= static_cast<double>(n);
        rep.hits10 /= static_cast<double>(n);
    }
    if (ranks_out) *ranks_out = std::move(ranks);
    return rep;
}

}  // namespace kge

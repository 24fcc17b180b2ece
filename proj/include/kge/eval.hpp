#pragma once

#include <string_view>
#include <unordered_map>

#include "kge/dataset.hpp"
#include "kge/model.hpp"

namespace kge {

enum class RankMode { Raw, Filtered };
enum class TieRule { Mean, Optimistic, Pessimistic };

const char* to_string(RankMode m);
RankMode rank_mode_from_string(std::string_view name);
const char* to_string(TieRule t);
TieRule tie_rule_from_string(std::string_view name);

// (h, r) -> sorted known true tails over train + valid + test
struct FilterIndex {
    std::unordered_map<std::uint64_t, std::vector<std::int32_t>> tails;

    static FilterIndex build(const KnowledgeGraph& graph);
    const std::vector<std::int32_t>* lookup(std::int32_t h, std::int32_t r) const;
};

// Rank of the true tail among all entities. Filtered mode drops the other
// known-true tails from the competition; ties resolve to the mean rank by
// default: rank = 1 + |{s_e > s_t}| + |{e != t : s_e = s_t}| / 2.
double rank_of_tail(const double* scores, std::int32_t num_entities, std::int32_t true_tail,
                    const std::vector<std::int32_t>* filter, RankMode mode,
                    TieRule tie = TieRule::Mean);

struct EvalReport {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    RankMode mode = RankMode::Filtered;
    std::int64_t n_evaluated = 0;
};

// Tail-prediction metrics over a split; parallel over triples, reduction in a
// fixed order. ranks_out, when given, receives one rank per triple in split
// order.
EvalReport evaluate(const Model& model, const std::vector<Triple>& split,
                    const FilterIndex& filter, RankMode mode, TieRule tie = TieRule::Mean,
                    std::vector<double>* ranks_out = nullptr);

}  // namespace kge

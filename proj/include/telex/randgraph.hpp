#pragma once

#include <random>

#include "telex/acg.hpp"

namespace telex {

/// Seeded random graph for scheduler stress: `actions` actions in document
/// "bench" spread over `participants` issuers, plus `constraints` constraints
/// of uniformly random type over distinct random pairs. Cycles and chained
/// Enables happen naturally; self-edges are not generated (aborts are a
/// separate concern).
inline Acg random_acg(size_t actions, size_t constraints, uint64_t seed,
                      size_t participants = 4) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0xA24BAED4963EE407ull);
    Acg acg;
    std::vector<ActionId> ids;
    ids.reserve(actions);
    std::vector<uint64_t> next_ts(participants, 1);
    for (size_t i = 0; i < actions; ++i) {
        size_t p = rng() % participants;
        Action a;
        a.id = ActionId{"bench", "p" + std::to_string(p), next_ts[p]++};
        a.app_tag = "bench";
        a.keys = {rng() % (actions / 2 + 1)};
        ids.push_back(a.id);
        acg.add_action(a);
    }
    if (actions < 2) return acg;
    for (size_t c = 0; c < constraints; ++c) {
        size_t i = rng() % actions;
        size_t j = rng() % (actions - 1);
        if (j >= i) ++j;
        auto type = static_cast<ConstraintType>(rng() % 3);
        acg.add_constraint(make_constraint(type, ids[i], ids[j]));
    }
    return acg;
}

} // namespace telex

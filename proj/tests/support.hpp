#pragma once

#include <algorithm>
#include <bit>
#include <map>
#include <vector>

#include "telex/acg.hpp"

namespace telex::testsupport {

inline ActionId aid(const std::string& doc, const std::string& issuer, uint64_t ts) {
    return ActionId{doc, issuer, ts};
}

inline Action mk_action(const std::string& doc, const std::string& issuer, uint64_t ts,
                        std::vector<uint64_t> keys = {}, const std::string& tag = "t") {
    Action a;
    a.id = aid(doc, issuer, ts);
    a.app_tag = tag;
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    a.keys = std::move(keys);
    return a;
}

// --- brute-force maximum sound-schedule oracle (graphs of <= ~16 actions) ---
//
// Independent of the scheduler: enumerates action subsets and checks
// feasibility directly (nothing banned, Enables-closed, NotAfter-acyclic
// together with the committed chain, committed actions all present).

struct BruteGraph {
    std::vector<ActionId> ids;
    std::vector<char> banned;
    std::vector<std::pair<int, int>> na;      // a before b
    std::vector<std::pair<int, int>> enables; // (enabler, enabled)
    std::vector<int> committed;               // committed order
};

inline BruteGraph brute_graph(const Acg& acg) {
    BruteGraph g;
    std::map<ActionId, int> idx;
    for (const auto& [id, act] : acg.actions()) {
        idx[id] = static_cast<int>(g.ids.size());
        g.ids.push_back(id);
        g.banned.push_back(acg.is_aborted(id) ? 1 : 0);
    }
    for (const Constraint& c : acg.constraints()) {
        if (!acg.active(c)) continue;
        int a = idx.at(c.a), b = idx.at(c.b);
        if (c.type == ConstraintType::NotAfter) {
            if (a == b)
                g.banned[a] = 1;
            else
                g.na.emplace_back(a, b);
        } else if (c.type == ConstraintType::Enables) {
            g.enables.emplace_back(a, b);
        }
    }
    int prev = -1;
    for (const ActionId& c : acg.committed_order()) {
        auto it = idx.find(c);
        if (it == idx.end()) continue;
        g.committed.push_back(it->second);
        if (prev >= 0) g.na.emplace_back(prev, it->second);
        prev = it->second;
    }
    return g;
}

inline bool brute_feasible(const BruteGraph& g, unsigned mask) {
    const int n = static_cast<int>(g.ids.size());
    for (int i = 0; i < n; ++i)
        if ((mask >> i & 1) && g.banned[i]) return false;
    for (int c : g.committed)
        if (!(mask >> c & 1)) return false;
    for (auto [a, b] : g.enables)
        if ((mask >> b & 1) && !(mask >> a & 1)) return false;
    // NotAfter acyclicity within the subset (Kahn)
    std::vector<int> indeg(n, 0);
    for (auto [a, b] : g.na)
        if ((mask >> a & 1) && (mask >> b & 1)) ++indeg[b];
    std::vector<int> stack;
    int members = 0;
    for (int i = 0; i < n; ++i) {
        if (!(mask >> i & 1)) continue;
        ++members;
        if (indeg[i] == 0) stack.push_back(i);
    }
    int popped = 0;
    while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        ++popped;
        for (auto [a, b] : g.na)
            if (a == x && (mask >> b & 1) && --indeg[b] == 0) stack.push_back(b);
    }
    return popped == members;
}

/// Size of the maximum feasible subset.
inline size_t brute_max_sound(const Acg& acg) {
    BruteGraph g = brute_graph(acg);
    const int n = static_cast<int>(g.ids.size());
    size_t best = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask)
        if (brute_feasible(g, mask))
            best = std::max(best, size_t(std::popcount(mask)));
    return best;
}

/// True iff no single excluded action (with its Enables-closure) fits in.
inline bool brute_maximal(const Acg& acg, const std::vector<ActionId>& included) {
    BruteGraph g = brute_graph(acg);
    const int n = static_cast<int>(g.ids.size());
    std::map<ActionId, int> idx;
    for (int i = 0; i < n; ++i) idx[g.ids[i]] = i;
    unsigned mask = 0;
    for (const ActionId& id : included) mask |= 1u << idx.at(id);
    for (int x = 0; x < n; ++x) {
        if (mask >> x & 1) continue;
        // x plus its transitive enablers
        unsigned extra = 1u << x;
        for (bool grew = true; grew;) {
            grew = false;
            for (auto [a, b] : g.enables)
                if ((extra >> b & 1) && !((mask | extra) >> a & 1)) {
                    extra |= 1u << a;
                    grew = true;
                }
        }
        if (brute_feasible(g, mask | extra)) return false;
    }
    return true;
}

} // namespace telex::testsupport

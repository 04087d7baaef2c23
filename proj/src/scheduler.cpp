#include "telex/scheduler.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <random>
#include <unordered_map>

namespace telex {
namespace {

// Compact indexed view of the active part of an Acg, rebuilt per request.
struct GraphView {
    std::vector<ActionId> ids; // sorted
    std::unordered_map<ActionId, int, ActionIdHash> index;
    std::vector<char> banned;     // aborted or self-NotAfter
    std::vector<char> local;      // issued by the requesting participant
    std::vector<uint64_t> ts;
    std::vector<std::vector<int>> na_out;   // active NotAfter a->b, plus committed chain
    std::vector<std::vector<int>> enablers; // active Enables(a, x): enablers[x] holds a
    std::vector<char> has_na_pred;
    std::vector<std::pair<int, int>> nc_pairs; // active NonCommuting, canonical order
    std::vector<int> committed;                // committed order, known actions only

    int n() const { return static_cast<int>(ids.size()); }
};

GraphView build_view(const Acg& acg, const std::string& local_participant) {
    GraphView v;
    v.ids.reserve(acg.actions().size());
    for (const auto& [id, act] : acg.actions()) v.ids.push_back(id);
    v.index.reserve(v.ids.size() * 2);
    for (int i = 0; i < static_cast<int>(v.ids.size()); ++i) v.index[v.ids[i]] = i;

    const int n = v.n();
    v.banned.assign(n, 0);
    v.local.assign(n, 0);
    v.ts.assign(n, 0);
    v.na_out.assign(n, {});
    v.enablers.assign(n, {});
    v.has_na_pred.assign(n, 0);

    for (int i = 0; i < n; ++i) {
        v.local[i] = v.ids[i].issuer == local_participant;
        v.ts[i] = v.ids[i].ts;
        if (acg.is_aborted(v.ids[i])) v.banned[i] = 1;
    }

    for (const Constraint& c : acg.constraints()) {
        // every graph action is in the index, so a miss means inactive
        auto ia = v.index.find(c.a);
        auto ib = v.index.find(c.b);
        if (ia == v.index.end() || ib == v.index.end()) continue;
        int a = ia->second;
        int b = ib->second;
        switch (c.type) {
        case ConstraintType::NotAfter:
            if (a == b) {
                v.banned[a] = 1;
            } else {
                v.na_out[a].push_back(b);
                v.has_na_pred[b] = 1;
            }
            break;
        case ConstraintType::Enables:
            v.enablers[b].push_back(a);
            break;
        case ConstraintType::NonCommuting:
            v.nc_pairs.emplace_back(a, b);
            break;
        }
    }

    int prev = -1;
    for (const ActionId& c : acg.committed_order()) {
        auto it = v.index.find(c);
        if (it == v.index.end()) continue;
        v.committed.push_back(it->second);
        if (prev >= 0) v.na_out[prev].push_back(it->second); // committed chain order
        prev = it->second;
    }
    return v;
}

// One greedy pass: grows a feasible set (Enables-closed, NotAfter-acyclic,
// nothing banned), attempting every action once in the given order. A single
// pass yields a maximal set: a rejected action can never become insertable.
struct Attempt {
    const GraphView& v;
    std::vector<char> included;
    std::vector<char> dead; // rejected for good within this attempt
    // DFS scratch, epoch-stamped to avoid reallocation
    std::vector<uint64_t> mark;
    std::vector<char> color;
    uint64_t epoch = 0;

    explicit Attempt(const GraphView& view)
        : v(view), included(view.n(), 0), dead(view.n(), 0),
          mark(view.n(), 0), color(view.n(), 0) {}

    // Collect x plus its transitive enablers not yet included.
    bool closure_of(int x, std::vector<int>& need) {
        need.clear();
        ++epoch;
        std::vector<int> stack{x};
        mark[x] = epoch;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            if (included[cur]) continue;
            if (v.banned[cur]) return false;
            need.push_back(cur);
            for (int e : v.enablers[cur]) {
                if (mark[e] != epoch) {
                    mark[e] = epoch;
                    stack.push_back(e);
                }
            }
        }
        return true;
    }

    // Would included ∪ need stay acyclic under NotAfter? Any new cycle must
    // pass through a `need` node, so DFS from those suffices.
    bool acyclic_with(const std::vector<int>& need) {
        ++epoch;
        auto in_scope = [&](int u) {
            return included[u] || mark[u] == epoch;
        };
        for (int t : need) mark[t] = epoch;
        std::vector<std::pair<int, size_t>> stack;
        std::vector<int> touched;
        auto col = [&](int u) -> char& { return color[u]; };
        for (int start : need) {
            if (col(start) != 0) continue;
            stack.clear();
            stack.emplace_back(start, 0);
            col(start) = 1;
            touched.push_back(start);
            while (!stack.empty()) {
                auto& [u, ei] = stack.back();
                if (ei < v.na_out[u].size()) {
                    int w = v.na_out[u][ei++];
                    if (!in_scope(w)) continue;
                    if (col(w) == 1) { // back edge: cycle
                        for (int t : touched) col(t) = 0;
                        return false;
                    }
                    if (col(w) == 0) {
                        col(w) = 1;
                        touched.push_back(w);
                        stack.emplace_back(w, 0);
                    }
                } else {
                    col(u) = 2;
                    stack.pop_back();
                }
            }
        }
        for (int t : touched) col(t) = 0;
        return true;
    }

    bool try_add(int x) {
        if (included[x] || dead[x] || v.banned[x]) return included[x];
        std::vector<int> need;
        if (!closure_of(x, need) || !acyclic_with(need)) {
            dead[x] = 1;
            return false;
        }
        for (int u : need) included[u] = 1;
        return true;
    }

    void force(int x) { included[x] = 1; }
};

// Deterministic topological order of the included set under NotAfter (plus
// the committed chain). Ready nodes drain committed-first, then by id.
std::vector<int> topo_order(const GraphView& v, const std::vector<char>& included) {
    const int n = v.n();
    std::vector<int> indeg(n, 0);
    for (int a = 0; a < n; ++a) {
        if (!included[a]) continue;
        for (int b : v.na_out[a])
            if (included[b]) ++indeg[b];
    }
    std::vector<long long> commit_rank(n, -1);
    for (size_t i = 0; i < v.committed.size(); ++i) commit_rank[v.committed[i]] = (long long)i;
    auto key = [&](int x) {
        long long primary = commit_rank[x] >= 0 ? commit_rank[x] : (1LL << 40) + x;
        return std::pair<long long, int>(primary, x);
    };
    std::set<std::pair<long long, int>> ready;
    for (int i = 0; i < n; ++i)
        if (included[i] && indeg[i] == 0) ready.insert(key(i));
    std::vector<int> order;
    while (!ready.empty()) {
        int x = ready.begin()->second;
        ready.erase(ready.begin());
        order.push_back(x);
        for (int b : v.na_out[x]) {
            if (included[b] && --indeg[b] == 0) ready.insert(key(b));
        }
    }
    return order; // feasible sets are acyclic, so this covers everything
}

Schedule finish_schedule(const Acg& acg, const GraphView& v, const std::vector<char>& included) {
    Schedule s;
    for (int x : topo_order(v, included)) s.order.push_back(v.ids[x]);
    ScheduleSignature sig = signature_of(acg, s);
    uint64_t h = 1469598103934665603ull;
    for (const auto& id : sig.included) h = fnv1a(id.str()) ^ (h * 1099511628211ull);
    for (const auto& [a, b] : sig.nc_orient)
        h = fnv1a(a.str() + ">" + b.str()) ^ (h * 1099511628211ull);
    s.sched_id = "g" + std::to_string(acg.generation()) + "-" + std::to_string(h);
    return s;
}

std::vector<int> base_priority(const GraphView& v) {
    std::vector<int> order(v.n());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (v.has_na_pred[a] != v.has_na_pred[b]) return v.has_na_pred[a] < v.has_na_pred[b];
        if (v.local[a] != v.local[b]) return v.local[a] > v.local[b];
        if (v.ts[a] != v.ts[b]) return v.ts[a] < v.ts[b];
        return a < b;
    });
    return order;
}

std::vector<char> run_attempt(const GraphView& v, const std::vector<int>& order,
                              const std::vector<int>* warm) {
    Attempt at(v);
    for (int c : v.committed) at.force(c);
    for (int c : v.committed)
        for (int e : v.enablers[c]) at.try_add(e);
    if (warm)
        for (int x : *warm) at.try_add(x);
    for (int x : order) at.try_add(x);
    return at.included;
}

struct Ranked {
    Schedule sched;
    ScheduleSignature sig;
    size_t score;
    size_t local_count;
};

std::vector<Schedule> rank_and_trim(std::vector<Ranked> cands, size_t max_candidates,
                                    const std::set<ScheduleSignature>& seen) {
    std::sort(cands.begin(), cands.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.local_count != b.local_count) return a.local_count > b.local_count;
        return a.sig < b.sig;
    });
    std::vector<Schedule> out;
    std::set<ScheduleSignature> emitted;
    for (auto& r : cands) {
        if (r.score == 0) continue;
        if (seen.count(r.sig) || !emitted.insert(r.sig).second) continue;
        out.push_back(std::move(r.sched));
        if (out.size() >= max_candidates) break;
    }
    return out;
}

Ranked make_ranked(const Acg& acg, const GraphView& v, const std::vector<char>& included) {
    Ranked r;
    r.sched = finish_schedule(acg, v, included);
    r.sig = signature_of(acg, r.sched);
    r.score = r.sched.score();
    r.local_count = 0;
    for (int i = 0; i < v.n(); ++i)
        if (included[i] && v.local[i]) ++r.local_count;
    return r;
}

} // namespace

ScheduleSignature signature_of(const Acg& acg, const Schedule& s) {
    ScheduleSignature sig;
    sig.included = s.order;
    std::sort(sig.included.begin(), sig.included.end());
    std::unordered_map<ActionId, size_t, ActionIdHash> pos;
    pos.reserve(s.order.size() * 2);
    for (size_t i = 0; i < s.order.size(); ++i) pos[s.order[i]] = i;
    for (const Constraint& c : acg.constraints()) {
        if (c.type != ConstraintType::NonCommuting) continue;
        // scheduled endpoints are necessarily in the graph, so no active() check
        auto pa = pos.find(c.a);
        auto pb = pos.find(c.b);
        if (pa == pos.end() || pb == pos.end()) continue;
        if (pa->second < pb->second)
            sig.nc_orient.emplace_back(c.a, c.b);
        else
            sig.nc_orient.emplace_back(c.b, c.a);
    }
    std::sort(sig.nc_orient.begin(), sig.nc_orient.end());
    return sig;
}

std::vector<Schedule> next_schedules(const Acg& acg, const ScheduleRequest& req,
                                     const std::set<ScheduleSignature>& seen) {
    GraphView v = build_view(acg, req.local_participant);
    std::vector<Ranked> cands;

    std::vector<int> order = base_priority(v);
    cands.push_back(make_ranked(acg, v, run_attempt(v, order, nullptr)));

    std::mt19937_64 rng(req.rng_seed * 0x9E3779B97F4A7C15ull + 0x7F4A7C15ull);
    for (size_t r = 0; r < req.restarts; ++r) {
        std::vector<int> shuffled = order;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        cands.push_back(make_ranked(acg, v, run_attempt(v, shuffled, nullptr)));
    }
    return rank_and_trim(std::move(cands), req.max_candidates, seen);
}

namespace {

// Revalidates a warm included set wholesale after a graph delta: re-closes it
// under Enables, then breaks NotAfter cycles by evicting the member a greedy
// pass in base-priority order would have attempted (and rejected) last.
// Linear passes; no per-member DFS. Returns true when anything was dropped.
bool repair_warm(const GraphView& v, const std::vector<int>& priority,
                 std::vector<char>& included) {
    const int n = v.n();
    std::vector<std::vector<int>> dependents(n); // inverse Enables adjacency
    for (int x = 0; x < n; ++x)
        for (int e : v.enablers[x]) dependents[e].push_back(x);
    std::vector<int> prio_rank(n, 0);
    for (int i = 0; i < n; ++i) prio_rank[priority[i]] = i;
    std::vector<char> is_committed(n, 0);
    for (int c : v.committed) is_committed[c] = 1;

    bool dropped = false;
    auto drop = [&](int x) {
        std::vector<int> stack{x};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            if (!included[u]) continue;
            included[u] = 0;
            dropped = true;
            for (int d : dependents[u]) stack.push_back(d); // they required u
        }
    };

    // Enables closure: pull missing enablers in; drop anything whose enabler
    // chain reaches a banned action.
    std::vector<int> work;
    for (int x = 0; x < n; ++x)
        if (included[x]) work.push_back(x);
    while (!work.empty()) {
        int x = work.back();
        work.pop_back();
        if (!included[x]) continue;
        for (int e : v.enablers[x]) {
            if (v.banned[e]) {
                drop(x);
                break;
            }
            if (!included[e]) {
                included[e] = 1;
                work.push_back(e);
            }
        }
    }

    // Cycle repair: Kahn until the set drains; undrained leftovers hold a
    // cycle, so evict the lowest-priority non-committed leftover and retry.
    for (;;) {
        std::vector<int> indeg(n, 0);
        int members = 0, popped = 0;
        for (int a = 0; a < n; ++a) {
            if (!included[a]) continue;
            ++members;
            for (int b : v.na_out[a])
                if (included[b]) ++indeg[b];
        }
        std::vector<int> stack;
        for (int i = 0; i < n; ++i)
            if (included[i] && indeg[i] == 0) stack.push_back(i);
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            ++popped;
            for (int b : v.na_out[x])
                if (included[b] && --indeg[b] == 0) stack.push_back(b);
        }
        if (popped == members) break;
        int victim = -1;
        for (int i = 0; i < n; ++i) {
            if (!included[i] || indeg[i] == 0 || is_committed[i]) continue;
            if (victim < 0 || prio_rank[i] > prio_rank[victim]) victim = i;
        }
        if (victim < 0) break; // only committed actions left: their chain is acyclic
        drop(victim);
    }
    return dropped;
}

} // namespace

IncrementalScheduler::IncrementalScheduler(const Acg& acg, ScheduleRequest req)
    : req_(std::move(req)) {
    generation_ = acg.generation();
    candidates_ = next_schedules(acg, req_);
    if (!candidates_.empty()) warm_included_ = candidates_.front().order;
    for (const auto& [id, act] : acg.actions()) known_.insert(id);
}

const std::vector<Schedule>& IncrementalScheduler::refresh(const Acg& acg) {
    if (acg.generation() == generation_) return candidates_;
    if (acg.generation() < generation_)
        throw Error(Errc::StaleState, "graph generation moved backwards");
    generation_ = acg.generation();

    GraphView v = build_view(acg, req_.local_participant);
    std::vector<char> included(v.n(), 0);
    for (const ActionId& id : warm_included_) {
        auto it = v.index.find(id);
        if (it != v.index.end() && !v.banned[it->second]) included[it->second] = 1;
    }
    for (int c : v.committed) included[c] = 1;

    std::vector<int> order = base_priority(v);
    bool dropped = repair_warm(v, order, included);

    // Extend with what a fresh pass could pick up: actions this scheduler has
    // never seen, plus — only when the repair evicted members — previously
    // rejected actions (an eviction can unblock them).
    Attempt at(v);
    at.included = included;
    for (int x : order) {
        bool fresh = known_.find(v.ids[x]) == known_.end();
        if (fresh || (dropped && !at.included[x])) at.try_add(x);
    }

    std::vector<Ranked> cands;
    cands.push_back(make_ranked(acg, v, at.included));
    candidates_ = rank_and_trim(std::move(cands), req_.max_candidates, {});
    if (!candidates_.empty()) warm_included_ = candidates_.front().order;
    for (const ActionId& id : v.ids) known_.insert(id);
    return candidates_;
}

} // namespace telex

#include "telex/reconciler.hpp"

#include <algorithm>
#include <deque>

namespace telex {

std::vector<ActionId> CommitState::doc_prefix(const std::string& doc) const {
    std::vector<ActionId> out;
    for (const ActionId& id : prefix)
        if (id.doc == doc) out.push_back(id);
    return out;
}

namespace {

// Undecided actions with a NotAfter path into the committed set can never
// join the (append-only) prefix: they are dead.
std::set<ActionId> doomed_actions(const Acg& acg, const CommitState& st) {
    // reverse reachability from committed over active NotAfter edges
    std::map<ActionId, std::vector<ActionId>> rev; // b -> list of a with NotAfter(a,b)
    for (const Constraint& c : acg.constraints()) {
        if (c.type != ConstraintType::NotAfter || c.a == c.b || !acg.active(c)) continue;
        rev[c.b].push_back(c.a);
    }
    std::deque<ActionId> queue;
    std::set<ActionId> reach;
    for (const ActionId& c : st.prefix)
        if (acg.has_action(c)) queue.push_back(c);
    while (!queue.empty()) {
        ActionId cur = queue.front();
        queue.pop_front();
        auto it = rev.find(cur);
        if (it == rev.end()) continue;
        for (const ActionId& p : it->second)
            if (reach.insert(p).second) queue.push_back(p);
    }
    std::set<ActionId> doomed;
    for (const ActionId& a : reach)
        if (!st.decided(a)) doomed.insert(a);
    return doomed;
}

} // namespace

ProposalRecord FifoReconciler::make_proposal(const Acg& view, const Schedule& sched,
                                             const std::string& proposer, uint64_t seq) {
    ProposalRecord p;
    p.proposer = proposer;
    p.seq = seq;

    std::set<ActionId> doomed = doomed_actions(view, state_);
    std::set<ActionId> in_schedule(sched.order.begin(), sched.order.end());
    std::set<ActionId> committing; // committed by earlier decisions of this proposal

    // NonCommuting partners, for Serialize emission.
    std::map<ActionId, std::vector<ActionId>> nc;
    for (const Constraint& c : view.constraints()) {
        if (c.type != ConstraintType::NonCommuting || !view.active(c)) continue;
        nc[c.a].push_back(c.b);
        nc[c.b].push_back(c.a);
    }

    for (const ActionId& id : sched.order) {
        if (state_.decided(id)) continue;
        if (doomed.count(id)) {
            p.decisions.push_back({DecisionRecord::Kind::Abort, id, {}, {}, {}});
            continue;
        }
        // A half-resolved constraint names this action together with one we
        // have not read yet; that record may impose an ordering, so hold the
        // commit until the action arrives.
        if (view.pending_ref(id)) continue;

        DecisionRecord d;
        d.kind = DecisionRecord::Kind::Commit;
        d.a = id;
        d.enablers = view.enablers_of(id);
        for (const Constraint& c : view.constraints()) {
            if (c.type != ConstraintType::NotAfter || !view.active(c) || c.a == c.b) continue;
            if (c.a == id) d.after.push_back(c.b);
        }
        // Fix the pair order for every NonCommuting partner that is already
        // (being) committed; it precedes `id` in this schedule.
        auto ncit = nc.find(id);
        if (ncit != nc.end()) {
            std::vector<ActionId> partners = ncit->second;
            std::sort(partners.begin(), partners.end());
            for (const ActionId& o : partners) {
                if (state_.committed.count(o) || committing.count(o))
                    p.decisions.push_back({DecisionRecord::Kind::Serialize, o, id, {}, {}});
            }
        }
        p.decisions.push_back(std::move(d));
        committing.insert(id);
    }

    // The schedule is maximal: whatever it excludes conflicts with what it
    // keeps (or with decisions). Propose aborting those losers.
    for (const auto& [id, act] : view.actions()) {
        if (in_schedule.count(id) || state_.decided(id)) continue;
        if (view.pending_ref(id)) continue;
        p.decisions.push_back({DecisionRecord::Kind::Abort, id, {}, {}, {}});
    }
    return p;
}

std::vector<AcceptedDecision> FifoReconciler::deliver(const ProposalRecord& p) {
    const size_t n = p.decisions.size();
    std::vector<bool> accepted(n, false);

    // A proposal applies atomically: its commits may satisfy each other's
    // Enables requirements (Atomic groups are circular), so aborts and
    // serializations apply in order first, then the commit set is resolved
    // as one batch by a fixpoint. Deterministic, so every site agrees.
    std::vector<size_t> commit_idx;
    std::set<ActionId> batch_seen;
    for (size_t i = 0; i < n; ++i) {
        const DecisionRecord& d = p.decisions[i];
        switch (d.kind) {
        case DecisionRecord::Kind::Commit:
            if (state_.decided(d.a)) break;
            if (!batch_seen.insert(d.a).second) break; // duplicate in one proposal
            commit_idx.push_back(i);
            break;
        case DecisionRecord::Kind::Abort:
            if (!state_.committed.count(d.a) && !state_.aborted.count(d.a)) {
                state_.aborted.insert(d.a);
                accepted[i] = true;
            }
            break;
        case DecisionRecord::Kind::Serialize: {
            if (state_.serialized.count({d.a, d.b})) break; // already fixed
            if (state_.serialized.count({d.b, d.a})) break; // contradicts earlier winner
            if (state_.aborted.count(d.a) || state_.aborted.count(d.b)) break;
            if (state_.committed.count(d.b) && !state_.committed.count(d.a)) break;
            if (state_.committed.count(d.a) && state_.committed.count(d.b)) {
                auto pos = [&](const ActionId& id) {
                    return std::find(state_.prefix.begin(), state_.prefix.end(), id) -
                           state_.prefix.begin();
                };
                if (pos(d.a) > pos(d.b)) break; // committed order already says otherwise
            }
            state_.serialized.insert({d.a, d.b});
            accepted[i] = true;
            break;
        }
        }
    }

    // Fixpoint over the commit batch. Enablers may sit anywhere in the batch
    // (Enables imposes membership, not order); `after` and serialization
    // predecessors are positional — the batch appends in proposal order.
    std::set<ActionId> in_batch;
    std::map<ActionId, size_t> batch_pos;
    for (size_t k = 0; k < commit_idx.size(); ++k) {
        in_batch.insert(p.decisions[commit_idx[k]].a);
        batch_pos[p.decisions[commit_idx[k]].a] = k;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t k = 0; k < commit_idx.size(); ++k) {
            const DecisionRecord& d = p.decisions[commit_idx[k]];
            if (!in_batch.count(d.a)) continue;
            bool ok = !state_.aborted.count(d.a);
            auto committed_before = [&](const ActionId& y) {
                if (state_.committed.count(y)) return true;
                auto it = batch_pos.find(y);
                return it != batch_pos.end() && in_batch.count(y) && it->second < k;
            };
            for (const ActionId& e : d.enablers)
                if (ok && !state_.committed.count(e) && !in_batch.count(e)) ok = false;
            for (const ActionId& y : d.after)
                if (ok && committed_before(y)) ok = false;
            for (const auto& [x, y] : state_.serialized) {
                if (ok && x == d.a && committed_before(y)) ok = false;
                // a serialized predecessor must land first (or be dead)
                if (ok && y == d.a && !state_.aborted.count(x) && !committed_before(x))
                    ok = false;
            }
            if (!ok) {
                in_batch.erase(d.a);
                changed = true;
            }
        }
    }
    for (size_t k = 0; k < commit_idx.size(); ++k) {
        const DecisionRecord& d = p.decisions[commit_idx[k]];
        if (!in_batch.count(d.a)) continue;
        state_.prefix.push_back(d.a);
        state_.committed.insert(d.a);
        accepted[commit_idx[k]] = true;
    }

    std::vector<AcceptedDecision> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back({p.decisions[i], accepted[i]});
    ++state_.applied_proposals;
    return out;
}

} // namespace telex

#include "telex/acg.hpp"

#include <algorithm>
#include <deque>

namespace telex {

void Acg::add_action(const Action& action) {
    auto it = actions_.find(action.id);
    if (it != actions_.end()) {
        if (it->second == action) return; // idempotent re-add
        throw Error(Errc::DuplicateDivergent,
                    "divergent re-add of action " + action.id.str());
    }
    actions_.emplace(action.id, action);
    ++generation_;
}

void Acg::add_constraint(const Constraint& raw) {
    Constraint c = make_constraint(raw.type, raw.a, raw.b);
    if (!constraints_.insert(c).second) return; // duplicates are idempotent
    touching_[c.a].push_back(c);
    if (!(c.b == c.a)) touching_[c.b].push_back(c);
    ++generation_;
}

void Acg::abort_action(const ActionId& a) {
    if (!has_action(a))
        throw Error(Errc::UnknownAction, "abort of unknown action " + a.str());
    if (is_committed(a))
        throw Error(Errc::AlreadyCommitted, "abort of committed action " + a.str());
    add_constraint(make_constraint(ConstraintType::NotAfter, a, a));
}

const Action& Acg::action(const ActionId& a) const {
    auto it = actions_.find(a);
    if (it == actions_.end())
        throw Error(Errc::UnknownAction, "unknown action " + a.str());
    return it->second;
}

bool Acg::pending_ref(const ActionId& a) const {
    auto it = touching_.find(a);
    if (it == touching_.end()) return false;
    for (const Constraint& c : it->second)
        if (!active(c)) return true;
    return false;
}

std::vector<ActionId> Acg::enablers_of(const ActionId& x) const {
    std::vector<ActionId> out;
    auto it = touching_.find(x);
    if (it == touching_.end()) return out;
    for (const Constraint& c : it->second)
        if (c.type == ConstraintType::Enables && c.b == x && active(c))
            out.push_back(c.a);
    return out;
}

bool Acg::is_sound(const Schedule& s) const {
    std::map<ActionId, size_t> pos;
    for (size_t i = 0; i < s.order.size(); ++i) {
        const ActionId& id = s.order[i];
        if (!has_action(id))
            throw Error(Errc::UnknownAction, "schedule names unknown action " + id.str());
        if (!pos.emplace(id, i).second) return false; // duplicates forbidden
    }

    for (const Constraint& c : constraints_) {
        if (!active(c)) continue;
        switch (c.type) {
        case ConstraintType::NotAfter: {
            if (c.a == c.b) { // self-antagonism: abort convention
                if (pos.count(c.a)) return false;
                break;
            }
            auto pa = pos.find(c.a);
            auto pb = pos.find(c.b);
            if (pa != pos.end() && pb != pos.end() && pa->second >= pb->second) return false;
            break;
        }
        case ConstraintType::Enables:
            if (pos.count(c.b) && !pos.count(c.a)) return false;
            break;
        case ConstraintType::NonCommuting:
            break; // a commitment-layer obligation, not a soundness condition
        }
    }

    // Decisions: aborted actions absent; committed actions (known here)
    // present, in committed relative order.
    for (const ActionId& a : aborted_)
        if (pos.count(a)) return false;
    size_t prev = 0;
    bool first = true;
    for (const ActionId& c : committed_order_) {
        if (!has_action(c)) continue;
        auto it = pos.find(c);
        if (it == pos.end()) return false;
        if (!first && it->second <= prev) return false;
        prev = it->second;
        first = false;
    }
    return true;
}

bool Acg::enables_path(const ActionId& from, const ActionId& to) const {
    if (from == to) return true;
    std::deque<ActionId> queue{from};
    std::set<ActionId> seen{from};
    while (!queue.empty()) {
        ActionId cur = queue.front();
        queue.pop_front();
        auto it = touching_.find(cur);
        if (it == touching_.end()) continue;
        for (const Constraint& c : it->second) {
            if (c.type != ConstraintType::Enables || !(c.a == cur) || !active(c)) continue;
            if (c.b == to) return true;
            if (seen.insert(c.b).second) queue.push_back(c.b);
        }
    }
    return false;
}

bool Acg::concurrent(const ActionId& a, const ActionId& b) const {
    if (!has_action(a) || !has_action(b))
        throw Error(Errc::UnknownAction, "concurrency query on unknown action");
    if (a.issuer == b.issuer) return false; // same-log order
    return !enables_path(a, b) && !enables_path(b, a);
}

void Acg::mark_committed(const ActionId& a) {
    if (committed_pos_.count(a)) return;
    aborted_.erase(a); // decisions never flip in practice; committed wins here
    committed_pos_[a] = committed_order_.size();
    committed_order_.push_back(a);
    ++generation_;
}

void Acg::mark_aborted(const ActionId& a) {
    if (is_committed(a) || aborted_.count(a)) return;
    aborted_.insert(a);
    ++generation_;
}

Acg Acg::restricted(const std::set<ActionId>& excluded) const {
    Acg out;
    for (const auto& [id, act] : actions_)
        if (!excluded.count(id)) out.add_action(act);
    for (const Constraint& c : constraints_)
        if (!excluded.count(c.a) && !excluded.count(c.b)) out.add_constraint(c);
    for (const ActionId& c : committed_order_)
        if (!excluded.count(c)) out.mark_committed(c);
    for (const ActionId& a : aborted_)
        if (!excluded.count(a)) out.mark_aborted(a);
    return out;
}

} // namespace telex

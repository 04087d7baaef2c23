#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "telex/errors.hpp"
#include "telex/ids.hpp"

namespace telex {

/// The action-constraint graph of one document (or bound-document group).
///
/// Single-writer, multi-reader value: one mutator at a time, readers key
/// cached derivations off generation(). Constraints whose endpoints are not
/// all present are held pending and become active when the actions arrive;
/// the net result is independent of record arrival order.
class Acg {
public:
    void add_action(const Action& action);
    void add_constraint(const Constraint& c);

    /// Local abort request: marks the action antagonistic with itself.
    void abort_action(const ActionId& a);

    /// The soundness predicate. Independent of the scheduler; used as the
    /// oracle for every schedule any module emits.
    bool is_sound(const Schedule& s) const;

    /// True iff the actions were logged independently: different issuers and
    /// no Enables-path between them in either direction.
    bool concurrent(const ActionId& a, const ActionId& b) const;

    // Commitment decisions (reflected here by the reconciler).
    void mark_committed(const ActionId& a);
    void mark_aborted(const ActionId& a);
    bool is_committed(const ActionId& a) const { return committed_pos_.count(a) != 0; }
    bool is_aborted(const ActionId& a) const { return aborted_.count(a) != 0; }
    bool is_decided(const ActionId& a) const { return is_committed(a) || is_aborted(a); }
    const std::vector<ActionId>& committed_order() const { return committed_order_; }
    const std::set<ActionId>& aborted() const { return aborted_; }

    bool has_action(const ActionId& a) const { return actions_.count(a) != 0; }
    const Action& action(const ActionId& a) const;
    const std::map<ActionId, Action>& actions() const { return actions_; }
    const std::set<Constraint>& constraints() const { return constraints_; }

    /// Active constraints have every endpoint present in the graph.
    bool active(const Constraint& c) const {
        return has_action(c.a) && has_action(c.b);
    }

    /// True iff some pending constraint names `a` together with an action the
    /// graph has not seen yet. Used to defer commitment of `a`.
    bool pending_ref(const ActionId& a) const;

    /// Direct active Enables-predecessors of x (all a with Enables(a, x)).
    std::vector<ActionId> enablers_of(const ActionId& x) const;

    /// Copy of this graph without the given actions (and any constraint
    /// touching them). Decisions on surviving actions are preserved.
    Acg restricted(const std::set<ActionId>& excluded) const;

    uint64_t generation() const { return generation_; }

    size_t action_count() const { return actions_.size(); }

private:
    bool enables_path(const ActionId& from, const ActionId& to) const;

    std::map<ActionId, Action> actions_;
    std::set<Constraint> constraints_;
    // endpoint index over resolved constraints (present regardless of activity)
    std::map<ActionId, std::vector<Constraint>> touching_;

    std::map<ActionId, uint64_t> committed_pos_;
    std::vector<ActionId> committed_order_;
    std::set<ActionId> aborted_;

    uint64_t generation_ = 0;
};

} // namespace telex

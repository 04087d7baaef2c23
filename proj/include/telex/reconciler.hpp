#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "telex/acg.hpp"
#include "telex/wire.hpp"

namespace telex {

/// Commitment state derived purely from the delivered proposal sequence.
/// Every site applies the same deterministic acceptance rules to the same
/// total order, so states agree without further coordination.
struct CommitState {
    std::vector<ActionId> prefix; // commit order, grows only
    std::set<ActionId> committed;
    std::set<ActionId> aborted;
    std::set<std::pair<ActionId, ActionId>> serialized; // accepted (first, second) orders
    uint64_t applied_proposals = 0;

    bool decided(const ActionId& a) const { return committed.count(a) || aborted.count(a); }

    /// Order-preserving restriction of the prefix to one document.
    std::vector<ActionId> doc_prefix(const std::string& doc) const;

    bool operator==(const CommitState&) const = default;
};

struct AcceptedDecision {
    DecisionRecord decision;
    bool accepted = false;
};

/// The reconciler is a plug-in; FIFO is the shipped implementation.
class ReconcilerPlugin {
public:
    virtual ~ReconcilerPlugin() = default;
    virtual ProposalRecord make_proposal(const Acg& view, const Schedule& local_schedule,
                                         const std::string& proposer, uint64_t seq) = 0;
    virtual std::vector<AcceptedDecision> deliver(const ProposalRecord& p) = 0;
    virtual const CommitState& state() const = 0;
};

/// First-in-first-out commitment: proposals apply in multicast order; each
/// decision is kept iff consistent with the previous winners, otherwise it is
/// discarded individually (the proposer will re-propose).
class FifoReconciler : public ReconcilerPlugin {
public:
    /// Commits the schedule's undecided actions in schedule order (with the
    /// dependency annotations receivers check), serializes realized
    /// NonCommuting pairs, and aborts actions the schedule excludes.
    ProposalRecord make_proposal(const Acg& view, const Schedule& local_schedule,
                                 const std::string& proposer, uint64_t seq) override;

    std::vector<AcceptedDecision> deliver(const ProposalRecord& p) override;

    const CommitState& state() const override { return state_; }

    static std::vector<ActionId> committed_prefix(const CommitState& s) { return s.prefix; }

private:
    CommitState state_;
};

} // namespace telex

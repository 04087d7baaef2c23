#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "telex/acg.hpp"

namespace telex {

struct ScheduleRequest {
    size_t max_candidates = 4;
    std::string local_participant;
    size_t restarts = 16;
    uint64_t rng_seed = 0;
};

/// Two schedules are equivalent iff they include the same action set and
/// realize the same orientations for every NonCommuting pair.
struct ScheduleSignature {
    std::vector<ActionId> included;                      // sorted
    std::vector<std::pair<ActionId, ActionId>> nc_orient; // sorted, (first, second) as scheduled

    auto operator<=>(const ScheduleSignature&) const = default;
};

ScheduleSignature signature_of(const Acg& acg, const Schedule& s);

/// Best-first sound schedule generation: randomized greedy with restarts.
/// Every returned schedule is sound, maximal, pairwise non-equivalent and
/// not in `seen`; ordering is (score desc, local actions desc, deterministic).
std::vector<Schedule> next_schedules(const Acg& acg, const ScheduleRequest& req,
                                     const std::set<ScheduleSignature>& seen = {});

/// Keeps candidates warm across small graph deltas; refresh() after a delta
/// matches a from-scratch recomputation for the top candidate.
class IncrementalScheduler {
public:
    IncrementalScheduler(const Acg& acg, ScheduleRequest req);

    /// Recompute candidates against the (possibly mutated) graph. Throws
    /// StaleState if the graph's generation moved backwards.
    const std::vector<Schedule>& refresh(const Acg& acg);

    const std::vector<Schedule>& candidates() const { return candidates_; }

private:
    ScheduleRequest req_;
    uint64_t generation_ = 0;
    std::vector<Schedule> candidates_;
    std::vector<ActionId> warm_included_; // top candidate's set, seeds the next pass
    std::set<ActionId> known_;            // only genuinely new actions get attempted
};

} // namespace telex

#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace telex {

/// Outcome of the scripted calendar run. Hard failures (I/O, protocol)
/// throw; expectation checks land in the flags so callers can report each.
struct CalendarScenarioResult {
    size_t t1_classes = 0;     // distinct schedule signatures before Lamia's ops
    size_t t1_top_score = 0;   // Monday alternative (carries the extra invite)
    size_t t1_second_score = 0;
    bool upcall_fired_once = false; // (GL invite, NS1 invite) pair, exactly once
    size_t t2_classes = 0;
    size_t t2_top_score = 0;   // NS-Tuesday + GL
    size_t t2_second_score = 0; // NS-Monday alone
    bool both_solutions_seen = false;
    bool converged = false;          // identical commit states at all sites
    bool all_decided = false;
    bool no_double_booking = false;
    std::vector<std::string> report; // key=value lines

    bool passed() const {
        return t1_classes == 2 && t1_top_score == 4 && t1_second_score == 3 &&
               upcall_fired_once && t2_classes == 2 && t2_top_score == 6 &&
               t2_second_score == 4 && both_solutions_seen && converged && all_decided &&
               no_double_booking;
    }
};

CalendarScenarioResult calendar_scenario(const std::filesystem::path& root, uint64_t seed);

/// Line-oriented scenario scripts driving SRDA simulations:
///   seed N | latency MIN MAX | site NAME | open SITE DOC
///   at TICK insert SITE DOC TID k=v... | at TICK modify SITE DOC TID k=v...
///   at TICK remove SITE DOC TID | at TICK disconnect SITE | at TICK reconnect SITE
///   start PERIOD | run TICK | quiesce MAXTICKS
///   assert converged DOC | assert all-decided | assert tuple DOC TID k=v...
///   assert no-tuple DOC TID
/// `#` starts a comment. Report lines are deterministic under a fixed seed.
struct ScriptResult {
    bool ok = true;
    std::string error; // first failed assertion or parse problem
    std::vector<std::string> report;
};

ScriptResult run_script(std::istream& in, const std::filesystem::path& root,
                        std::optional<uint64_t> seed_override = std::nullopt);

} // namespace telex

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace telex {

struct SchedBenchResult {
    double full_ms = 0;        // from-scratch candidate generation
    double incremental_ms = 0; // refresh after a 10-record delta
    size_t full_score = 0;
    size_t incremental_score = 0;
    std::vector<std::string> report; // key=value lines
};

SchedBenchResult bench_schedule(size_t actions, size_t constraints, uint64_t seed);

struct CommitBenchResult {
    double mean_latency_ticks = 0; // submit tick -> first committed tick
    size_t committed = 0;
    size_t aborted = 0;
    size_t submitted = 0;
    bool converged = false; // identical commit states across sites
    std::vector<std::string> report;
};

/// SRDA workload over a simulated network: `n_sites` sites share one
/// document, each submitting `ops_per_site` writes one every `interval`
/// ticks. Latency is measured in simulation ticks (informational; wall time
/// is meaningless here).
CommitBenchResult bench_commit(const std::filesystem::path& root, size_t n_sites,
                               size_t ops_per_site, uint64_t interval, uint64_t seed);

} // namespace telex

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "telex/errors.hpp"

namespace telex {

/// Deterministic discrete-tick simulation of the sync layer: per-log byte
/// prefix propagation with update notifications, site disconnection, and a
/// sequencer-backed atomic multicast. Single-threaded by contract; callbacks
/// must not reenter run_until_quiescent.
class SimNet {
public:
    struct LogKey {
        std::string doc;
        std::string participant;
        auto operator<=>(const LogKey&) const = default;
    };

    struct SiteCallbacks {
        /// New replica bytes for a remote log: full replica content and the
        /// previously delivered length.
        std::function<void(const LogKey&, const std::vector<uint8_t>&, size_t old_len)> on_log;
        /// Atomic multicast delivery, in the single global total order.
        std::function<void(const std::string& group, const std::vector<uint8_t>&)> on_amcast;
    };

    explicit SimNet(uint64_t rng_seed = 0, uint64_t latency_min = 1, uint64_t latency_max = 1)
        : rng_(rng_seed ^ 0xD1B54A32D192ED03ull), lat_min_(latency_min), lat_max_(latency_max) {}

    void add_site(const std::string& site, SiteCallbacks cbs);
    void join_group(const std::string& group, const std::string& site);

    /// Extends `site`'s authoritative copy of a log it owns and schedules
    /// prefix deliveries to every other site.
    void publish_append(const std::string& site, const LogKey& key,
                        const std::vector<uint8_t>& bytes);

    void amcast(const std::string& group, const std::string& sender,
                const std::vector<uint8_t>& message);

    void disconnect(const std::string& site);
    void reconnect(const std::string& site);
    bool connected(const std::string& site) const { return !disconnected_.count(site); }

    /// Schedule an arbitrary callback (timers, scripted workload events).
    void at(uint64_t tick, std::function<void()> fn);

    uint64_t now() const { return now_; }

    /// Drains the event queue; throws NotQuiescent past max_ticks.
    uint64_t run_until_quiescent(uint64_t max_ticks = UINT64_MAX);

    /// Runs events up to and including `tick` only.
    void run_until(uint64_t tick);

    const std::vector<uint8_t>& source_log(const LogKey& key) const;
    /// Known logs of one document (anything ever published under its id).
    std::vector<LogKey> doc_logs(const std::string& doc) const;
    const std::vector<uint8_t>& replica(const std::string& site, const LogKey& key) const;
    size_t replica_len(const std::string& site, const LogKey& key) const;
    std::vector<std::string> sites() const;

private:
    struct Event {
        uint64_t tick;
        uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& o) const {
            return std::tie(tick, seq) > std::tie(o.tick, o.seq);
        }
    };

    uint64_t draw_latency();
    void schedule(uint64_t tick, std::function<void()> fn);
    void deliver_log(const std::string& dest, const LogKey& key, size_t upto);
    void catch_up(const std::string& site);
    void pump_amcast(const std::string& dest);

    uint64_t now_ = 0;
    uint64_t seqno_ = 0;
    std::mt19937_64 rng_;
    uint64_t lat_min_, lat_max_;

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> pending_;

    std::map<std::string, SiteCallbacks> sites_;
    std::set<std::string> disconnected_;

    // Authoritative log bytes live at the owning site; replicas only ever
    // hold a prefix (deliveries carry an upto-offset, applied monotonically).
    std::map<LogKey, std::vector<uint8_t>> source_;
    std::map<LogKey, std::string> log_owner_;
    std::map<std::pair<std::string, LogKey>, std::vector<uint8_t>> replicas_;

    // atomic multicast: one global sequence across all groups
    struct Msg {
        std::string group;
        std::vector<uint8_t> bytes;
    };
    std::vector<Msg> gseq_;
    std::map<std::string, std::set<std::string>> groups_; // group -> members
    std::map<std::string, size_t> delivered_upto_;         // site -> next gseq index
    std::map<std::string, std::vector<Msg>> held_sends_;   // buffered while sender disconnected
    std::map<std::string, std::set<size_t>> arrived_;      // site -> gseq indexes seen

    static const std::vector<uint8_t> empty_;
};

} // namespace telex

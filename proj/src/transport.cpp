#include "telex/transport.hpp"

#include <algorithm>

namespace telex {

const std::vector<uint8_t> SimNet::empty_{};

void SimNet::add_site(const std::string& site, SiteCallbacks cbs) {
    sites_[site] = std::move(cbs);
    delivered_upto_.emplace(site, 0);
}

void SimNet::join_group(const std::string& group, const std::string& site) {
    groups_[group].insert(site);
}

uint64_t SimNet::draw_latency() {
    if (lat_max_ <= lat_min_) return lat_min_;
    return lat_min_ + rng_() % (lat_max_ - lat_min_ + 1);
}

void SimNet::schedule(uint64_t tick, std::function<void()> fn) {
    pending_.push(Event{tick, seqno_++, std::move(fn)});
}

void SimNet::at(uint64_t tick, std::function<void()> fn) {
    schedule(std::max(tick, now_), std::move(fn));
}

void SimNet::publish_append(const std::string& site, const LogKey& key,
                            const std::vector<uint8_t>& bytes) {
    auto owner = log_owner_.find(key);
    if (owner == log_owner_.end())
        log_owner_[key] = site;
    else if (owner->second != site)
        throw Error(Errc::NotOwner, "log " + key.doc + "/" + key.participant +
                                        " is published by " + owner->second);
    auto& src = source_[key];
    src.insert(src.end(), bytes.begin(), bytes.end());
    size_t upto = src.size();

    for (const auto& [dest, cbs] : sites_) {
        if (dest == site) continue;
        if (disconnected_.count(site) || disconnected_.count(dest)) continue;
        uint64_t tick = now_ + draw_latency();
        std::string d = dest;
        LogKey k = key;
        schedule(tick, [this, d, k, upto] { deliver_log(d, k, upto); });
    }
}

void SimNet::deliver_log(const std::string& dest, const LogKey& key, size_t upto) {
    if (disconnected_.count(dest)) return; // reconnect catch-up covers it
    auto src_owner = log_owner_.find(key);
    if (src_owner != log_owner_.end() && disconnected_.count(src_owner->second)) return;
    auto& rep = replicas_[{dest, key}];
    const auto& src = source_.at(key);
    upto = std::min(upto, src.size());
    if (upto <= rep.size()) return;
    size_t old_len = rep.size();
    rep.assign(src.begin(), src.begin() + static_cast<long>(upto));
    auto& cbs = sites_.at(dest);
    if (cbs.on_log) cbs.on_log(key, rep, old_len);
}

void SimNet::amcast(const std::string& group, const std::string& sender,
                    const std::vector<uint8_t>& message) {
    auto git = groups_.find(group);
    if (git == groups_.end() || git->second.empty()) return; // empty group: no-op
    if (!git->second.count(sender))
        throw Error(Errc::NotOwner, "amcast sender " + sender + " not in group " + group);
    if (disconnected_.count(sender)) {
        held_sends_[sender].push_back(Msg{group, message});
        return;
    }
    size_t idx = gseq_.size();
    gseq_.push_back(Msg{group, message});
    for (const std::string& member : git->second) {
        std::string m = member;
        schedule(now_ + draw_latency(), [this, m, idx] {
            arrived_[m].insert(idx);
            pump_amcast(m);
        });
    }
}

void SimNet::pump_amcast(const std::string& dest) {
    if (disconnected_.count(dest)) return;
    auto& next = delivered_upto_[dest];
    auto& arrived = arrived_[dest];
    while (next < gseq_.size()) {
        const Msg& msg = gseq_[next];
        auto git = groups_.find(msg.group);
        bool member = git != groups_.end() && git->second.count(dest);
        if (!member) { ++next; continue; }
        if (!arrived.count(next)) break; // total order: wait for predecessors
        arrived.erase(next);
        size_t idx = next++;
        auto& cbs = sites_.at(dest);
        if (cbs.on_amcast) cbs.on_amcast(gseq_[idx].group, gseq_[idx].bytes);
    }
}

void SimNet::disconnect(const std::string& site) { disconnected_.insert(site); }

void SimNet::reconnect(const std::string& site) {
    if (!disconnected_.erase(site)) return;
    std::string s = site;
    schedule(now_ + draw_latency(), [this, s] { catch_up(s); });
}

void SimNet::catch_up(const std::string& site) {
    if (disconnected_.count(site)) return; // disconnected again before catch-up

    // Pull: everything this site missed.
    for (const auto& [key, src] : source_) {
        if (log_owner_[key] == site) continue;
        if (disconnected_.count(log_owner_[key])) continue;
        if (replica_len(site, key) < src.size()) deliver_log(site, key, src.size());
    }
    // Push: everything this site produced while offline.
    for (const auto& [key, src] : source_) {
        if (log_owner_[key] != site) continue;
        for (const auto& [dest, cbs] : sites_) {
            if (dest == site || disconnected_.count(dest)) continue;
            if (replica_len(dest, key) < src.size()) deliver_log(dest, key, src.size());
        }
    }
    // Buffered multicasts get sequenced now, in send order.
    auto held = held_sends_.find(site);
    if (held != held_sends_.end()) {
        std::vector<Msg> msgs = std::move(held->second);
        held_sends_.erase(held);
        for (Msg& m : msgs) amcast(m.group, site, m.bytes);
    }
    // Deliver any multicasts that arrived while offline.
    for (size_t i = delivered_upto_[site]; i < gseq_.size(); ++i) arrived_[site].insert(i);
    pump_amcast(site);
}

uint64_t SimNet::run_until_quiescent(uint64_t max_ticks) {
    while (!pending_.empty()) {
        Event ev = pending_.top();
        pending_.pop();
        if (ev.tick > max_ticks)
            throw Error(Errc::NotQuiescent,
                        "not quiescent after " + std::to_string(max_ticks) + " ticks");
        now_ = std::max(now_, ev.tick);
        ev.fn();
    }
    return now_;
}

void SimNet::run_until(uint64_t tick) {
    while (!pending_.empty() && pending_.top().tick <= tick) {
        Event ev = pending_.top();
        pending_.pop();
        now_ = std::max(now_, ev.tick);
        ev.fn();
    }
    now_ = std::max(now_, tick);
}

const std::vector<uint8_t>& SimNet::source_log(const LogKey& key) const {
    auto it = source_.find(key);
    return it == source_.end() ? empty_ : it->second;
}

std::vector<SimNet::LogKey> SimNet::doc_logs(const std::string& doc) const {
    std::vector<LogKey> out;
    for (const auto& [key, owner] : log_owner_)
        if (key.doc == doc) out.push_back(key);
    return out;
}

const std::vector<uint8_t>& SimNet::replica(const std::string& site, const LogKey& key) const {
    auto it = replicas_.find({site, key});
    return it == replicas_.end() ? empty_ : it->second;
}

size_t SimNet::replica_len(const std::string& site, const LogKey& key) const {
    return replica(site, key).size();
}

std::vector<std::string> SimNet::sites() const {
    std::vector<std::string> out;
    for (const auto& [s, cbs] : sites_) out.push_back(s);
    return out;
}

} // namespace telex

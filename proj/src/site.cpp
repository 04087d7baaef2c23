#include "telex/site.hpp"

#include <algorithm>

namespace fs = std::filesystem;

namespace telex {

Site::Site(std::string participant, fs::path root, SimNet* net, uint64_t rng_seed,
           uint64_t sched_period, uint64_t chunk_threshold)
    : participant_(std::move(participant)), root_(std::move(root)), net_(net), seed_(rng_seed),
      period_(sched_period), chunk_threshold_(chunk_threshold) {
    if (net_) {
        SimNet::SiteCallbacks cbs;
        cbs.on_log = [this](const SimNet::LogKey& key, const std::vector<uint8_t>& rep,
                            size_t old_len) { handle_log(key, rep, old_len); };
        cbs.on_amcast = [this](const std::string& group, const std::vector<uint8_t>& bytes) {
            if (group == kCommitGroup) handle_proposal(bytes);
        };
        net_->add_site(participant_, std::move(cbs));
        net_->join_group(kCommitGroup, participant_);
    }
}

void Site::register_app(const std::string& app_tag, AppCallbacks cbs) {
    apps_[app_tag] = std::move(cbs);
}

Site::DocContext& Site::ctx(const std::string& doc) {
    auto it = docs_.find(doc);
    if (it == docs_.end()) throw Error(Errc::DocNotOpen, "document not open: " + doc);
    return it->second;
}

const Site::DocContext& Site::ctx(const std::string& doc) const {
    auto it = docs_.find(doc);
    if (it == docs_.end()) throw Error(Errc::DocNotOpen, "document not open: " + doc);
    return it->second;
}

const Acg& Site::acg(const std::string& doc) const { return ctx(doc).acg; }

const std::optional<Schedule>& Site::last_delivered(const std::string& doc) const {
    return ctx(doc).delivered;
}

void Site::open_doc(const std::string& doc_id) {
    if (docs_.count(doc_id)) return;
    DocContext& dc = docs_[doc_id];
    dc.writer = std::make_unique<LogWriter>(root_, doc_id, participant_, chunk_threshold_);
    dc.meta = std::make_unique<DocumentMeta>(root_, doc_id);
    dc.filters = dc.meta->list_filters();

    // Replay our own log: rebuild the graph, restore the timestamp counter,
    // and re-publish anything the transport has not seen yet. Suspicion runs
    // after the replay so previously logged constraints deduplicate.
    std::vector<Action> replayed;
    auto seqs = chunk_seqs(dc.writer->dir());
    LogCursor cursor{seqs.empty() ? 1 : seqs.front(), 0};
    LogReadResult own = read_from(dc.writer->dir(), cursor);
    size_t published = net_ ? net_->source_log({doc_id, participant_}).size() : 0;
    size_t stream_pos = 0;
    for (const ReadRecord& rr : own.records) {
        if (const auto* a = std::get_if<Action>(&rr.record)) {
            dc.next_ts = std::max(dc.next_ts, a->id.ts + 1);
            if (!dc.acg.has_action(a->id)) {
                dc.acg.add_action(*a);
                if (dc.app_tag.empty()) dc.app_tag = a->app_tag;
                replayed.push_back(*a);
            }
        } else if (const auto* cr = std::get_if<ConstraintRecord>(&rr.record)) {
            Constraint c = cr->resolve(doc_id, participant_);
            dc.acg.add_constraint(c);
            std::string other = c.a.doc == doc_id ? c.b.doc : c.a.doc;
            if (other != doc_id && docs_.count(other)) docs_[other].acg.add_constraint(c);
        }
        if (net_) {
            std::vector<uint8_t> frame = encode_record(rr.record);
            if (stream_pos >= published)
                net_->publish_append(participant_, {doc_id, participant_}, frame);
            stream_pos += frame.size();
        }
    }

    // Catch up on replicated logs the transport already delivered.
    if (net_) {
        for (const SimNet::LogKey& key : net_->doc_logs(doc_id)) {
            if (key.participant == participant_) continue;
            consume_replica(dc, key, net_->replica(participant_, key));
        }
    }
    for (const Action& a : replayed) suspicion(a);
    sync_decisions();
}

void Site::close_doc(const std::string& doc_id) {
    if (!docs_.erase(doc_id)) throw Error(Errc::DocNotOpen, "document not open: " + doc_id);
}

ActionId Site::submit(const std::string& doc, Action action,
                      const std::vector<Constraint>& constraints) {
    DocContext& dc = ctx(doc);
    action.id = ActionId{doc, participant_, dc.next_ts++};
    std::sort(action.keys.begin(), action.keys.end());
    action.keys.erase(std::unique(action.keys.begin(), action.keys.end()), action.keys.end());

    dc.acg.add_action(action);
    if (dc.app_tag.empty()) dc.app_tag = action.app_tag;
    publish(dc, doc, action);
    for (const Constraint& c : constraints) log_constraint(c);

    suspicion(action);
    if (started_ && !timer_armed_) arm_timer();
    return action.id;
}

void Site::submit_constraints(const std::string& doc, const std::vector<Constraint>& cs) {
    ctx(doc); // DocNotOpen check
    for (const Constraint& c : cs) log_constraint(c);
    if (started_ && !timer_armed_) arm_timer();
}

void Site::request_abort(const std::string& doc, const ActionId& a) {
    DocContext& dc = ctx(doc);
    Constraint c = make_constraint(ConstraintType::NotAfter, a, a);
    bool known = dc.acg.constraints().count(c) != 0;
    dc.acg.abort_action(a); // validates: known action, not committed
    if (!known) publish(dc, doc, ConstraintRecord::from(c, doc, participant_));
    if (started_ && !timer_armed_) arm_timer();
}

void Site::add_filter(const std::string& doc, const FilterSpec& f, bool persist) {
    DocContext& dc = ctx(doc);
    for (const FilterSpec& existing : dc.filters)
        if (existing.name == f.name)
            throw Error(Errc::NameCollision, "filter exists: " + f.name);
    if (persist) dc.meta->save_filter(f);
    dc.filters.push_back(f);
}

void Site::remove_filter(const std::string& doc, const std::string& name) {
    DocContext& dc = ctx(doc);
    auto it = std::find_if(dc.filters.begin(), dc.filters.end(),
                           [&](const FilterSpec& f) { return f.name == name; });
    if (it == dc.filters.end()) throw Error(Errc::NotFound, "no such filter: " + name);
    dc.filters.erase(it);
    try {
        dc.meta->remove_filter(name);
    } catch (const Error& e) {
        if (e.code() != Errc::NotFound) throw; // in-memory only: nothing persisted
    }
}

void Site::save_snapshot(const std::string& doc, const std::string& name) {
    DocContext& dc = ctx(doc);
    SnapshotMeta s;
    s.name = name;
    if (dc.delivered) s.schedule = dc.delivered->order;
    auto app = apps_.find(dc.app_tag);
    if (app != apps_.end() && app->second.materialise)
        s.materialised = app->second.materialise(doc);
    dc.meta->save_snapshot(s);
}

// --- record flow -------------------------------------------------------------

void Site::publish(DocContext& dc, const std::string& doc, const Record& rec) {
    std::vector<uint8_t> frame = encode_record(rec);
    dc.writer->append_bytes(frame);
    if (net_) net_->publish_append(participant_, {doc, participant_}, frame);
}

void Site::handle_log(const SimNet::LogKey& key, const std::vector<uint8_t>& replica,
                      size_t /*old_len*/) {
    auto it = docs_.find(key.doc);
    if (it == docs_.end()) return; // replica retained; open_doc catches up later
    consume_replica(it->second, key, replica);
    sync_decisions();
    if (started_ && !timer_armed_ && undecided_work()) arm_timer();
}

void Site::consume_replica(DocContext& dc, const SimNet::LogKey& key,
                           const std::vector<uint8_t>& replica) {
    size_t& off = dc.consumed[key];
    while (off < replica.size()) {
        DecodeResult dr = decode_record(std::span<const uint8_t>(replica), off);
        if (dr.status == DecodeStatus::Torn) break; // wait for the rest
        if (dr.status == DecodeStatus::Ok) apply_record(dc, key, dr.record);
        off = dr.next_offset; // corrupt frames: skip and resync
    }
}

void Site::apply_record(DocContext& dc, const SimNet::LogKey& key, const Record& rec) {
    if (const auto* a = std::get_if<Action>(&rec)) {
        if (dc.acg.has_action(a->id)) return;
        dc.acg.add_action(*a);
        if (dc.app_tag.empty()) dc.app_tag = a->app_tag;
        suspicion(*a);
    } else if (const auto* cr = std::get_if<ConstraintRecord>(&rec)) {
        Constraint c = cr->resolve(key.doc, key.participant);
        dc.acg.add_constraint(c);
        std::string other = c.a.doc == key.doc ? c.b.doc : c.a.doc;
        if (other != key.doc && docs_.count(other)) docs_[other].acg.add_constraint(c);
    }
    // proposal records never travel through document logs
}

void Site::suspicion(const Action& incoming) {
    auto app = apps_.find(incoming.app_tag);
    for (auto& [doc, dc] : docs_) {
        for (const auto& [id, other] : dc.acg.actions()) {
            if (id == incoming.id || other.app_tag != incoming.app_tag) continue;
            if (!incoming.shares_key(other)) continue;
            bool conc = doc == incoming.id.doc ? dc.acg.concurrent(incoming.id, id)
                                               : id.issuer != incoming.id.issuer;
            if (!conc) continue;
            auto pair = std::minmax(incoming.id, id);
            if (!upcalled_.insert({pair.first, pair.second}).second) continue;
            if (app == apps_.end() || !app->second.get_constraint) continue;
            upcall_log_.push_back({pair.first, pair.second});
            for (const Constraint& c : app->second.get_constraint(incoming, other))
                log_constraint(c);
        }
    }
}

void Site::log_constraint(const Constraint& raw) {
    Constraint c = make_constraint(raw.type, raw.a, raw.b);
    std::vector<std::string> targets{c.a.doc};
    if (c.b.doc != c.a.doc) targets.push_back(c.b.doc); // cross-doc: both logs
    // dedup by canonical identity: an equivalent record may already be known
    // (replicated from another site, or replayed from our own log)
    for (const std::string& d : targets)
        if (docs_.count(d) && docs_[d].acg.constraints().count(c)) return;
    for (const std::string& d : targets) {
        DocContext& dc = ctx(d);
        dc.acg.add_constraint(c);
        publish(dc, d, ConstraintRecord::from(c, d, participant_));
    }
}

// --- commitment --------------------------------------------------------------

void Site::handle_proposal(const std::vector<uint8_t>& bytes) {
    DecodeResult dr = decode_record(std::span<const uint8_t>(bytes), 0);
    if (dr.status != DecodeStatus::Ok) return;
    const auto* p = std::get_if<ProposalRecord>(&dr.record);
    if (!p) return;

    std::vector<AcceptedDecision> results = reconciler_.deliver(*p);
    if (!decisions_log_)
        decisions_log_ = std::make_unique<LogWriter>(root_, "_decisions", participant_);
    decisions_log_->append(*p);
    sync_decisions();

    bool progressed = std::any_of(results.begin(), results.end(),
                                  [](const AcceptedDecision& r) { return r.accepted; });
    if (progressed && started_ && !timer_armed_) arm_timer(); // deliver final schedules
}

void Site::sync_decisions() {
    const CommitState& st = reconciler_.state();
    for (auto& [doc, dc] : docs_) {
        // Reflect commits in prefix order; stop at the first one whose action
        // has not arrived yet so the committed chain keeps the global order.
        std::vector<ActionId> dp = st.doc_prefix(doc);
        while (dc.marked_commits < dp.size() && dc.acg.has_action(dp[dc.marked_commits])) {
            dc.acg.mark_committed(dp[dc.marked_commits]);
            ++dc.marked_commits;
        }
        for (const ActionId& a : st.aborted)
            if (a.doc == doc && dc.acg.has_action(a)) dc.acg.mark_aborted(a);
        for (const auto& [x, y] : st.serialized)
            if (x.doc == doc || y.doc == doc)
                dc.acg.add_constraint(make_constraint(ConstraintType::NotAfter, x, y));
    }
}

bool Site::undecided_work() const {
    const CommitState& st = reconciler_.state();
    for (const auto& [doc, dc] : docs_) {
        std::set<ActionId> excl = filter_exclusion(dc.acg, dc.filters);
        for (const auto& [id, act] : dc.acg.actions())
            if (!excl.count(id) && !st.decided(id)) return true;
    }
    return false;
}

// --- scheduling rounds ---------------------------------------------------------

void Site::start() {
    if (!net_) return; // transport-less callers drive round() directly
    started_ = true;
    if (!timer_armed_) arm_timer();
}

void Site::arm_timer() {
    if (!net_ || timer_armed_) return;
    timer_armed_ = true;
    net_->at(net_->now() + period_, [this] {
        timer_armed_ = false;
        round();
    });
}

std::vector<std::vector<std::string>> Site::group_docs() const {
    // union-find over open documents, joined by any cross-document constraint
    // with an undecided endpoint
    std::map<std::string, std::string> parent;
    for (const auto& [doc, dc] : docs_) parent[doc] = doc;
    std::function<std::string(const std::string&)> find = [&](const std::string& d) {
        return parent[d] == d ? d : parent[d] = find(parent[d]);
    };
    const CommitState& st = reconciler_.state();
    for (const auto& [doc, dc] : docs_) {
        for (const Constraint& c : dc.acg.constraints()) {
            if (c.a.doc == c.b.doc) continue;
            if (!docs_.count(c.a.doc) || !docs_.count(c.b.doc)) continue;
            if (st.decided(c.a) && st.decided(c.b)) continue; // group dissolved
            parent[find(c.a.doc)] = find(c.b.doc);
        }
    }
    std::map<std::string, std::vector<std::string>> by_root;
    for (const auto& [doc, dc] : docs_) by_root[find(doc)].push_back(doc);
    std::vector<std::vector<std::string>> out;
    for (auto& [r, members] : by_root) out.push_back(std::move(members));
    return out;
}

std::vector<std::vector<std::string>> Site::bound_groups() const { return group_docs(); }

Acg Site::build_group_view(const std::vector<std::string>& group) const {
    Acg view;
    std::set<std::string> members(group.begin(), group.end());
    for (const std::string& doc : group) {
        const DocContext& dc = ctx(doc);
        std::set<ActionId> excl = filter_exclusion(dc.acg, dc.filters);
        for (const auto& [id, act] : dc.acg.actions())
            if (!excl.count(id)) view.add_action(act);
        for (const Constraint& c : dc.acg.constraints())
            if (!excl.count(c.a) && !excl.count(c.b)) view.add_constraint(c);
    }
    const CommitState& st = reconciler_.state();
    for (const ActionId& id : st.prefix)
        if (members.count(id.doc) && view.has_action(id)) view.mark_committed(id);
    for (const ActionId& id : st.aborted)
        if (members.count(id.doc) && view.has_action(id)) view.mark_aborted(id);
    for (const auto& [x, y] : st.serialized)
        if (members.count(x.doc) && members.count(y.doc))
            view.add_constraint(make_constraint(ConstraintType::NotAfter, x, y));
    return view;
}

void Site::round() {
    ++round_no_;
    for (const std::vector<std::string>& group : group_docs()) {
        Acg view = build_group_view(group);

        ScheduleRequest req;
        req.local_participant = participant_;
        uint64_t gh = 0;
        for (const std::string& d : group) gh ^= fnv1a(d);
        req.rng_seed = seed_ ^ gh ^ (round_no_ * 0x9E3779B97F4A7C15ull);
        std::vector<Schedule> cands = next_schedules(view, req);

        // no candidates means nothing schedulable: deliver the empty schedule
        // so applications retract tentative state
        Schedule top;
        if (!cands.empty()) top = cands[0];
        for (const std::string& doc : group) {
            DocContext& dc = docs_.at(doc);
            Schedule sub{top.sched_id, {}};
            for (const ActionId& id : top.order)
                if (id.doc == doc) sub.order.push_back(id);
            if (dc.delivered && dc.delivered->order == sub.order) continue;
            dc.delivered = sub;
            auto app = apps_.find(dc.app_tag);
            if (app != apps_.end() && app->second.execute) app->second.execute(doc, sub);
        }

        ProposalRecord p = reconciler_.make_proposal(view, top, participant_, proposal_seq_);
        if (!p.decisions.empty()) {
            ++proposal_seq_;
            if (net_)
                net_->amcast(kCommitGroup, participant_, encode_record(p));
            else
                handle_proposal(encode_record(p));
        }
    }
    if (started_ && undecided_work()) arm_timer();
}

} // namespace telex

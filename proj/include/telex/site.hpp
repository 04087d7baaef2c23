#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "telex/acg.hpp"
#include "telex/multilog.hpp"
#include "telex/reconciler.hpp"
#include "telex/scheduler.hpp"
#include "telex/transport.hpp"

namespace telex {

/// What an application registers per app_tag. `get_constraint` must be pure
/// and give the same answer (modulo orientation) for either argument order.
/// `execute` receives the full current sub-schedule of one document; the
/// application brings its state to the sequential execution of that schedule,
/// replaying only a suffix when the previous delivery is a prefix of it.
struct AppCallbacks {
    std::function<std::vector<Constraint>(const Action&, const Action&)> get_constraint;
    std::function<void(const std::string& doc, const Schedule& sub)> execute;
    std::function<std::vector<uint8_t>(const std::string& doc)> materialise;
};

/// One Telex instance: owns this participant's logs under `root`, tracks one
/// ACG per open document, runs scheduling rounds, and drives commitment
/// through the shared proposal sequence. Everything happens on the caller's
/// (or the transport's) single event stream.
class Site {
public:
    Site(std::string participant, std::filesystem::path root, SimNet* net = nullptr,
         uint64_t rng_seed = 0, uint64_t sched_period = 100,
         uint64_t chunk_threshold = kDefaultChunkThreshold);

    void register_app(const std::string& app_tag, AppCallbacks cbs);

    void open_doc(const std::string& doc_id);
    void close_doc(const std::string& doc_id);
    bool doc_open(const std::string& doc_id) const { return docs_.count(doc_id) != 0; }

    /// Logs the action (timestamp assigned here) plus any sequential
    /// constraints, publishes them, and runs conflict suspicion locally.
    /// Cross-document constraints are logged in both documents.
    /// The id submit() will assign next, so sequential constraints can
    /// reference the action they accompany.
    ActionId next_action_id(const std::string& doc) const {
        return ActionId{doc, participant_, ctx(doc).next_ts};
    }

    ActionId submit(const std::string& doc, Action action,
                    const std::vector<Constraint>& constraints = {});
    void submit_constraints(const std::string& doc, const std::vector<Constraint>& cs);

    /// Local abort request: self-antagonism, logged and published.
    void request_abort(const std::string& doc, const ActionId& a);

    void add_filter(const std::string& doc, const FilterSpec& f, bool persist = false);
    void remove_filter(const std::string& doc, const std::string& name);

    /// Arms the periodic scheduling/proposal round (every sched_period ticks
    /// while undecided work remains). Requires a transport.
    void start();

    /// One scheduling round: recompute bound groups, deliver sub-schedules to
    /// applications, and propose decisions for undecided actions.
    void round();

    /// Persists the document's current delivered schedule (and, if the app
    /// registered materialise, its state blob) as a named snapshot.
    void save_snapshot(const std::string& doc, const std::string& name);

    const Acg& acg(const std::string& doc) const;
    const CommitState& commit_state() const { return reconciler_.state(); }
    std::vector<ActionId> committed_prefix(const std::string& doc) const {
        return reconciler_.state().doc_prefix(doc);
    }
    const std::optional<Schedule>& last_delivered(const std::string& doc) const;
    const std::string& participant() const { return participant_; }
    const std::filesystem::path& root() const { return root_; }

    /// Open documents grouped by uncommitted cross-document constraints.
    std::vector<std::vector<std::string>> bound_groups() const;

    /// The merged, filter-restricted graph a group is scheduled against,
    /// with commitment decisions reflected. Useful for inspection and tests.
    Acg group_view(const std::vector<std::string>& docs) const {
        return build_group_view(docs);
    }

    /// Every get_constraint upcall made at this site, in order (endpoints
    /// normalized smaller-first). At most one entry per unordered pair.
    const std::vector<std::pair<ActionId, ActionId>>& upcalls() const { return upcall_log_; }

    static constexpr const char* kCommitGroup = "telex.commit";

private:
    struct DocContext {
        Acg acg;
        std::unique_ptr<LogWriter> writer;
        std::unique_ptr<DocumentMeta> meta;
        std::vector<FilterSpec> filters;
        std::map<SimNet::LogKey, size_t> consumed; // replica byte offsets
        uint64_t next_ts = 1;
        std::string app_tag;
        std::optional<Schedule> delivered;
        size_t marked_commits = 0;   // prefix of doc_prefix reflected into acg
        size_t marked_serialized = 0;
    };

    DocContext& ctx(const std::string& doc);
    const DocContext& ctx(const std::string& doc) const;

    void handle_log(const SimNet::LogKey& key, const std::vector<uint8_t>& replica,
                    size_t old_len);
    void handle_proposal(const std::vector<uint8_t>& bytes);
    void consume_replica(DocContext& dc, const SimNet::LogKey& key,
                         const std::vector<uint8_t>& replica);
    void apply_record(DocContext& dc, const SimNet::LogKey& key, const Record& rec);
    void suspicion(const Action& incoming);
    void log_constraint(const Constraint& c);
    void publish(DocContext& dc, const std::string& doc, const Record& rec);
    void sync_decisions();
    void arm_timer();
    bool undecided_work() const;

    std::vector<std::vector<std::string>> group_docs() const;
    Acg build_group_view(const std::vector<std::string>& docs) const;

    std::string participant_;
    std::filesystem::path root_;
    SimNet* net_ = nullptr;
    uint64_t seed_;
    uint64_t period_;
    uint64_t chunk_threshold_ = kDefaultChunkThreshold;

    std::map<std::string, DocContext> docs_;
    std::map<std::string, AppCallbacks> apps_;
    FifoReconciler reconciler_;
    std::unique_ptr<LogWriter> decisions_log_;

    std::set<std::pair<ActionId, ActionId>> upcalled_;
    std::vector<std::pair<ActionId, ActionId>> upcall_log_;

    uint64_t proposal_seq_ = 0;
    uint64_t round_no_ = 0;
    bool started_ = false;
    bool timer_armed_ = false;
};

} // namespace telex

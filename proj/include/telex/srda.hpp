#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "telex/site.hpp"

namespace telex {

// Simple Replicated Dictionary Application: tuples keyed by tuple_id with
// named attributes, under insert/modify/remove with session read-your-writes.

constexpr const char* kSrdaTag = "srda";

enum class SrdaOp : uint8_t { Insert = 0, Modify = 1, Remove = 2 };

struct SrdaPayload {
    SrdaOp op = SrdaOp::Insert;
    std::string tuple_id;
    std::map<std::string, std::string> attrs; // Modify: attrs to set; Remove: empty
};

std::vector<uint8_t> srda_encode(const SrdaPayload& p);
SrdaPayload srda_decode(const std::vector<uint8_t>& bytes); // throws ParseError

struct Tuple {
    std::string tuple_id;
    std::map<std::string, std::string> attributes;
    ActionId created_by;

    bool operator==(const Tuple&) const = default;
};

struct DictState {
    std::map<std::string, Tuple> tuples;
    std::vector<ActionId> applied; // the executed schedule
    size_t flagged_noops = 0;      // defensive skips during replay

    bool same_tuples(const DictState& o) const { return tuples == o.tuples; }
};

/// Applies one decoded action to the state. Replay is deterministic; illegal
/// steps (insert on a live tuple, modify/remove of a missing one) are
/// flagged no-ops — tentative schedules can order such sequences before
/// commitment settles them.
void srda_apply(DictState& st, const Action& act);

/// Pure replay oracle: the state after executing `order` from scratch.
DictState srda_replay(const Acg& acg, const std::vector<ActionId>& order);

/// One user session of SRDA at a site. Registers the app callbacks on
/// construction; submit operations through insert/modify/remove.
class SrdaApp {
public:
    struct Config {
        // Concurrent same-id inserts normally do not commute; this switches
        // them to mutual exclusion instead (both can never commit).
        bool antagonistic_inserts;

        Config() : antagonistic_inserts(false) {}
    };

    explicit SrdaApp(Site& site, Config cfg = Config());

    ActionId insert(const std::string& doc, const std::string& tuple_id,
                    const std::map<std::string, std::string>& attrs);
    ActionId modify(const std::string& doc, const std::string& tuple_id,
                    const std::map<std::string, std::string>& attrs);
    ActionId remove(const std::string& doc, const std::string& tuple_id);

    std::optional<Tuple> read(const std::string& doc, const std::string& tuple_id) const;

    /// State as of the last delivered schedule plus tentative local writes.
    const DictState& view(const std::string& doc) const;

    static std::vector<Constraint> get_constraint(const Action& a, const Action& b,
                                                  const Config& cfg);

    std::vector<uint8_t> materialise(const std::string& doc) const;
    static DictState from_blob(const std::vector<uint8_t>& blob);

private:
    ActionId submit_op(const std::string& doc, SrdaPayload payload,
                       std::vector<Constraint> constraints, std::vector<uint64_t> keys);
    void execute(const std::string& doc, const Schedule& sub);
    const SrdaPayload& decoded(const Action& act) const;

    Site& site_;
    Config cfg_;
    std::map<std::string, DictState> views_;
    std::optional<ActionId> session_last_write_; // spans documents
    mutable std::map<ActionId, SrdaPayload> decode_cache_;
};

} // namespace telex

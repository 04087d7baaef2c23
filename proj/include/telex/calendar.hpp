#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "telex/site.hpp"

namespace telex {

// Shared Calendar: one document per event (enable-event / invite /
// cancel-event / cancel-invitation) plus per-user calendar documents whose
// open-event actions all commute. Double bookings surface through invite
// action keys: one key per (user, slot) plus one per event id.

constexpr const char* kCalendarTag = "calendar";

enum class CalOp : uint8_t {
    EnableEvent = 0,
    Invite = 1,
    CancelEvent = 2,
    CancelInvitation = 3,
    OpenEvent = 4, // calendar-document action; no keys, commutes with everything
};

struct CalPayload {
    CalOp op = CalOp::EnableEvent;
    std::string event_id;
    std::string user; // Invite / CancelInvitation
    std::string slot; // EnableEvent / Invite
};

std::vector<uint8_t> cal_encode(const CalPayload& p);
CalPayload cal_decode(const std::vector<uint8_t>& bytes);

inline uint64_t slot_key(const std::string& user, const std::string& slot) {
    return key_and(fnv1a(user), fnv1a(slot));
}

struct EventView {
    bool enabled = false;
    ActionId enabled_by;
    std::set<std::pair<std::string, std::string>> invited; // (user, slot)
};

class CalendarApp {
public:
    explicit CalendarApp(Site& site);

    ActionId open_event(const std::string& calendar_doc, const std::string& event_id);
    ActionId enable_event(const std::string& event_doc, const std::string& event_id,
                          const std::string& slot);
    /// `atomic_with` chains the invite into the event's atomic group.
    ActionId invite(const std::string& event_doc, const std::string& event_id,
                    const std::string& user, const std::string& slot,
                    const std::optional<ActionId>& atomic_with);
    ActionId cancel_event(const std::string& event_doc, const std::string& event_id);
    ActionId cancel_invitation(const std::string& event_doc, const std::string& event_id,
                               const std::string& user);

    /// Marks two enable-event actions (alternative dates) as mutually
    /// exclusive; logged in both event documents.
    void antagonise(const ActionId& a, const ActionId& b);

    /// View of one event document under the last delivered schedule.
    const EventView& view(const std::string& event_doc) const;

    static std::vector<Constraint> get_constraint(const Action& a, const Action& b);

private:
    ActionId submit_op(const std::string& doc, CalPayload payload,
                       std::vector<Constraint> constraints, std::vector<uint64_t> keys);
    void execute(const std::string& doc, const Schedule& sub);

    Site& site_;
    std::map<std::string, EventView> views_;
    std::map<std::string, ActionId> enables_; // event doc -> its enable-event action
};

/// Replays `order` (actions of one event document) into a view.
EventView calendar_replay(const Acg& acg, const std::vector<ActionId>& order);

} // namespace telex

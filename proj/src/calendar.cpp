#include "telex/calendar.hpp"

namespace telex {

std::vector<uint8_t> cal_encode(const CalPayload& p) {
    std::vector<uint8_t> out;
    out.push_back(static_cast<uint8_t>(p.op));
    put_str(out, p.event_id);
    put_str(out, p.user);
    put_str(out, p.slot);
    return out;
}

CalPayload cal_decode(const std::vector<uint8_t>& bytes) {
    ByteReader r{std::span<const uint8_t>(bytes)};
    CalPayload p;
    auto op = r.bytes(1);
    if (r.ok && !op.empty() && op[0] <= 4)
        p.op = static_cast<CalOp>(op[0]);
    else
        r.ok = false;
    p.event_id = r.str();
    p.user = r.str();
    p.slot = r.str();
    if (!r.ok || !r.done()) throw Error(Errc::ParseError, "bad calendar payload");
    return p;
}

CalendarApp::CalendarApp(Site& site) : site_(site) {
    AppCallbacks cbs;
    cbs.get_constraint = [](const Action& a, const Action& b) { return get_constraint(a, b); };
    cbs.execute = [this](const std::string& doc, const Schedule& sub) { execute(doc, sub); };
    site_.register_app(kCalendarTag, std::move(cbs));
}

ActionId CalendarApp::submit_op(const std::string& doc, CalPayload payload,
                                std::vector<Constraint> constraints,
                                std::vector<uint64_t> keys) {
    Action act;
    act.app_tag = kCalendarTag;
    act.keys = std::move(keys);
    act.attributes["event"] = payload.event_id;
    if (!payload.user.empty()) act.attributes["user"] = payload.user;
    if (!payload.slot.empty()) act.attributes["slot"] = payload.slot;
    act.payload = cal_encode(payload);
    return site_.submit(doc, act, constraints);
}

ActionId CalendarApp::open_event(const std::string& calendar_doc, const std::string& event_id) {
    // calendar-document actions commute with everything: no keys, no constraints
    return submit_op(calendar_doc, CalPayload{CalOp::OpenEvent, event_id, "", ""}, {}, {});
}

ActionId CalendarApp::enable_event(const std::string& event_doc, const std::string& event_id,
                                   const std::string& slot) {
    ActionId id = submit_op(event_doc, CalPayload{CalOp::EnableEvent, event_id, "", slot}, {},
                            {fnv1a(event_id)});
    enables_[event_doc] = id;
    return id;
}

ActionId CalendarApp::invite(const std::string& event_doc, const std::string& event_id,
                             const std::string& user, const std::string& slot,
                             const std::optional<ActionId>& atomic_with) {
    ActionId self = site_.next_action_id(event_doc);
    std::vector<Constraint> cs;
    if (atomic_with) cs = derived(DerivedKind::Atomic, *atomic_with, self);
    return submit_op(event_doc, CalPayload{CalOp::Invite, event_id, user, slot}, std::move(cs),
                     {slot_key(user, slot), fnv1a(event_id)});
}

ActionId CalendarApp::cancel_event(const std::string& event_doc, const std::string& event_id) {
    std::vector<Constraint> cs;
    auto it = enables_.find(event_doc);
    ActionId self = site_.next_action_id(event_doc);
    if (it != enables_.end()) cs = derived(DerivedKind::Causal, it->second, self);
    return submit_op(event_doc, CalPayload{CalOp::CancelEvent, event_id, "", ""}, std::move(cs),
                     {fnv1a(event_id)});
}

ActionId CalendarApp::cancel_invitation(const std::string& event_doc,
                                        const std::string& event_id, const std::string& user) {
    std::vector<Constraint> cs;
    auto it = enables_.find(event_doc);
    ActionId self = site_.next_action_id(event_doc);
    if (it != enables_.end()) cs = derived(DerivedKind::Causal, it->second, self);
    return submit_op(event_doc, CalPayload{CalOp::CancelInvitation, event_id, user, ""},
                     std::move(cs), {fnv1a(event_id)});
}

void CalendarApp::antagonise(const ActionId& a, const ActionId& b) {
    site_.submit_constraints(a.doc, derived(DerivedKind::Antagonism, a, b));
}

const EventView& CalendarApp::view(const std::string& event_doc) const {
    static const EventView empty;
    auto it = views_.find(event_doc);
    return it == views_.end() ? empty : it->second;
}

std::vector<Constraint> CalendarApp::get_constraint(const Action& a, const Action& b) {
    CalPayload pa = cal_decode(a.payload);
    CalPayload pb = cal_decode(b.payload);
    // double booking: same user, same slot, different events
    if (pa.op == CalOp::Invite && pb.op == CalOp::Invite && a.id.doc != b.id.doc &&
        pa.user == pb.user && pa.slot == pb.slot)
        return derived(DerivedKind::Antagonism, a.id, b.id);
    return {};
}

EventView calendar_replay(const Acg& acg, const std::vector<ActionId>& order) {
    EventView v;
    for (const ActionId& id : order) {
        CalPayload p = cal_decode(acg.action(id).payload);
        switch (p.op) {
        case CalOp::EnableEvent:
            v.enabled = true;
            v.enabled_by = id;
            break;
        case CalOp::Invite:
            v.invited.insert({p.user, p.slot});
            break;
        case CalOp::CancelEvent:
            v.enabled = false;
            v.invited.clear();
            break;
        case CalOp::CancelInvitation:
            for (auto it = v.invited.begin(); it != v.invited.end();)
                it = it->first == p.user ? v.invited.erase(it) : std::next(it);
            break;
        case CalOp::OpenEvent:
            break;
        }
    }
    return v;
}

void CalendarApp::execute(const std::string& doc, const Schedule& sub) {
    views_[doc] = calendar_replay(site_.acg(doc), sub.order);
}

} // namespace telex

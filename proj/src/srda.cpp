#include "telex/srda.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace telex {

std::vector<uint8_t> srda_encode(const SrdaPayload& p) {
    std::vector<uint8_t> out;
    out.push_back(static_cast<uint8_t>(p.op));
    put_str(out, p.tuple_id);
    put_u32(out, static_cast<uint32_t>(p.attrs.size()));
    for (const auto& [k, v] : p.attrs) {
        put_str(out, k);
        put_str(out, v);
    }
    return out;
}

SrdaPayload srda_decode(const std::vector<uint8_t>& bytes) {
    ByteReader r{std::span<const uint8_t>(bytes)};
    SrdaPayload p;
    auto op = r.bytes(1);
    if (r.ok && !op.empty() && op[0] <= 2)
        p.op = static_cast<SrdaOp>(op[0]);
    else
        r.ok = false;
    p.tuple_id = r.str();
    uint32_t n = r.u32();
    for (uint32_t i = 0; r.ok && i < n; ++i) {
        std::string k = r.str();
        p.attrs[k] = r.str();
    }
    if (!r.ok || !r.done()) throw Error(Errc::ParseError, "bad srda payload");
    return p;
}

void srda_apply(DictState& st, const Action& act) {
    SrdaPayload p = srda_decode(act.payload);
    switch (p.op) {
    case SrdaOp::Insert:
        if (st.tuples.count(p.tuple_id)) {
            ++st.flagged_noops; // dueling inserts: first in schedule wins
            break;
        }
        st.tuples[p.tuple_id] = Tuple{p.tuple_id, p.attrs, act.id};
        break;
    case SrdaOp::Modify: {
        auto it = st.tuples.find(p.tuple_id);
        if (it == st.tuples.end()) {
            ++st.flagged_noops;
            break;
        }
        for (const auto& [k, v] : p.attrs) it->second.attributes[k] = v;
        break;
    }
    case SrdaOp::Remove:
        if (!st.tuples.erase(p.tuple_id)) ++st.flagged_noops;
        break;
    }
    st.applied.push_back(act.id);
}

DictState srda_replay(const Acg& acg, const std::vector<ActionId>& order) {
    DictState st;
    for (const ActionId& id : order) srda_apply(st, acg.action(id));
    return st;
}

SrdaApp::SrdaApp(Site& site, Config cfg) : site_(site), cfg_(cfg) {
    AppCallbacks cbs;
    Config c = cfg_;
    cbs.get_constraint = [c](const Action& a, const Action& b) {
        return get_constraint(a, b, c);
    };
    cbs.execute = [this](const std::string& doc, const Schedule& sub) { execute(doc, sub); };
    cbs.materialise = [this](const std::string& doc) { return materialise(doc); };
    site_.register_app(kSrdaTag, std::move(cbs));
}

const SrdaPayload& SrdaApp::decoded(const Action& act) const {
    auto it = decode_cache_.find(act.id);
    if (it == decode_cache_.end())
        it = decode_cache_.emplace(act.id, srda_decode(act.payload)).first;
    return it->second;
}

const DictState& SrdaApp::view(const std::string& doc) const {
    static const DictState empty;
    auto it = views_.find(doc);
    return it == views_.end() ? empty : it->second;
}

std::optional<Tuple> SrdaApp::read(const std::string& doc, const std::string& tuple_id) const {
    const DictState& v = view(doc);
    auto it = v.tuples.find(tuple_id);
    if (it == v.tuples.end()) return std::nullopt;
    return it->second;
}

ActionId SrdaApp::submit_op(const std::string& doc, SrdaPayload payload,
                            std::vector<Constraint> constraints, std::vector<uint64_t> keys) {
    ActionId self = site_.next_action_id(doc);
    if (session_last_write_)
        constraints.push_back(
            make_constraint(ConstraintType::NotAfter, *session_last_write_, self));

    Action act;
    act.app_tag = kSrdaTag;
    act.keys = std::move(keys);
    act.attributes["op"] = payload.op == SrdaOp::Insert   ? "insert"
                           : payload.op == SrdaOp::Modify ? "modify"
                                                          : "remove";
    act.attributes["tuple"] = payload.tuple_id;
    act.payload = srda_encode(payload);

    ActionId id = site_.submit(doc, act, constraints);
    act.id = id;
    srda_apply(views_[doc], act); // optimistic local view
    session_last_write_ = id;
    return id;
}

ActionId SrdaApp::insert(const std::string& doc, const std::string& tuple_id,
                         const std::map<std::string, std::string>& attrs) {
    if (views_[doc].tuples.count(tuple_id))
        throw Error(Errc::TupleExists, "tuple exists: " + tuple_id);
    ActionId self = site_.next_action_id(doc);
    std::vector<Constraint> cs;
    for (const auto& [id, act] : site_.acg(doc).actions()) {
        if (act.app_tag != kSrdaTag) continue;
        const SrdaPayload& p = decoded(act);
        if (p.op == SrdaOp::Remove && p.tuple_id == tuple_id)
            cs.push_back(make_constraint(ConstraintType::NotAfter, id, self));
    }
    return submit_op(doc, SrdaPayload{SrdaOp::Insert, tuple_id, attrs}, std::move(cs),
                     {fnv1a(tuple_id)});
}

ActionId SrdaApp::modify(const std::string& doc, const std::string& tuple_id,
                         const std::map<std::string, std::string>& attrs) {
    auto it = views_[doc].tuples.find(tuple_id);
    if (it == views_[doc].tuples.end())
        throw Error(Errc::NoSuchTuple, "no such tuple: " + tuple_id);
    ActionId self = site_.next_action_id(doc);
    std::vector<Constraint> cs = derived(DerivedKind::Causal, it->second.created_by, self);
    for (const auto& [id, act] : site_.acg(doc).actions()) {
        if (act.app_tag != kSrdaTag) continue;
        const SrdaPayload& p = decoded(act);
        if (p.op != SrdaOp::Modify || p.tuple_id != tuple_id) continue;
        bool overlap = std::any_of(p.attrs.begin(), p.attrs.end(),
                                   [&](const auto& kv) { return attrs.count(kv.first); });
        if (overlap) cs.push_back(make_constraint(ConstraintType::NotAfter, id, self));
    }
    return submit_op(doc, SrdaPayload{SrdaOp::Modify, tuple_id, attrs}, std::move(cs),
                     {fnv1a(tuple_id)});
}

ActionId SrdaApp::remove(const std::string& doc, const std::string& tuple_id) {
    auto it = views_[doc].tuples.find(tuple_id);
    if (it == views_[doc].tuples.end())
        throw Error(Errc::NoSuchTuple, "no such tuple: " + tuple_id);
    ActionId self = site_.next_action_id(doc);
    std::vector<Constraint> cs = derived(DerivedKind::Causal, it->second.created_by, self);
    return submit_op(doc, SrdaPayload{SrdaOp::Remove, tuple_id, {}}, std::move(cs), {});
}

std::vector<Constraint> SrdaApp::get_constraint(const Action& a, const Action& b,
                                                const Config& cfg) {
    if (a.id.doc != b.id.doc) return {}; // tuple ids are per dictionary
    SrdaPayload pa = srda_decode(a.payload);
    SrdaPayload pb = srda_decode(b.payload);
    if (pa.tuple_id != pb.tuple_id) return {};
    if (pa.op == SrdaOp::Insert && pb.op == SrdaOp::Insert) {
        if (cfg.antagonistic_inserts) return derived(DerivedKind::Antagonism, a.id, b.id);
        return {make_constraint(ConstraintType::NonCommuting, a.id, b.id)};
    }
    if (pa.op == SrdaOp::Modify && pb.op == SrdaOp::Modify) {
        bool overlap = std::any_of(pa.attrs.begin(), pa.attrs.end(),
                                   [&](const auto& kv) { return pb.attrs.count(kv.first); });
        if (overlap) return {make_constraint(ConstraintType::NonCommuting, a.id, b.id)};
    }
    return {};
}

void SrdaApp::execute(const std::string& doc, const Schedule& sub) {
    DictState& st = views_[doc];
    bool suffix = sub.order.size() >= st.applied.size() &&
                  std::equal(st.applied.begin(), st.applied.end(), sub.order.begin());
    const Acg& acg = site_.acg(doc);
    if (!suffix) st = DictState{};
    for (size_t i = st.applied.size(); i < sub.order.size(); ++i)
        srda_apply(st, acg.action(sub.order[i]));
}

std::vector<uint8_t> SrdaApp::materialise(const std::string& doc) const {
    const DictState& st = view(doc);
    json j{{"tuples", json::array()}, {"applied", json::array()},
           {"flagged", st.flagged_noops}};
    for (const auto& [tid, t] : st.tuples)
        j["tuples"].push_back({{"id", tid},
                               {"attrs", t.attributes},
                               {"by", {t.created_by.doc, t.created_by.issuer, t.created_by.ts}}});
    for (const ActionId& id : st.applied)
        j["applied"].push_back({id.doc, id.issuer, id.ts});
    std::string s = j.dump();
    return std::vector<uint8_t>(s.begin(), s.end());
}

DictState SrdaApp::from_blob(const std::vector<uint8_t>& blob) {
    json j = json::parse(blob.begin(), blob.end());
    DictState st;
    st.flagged_noops = j.at("flagged").get<size_t>();
    for (const json& t : j.at("tuples")) {
        Tuple tup;
        tup.tuple_id = t.at("id");
        tup.attributes = t.at("attrs").get<std::map<std::string, std::string>>();
        const json& by = t.at("by");
        tup.created_by = ActionId{by[0], by[1], by[2]};
        st.tuples[tup.tuple_id] = std::move(tup);
    }
    for (const json& e : j.at("applied"))
        st.applied.push_back(ActionId{e[0], e[1], e[2]});
    return st;
}

} // namespace telex

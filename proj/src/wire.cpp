#include "telex/wire.hpp"

#include <zlib.h>

namespace telex {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_str(std::vector<uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

uint32_t ByteReader::u32() {
    if (pos + 4 > data.size()) { ok = false; return 0; }
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
}

uint64_t ByteReader::u64() {
    if (pos + 8 > data.size()) { ok = false; return 0; }
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data[pos + i]) << (8 * i);
    pos += 8;
    return v;
}

std::string ByteReader::str() {
    uint32_t n = u32();
    if (!ok || pos + n > data.size()) { ok = false; return {}; }
    std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
    pos += n;
    return s;
}

std::vector<uint8_t> ByteReader::bytes(size_t n) {
    if (pos + n > data.size()) { ok = false; return {}; }
    std::vector<uint8_t> v(data.begin() + pos, data.begin() + pos + n);
    pos += n;
    return v;
}

namespace {

void put_ref(std::vector<uint8_t>& out, const ActionRef& r) {
    out.push_back(static_cast<uint8_t>(r.form));
    switch (r.form) {
    case ActionRef::Form::Local:
        break;
    case ActionRef::Form::SameDoc:
        put_str(out, r.issuer);
        break;
    case ActionRef::Form::CrossDoc:
        put_str(out, r.doc);
        put_str(out, r.issuer);
        break;
    }
    put_u64(out, r.ts);
}

ActionRef get_ref(ByteReader& in) {
    ActionRef r;
    if (in.pos >= in.data.size()) { in.ok = false; return r; }
    uint8_t f = in.data[in.pos++];
    if (f > 2) { in.ok = false; return r; }
    r.form = static_cast<ActionRef::Form>(f);
    if (r.form == ActionRef::Form::SameDoc) {
        r.issuer = in.str();
    } else if (r.form == ActionRef::Form::CrossDoc) {
        r.doc = in.str();
        r.issuer = in.str();
    }
    r.ts = in.u64();
    return r;
}

void put_action_id(std::vector<uint8_t>& out, const ActionId& id) {
    put_str(out, id.doc);
    put_str(out, id.issuer);
    put_u64(out, id.ts);
}

ActionId get_action_id(ByteReader& in) {
    ActionId id;
    id.doc = in.str();
    id.issuer = in.str();
    id.ts = in.u64();
    return id;
}

std::vector<uint8_t> encode_action(const Action& a) {
    std::vector<uint8_t> p;
    put_action_id(p, a.id);
    put_str(p, a.app_tag);
    put_u32(p, static_cast<uint32_t>(a.keys.size()));
    for (uint64_t k : a.keys) put_u64(p, k);
    put_u32(p, static_cast<uint32_t>(a.attributes.size()));
    for (const auto& [name, value] : a.attributes) {
        put_str(p, name);
        put_str(p, value);
    }
    put_u32(p, static_cast<uint32_t>(a.payload.size()));
    p.insert(p.end(), a.payload.begin(), a.payload.end());
    return p;
}

bool decode_action(ByteReader& in, Action& a) {
    a.id = get_action_id(in);
    a.app_tag = in.str();
    uint32_t nk = in.u32();
    if (!in.ok || nk > in.data.size()) return false;
    a.keys.resize(nk);
    for (uint32_t i = 0; i < nk; ++i) a.keys[i] = in.u64();
    uint32_t na = in.u32();
    if (!in.ok || na > in.data.size()) return false;
    for (uint32_t i = 0; i < na; ++i) {
        std::string name = in.str();
        std::string value = in.str();
        if (!in.ok) return false;
        a.attributes[name] = value;
    }
    uint32_t np = in.u32();
    if (!in.ok) return false;
    a.payload = in.bytes(np);
    return in.ok;
}

std::vector<uint8_t> encode_constraint(const ConstraintRecord& c) {
    std::vector<uint8_t> p;
    p.push_back(static_cast<uint8_t>(c.type));
    put_ref(p, c.a);
    put_ref(p, c.b);
    return p;
}

bool decode_constraint(ByteReader& in, ConstraintRecord& c) {
    if (in.pos >= in.data.size()) return false;
    uint8_t t = in.data[in.pos++];
    if (t > 2) return false;
    c.type = static_cast<ConstraintType>(t);
    c.a = get_ref(in);
    c.b = get_ref(in);
    return in.ok;
}

std::vector<uint8_t> encode_proposal(const ProposalRecord& p) {
    std::vector<uint8_t> out;
    put_str(out, p.proposer);
    put_u64(out, p.seq);
    put_u32(out, static_cast<uint32_t>(p.decisions.size()));
    for (const DecisionRecord& d : p.decisions) {
        out.push_back(static_cast<uint8_t>(d.kind));
        put_action_id(out, d.a);
        if (d.kind == DecisionRecord::Kind::Serialize) put_action_id(out, d.b);
        if (d.kind == DecisionRecord::Kind::Commit) {
            put_u32(out, static_cast<uint32_t>(d.enablers.size()));
            for (const ActionId& e : d.enablers) put_action_id(out, e);
            put_u32(out, static_cast<uint32_t>(d.after.size()));
            for (const ActionId& e : d.after) put_action_id(out, e);
        }
    }
    return out;
}

bool decode_proposal(ByteReader& in, ProposalRecord& p) {
    p.proposer = in.str();
    p.seq = in.u64();
    uint32_t nd = in.u32();
    if (!in.ok || nd > in.data.size()) return false;
    p.decisions.resize(nd);
    for (uint32_t i = 0; i < nd; ++i) {
        DecisionRecord& d = p.decisions[i];
        if (in.pos >= in.data.size()) return false;
        uint8_t k = in.data[in.pos++];
        if (k > 2) return false;
        d.kind = static_cast<DecisionRecord::Kind>(k);
        d.a = get_action_id(in);
        if (d.kind == DecisionRecord::Kind::Serialize) d.b = get_action_id(in);
        if (d.kind == DecisionRecord::Kind::Commit) {
            uint32_t ne = in.u32();
            if (!in.ok || ne > in.data.size()) return false;
            d.enablers.resize(ne);
            for (uint32_t j = 0; j < ne; ++j) d.enablers[j] = get_action_id(in);
            uint32_t na = in.u32();
            if (!in.ok || na > in.data.size()) return false;
            d.after.resize(na);
            for (uint32_t j = 0; j < na; ++j) d.after[j] = get_action_id(in);
        }
        if (!in.ok) return false;
    }
    return in.ok;
}

uint32_t frame_crc(uint8_t type, std::span<const uint8_t> payload) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, &type, 1);
    if (!payload.empty())
        crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    return static_cast<uint32_t>(crc);
}

} // namespace

std::vector<uint8_t> encode_record(const Record& rec) {
    uint8_t type = 0;
    std::vector<uint8_t> payload;
    if (const auto* a = std::get_if<Action>(&rec)) {
        type = 'A';
        payload = encode_action(*a);
    } else if (const auto* c = std::get_if<ConstraintRecord>(&rec)) {
        type = 'C';
        payload = encode_constraint(*c);
    } else {
        type = 'P';
        payload = encode_proposal(std::get<ProposalRecord>(rec));
    }
    std::vector<uint8_t> out;
    out.reserve(payload.size() + 9);
    put_u32(out, static_cast<uint32_t>(payload.size()));
    out.push_back(type);
    out.insert(out.end(), payload.begin(), payload.end());
    put_u32(out, frame_crc(type, payload));
    return out;
}

DecodeResult decode_record(std::span<const uint8_t> bytes, size_t offset) {
    DecodeResult res;
    if (offset + 9 > bytes.size()) return res; // Torn
    ByteReader head{bytes.subspan(offset), 0};
    uint32_t len = head.u32();
    if (offset + 9 + len > bytes.size()) return res; // Torn
    uint8_t type = bytes[offset + 4];
    std::span<const uint8_t> payload = bytes.subspan(offset + 5, len);
    ByteReader tail{bytes.subspan(offset + 5 + len), 0};
    uint32_t crc = tail.u32();
    res.next_offset = offset + 9 + len;
    if (crc != frame_crc(type, payload)) {
        res.status = DecodeStatus::BadChecksum;
        return res;
    }
    ByteReader in{payload, 0};
    bool ok = false;
    switch (type) {
    case 'A': {
        Action a;
        ok = decode_action(in, a) && in.done();
        res.record = std::move(a);
        break;
    }
    case 'C': {
        ConstraintRecord c;
        ok = decode_constraint(in, c) && in.done();
        res.record = std::move(c);
        break;
    }
    case 'P': {
        ProposalRecord p;
        ok = decode_proposal(in, p) && in.done();
        res.record = std::move(p);
        break;
    }
    default:
        break;
    }
    res.status = ok ? DecodeStatus::Ok : DecodeStatus::Malformed;
    return res;
}

} // namespace telex

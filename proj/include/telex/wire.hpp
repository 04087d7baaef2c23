#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "telex/ids.hpp"

namespace telex {

/// A constraint as it sits in a log: endpoints are relative references,
/// resolved against (log document, log owner).
struct ConstraintRecord {
    ConstraintType type = ConstraintType::NotAfter;
    ActionRef a;
    ActionRef b;

    static ConstraintRecord from(const Constraint& c, const std::string& ctx_doc,
                                 const std::string& ctx_issuer) {
        return ConstraintRecord{c.type, ActionRef::to(c.a, ctx_doc, ctx_issuer),
                                ActionRef::to(c.b, ctx_doc, ctx_issuer)};
    }

    Constraint resolve(const std::string& ctx_doc, const std::string& ctx_issuer) const {
        return make_constraint(type, a.resolve(ctx_doc, ctx_issuer),
                               b.resolve(ctx_doc, ctx_issuer));
    }

    bool operator==(const ConstraintRecord&) const = default;
};

/// One commitment decision inside a proposal. Commit carries the dependency
/// annotations every receiver checks deterministically: `enablers` must
/// already be committed, none of `after` may be (the action has to precede
/// them).
struct DecisionRecord {
    enum class Kind : uint8_t { Commit = 0, Abort = 1, Serialize = 2 };
    Kind kind = Kind::Commit;
    ActionId a;
    ActionId b; // Serialize only: a before b
    std::vector<ActionId> enablers;
    std::vector<ActionId> after;

    bool operator==(const DecisionRecord&) const = default;
};

struct ProposalRecord {
    std::string proposer;
    uint64_t seq = 0;
    std::vector<DecisionRecord> decisions;

    bool operator==(const ProposalRecord&) const = default;
};

using Record = std::variant<Action, ConstraintRecord, ProposalRecord>;

// --- binary framing ---------------------------------------------------------
//
// Frame: u32 LE payload length | 1 type byte ('A'/'C'/'P') | payload |
//        u32 LE CRC32 over type byte + payload.
// Strings are u32-length-prefixed UTF-8; integers little-endian.

std::vector<uint8_t> encode_record(const Record& rec);

enum class DecodeStatus { Ok, Torn, BadChecksum, Malformed };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Torn;
    Record record;
    size_t next_offset = 0; // meaningful unless Torn
};

/// Decodes the frame starting at `offset`. Torn means the remaining bytes do
/// not hold a complete frame; BadChecksum/Malformed frames still report a
/// next_offset so callers may skip and resync.
DecodeResult decode_record(std::span<const uint8_t> bytes, size_t offset);

// Primitive writers, shared with application payload codecs.
void put_u32(std::vector<uint8_t>& out, uint32_t v);
void put_u64(std::vector<uint8_t>& out, uint64_t v);
void put_str(std::vector<uint8_t>& out, const std::string& s);

struct ByteReader {
    std::span<const uint8_t> data;
    size_t pos = 0;
    bool ok = true;

    uint32_t u32();
    uint64_t u64();
    std::string str();
    std::vector<uint8_t> bytes(size_t n);
    bool done() const { return pos >= data.size(); }
};

} // namespace telex

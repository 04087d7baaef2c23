#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace telex {

/// Globally unique action identity: (document, issuer, per-issuer timestamp).
struct ActionId {
    std::string doc;
    std::string issuer;
    uint64_t ts = 0;

    auto operator<=>(const ActionId&) const = default;

    std::string str() const { return doc + "/" + issuer + "/" + std::to_string(ts); }
};

/// A logged application operation. The payload is opaque to the engine;
/// keys approximate the action's footprint and drive conflict suspicion.
struct Action {
    ActionId id;
    std::vector<uint64_t> keys; // sorted, unique
    std::string app_tag;
    std::map<std::string, std::string> attributes;
    std::vector<uint8_t> payload;

    bool operator==(const Action&) const = default;

    bool shares_key(const Action& other) const {
        // keys sorted: linear merge. Empty key set conflicts with nothing.
        size_t i = 0, j = 0;
        while (i < keys.size() && j < other.keys.size()) {
            if (keys[i] == other.keys[j]) return true;
            if (keys[i] < other.keys[j]) ++i; else ++j;
        }
        return false;
    }
};

/// How a constraint record names an endpoint, relative to the log that
/// carries the record (its document and owning participant).
struct ActionRef {
    enum class Form : uint8_t { Local = 0, SameDoc = 1, CrossDoc = 2 };

    Form form = Form::Local;
    std::string doc;    // CrossDoc only
    std::string issuer; // SameDoc and CrossDoc
    uint64_t ts = 0;

    static ActionRef to(const ActionId& target, const std::string& ctx_doc,
                        const std::string& ctx_issuer) {
        ActionRef r;
        r.ts = target.ts;
        if (target.doc == ctx_doc && target.issuer == ctx_issuer) {
            r.form = Form::Local;
        } else if (target.doc == ctx_doc) {
            r.form = Form::SameDoc;
            r.issuer = target.issuer;
        } else {
            r.form = Form::CrossDoc;
            r.doc = target.doc;
            r.issuer = target.issuer;
        }
        return r;
    }

    ActionId resolve(const std::string& ctx_doc, const std::string& ctx_issuer) const {
        switch (form) {
        case Form::Local: return ActionId{ctx_doc, ctx_issuer, ts};
        case Form::SameDoc: return ActionId{ctx_doc, issuer, ts};
        case Form::CrossDoc: return ActionId{doc, issuer, ts};
        }
        return {};
    }

    bool operator==(const ActionRef&) const = default;
};

enum class ConstraintType : uint8_t { NotAfter = 0, Enables = 1, NonCommuting = 2 };

inline const char* constraint_type_name(ConstraintType t) {
    switch (t) {
    case ConstraintType::NotAfter: return "NotAfter";
    case ConstraintType::Enables: return "Enables";
    case ConstraintType::NonCommuting: return "NonCommuting";
    }
    return "?";
}

/// A resolved constraint. Identity is the triple (type, a, b); NonCommuting
/// is symmetric and stored with the lexicographically smaller endpoint first.
struct Constraint {
    ConstraintType type = ConstraintType::NotAfter;
    ActionId a;
    ActionId b;

    auto operator<=>(const Constraint&) const = default;
};

inline Constraint make_constraint(ConstraintType type, ActionId a, ActionId b) {
    if (type == ConstraintType::NonCommuting && b < a) std::swap(a, b);
    return Constraint{type, std::move(a), std::move(b)};
}

enum class DerivedKind { Atomic, Causal, Antagonism };

/// Expansion of the derived constraint algebra into primitives.
inline std::vector<Constraint> derived(DerivedKind kind, const ActionId& a, const ActionId& b) {
    switch (kind) {
    case DerivedKind::Atomic:
        return {make_constraint(ConstraintType::Enables, a, b),
                make_constraint(ConstraintType::Enables, b, a)};
    case DerivedKind::Causal:
        return {make_constraint(ConstraintType::Enables, a, b),
                make_constraint(ConstraintType::NotAfter, a, b)};
    case DerivedKind::Antagonism:
        return {make_constraint(ConstraintType::NotAfter, a, b),
                make_constraint(ConstraintType::NotAfter, b, a)};
    }
    return {};
}

/// An ordered subset of actions; score is the number of included actions.
struct Schedule {
    std::string sched_id;
    std::vector<ActionId> order;

    size_t score() const { return order.size(); }
};

struct ActionIdHash {
    size_t operator()(const ActionId& id) const {
        size_t h = std::hash<std::string>{}(id.doc);
        h ^= std::hash<std::string>{}(id.issuer) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        h ^= std::hash<uint64_t>{}(id.ts) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        return h;
    }
};

/// 64-bit FNV-1a, the key-derivation helper applications use.
inline uint64_t fnv1a(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

/// "And" composition of two key sources: hash the XOR of their hashes.
inline uint64_t key_and(uint64_t k1, uint64_t k2) {
    uint64_t x = k1 ^ k2;
    return fnv1a(&x, sizeof(x));
}

} // namespace telex

#pragma once

#include <stdexcept>
#include <string>

namespace telex {

enum class Errc {
    DuplicateDivergent,
    AlreadyCommitted,
    UnknownAction,
    StaleState,
    NotOwner,
    IoFailure,
    CursorBeforeRetention,
    NameCollision,
    NotFound,
    DocNotOpen,
    NotQuiescent,
    ParseError,
    AssertionFailed,
    TupleExists,
    NoSuchTuple,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::DuplicateDivergent: return "DuplicateDivergent";
    case Errc::AlreadyCommitted: return "AlreadyCommitted";
    case Errc::UnknownAction: return "UnknownAction";
    case Errc::StaleState: return "StaleState";
    case Errc::NotOwner: return "NotOwner";
    case Errc::IoFailure: return "IoFailure";
    case Errc::CursorBeforeRetention: return "CursorBeforeRetention";
    case Errc::NameCollision: return "NameCollision";
    case Errc::NotFound: return "NotFound";
    case Errc::DocNotOpen: return "DocNotOpen";
    case Errc::NotQuiescent: return "NotQuiescent";
    case Errc::ParseError: return "ParseError";
    case Errc::AssertionFailed: return "AssertionFailed";
    case Errc::TupleExists: return "TupleExists";
    case Errc::NoSuchTuple: return "NoSuchTuple";
    }
    return "Unknown";
}

} // namespace telex

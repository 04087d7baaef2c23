#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "telex/acg.hpp"
#include "telex/wire.hpp"

namespace telex {

/// Layout:
///   <root>/<doc_id>/multilog/<participant>/chunk-<10-digit-seq>.log
///   <root>/<doc_id>/meta/filters/<name>.json
///   <root>/<doc_id>/meta/snapshots/<name>.json (+ .blob when materialised)
/// Only multilog/ is replicated; meta/ is local.

struct LogCursor {
    uint64_t seq = 1;
    uint64_t offset = 0;

    auto operator<=>(const LogCursor&) const = default;
};

std::filesystem::path doc_path(const std::filesystem::path& root, const std::string& doc_id);
std::filesystem::path log_path(const std::filesystem::path& root, const std::string& doc_id,
                               const std::string& participant);
std::string chunk_name(uint64_t seq);

constexpr uint64_t kDefaultChunkThreshold = 1 << 20; // 1 MiB

/// Appender for one participant's log. Enforces the single-writer rule via an
/// owner file; existing chunk bytes are never rewritten.
class LogWriter {
public:
    LogWriter(std::filesystem::path root, std::string doc_id, std::string participant,
              uint64_t chunk_threshold = kDefaultChunkThreshold);

    /// Appends a framed record; rolls to a new chunk first when the current
    /// one has reached the threshold.
    LogCursor append(const Record& rec);
    LogCursor append_bytes(const std::vector<uint8_t>& frame);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::string participant_;
    uint64_t threshold_;
    uint64_t current_seq_ = 0;
    uint64_t current_size_ = 0;
};

struct ReadRecord {
    Record record;
    LogCursor cursor;      // position of this record
    LogCursor next_cursor; // position after it
};

/// Reads a log directory from a cursor. A trailing torn record is skipped
/// (the cursor does not advance past it); mid-log corrupt frames are counted
/// and skipped. Throws CursorBeforeRetention when the cursor's chunk was
/// collected.
struct LogReadResult {
    std::vector<ReadRecord> records;
    LogCursor next_cursor;
    size_t skipped = 0; // corrupt frames skipped by length
    bool torn_tail = false;
};

LogReadResult read_from(const std::filesystem::path& log_dir, LogCursor cursor);

std::vector<uint64_t> chunk_seqs(const std::filesystem::path& log_dir);

// --- local metadata: filters and snapshots ----------------------------------

struct FilterCriterion {
    enum class Kind { Equals, Prefix, Regex };
    std::string attribute;
    Kind kind = Kind::Equals;
    std::string value;
};

/// A named local view predicate: matching actions, and everything they
/// enable, are excluded from schedule computation.
struct FilterSpec {
    std::string name;
    std::vector<FilterCriterion> criteria;

    bool matches(const Action& a) const;
};

/// Matching actions plus the transitive Enables-closure of what they enable.
std::set<ActionId> filter_exclusion(const Acg& acg, const std::vector<FilterSpec>& filters);

struct SnapshotMeta {
    std::string name;
    std::vector<ActionId> schedule;
    std::optional<std::vector<uint8_t>> materialised;

    bool is_materialised() const { return materialised.has_value(); }
};

class DocumentMeta {
public:
    DocumentMeta(std::filesystem::path root, std::string doc_id);

    void save_filter(const FilterSpec& f);   // NameCollision if present
    void remove_filter(const std::string& name); // NotFound if absent
    std::vector<FilterSpec> list_filters() const;

    void save_snapshot(const SnapshotMeta& s);
    void remove_snapshot(const std::string& name);
    std::vector<SnapshotMeta> list_snapshots() const;

private:
    std::filesystem::path filters_dir_;
    std::filesystem::path snapshots_dir_;
};

/// Deletes chunks whose actions are all decided and whose committed actions
/// are covered by a materialised snapshot. Conservative: skips on any doubt.
/// `retain` lets a site keep chunks regardless (auditing/recovery policy).
std::vector<std::filesystem::path>
gc_chunks(const std::filesystem::path& root, const std::string& doc_id, const Acg& acg,
          const std::vector<SnapshotMeta>& snapshots,
          const std::function<bool(const std::filesystem::path&)>& retain = {});

} // namespace telex

#include "telex/multilog.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace telex {

fs::path doc_path(const fs::path& root, const std::string& doc_id) { return root / doc_id; }

fs::path log_path(const fs::path& root, const std::string& doc_id, const std::string& participant) {
    return root / doc_id / "multilog" / participant;
}

std::string chunk_name(uint64_t seq) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "chunk-%010llu.log", static_cast<unsigned long long>(seq));
    return buf;
}

namespace {

std::optional<uint64_t> parse_chunk_seq(const std::string& name) {
    if (name.size() != 20 || name.rfind("chunk-", 0) != 0 || name.substr(16) != ".log")
        return std::nullopt;
    uint64_t seq = 0;
    for (size_t i = 6; i < 16; ++i) {
        char c = name[i];
        if (c < '0' || c > '9') return std::nullopt;
        seq = seq * 10 + (c - '0');
    }
    return seq;
}

std::vector<uint8_t> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read " + p.string());
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

} // namespace

std::vector<uint64_t> chunk_seqs(const fs::path& log_dir) {
    std::vector<uint64_t> seqs;
    if (!fs::exists(log_dir)) return seqs;
    for (const auto& entry : fs::directory_iterator(log_dir)) {
        if (auto seq = parse_chunk_seq(entry.path().filename().string())) seqs.push_back(*seq);
    }
    std::sort(seqs.begin(), seqs.end());
    return seqs;
}

LogWriter::LogWriter(fs::path root, std::string doc_id, std::string participant,
                     uint64_t chunk_threshold)
    : dir_(log_path(root, doc_id, participant)), participant_(std::move(participant)),
      threshold_(chunk_threshold) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create " + dir_.string());

    fs::path owner_file = dir_ / ".owner";
    if (fs::exists(owner_file)) {
        auto bytes = read_file(owner_file);
        std::string owner(bytes.begin(), bytes.end());
        if (owner != participant_)
            throw Error(Errc::NotOwner, "log " + dir_.string() + " is owned by " + owner);
    } else {
        std::ofstream out(owner_file, std::ios::binary);
        out << participant_;
    }

    auto seqs = chunk_seqs(dir_);
    if (!seqs.empty()) {
        current_seq_ = seqs.back();
        current_size_ = fs::file_size(dir_ / chunk_name(current_seq_));
    }
}

LogCursor LogWriter::append_bytes(const std::vector<uint8_t>& frame) {
    if (current_seq_ == 0 || current_size_ >= threshold_) {
        ++current_seq_;
        current_size_ = 0;
    }
    fs::path chunk = dir_ / chunk_name(current_seq_);
    std::ofstream out(chunk, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::IoFailure, "cannot append to " + chunk.string());
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size()));
    out.flush();
    if (!out) throw Error(Errc::IoFailure, "write failed on " + chunk.string());
    LogCursor at{current_seq_, current_size_};
    current_size_ += frame.size();
    return at;
}

LogCursor LogWriter::append(const Record& rec) { return append_bytes(encode_record(rec)); }

LogReadResult read_from(const fs::path& log_dir, LogCursor cursor) {
    LogReadResult res;
    res.next_cursor = cursor;
    auto seqs = chunk_seqs(log_dir);
    if (seqs.empty()) return res;
    if (cursor.seq < seqs.front())
        throw Error(Errc::CursorBeforeRetention,
                    "cursor at chunk " + std::to_string(cursor.seq) + " but retention starts at " +
                        std::to_string(seqs.front()));

    for (size_t i = 0; i < seqs.size(); ++i) {
        uint64_t seq = seqs[i];
        if (seq < cursor.seq) continue;
        const bool last_chunk = (i + 1 == seqs.size());
        auto bytes = read_file(log_dir / chunk_name(seq));
        size_t offset = (seq == cursor.seq) ? cursor.offset : 0;
        while (offset < bytes.size()) {
            DecodeResult dr = decode_record(std::span<const uint8_t>(bytes), offset);
            if (dr.status == DecodeStatus::Torn) {
                if (last_chunk) {
                    res.torn_tail = true;
                    res.next_cursor = {seq, offset};
                    return res;
                }
                ++res.skipped; // unexpected mid-log truncation: skip chunk remainder
                break;
            }
            if (dr.status == DecodeStatus::Ok) {
                res.records.push_back(
                    {std::move(dr.record), {seq, offset}, {seq, dr.next_offset}});
            } else {
                ++res.skipped;
            }
            offset = dr.next_offset;
        }
        res.next_cursor = last_chunk ? LogCursor{seq, offset} : LogCursor{seq + 1, 0};
    }
    return res;
}

// --- filters -----------------------------------------------------------------

bool FilterSpec::matches(const Action& a) const {
    for (const FilterCriterion& c : criteria) {
        auto it = a.attributes.find(c.attribute);
        if (it == a.attributes.end()) return false;
        const std::string& val = it->second;
        switch (c.kind) {
        case FilterCriterion::Kind::Equals:
            if (val != c.value) return false;
            break;
        case FilterCriterion::Kind::Prefix:
            if (val.rfind(c.value, 0) != 0) return false;
            break;
        case FilterCriterion::Kind::Regex:
            if (!std::regex_match(val, std::regex(c.value))) return false;
            break;
        }
    }
    return !criteria.empty();
}

std::set<ActionId> filter_exclusion(const Acg& acg, const std::vector<FilterSpec>& filters) {
    std::set<ActionId> excluded;
    for (const auto& [id, act] : acg.actions())
        for (const FilterSpec& f : filters)
            if (f.matches(act)) { excluded.insert(id); break; }
    // exclude everything the filtered actions enable, transitively
    bool grew = true;
    while (grew) {
        grew = false;
        for (const Constraint& c : acg.constraints()) {
            if (c.type != ConstraintType::Enables || !acg.active(c)) continue;
            if (excluded.count(c.a) && excluded.insert(c.b).second) grew = true;
        }
    }
    return excluded;
}

// --- meta persistence ----------------------------------------------------------

namespace {

const char* criterion_kind_name(FilterCriterion::Kind k) {
    switch (k) {
    case FilterCriterion::Kind::Equals: return "equals";
    case FilterCriterion::Kind::Prefix: return "prefix";
    case FilterCriterion::Kind::Regex: return "regex";
    }
    return "equals";
}

FilterCriterion::Kind criterion_kind(const std::string& s) {
    if (s == "prefix") return FilterCriterion::Kind::Prefix;
    if (s == "regex") return FilterCriterion::Kind::Regex;
    return FilterCriterion::Kind::Equals;
}

json id_to_json(const ActionId& id) {
    return json{{"doc", id.doc}, {"issuer", id.issuer}, {"ts", id.ts}};
}

ActionId id_from_json(const json& j) {
    return ActionId{j.at("doc"), j.at("issuer"), j.at("ts")};
}

} // namespace

DocumentMeta::DocumentMeta(fs::path root, std::string doc_id) {
    fs::path meta = doc_path(root, doc_id) / "meta";
    filters_dir_ = meta / "filters";
    snapshots_dir_ = meta / "snapshots";
    fs::create_directories(filters_dir_);
    fs::create_directories(snapshots_dir_);
}

void DocumentMeta::save_filter(const FilterSpec& f) {
    fs::path p = filters_dir_ / (f.name + ".json");
    if (fs::exists(p)) throw Error(Errc::NameCollision, "filter exists: " + f.name);
    json j{{"name", f.name}, {"criteria", json::array()}};
    for (const FilterCriterion& c : f.criteria)
        j["criteria"].push_back({{"attribute", c.attribute},
                                 {"kind", criterion_kind_name(c.kind)},
                                 {"value", c.value}});
    std::ofstream out(p);
    out << j.dump(2);
}

void DocumentMeta::remove_filter(const std::string& name) {
    fs::path p = filters_dir_ / (name + ".json");
    if (!fs::exists(p)) throw Error(Errc::NotFound, "no such filter: " + name);
    fs::remove(p);
}

std::vector<FilterSpec> DocumentMeta::list_filters() const {
    std::vector<FilterSpec> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(filters_dir_))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) {
        std::ifstream in(p);
        json j = json::parse(in);
        FilterSpec f;
        f.name = j.at("name");
        for (const json& c : j.at("criteria"))
            f.criteria.push_back(
                {c.at("attribute"), criterion_kind(c.at("kind")), c.at("value")});
        out.push_back(std::move(f));
    }
    return out;
}

void DocumentMeta::save_snapshot(const SnapshotMeta& s) {
    fs::path p = snapshots_dir_ / (s.name + ".json");
    if (fs::exists(p)) throw Error(Errc::NameCollision, "snapshot exists: " + s.name);
    json j{{"name", s.name},
           {"schedule", json::array()},
           {"materialised", s.is_materialised()}};
    for (const ActionId& id : s.schedule) j["schedule"].push_back(id_to_json(id));
    std::ofstream out(p);
    out << j.dump(2);
    if (s.is_materialised()) {
        std::ofstream blob(snapshots_dir_ / (s.name + ".blob"), std::ios::binary);
        blob.write(reinterpret_cast<const char*>(s.materialised->data()),
                   static_cast<std::streamsize>(s.materialised->size()));
    }
}

void DocumentMeta::remove_snapshot(const std::string& name) {
    fs::path p = snapshots_dir_ / (name + ".json");
    if (!fs::exists(p)) throw Error(Errc::NotFound, "no such snapshot: " + name);
    fs::remove(p);
    fs::remove(snapshots_dir_ / (name + ".blob"));
}

std::vector<SnapshotMeta> DocumentMeta::list_snapshots() const {
    std::vector<SnapshotMeta> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(snapshots_dir_))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) {
        std::ifstream in(p);
        json j = json::parse(in);
        SnapshotMeta s;
        s.name = j.at("name");
        for (const json& e : j.at("schedule")) s.schedule.push_back(id_from_json(e));
        if (j.at("materialised").get<bool>())
            s.materialised = read_file(snapshots_dir_ / (s.name + ".blob"));
        out.push_back(std::move(s));
    }
    return out;
}

// --- garbage collection --------------------------------------------------------

std::vector<fs::path>
gc_chunks(const fs::path& root, const std::string& doc_id, const Acg& acg,
          const std::vector<SnapshotMeta>& snapshots,
          const std::function<bool(const fs::path&)>& retain) {
    std::vector<fs::path> deleted;
    fs::path mdir = doc_path(root, doc_id) / "multilog";
    if (!fs::exists(mdir)) return deleted;

    std::vector<fs::path> logs;
    for (const auto& e : fs::directory_iterator(mdir))
        if (e.is_directory()) logs.push_back(e.path());
    std::sort(logs.begin(), logs.end());

    for (const fs::path& log_dir : logs) {
        std::string participant = log_dir.filename().string();
        auto seqs = chunk_seqs(log_dir);
        // never remove the newest chunk; keep sequence numbers contiguous
        for (size_t i = 0; i + 1 < seqs.size(); ++i) {
            fs::path chunk = log_dir / chunk_name(seqs[i]);
            auto bytes = read_file(chunk);
            bool deletable = true;
            std::vector<ActionId> committed_here;
            size_t offset = 0;
            while (offset < bytes.size() && deletable) {
                DecodeResult dr = decode_record(std::span<const uint8_t>(bytes), offset);
                if (dr.status != DecodeStatus::Ok) { deletable = false; break; }
                if (const auto* a = std::get_if<Action>(&dr.record)) {
                    if (acg.is_committed(a->id)) committed_here.push_back(a->id);
                    else if (!acg.is_aborted(a->id)) deletable = false;
                }
                offset = dr.next_offset;
            }
            if (!deletable) break; // later chunks stay; retention must be a suffix
            bool covered = false;
            for (const SnapshotMeta& s : snapshots) {
                if (!s.is_materialised()) continue;
                std::set<ActionId> in_snap(s.schedule.begin(), s.schedule.end());
                if (std::all_of(committed_here.begin(), committed_here.end(),
                                [&](const ActionId& id) { return in_snap.count(id) != 0; })) {
                    covered = true;
                    break;
                }
            }
            if (!covered) break;
            if (retain && retain(chunk)) break; // retained chunks keep the range contiguous
            fs::remove(chunk);
            deleted.push_back(chunk);
        }
    }
    return deleted;
}

} // namespace telex

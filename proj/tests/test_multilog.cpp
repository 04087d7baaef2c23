#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>

#include "support.hpp"
#include "telex/multilog.hpp"
#include "telex/srda.hpp"

using namespace telex;
using namespace telex::testsupport;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("telex-mlog-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
};

std::vector<Record> read_all(const fs::path& log_dir) {
    auto res = read_from(log_dir, {1, 0});
    std::vector<Record> out;
    for (auto& rr : res.records) out.push_back(std::move(rr.record));
    return out;
}

} // namespace

TEST_CASE("append then read round trips across chunk rollover") {
    TmpDir tmp;
    LogWriter w(tmp.path, "doc", "p", 256); // tiny threshold forces rollover
    std::vector<Record> written;
    for (uint64_t t = 1; t <= 40; ++t) {
        Record rec = mk_action("doc", "p", t, {t % 7});
        w.append(rec);
        written.push_back(rec);
    }
    fs::path dir = log_path(tmp.path, "doc", "p");
    CHECK(chunk_seqs(dir).size() > 1);
    auto got = read_all(dir);
    REQUIRE(got.size() == written.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == written[i]);
}

TEST_CASE("cursor resumes exactly where reading stopped") {
    TmpDir tmp;
    LogWriter w(tmp.path, "doc", "p", 128);
    for (uint64_t t = 1; t <= 10; ++t) w.append(Record{mk_action("doc", "p", t)});
    fs::path dir = log_path(tmp.path, "doc", "p");
    auto first = read_from(dir, {1, 0});
    for (uint64_t t = 11; t <= 20; ++t) w.append(Record{mk_action("doc", "p", t)});
    auto rest = read_from(dir, first.next_cursor);
    REQUIRE(rest.records.size() == 10);
    CHECK(std::get<Action>(rest.records.front().record).id.ts == 11);
}

TEST_CASE("the owner file rejects a second writer identity") {
    TmpDir tmp;
    { LogWriter w(tmp.path, "doc", "alice"); }
    fs::path dir = log_path(tmp.path, "doc", "alice");
    fs::path bob_dir = log_path(tmp.path, "doc", "bob");
    // same directory, different participant: forge bob's writer onto alice's log
    fs::create_directories(bob_dir.parent_path());
    fs::rename(dir, bob_dir);
    CHECK_THROWS_AS(LogWriter(tmp.path, "doc", "bob"), Error);
}

TEST_CASE("reopening a log continues the highest chunk") {
    TmpDir tmp;
    {
        LogWriter w(tmp.path, "doc", "p", 128);
        for (uint64_t t = 1; t <= 12; ++t) w.append(Record{mk_action("doc", "p", t)});
    }
    LogWriter again(tmp.path, "doc", "p", 128);
    again.append(Record{mk_action("doc", "p", 13)});
    auto got = read_all(log_path(tmp.path, "doc", "p"));
    CHECK(got.size() == 13);
}

TEST_CASE("a torn tail is reported and earlier records survive") {
    TmpDir tmp;
    LogWriter w(tmp.path, "doc", "p", 1 << 20);
    for (uint64_t t = 1; t <= 5; ++t) w.append(Record{mk_action("doc", "p", t)});
    fs::path dir = log_path(tmp.path, "doc", "p");
    fs::path chunk = dir / chunk_name(1);
    auto size = fs::file_size(chunk);
    fs::resize_file(chunk, size - 3); // tear the last frame
    auto res = read_from(dir, {1, 0});
    CHECK(res.torn_tail);
    REQUIRE(res.records.size() == 4);
    // the writer may later complete the record; the cursor must not move past the tear
    CHECK(res.next_cursor.offset <= size - 3);
}

TEST_CASE("CursorBeforeRetention after chunks are collected") {
    TmpDir tmp;
    LogWriter w(tmp.path, "doc", "p", 64);
    for (uint64_t t = 1; t <= 20; ++t) w.append(Record{mk_action("doc", "p", t)});
    fs::path dir = log_path(tmp.path, "doc", "p");
    auto seqs = chunk_seqs(dir);
    REQUIRE(seqs.size() >= 2);
    fs::remove(dir / chunk_name(seqs.front()));
    CHECK_THROWS_AS(read_from(dir, {seqs.front(), 0}), Error);
    CHECK_NOTHROW(read_from(dir, {seqs.front() + 1, 0}));
}

TEST_CASE("filters: persistence round trip and collision rules") {
    TmpDir tmp;
    DocumentMeta meta(tmp.path, "doc");
    FilterSpec f;
    f.name = "mine";
    f.criteria = {{"user", FilterCriterion::Kind::Equals, "lamia"},
                  {"slot", FilterCriterion::Kind::Prefix, "mon"}};
    meta.save_filter(f);
    CHECK_THROWS_AS(meta.save_filter(f), Error);
    auto listed = meta.list_filters();
    REQUIRE(listed.size() == 1);
    CHECK(listed[0].name == "mine");
    REQUIRE(listed[0].criteria.size() == 2);
    CHECK(listed[0].criteria[1].kind == FilterCriterion::Kind::Prefix);
    meta.remove_filter("mine");
    CHECK(meta.list_filters().empty());
    CHECK_THROWS_AS(meta.remove_filter("mine"), Error);
}

TEST_CASE("filter matching: all criteria must hold; empty criteria match nothing") {
    Action a = mk_action("d", "p", 1);
    a.attributes = {{"user", "lamia"}, {"slot", "monday-10"}};
    FilterSpec both{"f", {{"user", FilterCriterion::Kind::Equals, "lamia"},
                          {"slot", FilterCriterion::Kind::Prefix, "mon"}}};
    FilterSpec wrong{"g", {{"user", FilterCriterion::Kind::Equals, "marc"}}};
    FilterSpec rx{"h", {{"slot", FilterCriterion::Kind::Regex, "mon.*-10"}}};
    FilterSpec empty{"e", {}};
    CHECK(both.matches(a));
    CHECK_FALSE(wrong.matches(a));
    CHECK(rx.matches(a));
    CHECK_FALSE(empty.matches(a));
}

TEST_CASE("filter exclusion closes over Enables") {
    Acg g;
    Action a = mk_action("d", "p", 1);
    a.attributes["user"] = "x";
    g.add_action(a);
    g.add_action(mk_action("d", "p", 2));
    g.add_action(mk_action("d", "p", 3));
    g.add_action(mk_action("d", "p", 4));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "p", 1), aid("d", "p", 2)));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "p", 2), aid("d", "p", 3)));
    FilterSpec f{"f", {{"user", FilterCriterion::Kind::Equals, "x"}}};
    auto ex = filter_exclusion(g, {f});
    CHECK(ex == std::set<ActionId>{aid("d", "p", 1), aid("d", "p", 2), aid("d", "p", 3)});
}

TEST_CASE("snapshots persist schedules and blobs") {
    TmpDir tmp;
    DocumentMeta meta(tmp.path, "doc");
    SnapshotMeta s;
    s.name = "s1";
    s.schedule = {aid("doc", "p", 1), aid("doc", "q", 2)};
    s.materialised = std::vector<uint8_t>{1, 2, 3};
    meta.save_snapshot(s);
    auto back = meta.list_snapshots();
    REQUIRE(back.size() == 1);
    CHECK(back[0].schedule == s.schedule);
    REQUIRE(back[0].is_materialised());
    CHECK(*back[0].materialised == *s.materialised);
    meta.remove_snapshot("s1");
    CHECK(meta.list_snapshots().empty());
}

TEST_CASE("gc removes only decided, snapshot-covered, non-final chunks") {
    TmpDir tmp;
    LogWriter w(tmp.path, "doc", "p", 64);
    Acg g;
    for (uint64_t t = 1; t <= 12; ++t) {
        Action a = mk_action("doc", "p", t);
        w.append(Record{a});
        g.add_action(a);
    }
    fs::path dir = log_path(tmp.path, "doc", "p");
    auto seqs = chunk_seqs(dir);
    REQUIRE(seqs.size() >= 3);

    SUBCASE("undecided actions block collection") {
        CHECK(gc_chunks(tmp.path, "doc", g, {}).empty());
    }

    SUBCASE("decided + covering materialised snapshot collects the prefix") {
        SnapshotMeta snap;
        snap.name = "all";
        for (uint64_t t = 1; t <= 12; ++t) {
            g.mark_committed(aid("doc", "p", t));
            snap.schedule.push_back(aid("doc", "p", t));
        }
        snap.materialised = std::vector<uint8_t>{0};
        auto deleted = gc_chunks(tmp.path, "doc", g, {snap});
        CHECK(deleted.size() == seqs.size() - 1); // newest chunk always kept
        // the survivor is still readable from its own seq
        auto res = read_from(dir, {chunk_seqs(dir).front(), 0});
        CHECK_FALSE(res.records.empty());
    }

    SUBCASE("an unmaterialised snapshot does not count") {
        SnapshotMeta snap;
        snap.name = "dry";
        for (uint64_t t = 1; t <= 12; ++t) {
            g.mark_committed(aid("doc", "p", t));
            snap.schedule.push_back(aid("doc", "p", t));
        }
        CHECK(gc_chunks(tmp.path, "doc", g, {snap}).empty());
    }

    SUBCASE("retain hook keeps chunks") {
        SnapshotMeta snap;
        snap.name = "all";
        for (uint64_t t = 1; t <= 12; ++t) {
            g.mark_committed(aid("doc", "p", t));
            snap.schedule.push_back(aid("doc", "p", t));
        }
        snap.materialised = std::vector<uint8_t>{0};
        auto deleted = gc_chunks(tmp.path, "doc", g, {snap},
                                 [](const fs::path&) { return true; });
        CHECK(deleted.empty());
    }
}

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <sstream>

#include "telex/scenario.hpp"

using namespace telex;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("telex-scen-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
};

const char* kScript = R"(
# two sites, one dictionary, one disconnection window
seed 5
latency 1 10
site a
site b
open a d
open b d
at 10 insert a d t1 color=red
at 20 insert b d t2 color=blue
at 30 disconnect b
at 40 modify a d t1 color=green
at 60 reconnect b
at 70 remove b d t2
start 100
quiesce 1000000
assert converged d
assert all-decided
assert tuple d t1 color=green
assert no-tuple d t2
)";

} // namespace

TEST_CASE("the calendar scenario meets every expectation") {
    TmpDir tmp;
    CalendarScenarioResult r = calendar_scenario(tmp.path, 1);
    CHECK(r.t1_classes == 2);
    CHECK(r.t1_top_score == 4);
    CHECK(r.t1_second_score == 3);
    CHECK(r.upcall_fired_once);
    CHECK(r.t2_classes == 2);
    CHECK(r.t2_top_score == 6);
    CHECK(r.t2_second_score == 4);
    CHECK(r.both_solutions_seen);
    CHECK(r.converged);
    CHECK(r.all_decided);
    CHECK(r.no_double_booking);
    CHECK(r.passed());
}

TEST_CASE("scripts run and their assertions hold") {
    TmpDir tmp;
    std::istringstream in(kScript);
    ScriptResult r = run_script(in, tmp.path);
    INFO(r.error);
    CHECK(r.ok);
    CHECK_FALSE(r.report.empty());
}

TEST_CASE("same script and seed give an identical report") {
    TmpDir t1, t2;
    std::istringstream in1(kScript), in2(kScript);
    ScriptResult a = run_script(in1, t1.path, 77);
    ScriptResult b = run_script(in2, t2.path, 77);
    CHECK(a.ok);
    CHECK(a.report == b.report);
}

TEST_CASE("a wrong assertion fails the script") {
    TmpDir tmp;
    std::istringstream in("site a\nopen a d\nat 1 insert a d t1 v=1\nstart 100\nquiesce 100000\n"
                          "assert no-tuple d t1\n");
    ScriptResult r = run_script(in, tmp.path);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
}

TEST_CASE("garbage scripts report a parse problem") {
    TmpDir tmp;
    std::istringstream in("frobnicate everything\n");
    ScriptResult r = run_script(in, tmp.path);
    CHECK_FALSE(r.ok);
}

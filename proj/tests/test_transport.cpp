#include <doctest.h>

#include "support.hpp"
#include "telex/transport.hpp"

using namespace telex;
using namespace telex::testsupport;

namespace {

struct Probe {
    std::vector<std::pair<SimNet::LogKey, size_t>> log_events; // key, new length
    std::vector<std::pair<std::string, std::vector<uint8_t>>> amcasts;

    SimNet::SiteCallbacks callbacks() {
        SimNet::SiteCallbacks cbs;
        cbs.on_log = [this](const SimNet::LogKey& k, const std::vector<uint8_t>& bytes,
                            size_t) { log_events.emplace_back(k, bytes.size()); };
        cbs.on_amcast = [this](const std::string& g, const std::vector<uint8_t>& m) {
            amcasts.emplace_back(g, m);
        };
        return cbs;
    }
};

std::vector<uint8_t> msg(std::initializer_list<uint8_t> b) { return std::vector<uint8_t>(b); }

} // namespace

TEST_CASE("published bytes reach every other site as a growing prefix") {
    SimNet net(1, 1, 4);
    Probe pa, pb, pc;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    net.add_site("c", pc.callbacks());
    SimNet::LogKey key{"doc", "a"};
    net.publish_append("a", key, {1, 2, 3});
    net.publish_append("a", key, {4, 5});
    net.run_until_quiescent();
    CHECK(net.replica("b", key) == std::vector<uint8_t>{1, 2, 3, 4, 5});
    CHECK(net.replica("c", key) == std::vector<uint8_t>{1, 2, 3, 4, 5});
    CHECK(pa.log_events.empty()); // owners do not hear their own logs
    // every intermediate notification was a monotone prefix extension
    size_t prev = 0;
    for (const auto& [k, len] : pb.log_events) {
        CHECK(len >= prev);
        prev = len;
    }
}

TEST_CASE("replicas are always a prefix of the source") {
    SimNet net(3, 1, 9);
    Probe pa, pb;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    SimNet::LogKey key{"doc", "a"};
    std::vector<uint8_t> source;
    for (uint8_t i = 0; i < 30; ++i) {
        net.publish_append("a", key, {i});
        source.push_back(i);
        net.run_until(net.now() + 1);
        const auto& rep = net.replica("b", key);
        REQUIRE(rep.size() <= source.size());
        CHECK(std::equal(rep.begin(), rep.end(), source.begin()));
    }
    net.run_until_quiescent();
    CHECK(net.replica("b", key) == source);
}

TEST_CASE("amcast delivers in one total order across groups") {
    SimNet net(7, 1, 6);
    Probe pa, pb, pc;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    net.add_site("c", pc.callbacks());
    for (const char* s : {"a", "b", "c"}) net.join_group("g1", s);
    for (const char* s : {"a", "b"}) net.join_group("g2", s);
    net.amcast("g1", "a", msg({1}));
    net.amcast("g2", "b", msg({2}));
    net.amcast("g1", "c", msg({3}));
    net.amcast("g2", "a", msg({4}));
    net.run_until_quiescent();
    // a and b are in both groups: identical interleaving
    CHECK(pa.amcasts == pb.amcasts);
    REQUIRE(pa.amcasts.size() == 4);
    // c sees exactly the g1 subsequence, in the same relative order
    std::vector<std::pair<std::string, std::vector<uint8_t>>> g1_only;
    for (const auto& e : pa.amcasts)
        if (e.first == "g1") g1_only.push_back(e);
    CHECK(pc.amcasts == g1_only);
}

TEST_CASE("disconnected sites receive nothing and catch up on reconnect") {
    SimNet net(5, 1, 3);
    Probe pa, pb;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    net.join_group("g", "a");
    net.join_group("g", "b");
    SimNet::LogKey key{"doc", "a"};
    net.disconnect("b");
    net.publish_append("a", key, {1, 2});
    net.amcast("g", "a", msg({9}));
    net.run_until_quiescent();
    CHECK(net.replica_len("b", key) == 0);
    CHECK(pb.amcasts.empty());
    net.reconnect("b");
    net.run_until_quiescent();
    CHECK(net.replica("b", key) == std::vector<uint8_t>{1, 2});
    REQUIRE(pb.amcasts.size() == 1);
    CHECK(pb.amcasts[0].second == msg({9}));
}

TEST_CASE("sends from a disconnected site are buffered, then sequenced") {
    SimNet net(11, 1, 2);
    Probe pa, pb;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    net.join_group("g", "a");
    net.join_group("g", "b");
    net.disconnect("b");
    net.amcast("g", "b", msg({1})); // buffered
    net.amcast("g", "a", msg({2})); // sequenced now
    net.run_until_quiescent();
    REQUIRE(pa.amcasts.size() == 1);
    net.reconnect("b");
    net.run_until_quiescent();
    REQUIRE(pa.amcasts.size() == 2);
    CHECK(pa.amcasts == pb.amcasts);
    CHECK(pa.amcasts[0].second == msg({2})); // a's message won the sequencer first
    CHECK(pa.amcasts[1].second == msg({1}));
}

TEST_CASE("doc_logs lists every published log of a document") {
    SimNet net(2);
    Probe pa, pb;
    net.add_site("a", pa.callbacks());
    net.add_site("b", pb.callbacks());
    net.publish_append("a", {"doc", "a"}, {1});
    net.publish_append("b", {"doc", "b"}, {2});
    net.publish_append("a", {"other", "a"}, {3});
    auto keys = net.doc_logs("doc");
    REQUIRE(keys.size() == 2);
    CHECK(keys[0].participant == "a");
    CHECK(keys[1].participant == "b");
}

TEST_CASE("same seed gives identical delivery traces") {
    auto trace = [](uint64_t seed) {
        SimNet net(seed, 1, 10);
        Probe pa, pb;
        net.add_site("a", pa.callbacks());
        net.add_site("b", pb.callbacks());
        SimNet::LogKey key{"doc", "a"};
        for (uint8_t i = 0; i < 10; ++i) net.publish_append("a", key, {i});
        net.run_until_quiescent();
        return pb.log_events;
    };
    CHECK(trace(42) == trace(42));
    // different seeds usually shuffle intermediate deliveries (not asserted)
}

TEST_CASE("run_until_quiescent bounds runaway timers") {
    SimNet net(1);
    Probe pa;
    net.add_site("a", pa.callbacks());
    std::function<void()> rearm = [&]() { net.at(net.now() + 1, rearm); };
    net.at(1, rearm);
    CHECK_THROWS_AS(net.run_until_quiescent(50), Error);
}

#include <doctest.h>

#include "support.hpp"
#include "telex/acg.hpp"

using namespace telex;
using namespace telex::testsupport;

TEST_CASE("add_action is idempotent, divergent re-add throws") {
    Acg g;
    Action a = mk_action("d", "p", 1, {7});
    g.add_action(a);
    uint64_t gen = g.generation();
    g.add_action(a); // same bytes: fine
    CHECK(g.generation() == gen);
    Action diverged = a;
    diverged.keys = {8};
    CHECK_THROWS_AS(g.add_action(diverged), Error);
    try {
        g.add_action(diverged);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DuplicateDivergent);
    }
}

TEST_CASE("constraints are idempotent and order-independent") {
    Acg g;
    Constraint c = make_constraint(ConstraintType::NotAfter, aid("d", "p", 1), aid("d", "q", 1));
    g.add_constraint(c); // endpoints not present yet: held pending
    CHECK_FALSE(g.active(c));
    g.add_action(mk_action("d", "p", 1));
    g.add_action(mk_action("d", "q", 1));
    CHECK(g.active(c));
    uint64_t gen = g.generation();
    g.add_constraint(c);
    CHECK(g.generation() == gen);
    CHECK(g.constraints().size() == 1);
}

TEST_CASE("NonCommuting is stored with canonical endpoint order") {
    Acg g;
    ActionId a = aid("d", "p", 2), b = aid("d", "p", 1);
    g.add_constraint(make_constraint(ConstraintType::NonCommuting, a, b));
    g.add_constraint(make_constraint(ConstraintType::NonCommuting, b, a));
    CHECK(g.constraints().size() == 1);
    CHECK(g.constraints().begin()->a == b); // smaller endpoint first
}

TEST_CASE("is_sound: NotAfter ordering") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.add_action(mk_action("d", "q", 1));
    g.add_constraint(make_constraint(ConstraintType::NotAfter, aid("d", "p", 1), aid("d", "q", 1)));
    CHECK(g.is_sound(Schedule{"", {aid("d", "p", 1), aid("d", "q", 1)}}));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "q", 1), aid("d", "p", 1)}}));
    // b alone is fine (NotAfter constrains order, not membership)... a alone too
    CHECK(g.is_sound(Schedule{"", {aid("d", "q", 1)}}));
    CHECK(g.is_sound(Schedule{"", {aid("d", "p", 1)}}));
}

TEST_CASE("is_sound: Enables membership and duplicates") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.add_action(mk_action("d", "q", 1));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "p", 1), aid("d", "q", 1)));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "q", 1)}})); // enabled without enabler
    CHECK(g.is_sound(Schedule{"", {aid("d", "q", 1), aid("d", "p", 1)}})); // order free
    CHECK(g.is_sound(Schedule{"", {aid("d", "p", 1)}}));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "p", 1), aid("d", "p", 1)}}));
}

TEST_CASE("is_sound: aborts exclude, commits force membership and order") {
    Acg g;
    for (uint64_t t = 1; t <= 3; ++t) g.add_action(mk_action("d", "p", t));
    g.abort_action(aid("d", "p", 3));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "p", 3)}}));
    g.mark_committed(aid("d", "p", 2));
    g.mark_committed(aid("d", "p", 1));
    CHECK(g.is_sound(Schedule{"", {aid("d", "p", 2), aid("d", "p", 1)}}));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "p", 1), aid("d", "p", 2)}}));
    CHECK_FALSE(g.is_sound(Schedule{"", {aid("d", "p", 2)}})); // committed 1 missing
}

TEST_CASE("abort of a committed action throws") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.mark_committed(aid("d", "p", 1));
    CHECK_THROWS_AS(g.abort_action(aid("d", "p", 1)), Error);
}

TEST_CASE("concurrent: same issuer or Enables-path means not concurrent") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.add_action(mk_action("d", "p", 2));
    g.add_action(mk_action("d", "q", 1));
    g.add_action(mk_action("e", "r", 1));
    CHECK_FALSE(g.concurrent(aid("d", "p", 1), aid("d", "p", 2)));
    CHECK(g.concurrent(aid("d", "p", 1), aid("d", "q", 1)));
    // chain p1 -enables-> q1 -enables-> r1 kills concurrency transitively
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "p", 1), aid("d", "q", 1)));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "q", 1), aid("e", "r", 1)));
    CHECK_FALSE(g.concurrent(aid("d", "p", 1), aid("e", "r", 1)));
    CHECK(g.concurrent(aid("d", "p", 2), aid("e", "r", 1)));
}

TEST_CASE("pending_ref flags half-resolved constraints") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("x", "y", 9), aid("d", "p", 1)));
    CHECK(g.pending_ref(aid("d", "p", 1)));
    g.add_action(mk_action("x", "y", 9));
    CHECK_FALSE(g.pending_ref(aid("d", "p", 1)));
}

TEST_CASE("enablers_of lists active direct enablers only") {
    Acg g;
    g.add_action(mk_action("d", "p", 1));
    g.add_action(mk_action("d", "q", 1));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "q", 1), aid("d", "p", 1)));
    g.add_constraint(make_constraint(ConstraintType::Enables, aid("d", "z", 5), aid("d", "p", 1)));
    auto en = g.enablers_of(aid("d", "p", 1));
    REQUIRE(en.size() == 1);
    CHECK(en[0] == aid("d", "q", 1));
}

TEST_CASE("restricted drops actions, their constraints, and keeps decisions") {
    Acg g;
    for (uint64_t t = 1; t <= 3; ++t) g.add_action(mk_action("d", "p", t));
    g.add_constraint(make_constraint(ConstraintType::NotAfter, aid("d", "p", 1), aid("d", "p", 2)));
    g.add_constraint(make_constraint(ConstraintType::NotAfter, aid("d", "p", 2), aid("d", "p", 3)));
    g.mark_committed(aid("d", "p", 3));
    Acg r = g.restricted({aid("d", "p", 2)});
    CHECK(r.action_count() == 2);
    CHECK(r.constraints().empty());
    CHECK(r.is_committed(aid("d", "p", 3)));
}

TEST_CASE("shares_key merges sorted key sets") {
    Action a = mk_action("d", "p", 1, {1, 5, 9});
    Action b = mk_action("d", "q", 1, {2, 5});
    Action c = mk_action("d", "q", 2, {3, 4});
    Action empty = mk_action("d", "q", 3);
    CHECK(a.shares_key(b));
    CHECK_FALSE(a.shares_key(c));
    CHECK_FALSE(a.shares_key(empty));
    CHECK_FALSE(empty.shares_key(empty));
}

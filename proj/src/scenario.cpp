#include "telex/scenario.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>

#include "telex/calendar.hpp"
#include "telex/scheduler.hpp"
#include "telex/srda.hpp"

namespace fs = std::filesystem;

namespace telex {

// --- shared calendar scenario --------------------------------------------------

namespace {

std::vector<Schedule> enumerate(const Acg& view, const std::string& local, uint64_t seed) {
    ScheduleRequest req;
    req.max_candidates = 8;
    req.local_participant = local;
    req.restarts = 128;
    req.rng_seed = seed;
    return next_schedules(view, req);
}

std::set<ActionId> included_set(const Schedule& s) {
    return std::set<ActionId>(s.order.begin(), s.order.end());
}

} // namespace

CalendarScenarioResult calendar_scenario(const fs::path& root, uint64_t seed) {
    CalendarScenarioResult res;
    SimNet net(seed, 1, 5);

    Site marc("marc", root / "marc", &net, seed + 1);
    Site jm("jean-michel", root / "jean-michel", &net, seed + 2);
    Site lamia("lamia", root / "lamia", &net, seed + 3);
    CalendarApp app_marc(marc), app_jm(jm), app_lamia(lamia);

    const std::string GL = "GL.dox", NS1 = "NS1.dox", NS2 = "NS2.dox", CAL = "cal-marc";
    for (const std::string& d : {GL, NS1, NS2, CAL}) marc.open_doc(d);
    for (const std::string& d : {NS1, NS2, CAL}) jm.open_doc(d);
    for (const std::string& d : {GL, CAL}) lamia.open_doc(d);

    // Lamia organizes Greek Lesson on Monday — while offline.
    net.disconnect("lamia");
    app_lamia.open_event(CAL, "GL");
    ActionId gl_a = app_lamia.enable_event(GL, "GL", "Mon");
    ActionId gl_b = app_lamia.invite(GL, "GL", "Lamia", "Mon", gl_a);
    ActionId gl_c = app_lamia.invite(GL, "GL", "Marc", "Mon", gl_b);

    // Jean-Michel proposes the Networking Seminar on Monday or Tuesday; the
    // Monday alternative carries one more invitee.
    app_jm.open_event(CAL, "NS");
    ActionId ns1_a = app_jm.enable_event(NS1, "NS1", "Mon");
    ActionId ns1_b = app_jm.invite(NS1, "NS1", "Jean-Michel", "Mon", ns1_a);
    ActionId ns1_c = app_jm.invite(NS1, "NS1", "Marc", "Mon", ns1_b);
    app_jm.invite(NS1, "NS1", "Pierre", "Mon", ns1_c);
    ActionId ns2_a = app_jm.enable_event(NS2, "NS2", "Tue");
    ActionId ns2_b = app_jm.invite(NS2, "NS2", "Jean-Michel", "Tue", ns2_a);
    app_jm.invite(NS2, "NS2", "Marc", "Tue", ns2_b);
    app_jm.antagonise(ns1_a, ns2_a);

    net.run_until_quiescent(100000);

    // t1: Marc has Jean-Michel's actions but not Lamia's. The NS alternatives
    // give exactly two schedule classes, Monday (more actions) first.
    {
        Acg view = marc.group_view({NS1, NS2});
        std::vector<Schedule> cands = enumerate(view, "marc", seed ^ 0x7117);
        std::set<ScheduleSignature> sigs;
        for (const Schedule& s : cands) sigs.insert(signature_of(view, s));
        res.t1_classes = sigs.size();
        if (cands.size() >= 2) {
            res.t1_top_score = cands[0].score();
            res.t1_second_score = cands[1].score();
            if (!included_set(cands[0]).count(ns1_a)) res.t1_top_score = 0; // wrong winner
        }
    }

    // t2: Lamia comes back online; Marc now sees the Monday collision.
    net.reconnect("lamia");
    net.run_until_quiescent(100000);

    auto pair = std::minmax(gl_c, ns1_c);
    size_t fired = static_cast<size_t>(
        std::count(marc.upcalls().begin(), marc.upcalls().end(),
                   std::make_pair(pair.first, pair.second)));
    res.upcall_fired_once = fired == 1;

    {
        Acg view = marc.group_view({GL, NS1, NS2});
        std::vector<Schedule> cands = enumerate(view, "marc", seed ^ 0x7227);
        std::set<ScheduleSignature> sigs;
        for (const Schedule& s : cands) sigs.insert(signature_of(view, s));
        res.t2_classes = sigs.size();
        bool tue_gl = false, mon_alone = false;
        for (const Schedule& s : cands) {
            std::set<ActionId> in = included_set(s);
            if (in.count(gl_a) && in.count(ns2_a) && !in.count(ns1_a) && s.score() == 6)
                tue_gl = true;
            if (in.count(ns1_a) && !in.count(gl_a) && !in.count(ns2_a) && s.score() == 4)
                mon_alone = true;
        }
        res.both_solutions_seen = tue_gl && mon_alone;
        if (cands.size() >= 2) {
            res.t2_top_score = cands[0].score();
            res.t2_second_score = cands[1].score();
        }
    }

    // Reconciliation, driven from Marc's site (the one that knows the whole
    // conflict); everyone receives the same proposal sequence.
    marc.start();
    net.run_until_quiescent(1000000);
    jm.start();
    lamia.start();
    net.run_until_quiescent(1000000);

    res.converged = marc.commit_state() == jm.commit_state() &&
                    marc.commit_state() == lamia.commit_state();
    res.all_decided = true;
    for (const std::string& d : {GL, NS1, NS2, CAL})
        for (const auto& [id, act] : marc.acg(d).actions())
            if (!marc.commit_state().decided(id)) res.all_decided = false;

    // No double booking in the committed outcome: each (user, slot) pair may
    // appear in at most one enabled event.
    std::map<std::pair<std::string, std::string>, std::set<std::string>> booked;
    for (const std::string& d : {GL, NS1, NS2}) {
        EventView v = calendar_replay(marc.acg(d), marc.committed_prefix(d));
        if (!v.enabled) continue;
        for (const auto& us : v.invited) booked[us].insert(d);
    }
    res.no_double_booking = std::all_of(booked.begin(), booked.end(), [](const auto& kv) {
        return kv.second.size() <= 1;
    });

    auto flag = [&](const std::string& k, bool v) {
        res.report.push_back(k + "=" + (v ? "1" : "0"));
    };
    res.report.push_back("t1_classes=" + std::to_string(res.t1_classes));
    res.report.push_back("t1_scores=" + std::to_string(res.t1_top_score) + "," +
                         std::to_string(res.t1_second_score));
    res.report.push_back("t2_classes=" + std::to_string(res.t2_classes));
    res.report.push_back("t2_scores=" + std::to_string(res.t2_top_score) + "," +
                         std::to_string(res.t2_second_score));
    flag("upcall_fired_once", res.upcall_fired_once);
    flag("both_solutions_seen", res.both_solutions_seen);
    flag("converged", res.converged);
    flag("all_decided", res.all_decided);
    flag("no_double_booking", res.no_double_booking);
    return res;
}

// --- script runner -------------------------------------------------------------

namespace {

struct Sim {
    std::unique_ptr<SimNet> net;
    std::map<std::string, std::unique_ptr<Site>> sites;
    std::map<std::string, std::unique_ptr<SrdaApp>> apps;
    uint64_t seed = 0;
    uint64_t lat_min = 1, lat_max = 1;
    std::vector<std::string> site_order;

    void ensure_net() {
        if (!net) net = std::make_unique<SimNet>(seed, lat_min, lat_max);
    }
};

std::map<std::string, std::string> parse_attrs(const std::vector<std::string>& words,
                                               size_t from) {
    std::map<std::string, std::string> attrs;
    for (size_t i = from; i < words.size(); ++i) {
        size_t eq = words[i].find('=');
        if (eq == std::string::npos)
            throw Error(Errc::ParseError, "expected k=v, got: " + words[i]);
        attrs[words[i].substr(0, eq)] = words[i].substr(eq + 1);
    }
    return attrs;
}

} // namespace

ScriptResult run_script(std::istream& in, const fs::path& root,
                        std::optional<uint64_t> seed_override) {
    ScriptResult out;
    Sim sim;
    if (seed_override) sim.seed = *seed_override;

    auto site = [&](const std::string& name) -> Site& {
        auto it = sim.sites.find(name);
        if (it == sim.sites.end()) throw Error(Errc::ParseError, "unknown site: " + name);
        return *it->second;
    };
    auto app = [&](const std::string& name) -> SrdaApp& { return *sim.apps.at(name); };

    std::string line;
    size_t lineno = 0;
    try {
        while (std::getline(in, line)) {
            ++lineno;
            std::string stripped = line.substr(0, line.find('#'));
            std::istringstream ls(stripped);
            std::vector<std::string> w{std::istream_iterator<std::string>(ls),
                                       std::istream_iterator<std::string>()};
            if (w.empty()) continue;
            const std::string& cmd = w[0];

            if (cmd == "seed") {
                if (!seed_override) sim.seed = std::stoull(w.at(1));
            } else if (cmd == "latency") {
                sim.lat_min = std::stoull(w.at(1));
                sim.lat_max = std::stoull(w.at(2));
            } else if (cmd == "site") {
                sim.ensure_net();
                uint64_t salt = fnv1a(w.at(1));
                sim.sites[w.at(1)] = std::make_unique<Site>(w.at(1), root / w.at(1),
                                                            sim.net.get(), sim.seed ^ salt);
                sim.apps[w.at(1)] = std::make_unique<SrdaApp>(*sim.sites[w.at(1)]);
                sim.site_order.push_back(w.at(1));
            } else if (cmd == "open") {
                site(w.at(1)).open_doc(w.at(2));
            } else if (cmd == "at") {
                uint64_t tick = std::stoull(w.at(1));
                std::vector<std::string> rest(w.begin() + 2, w.end());
                sim.ensure_net();
                sim.net->at(tick, [&sim, rest, &site, &app] {
                    const std::string& op = rest.at(0);
                    if (op == "insert")
                        app(rest.at(1)).insert(rest.at(2), rest.at(3), parse_attrs(rest, 4));
                    else if (op == "modify")
                        app(rest.at(1)).modify(rest.at(2), rest.at(3), parse_attrs(rest, 4));
                    else if (op == "remove")
                        app(rest.at(1)).remove(rest.at(2), rest.at(3));
                    else if (op == "disconnect")
                        sim.net->disconnect(rest.at(1));
                    else if (op == "reconnect")
                        sim.net->reconnect(rest.at(1));
                    else
                        throw Error(Errc::ParseError, "unknown event: " + op);
                });
            } else if (cmd == "start") {
                for (const std::string& s : sim.site_order) site(s).start();
            } else if (cmd == "run") {
                sim.ensure_net();
                sim.net->run_until(std::stoull(w.at(1)));
            } else if (cmd == "quiesce") {
                sim.ensure_net();
                sim.net->run_until_quiescent(w.size() > 1 ? std::stoull(w[1]) : 1000000);
            } else if (cmd == "assert") {
                const std::string& what = w.at(1);
                if (what == "converged") {
                    const std::string& doc = w.at(2);
                    for (size_t i = 1; i < sim.site_order.size(); ++i) {
                        const DictState& a = app(sim.site_order[0]).view(doc);
                        const DictState& b = app(sim.site_order[i]).view(doc);
                        if (!a.same_tuples(b))
                            throw Error(Errc::AssertionFailed,
                                        "sites diverge on " + doc + " (" + sim.site_order[0] +
                                            " vs " + sim.site_order[i] + ")");
                    }
                } else if (what == "all-decided") {
                    for (const std::string& s : sim.site_order)
                        for (const auto& g : site(s).bound_groups())
                            for (const std::string& doc : g)
                                for (const auto& [id, act] : site(s).acg(doc).actions())
                                    if (!site(s).commit_state().decided(id))
                                        throw Error(Errc::AssertionFailed,
                                                    "undecided action " + id.str());
                } else if (what == "tuple") {
                    auto expect = parse_attrs(w, 4);
                    auto t = app(sim.site_order.at(0)).read(w.at(2), w.at(3));
                    if (!t) throw Error(Errc::AssertionFailed, "missing tuple " + w.at(3));
                    for (const auto& [k, v] : expect)
                        if (!t->attributes.count(k) || t->attributes.at(k) != v)
                            throw Error(Errc::AssertionFailed,
                                        "tuple " + w.at(3) + " attr " + k + " mismatch");
                } else if (what == "no-tuple") {
                    if (app(sim.site_order.at(0)).read(w.at(2), w.at(3)))
                        throw Error(Errc::AssertionFailed, "unexpected tuple " + w.at(3));
                } else {
                    throw Error(Errc::ParseError, "unknown assertion: " + what);
                }
                out.report.push_back("assert_" + what + "=pass");
            } else {
                throw Error(Errc::ParseError, "unknown command: " + cmd);
            }
        }
    } catch (const Error& e) {
        out.ok = false;
        out.error = std::string(errc_name(e.code())) + " at line " + std::to_string(lineno) +
                    ": " + e.what();
        return out;
    }
    out.report.push_back("seed=" + std::to_string(sim.seed));
    out.report.push_back("sites=" + std::to_string(sim.site_order.size()));
    if (sim.net) out.report.push_back("final_tick=" + std::to_string(sim.net->now()));
    out.report.push_back("result=pass");
    return out;
}

} // namespace telex

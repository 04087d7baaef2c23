#include "telex/bench.hpp"

#include <chrono>
#include <memory>
#include <random>

#include "telex/randgraph.hpp"
#include "telex/scheduler.hpp"
#include "telex/srda.hpp"

namespace telex {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string kv(const std::string& k, const std::string& v) { return k + "=" + v; }

} // namespace

SchedBenchResult bench_schedule(size_t actions, size_t constraints, uint64_t seed) {
    Acg acg = random_acg(actions, constraints, seed);
    ScheduleRequest req;
    req.local_participant = "p0";
    req.max_candidates = 3;
    req.restarts = 4;
    req.rng_seed = seed;

    auto t0 = std::chrono::steady_clock::now();
    IncrementalScheduler inc(acg, req);
    SchedBenchResult r;
    r.full_ms = ms_since(t0);
    if (!inc.candidates().empty()) r.full_score = inc.candidates().front().score();

    // a 10-record delta: 6 new actions, 4 new constraints among them
    std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
    std::vector<ActionId> all;
    for (const auto& [id, act] : acg.actions()) all.push_back(id);
    std::vector<ActionId> fresh;
    for (size_t i = 0; i < 6; ++i) {
        Action a;
        a.id = ActionId{"bench", "p0", 1000000 + i};
        a.app_tag = "bench";
        a.keys = {rng() % (actions / 2 + 1)};
        acg.add_action(a);
        fresh.push_back(a.id);
    }
    for (size_t i = 0; i < 4; ++i) {
        const ActionId& a = fresh[rng() % fresh.size()];
        const ActionId& b = all[rng() % all.size()];
        auto type = static_cast<ConstraintType>(rng() % 3);
        acg.add_constraint(make_constraint(type, a, b));
    }

    t0 = std::chrono::steady_clock::now();
    inc.refresh(acg);
    r.incremental_ms = ms_since(t0);
    if (!inc.candidates().empty()) r.incremental_score = inc.candidates().front().score();

    r.report = {
        kv("actions", std::to_string(actions)),
        kv("constraints", std::to_string(constraints)),
        kv("seed", std::to_string(seed)),
        kv("full_ms", std::to_string(r.full_ms)),
        kv("incremental_ms", std::to_string(r.incremental_ms)),
        kv("full_score", std::to_string(r.full_score)),
        kv("incremental_score", std::to_string(r.incremental_score)),
    };
    return r;
}

CommitBenchResult bench_commit(const std::filesystem::path& root, size_t n_sites,
                               size_t ops_per_site, uint64_t interval, uint64_t seed) {
    const std::string doc = "bench.dox";
    SimNet net(seed, 1, 5);
    std::vector<std::unique_ptr<Site>> sites;
    std::vector<std::unique_ptr<SrdaApp>> apps;
    for (size_t i = 0; i < n_sites; ++i) {
        auto name = "s" + std::to_string(i);
        sites.push_back(std::make_unique<Site>(name, root / name, &net, seed + i));
        apps.push_back(std::make_unique<SrdaApp>(*sites.back()));
        sites.back()->open_doc(doc);
    }

    auto submit_tick = std::make_shared<std::map<ActionId, uint64_t>>();
    auto commit_tick = std::make_shared<std::map<ActionId, uint64_t>>();

    for (size_t i = 0; i < n_sites; ++i) {
        for (size_t k = 0; k < ops_per_site; ++k) {
            uint64_t tick = 1 + k * interval;
            std::string tid = "s" + std::to_string(i) + "-t" + std::to_string(k);
            SrdaApp* app = apps[i].get();
            net.at(tick, [app, tid, doc, i, k, submit_tick, &net]() {
                ActionId id = app->insert(doc, tid, {{"v", std::to_string(i * 1000 + k)}});
                (*submit_tick)[id] = net.now();
            });
        }
        sites[i]->start();
    }

    // per-tick probe recording first-seen commit ticks at site 0
    Site* s0 = sites[0].get();
    uint64_t horizon = (1 + ops_per_site * interval) * 4 + 5000;
    auto probe = std::make_shared<std::function<void()>>();
    *probe = [s0, submit_tick, commit_tick, probe, horizon, &net]() {
        const CommitState& cs = s0->commit_state();
        for (const auto& [id, t] : *submit_tick)
            if (!commit_tick->count(id) && cs.committed.count(id))
                (*commit_tick)[id] = net.now();
        bool outstanding = false;
        for (const auto& [id, t] : *submit_tick)
            if (!cs.decided(id)) outstanding = true;
        if ((outstanding || commit_tick->size() < submit_tick->size()) && net.now() < horizon)
            net.at(net.now() + 1, [probe]() { (*probe)(); });
    };
    net.at(1, [probe]() { (*probe)(); });

    net.run_until_quiescent(horizon + 100000);

    CommitBenchResult r;
    r.submitted = submit_tick->size();
    const CommitState& cs = s0->commit_state();
    double total = 0;
    for (const auto& [id, t] : *submit_tick) {
        if (cs.aborted.count(id)) ++r.aborted;
        auto it = commit_tick->find(id);
        if (it == commit_tick->end()) continue;
        ++r.committed;
        total += double(it->second - t);
    }
    if (r.committed) r.mean_latency_ticks = total / double(r.committed);
    r.converged = true;
    for (size_t i = 1; i < n_sites; ++i)
        if (!(sites[i]->commit_state() == cs)) r.converged = false;

    r.report = {
        kv("sites", std::to_string(n_sites)),
        kv("ops_per_site", std::to_string(ops_per_site)),
        kv("interval_ticks", std::to_string(interval)),
        kv("seed", std::to_string(seed)),
        kv("submitted", std::to_string(r.submitted)),
        kv("committed", std::to_string(r.committed)),
        kv("aborted", std::to_string(r.aborted)),
        kv("mean_commit_latency_ticks", std::to_string(r.mean_latency_ticks)),
        kv("converged", r.converged ? "1" : "0"),
    };
    return r;
}

} // namespace telex

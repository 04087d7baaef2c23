#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "telex/bench.hpp"
#include "telex/multilog.hpp"
#include "telex/scenario.hpp"
#include "telex/wire.hpp"

namespace fs = std::filesystem;
using namespace telex;

namespace {

// exit codes: 0 pass, 1 assertion, 2 usage, 3 I/O
constexpr int kPass = 0, kAssertion = 1, kUsage = 2, kIo = 3;

fs::path fresh_root(const fs::path& requested) {
    if (!requested.empty()) return requested;
    std::random_device rd;
    fs::path p = fs::temp_directory_path() /
                 ("telex-run-" + std::to_string((uint64_t(rd()) << 32) | rd()));
    fs::create_directories(p);
    return p;
}

void print_report(const std::vector<std::string>& lines) {
    for (const auto& l : lines) std::cout << l << "\n";
}

std::string describe(const Record& rec, const std::string& doc, const std::string& owner) {
    if (const auto* a = std::get_if<Action>(&rec)) {
        std::string s = "A " + a->id.str() + " app=" + a->app_tag + " keys=[";
        for (size_t i = 0; i < a->keys.size(); ++i)
            s += (i ? "," : "") + std::to_string(a->keys[i]);
        s += "]";
        for (const auto& [k, v] : a->attributes) s += " " + k + "=" + v;
        return s;
    }
    if (const auto* c = std::get_if<ConstraintRecord>(&rec)) {
        Constraint r = c->resolve(doc, owner);
        return std::string("C ") + constraint_type_name(r.type) + "(" + r.a.str() + ", " +
               r.b.str() + ")";
    }
    const auto& p = std::get<ProposalRecord>(rec);
    std::string s = "P proposer=" + p.proposer + " seq=" + std::to_string(p.seq) +
                    " decisions=" + std::to_string(p.decisions.size());
    for (const auto& d : p.decisions) {
        switch (d.kind) {
        case DecisionRecord::Kind::Commit: s += " commit:" + d.a.str(); break;
        case DecisionRecord::Kind::Abort: s += " abort:" + d.a.str(); break;
        case DecisionRecord::Kind::Serialize:
            s += " serialize:" + d.a.str() + "<" + d.b.str();
            break;
        }
    }
    return s;
}

int dump_chunk(const fs::path& chunk, const std::string& doc, const std::string& owner) {
    std::ifstream in(chunk, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << chunk << "\n";
        return kIo;
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    size_t off = 0;
    while (off < bytes.size()) {
        DecodeResult d = decode_record(std::span<const uint8_t>(bytes), off);
        std::cout << chunk.filename().string() << "@" << off << " ";
        switch (d.status) {
        case DecodeStatus::Ok:
            std::cout << describe(d.record, doc, owner) << "\n";
            break;
        case DecodeStatus::BadChecksum:
            std::cout << "!! checksum failure, frame skipped\n";
            break;
        case DecodeStatus::Malformed:
            std::cout << "!! malformed frame, skipped\n";
            break;
        case DecodeStatus::Torn:
            std::cout << "!! torn tail (" << (bytes.size() - off) << " bytes)\n";
            return kPass;
        }
        off = d.next_offset;
    }
    return kPass;
}

int dump_log_dir(const fs::path& dir, const std::string& doc) {
    std::string owner = dir.filename().string();
    std::vector<fs::path> chunks;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".log") chunks.push_back(e.path());
    std::sort(chunks.begin(), chunks.end());
    for (const auto& c : chunks)
        if (int rc = dump_chunk(c, doc, owner); rc != kPass) return rc;
    return kPass;
}

int cmd_dump(const fs::path& path) {
    std::error_code ec;
    if (fs::is_regular_file(path, ec)) {
        // <root>/<doc>/multilog/<participant>/chunk-NNN.log
        fs::path pdir = path.parent_path();
        std::string owner = pdir.filename().string();
        fs::path mdir = pdir.parent_path();
        std::string doc = mdir.filename() == "multilog" ? mdir.parent_path().filename().string()
                                                        : std::string("?");
        return dump_chunk(path, doc, owner);
    }
    if (!fs::is_directory(path, ec)) {
        std::cerr << "no such file or directory: " << path << "\n";
        return kIo;
    }
    if (fs::exists(path / "multilog", ec)) { // document directory
        std::string doc = path.filename().string();
        for (const auto& e : fs::directory_iterator(path / "multilog"))
            if (e.is_directory())
                if (int rc = dump_log_dir(e.path(), doc); rc != kPass) return rc;
        return kPass;
    }
    // a single participant's log directory
    fs::path mdir = path.parent_path();
    std::string doc = mdir.filename() == "multilog" ? mdir.parent_path().filename().string()
                                                    : std::string("?");
    return dump_log_dir(path, doc);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"telex: optimistic replication engine harness"};
    app.require_subcommand(1);
    app.fallthrough(); // --seed/--root may follow the subcommand

    uint64_t seed = 0;
    std::string root;
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--root", root, "storage root (default: fresh temp dir)");

    auto* run = app.add_subcommand("run", "run a scenario script");
    std::string script;
    std::string builtin;
    run->add_option("script", script, "scenario script path");
    run->add_option("--builtin", builtin, "built-in scenario (calendar)");

    auto* bs = app.add_subcommand("bench-sched", "scheduler benchmark");
    size_t bs_actions = 10000, bs_constraints = 20000;
    bs->add_option("actions", bs_actions, "action count")->check(CLI::PositiveNumber);
    bs->add_option("constraints", bs_constraints, "constraint count");

    auto* bc = app.add_subcommand("bench-commit", "commitment benchmark");
    size_t bc_sites = 4;
    double bc_rate = 20; // actions per simulated second per site
    uint64_t bc_ticks = 2000;
    bc->add_option("sites", bc_sites, "site count")->check(CLI::PositiveNumber);
    bc->add_option("rate", bc_rate, "actions per simulated second per site");
    bc->add_option("--ticks", bc_ticks, "workload duration in ticks (1 tick = 1 ms)")
        ->capture_default_str();

    auto* dp = app.add_subcommand("dump", "dump a multilog");
    std::string dump_path;
    dp->add_option("path", dump_path, "document dir, log dir, or chunk file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kPass : kUsage;
    }

    try {
        if (run->parsed()) {
            if (builtin == "calendar") {
                auto res = calendar_scenario(fresh_root(root), seed);
                print_report(res.report);
                return res.passed() ? kPass : kAssertion;
            }
            if (script.empty()) {
                std::cerr << "run: need a script path or --builtin calendar\n";
                return kUsage;
            }
            std::ifstream in(script);
            if (!in) {
                std::cerr << "cannot open " << script << "\n";
                return kIo;
            }
            auto res = run_script(in, fresh_root(root),
                                  app.count("--seed") ? std::optional<uint64_t>(seed)
                                                      : std::nullopt);
            print_report(res.report);
            if (!res.ok) std::cerr << res.error << "\n";
            return res.ok ? kPass : kAssertion;
        }
        if (bs->parsed()) {
            auto res = bench_schedule(bs_actions, bs_constraints, seed);
            print_report(res.report);
            return kPass;
        }
        if (bc->parsed()) {
            if (bc_rate <= 0) return kPass; // nothing to measure
            uint64_t interval = std::max<uint64_t>(1, uint64_t(1000.0 / bc_rate));
            size_t ops = std::max<size_t>(1, size_t(bc_rate * double(bc_ticks) / 1000.0));
            auto res = bench_commit(fresh_root(root), bc_sites, ops, interval, seed);
            print_report(res.report);
            return res.converged ? kPass : kAssertion;
        }
        if (dp->parsed()) return cmd_dump(dump_path);
    } catch (const Error& e) {
        std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
        return e.code() == Errc::IoFailure ? kIo : kAssertion;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}

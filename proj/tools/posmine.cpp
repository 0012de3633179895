// posmine: command-line front end for the mining-game library.
// Exit codes: 0 ok, 1 property or simulation failure, 2 usage or input error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "posmine/analysis.hpp"
#include "posmine/game.hpp"
#include "posmine/reductions.hpp"
#include "posmine/state_io.hpp"
#include "posmine/strategies.hpp"
#include "posmine/structure.hpp"

using namespace posmine;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// "# posmine <version>" then the full option set of the subcommand.
std::string header(const CLI::App& sub) {
    std::ostringstream os;
    os << "# posmine " << POSMINE_VERSION << "\n# command: " << sub.get_name();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_name() == "--help") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        } else {
            value = opt->get_default_str();
        }
        if (!value.empty()) os << ' ' << opt->get_name() << '=' << value;
    }
    os << '\n';
    return os.str();
}

// Writes to a file when a path is given, else to stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw UsageError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "scripted:@file" loads a script; anything else goes to make_strategy.
struct ResolvedStrategy {
    std::unique_ptr<Strategy> strategy;
    std::vector<Miner> forced;
    std::uint64_t script_rounds = 0;
};

ResolvedStrategy resolve(const std::string& spec, std::uint64_t seed) {
    ResolvedStrategy r;
    const std::string prefix = "scripted:@";
    if (spec.rfind(prefix, 0) == 0) {
        Scripted s = Scripted::parse(read_file(spec.substr(prefix.size())));
        r.forced = s.creators();
        r.script_rounds = r.forced.size();
        if (!s.entries().empty()) r.script_rounds = std::max(r.script_rounds, s.entries().rbegin()->first);
        r.strategy = std::make_unique<Scripted>(std::move(s));
    } else {
        r.strategy = make_strategy(spec, seed);
    }
    return r;
}

void require_alpha(double a) {
    if (!(a > 0 && a < 0.5)) throw UsageError("alpha must lie in (0, 1/2), got " + fmt(a));
}

// lo:hi:step, both ends inclusive. If step does not divide the interval the
// last point is clamped to hi.
std::vector<double> parse_grid(const std::string& text) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
        throw UsageError("alpha grid must look like lo:hi:step, got '" + text + "'");
    if (!(step > 0) || hi < lo) throw UsageError("alpha grid needs lo <= hi and step > 0");
    std::vector<double> out;
    const auto n = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 1e-12));
    for (std::uint64_t k = 0; k <= n; ++k) out.push_back(std::round((lo + k * step) * 1e12) / 1e12);
    if (out.back() < hi - 1e-12) out.push_back(hi);
    for (double a : out) require_alpha(a);
    return out;
}

std::vector<Property> parse_properties(const std::string& text) {
    if (text == "all") return all_properties();
    std::vector<Property> out;
    std::istringstream in(text);
    for (std::string name; std::getline(in, name, ',');) {
        const auto p = parse_property(name);
        if (!p) throw UsageError("unknown property '" + name + "'");
        out.push_back(*p);
    }
    if (out.empty()) throw UsageError("no properties given");
    return out;
}

struct RevenueArgs {
    std::string strategy = "sm", grid, mode = "closed-form", method = "renewal", out;
    double alpha = 0;
    std::uint64_t cycles = 200000, rounds = 100000, games = 20, seed = 1;
};

int cmd_revenue(const RevenueArgs& a, const CLI::App& sub) {
    std::vector<double> alphas;
    if (!a.grid.empty()) {
        alphas = parse_grid(a.grid);
    } else {
        require_alpha(a.alpha);
        alphas = {a.alpha};
    }
    std::vector<RevenuePoint> points;
    if (a.mode == "closed-form") {
        for (double x : alphas) points.push_back(revenue_closed_form(a.strategy, x));
    } else {
        const auto s = resolve(a.strategy, a.seed);
        for (double x : alphas) {
            if (a.method == "renewal")
                points.push_back(mc_revenue_renewal(*s.strategy, x, a.cycles, a.seed));
            else
                points.push_back(mc_revenue_liminf(*s.strategy, x, a.rounds, a.games, a.seed));
        }
    }
    Output out(a.out);
    out.stream() << header(sub);
    write_revenue_csv(out.stream(), points);
    return 0;
}

struct SimulateArgs {
    std::string strategy = "sm", out, tree, state;
    double alpha = 0.35;
    std::uint64_t rounds = 1000, seed = 1;
};

int cmd_simulate(const SimulateArgs& a, const CLI::App& sub) {
    const auto s = resolve(a.strategy, a.seed);
    Trace trace;
    trace.strategy = s.strategy->id();
    trace.alpha = a.alpha;
    trace.seed = a.seed;
    Game game(s.strategy->clone(), CreatorStream(a.alpha, a.seed, 0, s.forced));
    for (std::uint64_t i = 0; i < a.rounds; ++i) trace.rounds.push_back(game.step());
    const std::string head = header(sub);
    Output out(a.out);
    out.stream() << head;
    write_trace_csv(out.stream(), trace);
    if (!a.tree.empty()) {
        Output dot(a.tree);
        dot.stream() << head;
        write_dot(dot.stream(), game.state());
    }
    if (!a.state.empty()) {
        Output st(a.state);
        st.stream() << head;
        write_state(st.stream(), game.state());
    }
    return 0;
}

struct VerifyArgs {
    std::string strategy = "frontier", properties = "all";
    double alpha = 0.35;
    std::uint64_t rounds = 10000, games = 1, seed = 1;
};

int cmd_verify(const VerifyArgs& a, const CLI::App& sub, bool rounds_given) {
    const auto props = parse_properties(a.properties);
    const auto s = resolve(a.strategy, a.seed);
    const std::uint64_t rounds = !rounds_given && s.script_rounds > 0 ? s.script_rounds : a.rounds;
    std::vector<PropertyReport> reports(a.games);
    parallel_for(a.games, [&](std::size_t g) {
        PropertyMonitor monitor(props);
        Game game(s.strategy->clone(), CreatorStream(a.alpha, a.seed, g, s.forced));
        for (std::uint64_t i = 0; i < rounds; ++i) game.step(&monitor);
        reports[g] = monitor.report();
    });
    std::cout << header(sub) << "rounds: " << rounds << " games: " << a.games << '\n';
    bool ok = true;
    for (Property p : props) {
        bool holds = true;
        std::uint64_t evaluated = 0;
        std::string where;
        for (std::size_t g = 0; g < reports.size(); ++g) {
            const PropertyVerdict& v = reports[g].verdicts.at(p);
            evaluated += v.evaluated;
            if (!v.holds && holds) {
                holds = false;
                where = " game:" + std::to_string(g) + " round:" + std::to_string(v.round.value_or(0)) +
                        " witness:\"" + v.witness + "\"";
            }
        }
        ok = ok && holds;
        std::cout << to_string(p) << ": " << (holds ? "holds" : "violated") << " evaluated:" << evaluated
                  << (reports.front().verdicts.at(p).empirical ? " empirical:true" : "") << where << '\n';
    }
    std::cout << "result: " << (ok ? "pass" : "fail") << '\n';
    return ok ? 0 : 1;
}

struct ReduceArgs {
    std::string inner = "fuzz-nonorderly", kind = "orderly", csv;
    double alpha = 0.4;
    std::uint64_t rounds = 10000, seed = 1;
};

int cmd_reduce(const ReduceArgs& a, const CLI::App& sub, bool rounds_given) {
    const auto s = resolve(a.inner, a.seed);
    const std::uint64_t rounds = !rounds_given && s.script_rounds > 0 ? s.script_rounds : a.rounds;
    std::unique_ptr<Strategy> reduced;
    Property target;
    if (a.kind == "orderly") {
        reduced = orderly_reduce(s.strategy->clone());
        target = Property::Orderly;
    } else if (a.kind == "lcm") {
        reduced = lcm_reduce(s.strategy->clone(), rounds);
        target = Property::Lcm;
    } else {
        throw UsageError("--kind must be orderly or lcm");
    }
    Game inner(s.strategy->clone(), CreatorStream(a.alpha, a.seed, 0, s.forced));
    Game outer(std::move(reduced), CreatorStream(a.alpha, a.seed, 0, s.forced));
    PropertyMonitor monitor({target});
    std::ostringstream rows;
    std::uint64_t changed = 0, bad_round = 0;
    RoundRecord ri, ro;
    for (std::uint64_t n = 1; n <= rounds; ++n) {
        ri = inner.step();
        ro = outer.step(&monitor);
        changed += ri.miner1_action != ro.miner1_action;
        // Orderly keeps rev^(n) exactly; LCM may only raise it.
        const bool fine = ri.height == ro.height &&
                          (a.kind == "orderly" ? ri.chain_ones == ro.chain_ones : ro.chain_ones >= ri.chain_ones);
        if (!fine && bad_round == 0) bad_round = n;
        rows << n << ',' << (ri.creator == Miner::One ? 1 : 2) << ',' << to_string(ri.miner1_action) << ','
             << to_string(ro.miner1_action) << ',' << fmt(ri.revenue()) << ',' << fmt(ro.revenue()) << '\n';
    }
    const PropertyVerdict v = monitor.report().verdicts.at(target);
    const std::string head = header(sub);
    std::cout << head << "inner: " << s.strategy->id() << "\nreduced: " << outer.strategy().id()
              << "\nrounds: " << rounds << "\nactions_changed: " << changed
              << "\nrev_inner: " << fmt(ri.revenue()) << "\nrev_reduced: " << fmt(ro.revenue())
              << "\nrevenue_" << (a.kind == "orderly" ? "equal" : "dominates") << ": "
              << (bad_round == 0 ? "true" : "false (round " + std::to_string(bad_round) + ")") << '\n'
              << to_string(target) << ": " << (v.holds ? "holds" : "violated round:" + std::to_string(*v.round))
              << '\n';
    if (!a.csv.empty()) {
        Output csv(a.csv);
        csv.stream() << head << "round,creator,inner_action,reduced_action,inner_rev,reduced_rev\n" << rows.str();
    }
    return bad_round == 0 && v.holds ? 0 : 1;
}

int cmd_checkpoints(const std::string& path, const CLI::App& sub) {
    const GameState s = parse_state(read_file(path));
    std::cout << header(sub);
    const CheckpointList cps = checkpoints(s);
    for (std::size_t i = 0; i < cps.size(); ++i) std::cout << (i ? " " : "") << s.to_absolute(cps[i]).value;
    std::cout << '\n';
    return 0;
}

struct StakeArgs {
    std::string strategy = "nsm", out;
    double alpha0 = 0.34;
    std::uint64_t coins = 100000, rounds = 1000000, seed = 1, every = 1000;
};

int cmd_stake(const StakeArgs& a, const CLI::App& sub) {
    if (a.strategy != "frontier" && a.strategy != "nsm") throw UsageError("stake supports frontier and nsm");
    const StakeSeries series = stake_dynamics(a.strategy, a.alpha0, a.coins, a.rounds, a.seed, a.every);
    Output out(a.out);
    out.stream() << header(sub);
    write_stake_csv(out.stream(), series);
    return 0;
}

int cmd_walk(double alpha, unsigned lead, const CLI::App& sub) {
    require_alpha(alpha);
    const WalkStats w = walk_stats(alpha);
    std::cout << header(sub) << "EX " << fmt(w.ex, "%.6f") << "\nEY " << fmt(w.ey, "%.6f") << "\nEtau "
              << fmt(w.etau, "%.6f") << "\nruin " << fmt(ruin_probability(alpha, lead), "%.6f") << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proof-of-stake longest-chain mining games"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", POSMINE_VERSION);

    RevenueArgs rev;
    auto* revenue = app.add_subcommand("revenue", "Revenue per alpha: closed form or Monte Carlo");
    revenue->add_option("--strategy", rev.strategy, "Strategy id");
    auto* alpha_opt = revenue->add_option("--alpha", rev.alpha, "Single alpha");
    revenue->add_option("--alpha-grid", rev.grid, "Inclusive grid lo:hi:step")->excludes(alpha_opt);
    revenue->add_option("--mode", rev.mode, "closed-form or simulate")
        ->check(CLI::IsMember({"closed-form", "simulate"}));
    revenue->add_option("--method", rev.method, "Estimator for simulate")->check(CLI::IsMember({"renewal", "liminf"}));
    revenue->add_option("--cycles", rev.cycles, "Renewal cycles");
    revenue->add_option("--rounds", rev.rounds, "Rounds per game (liminf)");
    revenue->add_option("--games", rev.games, "Games (liminf)");
    revenue->add_option("--seed", rev.seed, "Seed");
    revenue->add_option("--out", rev.out, "Output CSV (default stdout)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Play one game and emit its trace");
    simulate->add_option("--strategy", sim.strategy, "Strategy id or scripted:@file");
    simulate->add_option("--alpha", sim.alpha, "Miner 1 stake")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--rounds", sim.rounds, "Rounds");
    simulate->add_option("--seed", sim.seed, "Seed");
    simulate->add_option("--out", sim.out, "Trace CSV (default stdout)");
    simulate->add_option("--emit-tree", sim.tree, "Final block tree as Graphviz DOT");
    simulate->add_option("--emit-state", sim.state, "Final state as a statefile");

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "Classify a strategy's actions");
    verify->add_option("--strategy", ver.strategy, "Strategy id or scripted:@file");
    verify->add_option("--properties", ver.properties, "Comma list or 'all'");
    verify->add_option("--alpha", ver.alpha, "Miner 1 stake")->check(CLI::Range(0.0, 1.0));
    auto* ver_rounds = verify->add_option("--rounds", ver.rounds, "Rounds per game");
    verify->add_option("--games", ver.games, "Games")->check(CLI::PositiveNumber);
    verify->add_option("--seed", ver.seed, "Seed");

    ReduceArgs red;
    auto* reduce = app.add_subcommand("reduce", "Run a strategy next to its orderly or LCM reduction");
    reduce->add_option("--inner", red.inner, "Strategy id or scripted:@file");
    reduce->add_option("--kind", red.kind, "orderly or lcm");
    reduce->add_option("--alpha", red.alpha, "Miner 1 stake")->check(CLI::Range(0.0, 1.0));
    auto* red_rounds = reduce->add_option("--rounds", red.rounds, "Rounds");
    reduce->add_option("--seed", red.seed, "Seed");
    reduce->add_option("--emit-csv", red.csv, "Per-round comparison CSV");

    std::string state_path;
    auto* cps = app.add_subcommand("checkpoints", "Print the checkpoints of a statefile");
    cps->add_option("--state", state_path, "Statefile")->required();

    StakeArgs stk;
    auto* stake = app.add_subcommand("stake", "Miner 1's stake when rewards compound");
    stake->add_option("--strategy", stk.strategy, "frontier or nsm");
    stake->add_option("--alpha0,--alpha", stk.alpha0, "Initial stake");
    stake->add_option("--coins", stk.coins, "Initial coins")->check(CLI::PositiveNumber);
    stake->add_option("--rounds", stk.rounds, "Rounds");
    stake->add_option("--seed", stk.seed, "Seed");
    stake->add_option("--sample-every", stk.every, "Rounds between samples");
    stake->add_option("--out", stk.out, "Output CSV (default stdout)");

    double walk_alpha = 0.25;
    unsigned walk_lead = 1;
    auto* walk = app.add_subcommand("walk", "Random-walk closed forms");
    walk->add_option("--alpha", walk_alpha, "Up-step probability");
    walk->add_option("--lead", walk_lead, "Starting lead for the ruin probability");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*revenue) return cmd_revenue(rev, *revenue);
        if (*simulate) return cmd_simulate(sim, *simulate);
        if (*verify) return cmd_verify(ver, *verify, ver_rounds->count() > 0);
        if (*reduce) return cmd_reduce(red, *reduce, red_rounds->count() > 0);
        if (*cps) return cmd_checkpoints(state_path, *cps);
        if (*stake) return cmd_stake(stk, *stake);
        if (*walk) return cmd_walk(walk_alpha, walk_lead, *walk);
    } catch (const StateParseError& e) {
        std::cerr << "error: " << state_path << ": " << e.what() << '\n';
        return 2;
    } catch (const ScriptParseError& e) {
        std::cerr << "error: script " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {  // unknown strategy, bad parameters
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

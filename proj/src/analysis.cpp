#include "posmine/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <thread>

#include "posmine/game.hpp"
#include "posmine/rng.hpp"
#include "posmine/strategies.hpp"

namespace posmine {

namespace {

void require_alpha(double alpha, const char* what) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw DomainError(std::string(what) + ": alpha must lie in (0, 1/2), got " + std::to_string(alpha));
}

// Coefficients from the highest power down.
template <std::size_t N>
double horner(const double (&c)[N], double x) {
    double acc = 0;
    for (double v : c) acc = acc * x + v;
    return acc;
}

// Running sums for a mean or a ratio of means.
struct Moments {
    double n = 0, a = 0, b = 0, aa = 0, bb = 0, ab = 0;
    void add(double x, double y = 0) {
        n += 1;
        a += x;
        b += y;
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    void merge(const Moments& o) {
        n += o.n;
        a += o.a;
        b += o.b;
        aa += o.aa;
        bb += o.bb;
        ab += o.ab;
    }
    Estimate mean() const {
        Estimate e;
        e.samples = static_cast<std::uint64_t>(n);
        if (n == 0) return e;
        e.mean = a / n;
        const double var = n > 1 ? std::max(0.0, (aa - n * e.mean * e.mean) / (n - 1)) : 0.0;
        e.stderr_ = std::sqrt(var / n);
        return e;
    }
    // a/b with the delta method.
    Estimate ratio() const {
        Estimate e;
        e.samples = static_cast<std::uint64_t>(n);
        if (n == 0 || b == 0) return e;
        const double r = a / b, mb = b / n;
        const double s = (aa - 2 * r * ab + r * r * bb) / n;  // mean of (x - r y)^2
        e.mean = r;
        e.stderr_ = n > 1 ? std::sqrt(std::max(0.0, s) * n / (n - 1) / n) / mb : 0.0;
        return e;
    }
};

// Splits `total` samples into fixed-size chunks; the chunking depends only on
// the sample count, so results do not depend on the number of workers.
template <class Fn>
Moments chunked(std::uint64_t total, std::uint64_t chunk, Fn run_chunk) {
    const std::size_t chunks = static_cast<std::size_t>((total + chunk - 1) / chunk);
    std::vector<Moments> parts(chunks);
    parallel_for(chunks, [&](std::size_t k) {
        const std::uint64_t begin = k * chunk;
        parts[k] = run_chunk(k, std::min(chunk, total - begin));
    });
    Moments m;
    for (const auto& p : parts) m.merge(p);
    return m;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

double rev_frontier(double alpha) {
    require_alpha(alpha, "rev_frontier");
    return alpha;
}

double rev_sm_closed(double alpha) {
    require_alpha(alpha, "rev_sm_closed");
    static constexpr double num[] = {4, -9, 4, 0, 0};
    static constexpr double den[] = {1, -2, -1, 1};
    return horner(num, alpha) / horner(den, alpha);
}

double rev_nsm_closed(double alpha) {
    require_alpha(alpha, "rev_nsm_closed");
    static constexpr double num[] = {3, -13, 18, -4, -12, 15, -12, 4, 0, 0};
    static constexpr double den[] = {3, -17, 40, -50, 36, -14, 1, 1, -2, 1};
    return horner(num, alpha) / horner(den, alpha);
}

double rev_nsm_exact(double alpha) {
    require_alpha(alpha, "rev_nsm_exact");
    const double a = alpha, b = 1 - alpha;
    const double loop = a * b * b;  // B_{1,1} -> B_{1,1}: Miner 2, Miner 1, Miner 2
    const double lead = a * a * (2 + a / (1 - 2 * a));
    const double w = a * b / (1 - loop);
    // V(lambda) = gain - lambda * cost; rev solves V = 0.
    const double gain = lead + w * (2 * a + 3 * a * a * b);
    const double cost = lead + b + w * (2 * a + 3 * b * b + 3 * a * a * b + 2 * loop);
    return gain / cost;
}

double crossover(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double glo = f(lo) - lo, ghi = f(hi) - hi;
    if (!((glo < 0 && ghi > 0) || (glo > 0 && ghi < 0)))
        throw NoSignChange("f(a) - a has no strict sign change on [" + fmt(lo) + ", " + fmt(hi) + "]");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double g = f(mid) - mid;
        if (g == 0) return mid;
        if ((g < 0) == (glo < 0)) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

WalkStats walk_stats(double alpha) {
    require_alpha(alpha, "walk_stats");
    const double d = 1 - 2 * alpha;
    return {alpha / d, (1 - alpha) / d, 1 / d};
}

double ruin_probability(double alpha, unsigned i) {
    require_alpha(alpha, "ruin_probability");
    return std::pow(alpha / (1 - alpha), static_cast<double>(i));
}

double tie_break_bound(double alpha, unsigned ell) {
    require_alpha(alpha, "tie_break_bound");
    if (ell > 2) throw DomainError("tie_break_bound: ell must be 0, 1 or 2");
    return std::pow(alpha / (1 - alpha), static_cast<double>(ell));
}

double sm_lead_reward(double alpha) {
    require_alpha(alpha, "sm_lead_reward");
    return 2 + alpha / (1 - 2 * alpha);
}

unsigned worker_count() {
    if (const char* env = std::getenv("POSMINE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    // Lowest index first, whatever order the workers hit them in.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Estimate mc_walk_x(double alpha, std::uint64_t walks, std::uint64_t seed) {
    require_alpha(alpha, "mc_walk_x");
    return chunked(walks, 1 << 14, [&](std::size_t k, std::uint64_t count) {
               Rng rng(seed, k);
               Moments m;
               for (std::uint64_t w = 0; w < count; ++w) {
                   std::uint64_t lead = 1, x = 0;
                   while (lead > 0) {
                       if (rng.bernoulli(alpha)) {
                           ++lead;
                           ++x;
                       } else {
                           --lead;
                       }
                   }
                   m.add(static_cast<double>(x));
               }
               return m;
           })
        .mean();
}

Estimate mc_ruin(double alpha, unsigned i, std::uint64_t walks, std::uint64_t seed) {
    require_alpha(alpha, "mc_ruin");
    // A walk that climbs `escape` levels above its start is counted as never
    // ruined; the neglected probability is below 1e-13.
    const double q = alpha / (1 - alpha);
    const auto escape = static_cast<std::uint64_t>(std::ceil(std::log(1e-13) / std::log(q)));
    return chunked(walks, 1 << 14, [&](std::size_t k, std::uint64_t count) {
               Rng rng(seed, k);
               Moments m;
               for (std::uint64_t w = 0; w < count; ++w) {
                   std::uint64_t pos = i;
                   while (pos > 0 && pos < i + escape) pos += rng.bernoulli(alpha) ? -1 : 1;
                   m.add(pos == 0 ? 1.0 : 0.0);
               }
               return m;
           })
        .mean();
}

std::string to_string(Method m) {
    switch (m) {
        case Method::ClosedForm: return "closed_form";
        case Method::McLiminf: return "mc_liminf";
        case Method::McRenewal: return "mc_renewal";
    }
    return "?";
}

RevenuePoint revenue_closed_form(const std::string& strategy, double alpha) {
    RevenuePoint p;
    p.alpha = alpha;
    p.strategy = strategy;
    p.method = Method::ClosedForm;
    if (strategy == "frontier")
        p.estimate = rev_frontier(alpha);
    else if (strategy == "sm")
        p.estimate = rev_sm_closed(alpha);
    else if (strategy == "nsm")
        p.estimate = rev_nsm_closed(alpha);
    else
        throw UnknownStrategy("no closed form for strategy '" + strategy + "'");
    return p;
}

RevenuePoint mc_revenue_liminf(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t games,
                               std::uint64_t seed) {
    if (rounds == 0 || games == 0) throw std::invalid_argument("mc_revenue_liminf: rounds and games must be positive");
    const Moments m = chunked(games, 1, [&](std::size_t g, std::uint64_t) {
        Game game(strategy.clone(), CreatorStream(alpha, seed, g));
        RoundRecord last;
        for (std::uint64_t r = 0; r < rounds; ++r) last = game.step();
        Moments one;
        one.add(last.revenue());
        return one;
    });
    const Estimate e = m.mean();
    RevenuePoint p;
    p.alpha = alpha;
    p.strategy = strategy.id();
    p.method = Method::McLiminf;
    p.estimate = e.mean;
    if (games > 1) p.stderr_ = e.stderr_;
    p.rounds = rounds;
    p.games = games;
    p.seed = seed;
    return p;
}

RevenuePoint mc_revenue_renewal(const Strategy& strategy, double alpha, std::uint64_t cycles, std::uint64_t seed,
                                std::uint64_t cycle_cap) {
    if (cycles == 0) throw std::invalid_argument("mc_revenue_renewal: cycles must be positive");
    const Moments m = chunked(cycles, 4096, [&](std::size_t k, std::uint64_t count) {
        Game game(strategy.clone(), CreatorStream(alpha, seed, k));
        Moments part;
        std::uint64_t ones = 0, height = 0, start = 0;
        while (part.n < static_cast<double>(count)) {
            const RoundRecord rec = game.step();
            if (rec.renewal) {
                part.add(static_cast<double>(rec.chain_ones - ones), static_cast<double>(rec.height - height));
                ones = rec.chain_ones;
                height = rec.height;
                start = rec.round;
            } else if (rec.round - start >= cycle_cap) {
                throw NonRecurrent(strategy.id() + ": no renewal within " + std::to_string(cycle_cap) + " rounds");
            }
        }
        return part;
    });
    const Estimate e = m.ratio();
    RevenuePoint p;
    p.alpha = alpha;
    p.strategy = strategy.id();
    p.method = Method::McRenewal;
    p.estimate = e.mean;
    p.stderr_ = e.stderr_;
    p.cycles = cycles;
    p.seed = seed;
    return p;
}

Estimate mc_value(const Strategy& strategy, const GameState& start, double lambda, double alpha,
                  std::uint64_t episodes, std::uint64_t seed, std::uint64_t cycle_cap) {
    const Moments m = chunked(episodes, 1024, [&](std::size_t k, std::uint64_t count) {
        Moments part;
        for (std::uint64_t e = 0; e < count; ++e) {
            auto s = strategy.clone();
            s->sync(start);
            Game game(std::move(s), CreatorStream(alpha, seed, k * 1024 + e), start);
            for (std::uint64_t r = 0;; ++r) {
                if (r == cycle_cap)
                    throw NonRecurrent(strategy.id() + ": no capitulation within " + std::to_string(cycle_cap) +
                                       " rounds");
                if (game.step().capitulated_at) break;
            }
            part.add(game_reward(start, game.state(), lambda));
        }
        return part;
    });
    return m.mean();
}

GrowthCheck growth_rate_check(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t seed) {
    GrowthCheck c;
    c.bound = (1 - alpha) - 0.01;
    c.series.reserve(rounds);
    c.tail_min = 1.0;
    Game game(strategy.clone(), CreatorStream(alpha, seed));
    for (std::uint64_t n = 1; n <= rounds; ++n) {
        const RoundRecord rec = game.step();
        const double ratio = static_cast<double>(rec.height) / static_cast<double>(n);
        c.series.push_back(ratio);
        if (n >= rounds / 2) c.tail_min = std::min(c.tail_min, ratio);
    }
    c.holds = c.tail_min > c.bound;
    return c;
}

DecayCheck potential_reward_decay_check(const Strategy& strategy, double alpha, std::uint64_t rounds,
                                        std::uint64_t seed, double epsilon) {
    DecayCheck c;
    c.epsilon = epsilon;
    Game game(strategy.clone(), CreatorStream(alpha, seed));
    for (std::uint64_t n = 1; n <= rounds; ++n) {
        game.step();
        if (n > rounds / 2)
            c.tail_max = std::max(c.tail_max,
                                  static_cast<double>(potential_reward(game.state())) / static_cast<double>(n));
    }
    c.holds = c.tail_max < epsilon;
    return c;
}

StakeSeries stake_dynamics(const std::string& strategy, double alpha0, std::uint64_t coins, std::uint64_t rounds,
                           std::uint64_t seed, std::uint64_t sample_every) {
    if (coins == 0) throw std::invalid_argument("stake_dynamics: coins must be positive");
    if (!(alpha0 > 0 && alpha0 < 1)) throw DomainError("stake_dynamics: alpha0 must lie in (0, 1)");
    StakeSeries out;
    out.initial = alpha0;
    double c1 = alpha0 * static_cast<double>(coins);
    double c2 = static_cast<double>(coins) - c1;
    std::uint64_t minted1 = 0, minted2 = 0;
    Game game(make_strategy(strategy, seed), CreatorStream(alpha0, seed));
    const auto stake = [&] { return c1 / (c1 + c2); };
    out.points.emplace_back(0, stake());
    for (std::uint64_t n = 1; n <= rounds; ++n) {
        game.creators().set_alpha(stake());
        if (game.step().capitulated_at) {
            // Chain blocks below the new genesis can no longer be forked.
            const GameState& s = game.state();
            const std::uint64_t f1 = s.abs_chain_count(Miner::One) - s.chain_count(Miner::One);
            const std::uint64_t f2 = s.abs_chain_count(Miner::Two) - s.chain_count(Miner::Two);
            c1 += static_cast<double>(f1 - minted1);
            c2 += static_cast<double>(f2 - minted2);
            minted1 = f1;
            minted2 = f2;
        }
        if (sample_every > 0 && (n % sample_every == 0 || n == rounds)) out.points.emplace_back(n, stake());
    }
    out.final_stake = stake();
    out.coins = c1 + c2;
    return out;
}

void write_revenue_csv(std::ostream& os, const std::vector<RevenuePoint>& points) {
    os << "alpha,strategy,method,estimate,stderr,rounds,games,cycles,seed\n";
    for (const auto& p : points) {
        os << fmt(p.alpha) << ',' << p.strategy << ',' << to_string(p.method) << ',' << fmt(p.estimate) << ','
           << (p.stderr_ ? fmt(*p.stderr_) : "") << ',' << p.rounds << ',' << p.games << ',' << p.cycles << ','
           << p.seed << '\n';
    }
}

void write_stake_csv(std::ostream& os, const StakeSeries& series) {
    os << "round,stake\n";
    for (const auto& [round, stake] : series.points) os << round << ',' << fmt(stake) << '\n';
}

}  // namespace posmine

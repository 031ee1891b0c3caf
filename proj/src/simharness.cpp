#include "eakr/simharness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "eakr/rng.hpp"

namespace eakr {

namespace {

// Simulating every per-forwarder draw costs ~ trials * n / p draws; above this
// budget the identically distributed geometric round count is sampled directly.
// The switch depends only on the cell parameters, so runs stay reproducible.
constexpr double kMaxHonestPathDraws = 2e8;

void validate_failures(const std::vector<double>& failures) {
    if (failures.empty()) throw std::invalid_argument("no forwarders given");
    for (double f : failures) {
        if (!(f >= 0.0) || f >= 1.0) {
            throw std::invalid_argument("failure probability outside [0, 1)");
        }
    }
}

std::uint32_t honest_rounds(CounterRng& rng, Semantics semantics,
                            const std::vector<double>& failures) {
    std::uint32_t rounds = 0;
    for (;;) {
        ++rounds;
        bool success;
        if (semantics == Semantics::Broadcast) {
            success = false;
            for (double f : failures) {
                if (rng.next_double() >= f) success = true;
            }
        } else {
            success = true;
            for (double f : failures) {
                if (rng.next_double() < f) success = false;
            }
        }
        if (success) return rounds;
    }
}

// Inverse-transform sample of the geometric round count (support 1, 2, ...)
// with per-round success probability p: P(X > k) = (1 - p)^k.
std::uint32_t geometric_rounds(CounterRng& rng, double p) {
    if (p >= 1.0) return 1;
    double u;
    do {
        u = rng.next_double();
    } while (u == 0.0);
    double x = std::ceil(std::log(u) / std::log1p(-p));
    if (x < 1.0) x = 1.0;
    if (x > 4e9) x = 4e9;
    return static_cast<std::uint32_t>(x);
}

}  // namespace

double round_success_probability(Semantics semantics, const std::vector<double>& failures) {
    validate_failures(failures);
    if (semantics == Semantics::Broadcast) {
        double all_fail = 1.0;
        for (double f : failures) all_fail *= f;
        return 1.0 - all_fail;
    }
    double all_receive = 1.0;
    for (double f : failures) all_receive *= 1.0 - f;
    return all_receive;
}

TrialResult simulate_anypath_rounds(const TrialConfig& cfg) {
    if (cfg.trials == 0) throw std::invalid_argument("trial count must be positive");
    const double p = round_success_probability(cfg.semantics, cfg.failures);
    if (p <= 0.0) throw std::invalid_argument("round can never succeed");

    TrialResult res;
    res.analytic_mean = 1.0 / p;
    res.trials = cfg.trials;

    const double honest_draws =
        static_cast<double>(cfg.trials) * static_cast<double>(cfg.failures.size()) / p;
    const bool fast = honest_draws > kMaxHonestPathDraws;

    long double sum = 0;
    long double sum_sq = 0;
    for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
        CounterRng rng(cfg.seed, CounterRng::stream_tag(stream::kTrial, trial));
        const std::uint32_t rounds =
            fast ? geometric_rounds(rng, p) : honest_rounds(rng, cfg.semantics, cfg.failures);
        sum += rounds;
        sum_sq += static_cast<long double>(rounds) * rounds;
        ++res.histogram[rounds];
    }

    const long double mean = sum / static_cast<long double>(cfg.trials);
    res.empirical_mean = static_cast<double>(mean);
    if (cfg.trials > 1) {
        long double var = (sum_sq - sum * mean) / static_cast<long double>(cfg.trials - 1);
        if (var < 0) var = 0;
        res.std_error =
            static_cast<double>(std::sqrt(var / static_cast<long double>(cfg.trials)));
    }
    return res;
}

RouteDeliveryResult simulate_route_delivery(const std::vector<HopSpec>& hops,
                                            std::uint64_t trials, std::uint64_t seed) {
    if (hops.empty()) throw std::invalid_argument("route has no hops");
    if (trials == 0) throw std::invalid_argument("trial count must be positive");

    RouteDeliveryResult res;
    res.trials = trials;
    std::vector<double> hop_p;
    double honest_draws = 0;
    for (const HopSpec& hop : hops) {
        const double p = round_success_probability(hop.semantics, hop.failures);
        if (p <= 0.0) throw std::invalid_argument("hop can never succeed");
        hop_p.push_back(p);
        res.per_hop_analytic.push_back(1.0 / p);
        res.analytic_mean += 1.0 / p;
        honest_draws += static_cast<double>(trials) * static_cast<double>(hop.failures.size()) / p;
    }
    const bool fast = honest_draws > kMaxHonestPathDraws;

    long double sum = 0;
    long double sum_sq = 0;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        CounterRng rng(seed, CounterRng::stream_tag(stream::kTrial, trial));
        long double total = 0;
        for (std::size_t i = 0; i < hops.size(); ++i) {
            total += fast ? geometric_rounds(rng, hop_p[i])
                          : honest_rounds(rng, hops[i].semantics, hops[i].failures);
        }
        sum += total;
        sum_sq += total * total;
    }
    const long double mean = sum / static_cast<long double>(trials);
    res.empirical_mean = static_cast<double>(mean);
    if (trials > 1) {
        long double var = (sum_sq - sum * mean) / static_cast<long double>(trials - 1);
        if (var < 0) var = 0;
        res.std_error = static_cast<double>(std::sqrt(var / static_cast<long double>(trials)));
    }
    return res;
}

std::vector<McCell> run_mc_grid(const std::vector<int>& ns, const std::vector<double>& fs,
                                std::uint64_t trials, std::uint64_t seed) {
    std::vector<McCell> cells;
    std::uint64_t ordinal = 0;
    for (Semantics semantics : {Semantics::Broadcast, Semantics::Pairwise}) {
        for (int n : ns) {
            if (n < 1) throw std::invalid_argument("forwarder count must be positive");
            for (double f : fs) {
                ++ordinal;
                TrialConfig cfg;
                cfg.semantics = semantics;
                cfg.failures.assign(static_cast<std::size_t>(n), f);
                cfg.trials = trials;
                cfg.seed = CounterRng::stream_tag(seed, ordinal);
                McCell cell;
                cell.semantics = semantics;
                cell.n = n;
                cell.f = f;
                cell.result = simulate_anypath_rounds(cfg);
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::string mc_grid_to_csv(const std::vector<McCell>& cells, std::uint64_t seed,
                           std::uint64_t trials) {
    std::ostringstream out;
    out << "semantics,n,f,analytic,empirical,stderr,trials,seed\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        out << buf;
    };
    for (const McCell& cell : cells) {
        out << semantics_name(cell.semantics) << ',' << cell.n << ',';
        num(cell.f);
        out << ',';
        num(cell.result.analytic_mean);
        out << ',';
        num(cell.result.empirical_mean);
        out << ',';
        num(cell.result.std_error);
        out << ',' << trials << ',' << seed << '\n';
    }
    return out.str();
}

}  // namespace eakr

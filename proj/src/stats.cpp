#include "circamood/stats.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <ostream>

#include "circamood/csv.hpp"
#include "circamood/parallel.hpp"
#include "circamood/rng.hpp"

namespace circamood {

bool is_constant(std::span<const double> values) noexcept {
    const double* first = nullptr;
    for (const double& v : values) {
        if (is_missing(v)) {
            continue;
        }
        if (first == nullptr) {
            first = &v;
        } else if (v != *first) {
            return false;
        }
    }
    return true;
}

namespace {

struct PearsonResult {
    std::optional<double> r;
    std::size_t pairs = 0;
};

PearsonResult pearson_with_count(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw UsageError("pearson: series lengths differ");
    }
    PearsonResult out;
    double sx = 0.0;
    double sy = 0.0;
    bool x_varies = false;
    bool y_varies = false;
    double x0 = 0.0;
    double y0 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_missing(x[i]) && !is_missing(y[i])) {
            if (out.pairs == 0) {
                x0 = x[i];
                y0 = y[i];
            }
            x_varies = x_varies || x[i] != x0;
            y_varies = y_varies || y[i] != y0;
            sx += x[i];
            sy += y[i];
            ++out.pairs;
        }
    }
    if (out.pairs < 3 || !x_varies || !y_varies) {
        return out;
    }
    const double n = static_cast<double>(out.pairs);
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!is_missing(x[i]) && !is_missing(y[i])) {
            const double dx = x[i] - mx;
            const double dy = y[i] - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        return out;
    }
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return out;
}

bool has_missing(const DaySeriesSet& d) {
    return std::any_of(d.days.begin(), d.days.end(), [](const DayVector& v) {
        return std::any_of(v.begin(), v.end(), [](double x) { return is_missing(x); });
    });
}

void require_days(const DaySeriesSet& d, std::size_t minimum = 2) {
    if (d.days.size() < minimum) {
        throw DataError("test needs at least " + std::to_string(minimum) + " days, got " +
                        std::to_string(d.days.size()));
    }
}

// Fully observed days reduce to unit vectors u_d = (x_d - mean) / |x_d - mean|,
// and the pair sum of correlations is (|sum u_d|^2 - sum |u_d|^2) / 2.
// Shuffling a day permutes u_d, so only the sum needs recomputing.
struct UnitDays {
    std::vector<DayVector> units;
    std::vector<bool> usable;
    std::size_t n_usable = 0;
    double sum_sq = 0.0;
};

UnitDays unit_days(const DaySeriesSet& d) {
    UnitDays u;
    u.units.resize(d.days.size());
    u.usable.resize(d.days.size(), false);
    for (std::size_t i = 0; i < d.days.size(); ++i) {
        const auto& v = d.days[i];
        if (is_constant(v)) {
            continue;
        }
        double sum = 0.0;
        for (const double x : v) {
            sum += x;
        }
        const double mean = sum / static_cast<double>(kHoursPerDay);
        double ss = 0.0;
        for (const double x : v) {
            ss += (x - mean) * (x - mean);
        }
        if (!(ss > 0.0)) {
            continue;
        }
        const double norm = std::sqrt(ss);
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            u.units[i][h] = (v[h] - mean) / norm;
        }
        for (const double x : u.units[i]) {
            u.sum_sq += x * x;
        }
        u.usable[i] = true;
        ++u.n_usable;
    }
    return u;
}

double mean_pair_correlation_from_sum(const DayVector& total, const UnitDays& u) {
    double sq = 0.0;
    for (const double x : total) {
        sq += x * x;
    }
    const double pairs = static_cast<double>(u.n_usable) * static_cast<double>(u.n_usable - 1) / 2.0;
    return (sq - u.sum_sq) / 2.0 / pairs;
}

using Permutation = std::array<std::uint8_t, kHoursPerDay>;

Permutation random_permutation(CounterRng& rng) {
    Permutation p{};
    std::iota(p.begin(), p.end(), std::uint8_t{0});
    shuffle(p.begin(), p.end(), rng);
    return p;
}

std::vector<std::size_t> draw_indices(std::size_t n, CounterRng& rng) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) {
        i = static_cast<std::size_t>(rng.below(n));
    }
    return idx;
}

double hour_set_score(const DayVector& avg, const HourSet& hours) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const int h : hours.hours()) {
        const double v = avg[static_cast<std::size_t>(h)];
        if (!is_missing(v)) {
            sum += v;
            ++n;
        }
    }
    return n == 0 ? kMissing : sum / static_cast<double>(n);
}

std::string join_params(const std::vector<std::pair<std::string, std::string>>& params) {
    std::string out;
    for (const auto& [k, v] : params) {
        if (!out.empty()) {
            out += ';';
        }
        out += k + '=' + v;
    }
    return out;
}

// Runs `draw` for every bootstrap with per-iteration redraw bookkeeping and
// enforces the 10% redraw budget.
template <typename Draw>
std::uint64_t run_bootstraps(const DaySeriesSet& d, const BootstrapOptions& options, Draw&& draw) {
    const std::uint64_t budget = options.bootstraps / 10;
    std::vector<std::uint64_t> redraws(options.bootstraps, 0);
    std::vector<char> failed(options.bootstraps, 0);
    parallel_for(options.bootstraps, options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            CounterRng rng(options.seed, StreamId::Bootstrap, b);
            for (;;) {
                const auto idx = draw_indices(d.days.size(), rng);
                if (draw(b, average_days(d, idx))) {
                    break;
                }
                if (++redraws[b] > budget) {
                    failed[b] = 1;
                    break;
                }
            }
        }
    });
    const std::uint64_t total = std::accumulate(redraws.begin(), redraws.end(), std::uint64_t{0});
    if (total > budget || std::any_of(failed.begin(), failed.end(), [](char f) { return f != 0; })) {
        throw DataError("more than 10% of bootstraps had an undefined hour-set score (" + std::to_string(total) +
                        " redraws)");
    }
    return total;
}

}  // namespace

std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
    return pearson_with_count(x, y).r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const auto r = pearson_with_count(x, y);
    if (!r.r) {
        throw UndefinedCorrelation(r.pairs < 3 ? "correlation undefined: fewer than three complete pairs"
                                               : "correlation undefined: constant series");
    }
    return *r.r;
}

std::vector<double> hourly_values(const DaySeriesSet& d) {
    std::vector<double> out;
    out.reserve(d.days.size() * kHoursPerDay);
    for (const auto& day : d.days) {
        out.insert(out.end(), day.begin(), day.end());
    }
    return out;
}

HourSet::HourSet(std::initializer_list<int> hours) {
    for (const int h : hours) {
        if (h < 0 || h >= static_cast<int>(kHoursPerDay)) {
            throw UsageError("hour " + std::to_string(h) + " outside 0..23");
        }
        bits_.set(static_cast<std::size_t>(h));
    }
}

HourSet HourSet::parse(std::string_view text) {
    auto number = [&](std::string_view s) -> int {
        s = csv::trim(s);
        int v = -1;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
            throw UsageError("malformed hour range '" + std::string(text) + "'");
        }
        return v;
    };
    HourSet set;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = text.size();
        }
        const auto item = csv::trim(text.substr(pos, comma - pos));
        pos = comma + 1;
        if (item.empty()) {
            throw UsageError("malformed hour range '" + std::string(text) + "'");
        }
        const auto dash = item.find('-');
        if (dash == std::string_view::npos) {
            const int h = number(item);
            if (h < 0 || h > 23) {
                throw UsageError("hour " + std::string(item) + " outside 0..23");
            }
            set.bits_.set(static_cast<std::size_t>(h));
            continue;
        }
        const int a = number(item.substr(0, dash));
        const int b = number(item.substr(dash + 1));
        if (a < 0 || a > 23 || b < 0 || b > 24 || a == b) {
            throw UsageError("bad hour range '" + std::string(item) + "' (expected A-B with 0<=A<=23, 0<=B<=24, A!=B)");
        }
        for (int h = a; h != b; h = (h + 1) % 24) {
            set.bits_.set(static_cast<std::size_t>(h));
            if (b == 24 && h == 23) {
                break;
            }
        }
    }
    if (set.empty()) {
        throw UsageError("empty hour set");
    }
    return set;
}

std::vector<int> HourSet::hours() const {
    std::vector<int> out;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        if (bits_.test(h)) {
            out.push_back(static_cast<int>(h));
        }
    }
    return out;
}

std::string HourSet::to_string() const {
    std::string out;
    std::size_t h = 0;
    while (h < kHoursPerDay) {
        if (!bits_.test(h)) {
            ++h;
            continue;
        }
        std::size_t end = h;
        while (end < kHoursPerDay && bits_.test(end)) {
            ++end;
        }
        if (!out.empty()) {
            out += ',';
        }
        out += end == h + 1 ? std::to_string(h) : std::to_string(h) + "-" + std::to_string(end);
        h = end;
    }
    return out;
}

std::string_view test_name(TestKind kind) {
    switch (kind) {
        case TestKind::Tcp: return "tcp";
        case TestKind::Tmd: return "tmd";
        case TestKind::Tpt: return "tpt";
        case TestKind::Acf: return "acf";
    }
    return "unknown";
}

void write_report(std::ostream& out, const TestReport& r) {
    out << csv::provenance_line(r.seed) << '\n';
    out << "test,mood,scope,statistic,p_value,iterations,seed,params\n";
    out << test_name(r.test) << ',' << csv::escape(r.mood) << ',' << csv::escape(r.scope) << ','
        << (r.statistic ? csv::format_double(*r.statistic) : std::string("NA")) << ','
        << csv::format_double(r.p_value()) << ',' << r.iterations << ',' << r.seed << ','
        << csv::escape(join_params(r.params)) << '\n';
}

void write_trace(std::ostream& out, const TestReport& r) {
    out << csv::provenance_line(r.seed) << '\n';
    out << "iteration,statistic_value\n";
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        out << i << ',' << csv::format_double(r.trace[i]) << '\n';
    }
}

PairwiseCorrelation mean_pairwise_day_correlation(const DaySeriesSet& d) {
    require_days(d);
    PairwiseCorrelation out;
    double sum = 0.0;
    for (std::size_t i = 0; i < d.days.size(); ++i) {
        for (std::size_t j = i + 1; j < d.days.size(); ++j) {
            if (const auto r = try_pearson(d.days[i], d.days[j])) {
                sum += *r;
                ++out.pairs_used;
            } else {
                ++out.pairs_skipped;
            }
        }
    }
    if (out.pairs_used == 0) {
        throw DataError("no day pair has a defined correlation");
    }
    out.mean = sum / static_cast<double>(out.pairs_used);
    return out;
}

TestReport tcp_test(const DaySeriesSet& d, const TcpOptions& options) {
    if (options.permutations < 100) {
        throw UsageError("tcp needs at least 100 permutations");
    }
    require_days(d);
    TestReport report;
    report.test = TestKind::Tcp;
    report.mood = d.mood;
    report.iterations = options.permutations;
    report.seed = options.seed;

    std::vector<double> r(options.permutations, kMissing);
    const bool fast = !has_missing(d);
    double observed = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;

    if (fast) {
        const UnitDays u = unit_days(d);
        if (u.n_usable < 2) {
            throw DataError("no day pair has a defined correlation");
        }
        DayVector total{};
        for (std::size_t i = 0; i < u.units.size(); ++i) {
            if (u.usable[i]) {
                for (std::size_t h = 0; h < kHoursPerDay; ++h) {
                    total[h] += u.units[i][h];
                }
            }
        }
        observed = mean_pair_correlation_from_sum(total, u);
        pairs_used = u.n_usable * (u.n_usable - 1) / 2;
        pairs_skipped = d.days.size() * (d.days.size() - 1) / 2 - pairs_used;
        parallel_for(options.permutations, options.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t it = begin; it < end; ++it) {
                CounterRng rng(options.seed, StreamId::Permutation, it);
                DayVector shuffled{};
                for (std::size_t i = 0; i < u.units.size(); ++i) {
                    const auto perm = random_permutation(rng);
                    if (!u.usable[i]) {
                        continue;
                    }
                    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
                        shuffled[h] += u.units[i][perm[h]];
                    }
                }
                r[it] = mean_pair_correlation_from_sum(shuffled, u);
            }
        });
    } else {
        const auto c = mean_pairwise_day_correlation(d);
        observed = c.mean;
        pairs_used = c.pairs_used;
        pairs_skipped = c.pairs_skipped;
        parallel_for(options.permutations, options.threads, [&](std::size_t begin, std::size_t end) {
            DaySeriesSet shuffled;
            shuffled.days.resize(d.days.size());
            for (std::size_t it = begin; it < end; ++it) {
                CounterRng rng(options.seed, StreamId::Permutation, it);
                for (std::size_t i = 0; i < d.days.size(); ++i) {
                    const auto perm = random_permutation(rng);
                    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
                        shuffled.days[i][h] = d.days[i][perm[h]];
                    }
                }
                try {
                    r[it] = mean_pairwise_day_correlation(shuffled).mean;
                } catch (const DataError&) {
                    r[it] = kMissing;  // no defined pair: cannot reach c
                }
            }
        });
    }

    report.statistic = observed;
    report.exceedances = static_cast<std::uint64_t>(
        std::count_if(r.begin(), r.end(), [&](double x) { return !is_missing(x) && x >= observed; }));
    report.params = {{"permutations", std::to_string(options.permutations)},
                     {"days", std::to_string(d.days.size())},
                     {"pairs_used", std::to_string(pairs_used)},
                     {"pairs_skipped", std::to_string(pairs_skipped)},
                     {"k", std::to_string(report.exceedances)}};
    if (options.keep_trace) {
        report.trace = std::move(r);
    }
    return report;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n_days, std::uint64_t seed, std::uint64_t iteration) {
    CounterRng rng(seed, StreamId::Bootstrap, iteration);
    return draw_indices(n_days, rng);
}

DayVector average_days(const DaySeriesSet& d, std::span<const std::size_t> indices) {
    DayVector sum{};
    std::array<std::size_t, kHoursPerDay> n{};
    for (const auto i : indices) {
        const auto& day = d.days.at(i);
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            if (!is_missing(day[h])) {
                sum[h] += day[h];
                ++n[h];
            }
        }
    }
    DayVector avg{};
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        avg[h] = n[h] == 0 ? kMissing : sum[h] / static_cast<double>(n[h]);
    }
    return avg;
}

DayVector bootstrap_mean_series(const DaySeriesSet& d, std::uint64_t seed, std::uint64_t iteration) {
    require_days(d, 1);
    const auto idx = bootstrap_indices(d.days.size(), seed, iteration);
    return average_days(d, idx);
}

TestReport tmd_test(const DaySeriesSet& d, const HourSet& ha, const HourSet& hb, const BootstrapOptions& options) {
    if (options.bootstraps < 1000) {
        throw UsageError("tmd needs at least 1000 bootstraps");
    }
    if (ha.empty() || hb.empty()) {
        throw UsageError("tmd hour sets must be non-empty");
    }
    require_days(d);
    std::vector<double> diff(options.bootstraps, 0.0);
    std::vector<char> hit(options.bootstraps, 0);
    const auto redraws = run_bootstraps(d, options, [&](std::size_t b, const DayVector& avg) {
        const double sa = hour_set_score(avg, ha);
        const double sb = hour_set_score(avg, hb);
        if (is_missing(sa) || is_missing(sb)) {
            return false;
        }
        diff[b] = sa - sb;
        hit[b] = sb >= sa ? 1 : 0;
        return true;
    });

    TestReport report;
    report.test = TestKind::Tmd;
    report.mood = d.mood;
    report.iterations = options.bootstraps;
    report.seed = options.seed;
    report.exceedances = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
    double sum = 0.0;
    for (const double x : diff) {
        sum += x;
    }
    report.statistic = sum / static_cast<double>(options.bootstraps);
    report.params = {{"ha", ha.to_string()},
                     {"hb", hb.to_string()},
                     {"bootstraps", std::to_string(options.bootstraps)},
                     {"days", std::to_string(d.days.size())},
                     {"redraws", std::to_string(redraws)},
                     {"k", std::to_string(report.exceedances)}};
    if (options.keep_trace) {
        report.trace = std::move(diff);
    }
    return report;
}

TestReport tpt_test(const DaySeriesSet& d, const HourSet& hc, ExtremumMode mode, const BootstrapOptions& options) {
    if (options.bootstraps < 1000) {
        throw UsageError("tpt needs at least 1000 bootstraps");
    }
    if (hc.empty()) {
        throw UsageError("tpt hour set must be non-empty");
    }
    require_days(d);
    std::vector<double> first_hour(options.bootstraps, kMissing);
    std::vector<char> missed(options.bootstraps, 0);
    const auto redraws = run_bootstraps(d, options, [&](std::size_t b, const DayVector& avg) {
        std::optional<double> best;
        for (const double v : avg) {
            if (is_missing(v)) {
                continue;
            }
            if (!best || (mode == ExtremumMode::Max ? v > *best : v < *best)) {
                best = v;
            }
        }
        if (!best) {
            return false;
        }
        bool reached = false;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            if (avg[h] == *best) {
                if (is_missing(first_hour[b])) {
                    first_hour[b] = static_cast<double>(h);
                }
                reached = reached || hc.contains(static_cast<int>(h));
            }
        }
        missed[b] = reached ? 0 : 1;
        return true;
    });

    std::array<std::uint64_t, kHoursPerDay> tally{};
    for (const double h : first_hour) {
        ++tally[static_cast<std::size_t>(h)];
    }
    const auto modal = std::max_element(tally.begin(), tally.end()) - tally.begin();

    TestReport report;
    report.test = TestKind::Tpt;
    report.mood = d.mood;
    report.iterations = options.bootstraps;
    report.seed = options.seed;
    report.exceedances = static_cast<std::uint64_t>(std::count(missed.begin(), missed.end(), 1));
    report.params = {{"hc", hc.to_string()},
                     {"mode", mode == ExtremumMode::Max ? "max" : "min"},
                     {"bootstraps", std::to_string(options.bootstraps)},
                     {"days", std::to_string(d.days.size())},
                     {"redraws", std::to_string(redraws)},
                     {"modal_extremum_hour", std::to_string(modal)},
                     {"k", std::to_string(report.exceedances)}};
    if (options.keep_trace) {
        report.trace = std::move(first_hour);
    }
    return report;
}

std::vector<AcfPoint> autocorrelation(std::span<const double> series, std::size_t max_lag) {
    if (max_lag < 1) {
        throw UsageError("max_lag must be at least 1");
    }
    if (series.size() < max_lag + 3) {
        throw DataError("series of length " + std::to_string(series.size()) + " is too short for max lag " +
                        std::to_string(max_lag));
    }
    std::vector<AcfPoint> out;
    out.reserve(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const auto res = pearson_with_count(series.first(series.size() - lag), series.subspan(lag));
        AcfPoint p;
        p.lag = lag;
        p.r = res.r.value_or(kMissing);
        p.n_effective = res.pairs;
        p.bound = res.pairs >= 2 ? acf_confidence_bound(res.pairs) : kMissing;
        out.push_back(p);
    }
    return out;
}

double acf_confidence_bound(std::size_t n_effective) {
    if (n_effective < 2) {
        throw UsageError("confidence bound needs n_effective >= 2");
    }
    return 1.96 / std::sqrt(static_cast<double>(n_effective));
}

void write_acf(std::ostream& out, std::string_view mood, std::string_view scope, std::span<const AcfPoint> acf,
               std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "mood,scope,lag,r,bound,n_effective\n";
    for (const auto& p : acf) {
        out << csv::escape(mood) << ',' << csv::escape(scope) << ',' << p.lag << ',' << csv::format_double(p.r) << ','
            << csv::format_double(p.bound) << ',' << p.n_effective << '\n';
    }
}

}  // namespace circamood

#include "circamood/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"
#include "circamood/textproc.hpp"
#include "circamood/version.hpp"

namespace circamood {

namespace fs = std::filesystem;

namespace {

std::string stem_word(const std::string& word) {
    const auto tokens = tokenize(word);
    if (tokens.empty()) {
        throw UsageError("'" + word + "' contains no letters");
    }
    return porter_stem(tokens.front());
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

std::ifstream open_input(const fs::path& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + std::string(what) + " " + path.string() + " (run the earlier stage first)");
    }
    return in;
}

}  // namespace

ConfoundPair parse_confound(std::string_view text) {
    const auto a = text.find(':');
    const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (b == std::string_view::npos || text.find(':', b + 1) != std::string_view::npos) {
        throw UsageError("bad confound '" + std::string(text) + "' (expected mood:term:confound)");
    }
    ConfoundPair p{std::string(text.substr(0, a)), std::string(text.substr(a + 1, b - a - 1)),
                   std::string(text.substr(b + 1))};
    if (p.mood.empty() || p.term.empty() || p.confound.empty()) {
        throw UsageError("bad confound '" + std::string(text) + "' (empty field)");
    }
    return p;
}

void validate(const RunConfig& c, Stage stage) {
    if (stage == Stage::Ingest) {
        if (c.centres.empty() || !fs::is_regular_file(c.centres)) {
            throw UsageError("centres file '" + c.centres.string() + "' does not exist");
        }
        if (!(c.radius_km > 0.0)) {
            throw UsageError("radius_km must be positive");
        }
    }
    if (stage != Stage::Analyze) {
        if (c.lexicon.empty() || !fs::is_regular_file(c.lexicon)) {
            throw UsageError("lexicon file '" + c.lexicon.string() + "' does not exist");
        }
        if (c.seasons.empty()) {
            throw UsageError("at least one season window is required");
        }
        std::set<std::string> labels;
        for (const auto& s : c.seasons) {
            if (!labels.insert(s.label()).second) {
                throw UsageError("duplicate season label '" + s.label() + "'");
            }
            if (s.label() == "aggregate") {
                throw UsageError("'aggregate' is reserved and cannot be a season label");
            }
        }
    }
    if (c.tcp_permutations < 100) {
        throw UsageError("tcp permutations must be at least 100");
    }
    if (c.bootstraps < 1000) {
        throw UsageError("bootstraps must be at least 1000");
    }
    if (c.threads < 1) {
        throw UsageError("threads must be at least 1");
    }
    if (c.confound_threshold < 0.0 || c.confound_threshold > 1.0) {
        throw UsageError("confound threshold must lie in [0, 1]");
    }
    if (c.out.empty()) {
        throw UsageError("output directory not set");
    }
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw DataError("output directory " + dir.string() + " is locked by another run (remove " + path_.string() +
                        " if no run is active)");
    }
    ::close(fd);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

PreparedLexicon prepare_lexicon(const RunConfig& c) {
    PreparedLexicon p{build_stemmed_lexicon(load_raw_lexicon(c.lexicon)), {}};
    std::set<std::string> columns;
    for (const auto& s : p.lexicon.all_stems()) {
        columns.insert(s);
    }
    for (const auto& pair : c.confounds) {
        columns.insert(stem_word(pair.term));
        columns.insert(stem_word(pair.confound));
    }
    p.columns.assign(columns.begin(), columns.end());
    return p;
}

fs::path matrix_path(const RunConfig& c, const std::string& season) {
    return c.out / ("matrix_" + season + ".csv");
}

fs::path series_path(const RunConfig& c, const std::string& mood) {
    return c.out / ("series_" + mood + ".csv");
}

fs::path profile_path(const RunConfig& c, const std::string& mood) {
    return c.out / ("profile_" + mood + ".csv");
}

IngestStats cmd_ingest(const RunConfig& c, std::span<const fs::path> inputs, std::ostream& log) {
    validate(c, Stage::Ingest);
    if (inputs.empty()) {
        throw UsageError("no input files given");
    }
    OutputLock lock(c.out);
    const auto lex = prepare_lexicon(c);
    for (const auto& w : lex.lexicon.warnings()) {
        log << "warning: " << w << '\n';
    }
    IngestOptions options;
    options.format = c.format;
    options.centres = load_centres(c.centres);
    if (options.centres.empty()) {
        throw DataError("centres file lists no centres");
    }
    options.radius_km = c.radius_km;
    options.windows = c.seasons;
    options.stems = lex.columns;
    options.threads = c.threads;
    auto result = ingest_files(inputs, options);
    const auto& st = result.stats;
    log << "read " << st.lines_read << " lines: " << st.parsed << " parsed, " << st.parse_errors
        << " parse errors, " << st.no_coordinates << " without coordinates, " << st.outside_radius
        << " outside radius, " << st.outside_window << " outside windows, " << st.binned << " binned ("
        << st.tokens << " tokens)\n";
    for (const auto& e : st.error_samples) {
        log << "  line " << e.line << ": " << e.reason << '\n';
    }
    if (st.lines_read == 0) {
        throw DataError("no records");
    }
    if (st.binned == 0) {
        throw DataError("no records in any window");
    }
    for (const auto& m : result.matrices) {
        auto out = open_output(matrix_path(c, m.season_label()));
        write_matrix(out, m, c.seed);
    }
    auto stats_out = open_output(c.out / "ingest_stats.csv");
    write_ingest_stats(stats_out, st, c.seed);
    return result.stats;
}

ScoreSummary cmd_score(const RunConfig& c, std::ostream& log) {
    validate(c, Stage::Score);
    OutputLock lock(c.out);
    auto prepared = prepare_lexicon(c);
    auto& lex = prepared.lexicon;
    std::vector<TermFrequencyMatrix> matrices;
    for (const auto& season : c.seasons) {
        auto in = open_input(matrix_path(c, season.label()), "matrix");
        matrices.push_back(read_matrix(in));
        if (matrices.back().season_label() != season.label()) {
            throw DataError("matrix file for '" + season.label() + "' is labelled '" +
                            matrices.back().season_label() + "'");
        }
        for (const auto& stem : prepared.columns) {
            if (!matrices.back().stem_column(stem)) {
                throw DataError("matrix for '" + season.label() + "' has no column for stem '" + stem +
                                "'; re-run ingest with the current lexicon and confounds");
            }
        }
    }

    ScoreSummary summary;
    for (const auto& w : lex.warnings()) {
        summary.warnings.push_back(w);
    }
    for (const auto& pair : c.confounds) {
        if (!lex.has_mood(pair.mood)) {
            summary.warnings.push_back("confound screen skipped: unknown mood '" + pair.mood + "'");
            continue;
        }
        const auto term = stem_word(pair.term);
        const auto confound = stem_word(pair.confound);
        std::optional<double> strongest;
        bool remove = false;
        for (const auto& m : matrices) {
            const auto x = relative_frequency(m, term);
            const auto y = relative_frequency(m, confound);
            ExclusionRow row{pair.mood, term, std::nullopt, confound, ScreenDecision::Keep, m.season_label()};
            const auto res = screen_confound(x, y, c.confound_threshold);
            row.correlation = res.correlation;
            row.decision = res.decision;
            if (res.correlation && (!strongest || std::abs(*res.correlation) > std::abs(*strongest))) {
                strongest = res.correlation;
            }
            remove = remove || res.decision == ScreenDecision::Remove;
            log << "screen " << pair.mood << '/' << term << " vs " << confound << " in " << m.season_label()
                << ": r=" << (res.correlation ? csv::format_double(*res.correlation) : "NA") << " -> "
                << (res.decision == ScreenDecision::Remove ? "remove" : "keep") << " (" << res.note << ")\n";
            summary.exclusions.push_back(std::move(row));
        }
        if (remove) {
            lex.exclude(pair.mood, {term, "correlated with '" + confound + "'", strongest, confound});
        }
    }
    if (!c.confounds.empty()) {
        auto out = open_output(c.out / "exclusions.csv");
        write_exclusion_report(out, summary.exclusions, c.seed);
    }

    std::ostringstream table;
    table << csv::provenance_line(c.seed) << '\n';
    table << "mood,season,status,n_terms,zero_variance_stems,detail\n";
    for (const auto& mood : lex.moods()) {
        std::vector<MoodScoreSeries> series;
        std::string failure;
        for (const auto& m : matrices) {
            try {
                series.push_back(mood_score(m, lex, mood, c.threads));
            } catch (const DataError& e) {
                failure = e.what();
                table << csv::escape(mood) << ',' << csv::escape(m.season_label()) << ",unmeasurable,0,0,"
                      << csv::escape(failure) << '\n';
                break;
            }
        }
        if (!failure.empty()) {
            summary.warnings.push_back("mood '" + mood + "' skipped: " + failure);
            std::error_code ec;
            fs::remove(series_path(c, mood), ec);
            fs::remove(profile_path(c, mood), ec);
            continue;
        }
        for (const auto& s : series) {
            const auto zero = std::count_if(s.term_flags.begin(), s.term_flags.end(),
                                            [](const TermFlag& f) { return f.zero_variance; });
            table << csv::escape(mood) << ',' << csv::escape(s.season_label) << ",ok," << s.n_terms << ',' << zero
                  << ",\n";
        }
        std::vector<CircadianProfile> profiles;
        for (const auto& s : series) {
            profiles.push_back(circadian_profile(std::span(&s, 1), s.season_label));
        }
        if (series.size() > 1) {
            profiles.push_back(circadian_profile(series, "aggregate"));
        }
        auto series_out = open_output(series_path(c, mood));
        write_series(series_out, series, c.seed);
        auto profile_out = open_output(profile_path(c, mood));
        write_profiles(profile_out, profiles, c.seed);
        summary.scored_moods.push_back(mood);
    }
    auto table_out = open_output(c.out / "score_summary.csv");
    table_out << table.str();
    log << "scored " << summary.scored_moods.size() << " mood(s)\n";
    if (!summary.warnings.empty()) {
        log << "warnings:\n";
        for (const auto& w : summary.warnings) {
            log << "  " << w << '\n';
        }
    }
    return summary;
}

namespace {

std::vector<std::string> discover_moods(const RunConfig& c) {
    std::vector<std::string> moods;
    if (!fs::is_directory(c.out)) {
        return moods;
    }
    for (const auto& entry : fs::directory_iterator(c.out)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("series_", 0) == 0 && entry.path().extension() == ".csv") {
            moods.push_back(name.substr(7, name.size() - 7 - 4));
        }
    }
    std::sort(moods.begin(), moods.end());
    return moods;
}

DaySeriesSet select_scope(const std::vector<MoodScoreSeries>& series, const std::string& scope,
                          const std::string& mood) {
    if (scope == "aggregate") {
        return day_series(series);
    }
    for (const auto& s : series) {
        if (s.season_label == scope) {
            return day_series(std::span(&s, 1));
        }
    }
    throw UsageError("scope '" + scope + "' is neither 'aggregate' nor a season of mood '" + mood + "'");
}

}  // namespace

AnalyzeOutcome cmd_analyze(const RunConfig& c, const AnalyzeRequest& request, std::ostream& log) {
    validate(c, Stage::Analyze);
    if (request.test == TestKind::Tmd && (!request.ha || !request.hb)) {
        throw UsageError("tmd needs --ha and --hb");
    }
    if (request.test == TestKind::Tpt && !request.hc) {
        throw UsageError("tpt needs --hc");
    }
    auto moods = request.moods.empty() ? discover_moods(c) : request.moods;
    if (moods.empty()) {
        throw DataError("no series files in " + c.out.string() + " (run score first)");
    }
    OutputLock lock(c.out);
    AnalyzeOutcome outcome;
    const std::string test(test_name(request.test));
    for (const auto& mood : moods) {
        auto in = open_input(series_path(c, mood), "series");
        const auto series = read_series(in);
        if (series.empty()) {
            throw DataError("series file for '" + mood + "' is empty");
        }
        auto days = select_scope(series, request.scope, mood);
        days.mood = mood;
        const std::string stem = mood + "_" + request.scope;

        if (request.test == TestKind::Acf) {
            AcfResult acf{mood, request.scope, autocorrelation(hourly_values(days), request.max_lag)};
            auto out = open_output(c.out / ("acf_" + stem + ".csv"));
            write_acf(out, mood, request.scope, acf.points, c.seed);
            log << "acf " << mood << '/' << request.scope << ": " << acf.points.size() << " lags\n";
            outcome.acf.push_back(std::move(acf));
            continue;
        }

        TestReport report;
        if (request.test == TestKind::Tcp) {
            report = tcp_test(days, {request.iterations.value_or(c.tcp_permutations), c.seed, c.threads, request.trace});
        } else {
            const BootstrapOptions opt{request.iterations.value_or(c.bootstraps), c.seed, c.threads, request.trace};
            report = request.test == TestKind::Tmd ? tmd_test(days, *request.ha, *request.hb, opt)
                                                   : tpt_test(days, *request.hc, request.mode, opt);
        }
        report.scope = request.scope;
        auto out = open_output(c.out / ("report_" + test + "_" + stem + ".csv"));
        write_report(out, report);
        if (request.trace) {
            auto trace = open_output(c.out / ("trace_" + test + "_" + stem + ".csv"));
            write_trace(trace, report);
        }
        log << test << ' ' << mood << '/' << request.scope << ": statistic="
            << (report.statistic ? csv::format_double(*report.statistic) : "NA")
            << " p=" << csv::format_double(report.p_value()) << " (" << report.exceedances << '/'
            << report.iterations << ")\n";
        outcome.reports.push_back(std::move(report));
    }
    return outcome;
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (const char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

void render_profile_svg(std::span<const CircadianProfile> profiles, std::ostream& out) {
    if (profiles.empty()) {
        throw DataError("no profiles to render");
    }
    constexpr double kWidth = 800;
    constexpr double kHeight = 480;
    constexpr double kLeft = 70;
    constexpr double kRight = 150;
    constexpr double kTop = 50;
    constexpr double kBottom = 50;
    static constexpr const char* kColours[] = {"#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b"};

    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& p : profiles) {
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            if (is_missing(p.mean[h])) {
                continue;
            }
            const double sem = is_missing(p.sem[h]) ? 0.0 : p.sem[h];
            lo = std::min(lo, p.mean[h] - sem);
            hi = std::max(hi, p.mean[h] + sem);
        }
    }
    if (!std::isfinite(lo)) {
        lo = -1.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.1 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto x = [&](std::size_t h) { return kLeft + plot_w * static_cast<double>(h) / 23.0; };
    auto y = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<!-- circamood " << kVersion << " -->\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"18\">"
        << xml_escape(profiles.front().mood) << ": mood score over 24 hours (mean &#177; SE)</text>\n";
    // Axes and ticks.
    out << "<g stroke=\"black\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\"/>\n";
    out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
    for (std::size_t h = 0; h < kHoursPerDay; h += 3) {
        out << "<text x=\"" << fixed(x(h)) << "\" y=\"" << fixed(kTop + plot_h + 18) << "\">" << h << "</text>\n";
    }
    out << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 10) << "\">hour of day</text>\n";
    out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(y(v) + 4) << "\">" << fixed(v) << "</text>\n";
    }
    out << "</g>\n";

    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        const char* colour = kColours[i % std::size(kColours)];
        std::string missing;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
            if (is_missing(p.mean[h])) {
                missing += (missing.empty() ? "" : " ") + std::to_string(h);
            }
        }
        if (!missing.empty()) {
            out << "<!-- scope " << xml_escape(p.scope) << ": no observations at hours " << missing << " -->\n";
        }
        // Band: one polygon per run of observed hours.
        std::size_t h = 0;
        while (h < kHoursPerDay) {
            if (is_missing(p.mean[h])) {
                ++h;
                continue;
            }
            std::size_t end = h;
            while (end < kHoursPerDay && !is_missing(p.mean[end])) {
                ++end;
            }
            out << "<polygon class=\"band\" fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t k = h; k < end; ++k) {
                const double sem = is_missing(p.sem[k]) ? 0.0 : p.sem[k];
                out << fixed(x(k)) << ',' << fixed(y(p.mean[k] + sem)) << ' ';
            }
            for (std::size_t k = end; k-- > h;) {
                const double sem = is_missing(p.sem[k]) ? 0.0 : p.sem[k];
                out << fixed(x(k)) << ',' << fixed(y(p.mean[k] - sem)) << (k == h ? "" : " ");
            }
            out << "\"/>\n";
            h = end;
        }
        out << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (std::size_t k = 0; k < kHoursPerDay; ++k) {
            if (is_missing(p.mean[k])) {
                continue;
            }
            out << (first ? "" : " ") << fixed(x(k)) << ',' << fixed(y(p.mean[k]));
            first = false;
        }
        out << "\"/>\n";
        const double ly = kTop + 20.0 * static_cast<double>(i);
        out << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << fixed(ly) << "\" width=\"14\" height=\"10\" fill=\""
            << colour << "\"/>\n";
        out << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << fixed(ly + 10)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(p.scope) << "</text>\n";
    }
    out << "</svg>\n";
}

void render_profile_svg(const fs::path& profile_file, const fs::path& out_path) {
    auto in = open_input(profile_file, "profile");
    const auto profiles = read_profiles(in);
    std::ostringstream svg;
    render_profile_svg(profiles, svg);
    auto out = open_output(out_path);
    out << svg.str();
}

}  // namespace circamood

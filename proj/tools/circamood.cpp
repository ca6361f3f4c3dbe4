#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "circamood/error.hpp"
#include "circamood/pipeline.hpp"
#include "circamood/synth.hpp"
#include "circamood/textproc.hpp"
#include "circamood/version.hpp"

namespace fs = std::filesystem;
using namespace circamood;

namespace {

struct GlobalFlags {
    std::string centres;
    std::string lexicon;
    std::vector<std::string> seasons;
    std::string timezone = "Europe/London";
    double radius_km = 10.0;
    std::uint64_t permutations = 1000;
    std::uint64_t bootstraps = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out = "out";
    std::string format = "jsonl";
    std::vector<std::string> confounds;
    double confound_threshold = kDefaultConfoundThreshold;
};

RunConfig to_run_config(const GlobalFlags& g) {
    RunConfig c;
    c.centres = g.centres;
    c.lexicon = g.lexicon;
    c.timezone = g.timezone;
    for (const auto& s : g.seasons) {
        c.seasons.push_back(parse_season(s, g.timezone));
    }
    c.radius_km = g.radius_km;
    c.tcp_permutations = g.permutations;
    c.bootstraps = g.bootstraps;
    c.seed = g.seed;
    c.threads = g.threads;
    c.out = g.out;
    c.format = parse_record_format(g.format);
    for (const auto& p : g.confounds) {
        c.confounds.push_back(parse_confound(p));
    }
    c.confound_threshold = g.confound_threshold;
    return c;
}

TestKind parse_test(const std::string& name) {
    if (name == "tcp") return TestKind::Tcp;
    if (name == "tmd") return TestKind::Tmd;
    if (name == "tpt") return TestKind::Tpt;
    if (name == "acf") return TestKind::Acf;
    throw UsageError("unknown test '" + name + "' (expected tcp, tmd, tpt or acf)");
}

std::optional<HourSet> parse_hours(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    return HourSet::parse(text);
}

/// Parses `mood=word,word,...`.
std::pair<std::string, std::vector<std::string>> parse_synth_mood(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw UsageError("bad --synth-mood '" + text + "' (expected mood=word,word)");
    }
    std::pair<std::string, std::vector<std::string>> m{text.substr(0, eq), {}};
    std::string rest = text.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
        const auto comma = std::min(rest.find(',', start), rest.size());
        if (comma > start) {
            m.second.push_back(rest.substr(start, comma - start));
        }
        start = comma + 1;
    }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"circamood: hourly mood scores and circadian tests for geo-located short texts"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "TOML/INI file whose keys mirror the long option names");
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--seed", g.seed, "master seed recorded in every output");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output directory");
    app.add_option("--centres", g.centres, "urban centres file (name,lat,lon)");
    app.add_option("--lexicon", g.lexicon, "mood lexicon file");
    app.add_option("--season", g.seasons, "season window label:YYYY-MM-DD:YYYY-MM-DD[:Zone] (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_option("--timezone", g.timezone, "default IANA zone for seasons");
    app.add_option("--radius-km", g.radius_km, "geo filter radius");
    app.add_option("--permutations", g.permutations, "TCP permutations");
    app.add_option("--bootstraps", g.bootstraps, "TMD/TPT bootstraps");
    app.add_option("--format", g.format, "record format: jsonl or csv");
    app.add_option("--confound", g.confounds, "mood:term:confound pair to screen (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_option("--confound-threshold", g.confound_threshold, "|r| at or above which the term is removed");

    auto* ingest = app.add_subcommand("ingest", "bin records into per-season term matrices");
    std::vector<std::string> inputs;
    ingest->add_option("inputs", inputs, "record files")->required();

    auto* score = app.add_subcommand("score", "compute mood score series and circadian profiles");

    auto* analyze = app.add_subcommand("analyze", "run tcp, tmd, tpt or acf on scored series");
    std::string test_name_arg;
    AnalyzeRequest request;
    std::string ha;
    std::string hb;
    std::string hc;
    std::string mode = "max";
    std::uint64_t iterations = 0;
    analyze->add_option("--test", test_name_arg, "tcp, tmd, tpt or acf")->required();
    analyze->add_option("--mood", request.moods, "mood to analyse (repeatable; default all)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    analyze->add_option("--scope", request.scope, "season label or 'aggregate'");
    analyze->add_option("--ha", ha, "tmd hour set Ha, e.g. 8-12");
    analyze->add_option("--hb", hb, "tmd hour set Hb, e.g. 20-24");
    analyze->add_option("--hc", hc, "tpt hour set, e.g. 20-24,2-5");
    analyze->add_option("--mode", mode, "tpt extremum: max or min");
    analyze->add_option("--iterations", iterations, "override permutations/bootstraps");
    analyze->add_option("--max-lag", request.max_lag, "acf maximum lag");
    analyze->add_flag("--trace", request.trace, "write the per-iteration statistics");

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with a known mood rhythm");
    SynthConfig sc = default_synth_config();
    std::string synth_output;
    std::string synth_summary;
    std::string start_date = "2011-06-06";
    std::vector<std::string> synth_moods;
    synth->add_option("--output", synth_output, "JSON lines corpus to write")->required();
    synth->add_option("--summary", synth_summary, "summary CSV to write");
    synth->add_option("--days", sc.n_days);
    synth->add_option("--records-per-hour", sc.records_per_hour_mean);
    synth->add_option("--tokens-per-record", sc.tokens_per_record_mean);
    synth->add_option("--baseline-rate", sc.baseline_rate);
    synth->add_option("--amplitude", sc.amplitude);
    synth->add_option("--phase-hour", sc.phase_hour);
    synth->add_option("--weekly-amplitude", sc.weekly_amplitude);
    synth->add_option("--start-date", start_date);
    synth->add_option("--synth-mood", synth_moods, "mood=word,word replacing the default moods (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    synth->add_option("--lat", sc.location.lat);
    synth->add_option("--lon", sc.location.lon);

    auto* render = app.add_subcommand("render", "draw a profile file as SVG");
    std::string profile_file;
    std::string svg_out;
    render->add_option("--profile", profile_file, "profile CSV")->required();
    render->add_option("--output", svg_out, "SVG path")->required();

    auto* stem = app.add_subcommand("stem", "stem words from stdin, one per line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (stem->parsed()) {
            std::string line;
            while (std::getline(std::cin, line)) {
                std::cout << porter_stem(line) << '\n';
            }
            return 0;
        }
        if (synth->parsed()) {
            sc.seed = g.seed;
            sc.timezone = g.timezone;
            sc.start_date = parse_date(start_date);
            if (!synth_moods.empty()) {
                sc.moods.clear();
                for (const auto& m : synth_moods) {
                    sc.moods.push_back(parse_synth_mood(m));
                }
            }
            validate(sc);
            std::ofstream out(synth_output, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw DataError("cannot write " + synth_output);
            }
            const auto summary = generate_corpus(sc, out);
            std::cerr << "wrote " << summary.records << " records, " << summary.tokens << " tokens\n";
            if (!synth_summary.empty()) {
                std::ofstream s(synth_summary, std::ios::binary | std::ios::trunc);
                write_synth_summary(s, sc, summary);
            }
            return 0;
        }
        if (render->parsed()) {
            render_profile_svg(profile_file, svg_out);
            return 0;
        }

        const RunConfig config = to_run_config(g);
        if (ingest->parsed()) {
            const std::vector<fs::path> paths(inputs.begin(), inputs.end());
            (void)cmd_ingest(config, paths, std::cerr);
        } else if (score->parsed()) {
            (void)cmd_score(config, std::cerr);
        } else if (analyze->parsed()) {
            request.test = parse_test(test_name_arg);
            request.ha = parse_hours(ha);
            request.hb = parse_hours(hb);
            request.hc = parse_hours(hc);
            if (mode == "max") {
                request.mode = ExtremumMode::Max;
            } else if (mode == "min") {
                request.mode = ExtremumMode::Min;
            } else {
                throw UsageError("--mode must be max or min");
            }
            if (iterations != 0) {
                request.iterations = iterations;
            }
            (void)cmd_analyze(config, request, std::cerr);
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

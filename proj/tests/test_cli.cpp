#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include "test_support.hpp"

using circamood::testing::slurp;
using circamood::testing::spit;
using circamood::testing::TempDir;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CIRCAMOOD_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_stdout(const std::string& args) {
    const std::string cmd = std::string(CIRCAMOOD_CLI) + " " + args + " 2>/dev/null";
    std::string out;
    if (FILE* p = ::popen(cmd.c_str(), "r")) {
        char buf[512];
        while (const auto n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
        ::pclose(p);
    }
    return out;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        files[e.path().filename().string()] = slurp(e.path());
    }
    return files;
}

struct CliWorkspace {
    TempDir dir{"cli"};
    std::string common;

    CliWorkspace() {
        common = "--centres " + std::string(CIRCAMOOD_DATA) + "/uk_centres.txt --lexicon " +
                 std::string(CIRCAMOOD_DATA) + "/lexicon_sample.txt --season summer:2011-06-06:2011-06-19";
        EXPECT_EQ(run("--seed 4 synth --days 14 --records-per-hour 40 --amplitude 0.5 --output " +
                      (dir / "corpus.jsonl").string()),
                  0);
    }

    int pipeline(const std::string& out, unsigned threads) {
        const std::string g = common + " --seed 4 --threads " + std::to_string(threads) + " --out " + out;
        int rc = run(g + " ingest " + (dir / "corpus.jsonl").string());
        rc = rc != 0 ? rc : run(g + " score");
        rc = rc != 0 ? rc : run(g + " analyze --test tcp --permutations 200 --trace");
        rc = rc != 0 ? rc : run(g + " analyze --test tmd --ha 8-12 --hb 20-24 --bootstraps 1000");
        rc = rc != 0 ? rc : run(g + " analyze --test tpt --hc 8-11 --bootstraps 1000 --mood joy");
        rc = rc != 0 ? rc : run(g + " analyze --test acf --max-lag 48");
        return rc;
    }
};

}  // namespace

TEST(Cli, PipelineIsByteIdenticalAcrossThreadCounts) {
    CliWorkspace w;
    const auto a = (w.dir / "a").string();
    const auto b = (w.dir / "b").string();
    ASSERT_EQ(w.pipeline(a, 1), 0);
    ASSERT_EQ(w.pipeline(b, 8), 0);
    const auto sa = snapshot(a);
    const auto sb = snapshot(b);
    EXPECT_EQ(sa, sb);
    EXPECT_TRUE(sa.contains("report_tcp_joy_aggregate.csv"));
    EXPECT_TRUE(sa.contains("acf_anger_aggregate.csv"));
    EXPECT_FALSE(sa.contains(".lock"));
    for (const auto& [name, contents] : sa) {
        EXPECT_EQ(contents.rfind("# circamood 0.1.0 seed=4\n", 0), 0U) << name;
    }
}

TEST(Cli, UsageErrorsExitOne) {
    CliWorkspace w;
    const auto out = (w.dir / "o").string();
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("--threads 0 stem"), 1);
    EXPECT_EQ(run(w.common + " --out " + out + " --centres /nonexistent ingest x"), 1);
    EXPECT_EQ(run(w.common + " --out " + out + " --season bad ingest x"), 1);
    ASSERT_EQ(w.pipeline(out, 1), 0);
    EXPECT_EQ(run(w.common + " --out " + out + " analyze --test tmd --ha 8-8 --hb 1-2"), 1);
    EXPECT_EQ(run(w.common + " --out " + out + " analyze --test tmd --ha 25 --hb 1-2"), 1);
    EXPECT_EQ(run(w.common + " --out " + out + " analyze --test tpt"), 1);
    EXPECT_EQ(run(w.common + " --out " + out + " analyze --test nope"), 1);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, DataErrorsExitTwo) {
    CliWorkspace w;
    const auto out = (w.dir / "o").string();
    spit(w.dir / "empty.jsonl", "");
    spit(w.dir / "junk.jsonl", "junk\njunk\n");
    EXPECT_EQ(run(w.common + " --out " + out + " ingest " + (w.dir / "empty.jsonl").string()), 2);
    EXPECT_EQ(run(w.common + " --out " + out + " ingest " + (w.dir / "junk.jsonl").string()), 2);
    EXPECT_EQ(run(w.common + " --out " + out + " ingest " + (w.dir / "missing.jsonl").string()), 2);
    EXPECT_EQ(run(w.common + " --out " + (w.dir / "fresh").string() + " score"), 2);
    EXPECT_EQ(run(w.common + " --out " + (w.dir / "fresh").string() + " analyze --test tcp"), 2);
    std::filesystem::create_directories(out);
    spit(std::filesystem::path(out) / ".lock", "");
    EXPECT_EQ(run(w.common + " --out " + out + " ingest " + (w.dir / "corpus.jsonl").string()), 2);
}

TEST(Cli, AnalysisDoesNotGateOnSignificance) {
    CliWorkspace w;
    const auto out = (w.dir / "o").string();
    ASSERT_EQ(w.pipeline(out, 2), 0);
    EXPECT_EQ(run(w.common + " --out " + out + " analyze --test tpt --hc 15 --bootstraps 1000 --seed 4 --mood joy"), 0);
    const auto report = slurp(std::filesystem::path(out) / "report_tpt_joy_aggregate.csv");
    EXPECT_NE(report.find("tpt,joy,aggregate,NA,1,1000,4,"), std::string::npos) << report;
}

TEST(Cli, ConfigFileSuppliesOptions) {
    CliWorkspace w;
    const auto out = (w.dir / "cfg_out").string();
    spit(w.dir / "run.toml", "centres = \"" + std::string(CIRCAMOOD_DATA) +
                                 "/uk_centres.txt\"\n"
                                 "lexicon = \"" +
                                 std::string(CIRCAMOOD_DATA) +
                                 "/lexicon_sample.txt\"\n"
                                 "season = [\"summer:2011-06-06:2011-06-12\", \"later:2011-06-13:2011-06-19\"]\n"
                                 "seed = 12\n"
                                 "out = \"" +
                                 out + "\"\n");
    const auto cfg = "--config " + (w.dir / "run.toml").string();
    ASSERT_EQ(run(cfg + " ingest " + (w.dir / "corpus.jsonl").string()), 0);
    ASSERT_EQ(run(cfg + " score"), 0);
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "matrix_later.csv"));
    EXPECT_EQ(slurp(std::filesystem::path(out) / "profile_joy.csv").rfind("# circamood 0.1.0 seed=12\n", 0), 0U);
}

TEST(Cli, StemAndRender) {
    TempDir dir("stem");
    spit(dir / "words.txt", "happy\nhappiness\ncaresses\n");
    EXPECT_EQ(run_stdout("stem < " + (dir / "words.txt").string()), "happi\nhappi\ncaress\n");
    spit(dir / "profile.csv",
         "# circamood 0.1.0 seed=1\nmood,scope,hour,mean,sem,n_obs\n" + [] {
             std::string rows;
             for (int h = 0; h < 24; ++h) rows += "joy,summer," + std::to_string(h) + ",0." + std::to_string(h) + ",0.1,3\n";
             return rows;
         }());
    EXPECT_EQ(run("render --profile " + (dir / "profile.csv").string() + " --output " + (dir / "p.svg").string()), 0);
    EXPECT_NE(slurp(dir / "p.svg").find("<polyline"), std::string::npos);
    EXPECT_EQ(run("render --profile " + (dir / "nope.csv").string() + " --output " + (dir / "p.svg").string()), 2);
}

TEST(Cli, SynthIsDeterministic) {
    TempDir dir("synth");
    const auto a = (dir / "a.jsonl").string();
    const auto b = (dir / "b.jsonl").string();
    ASSERT_EQ(run("--seed 8 synth --days 2 --records-per-hour 10 --output " + a), 0);
    ASSERT_EQ(run("--seed 8 synth --days 2 --records-per-hour 10 --output " + b), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(run("synth --days 2 --baseline-rate 0.5 --amplitude 0.5 --output " + a), 1);
    EXPECT_EQ(run("synth --days 2 --synth-mood calm=serene,tranquil --output " + a), 0);
    EXPECT_NE(slurp(a).find("serene"), std::string::npos);
}

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "sigdet/cli.hpp"
#include "sigdet/cohort_io.hpp"
#include "support/tempdir.hpp"

namespace fs = std::filesystem;
using namespace sigdet;
using namespace sigdet::testing;

namespace {

// Byte snapshot of every regular file under a directory, keyed by relative
// path. `skip` names files excluded from comparisons (wall-clock columns).
std::map<std::string, std::string> snapshot(const std::string& dir,
                                            const std::vector<std::string>& skip = {}) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = fs::relative(entry.path(), dir).string();
        if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
        files[name] = read_file(entry.path().string());
    }
    return files;
}

std::vector<std::string> tiny_pipeline_overrides(const std::string& data_dir,
                                                 const std::string& out_dir) {
    return {
        "gen.n_patients=300", "gen.n_drugs=10",  "gen.n_conditions=8", "gen.n_spiked=3",
        "gen.seed=11",        "bag.k=3",         "bag.seed=5",         "bag.delta_min=40",
        "bag.delta_max=45",   "run.workers=2",   "run.data_dir=" + data_dir,
        "run.out_dir=" + out_dir,
    };
}

}  // namespace

TEST_CASE("generate writes the four data files deterministically") {
    TempDir dir;
    std::vector<std::string> overrides = {"gen.n_patients=50", "gen.n_drugs=5",
                                          "gen.n_conditions=4", "gen.n_spiked=2",
                                          "run.data_dir=" + dir.str("data"),
                                          "run.out_dir=" + dir.str("out")};
    REQUIRE(cli::run("generate", "", overrides) == 0);
    for (const char* name : {"patients.csv", "drug_eras.csv", "conditions.csv", "truth.csv"})
        CHECK(fs::exists(fs::path(dir.str("data")) / name));
    CHECK(fs::exists(fs::path(dir.str("out")) / "resolved_config.ini"));
    auto first = snapshot(dir.str("data"));

    TempDir again;
    std::vector<std::string> overrides2 = {"gen.n_patients=50", "gen.n_drugs=5",
                                           "gen.n_conditions=4", "gen.n_spiked=2",
                                           "run.data_dir=" + again.str("data"),
                                           "run.out_dir=" + again.str("out")};
    REQUIRE(cli::run("generate", "", overrides2) == 0);
    CHECK(snapshot(again.str("data")) == first);
}

TEST_CASE("count then rate runs from the on-disk checkpoint") {
    TempDir dir;
    std::vector<std::string> base = {"gen.n_patients=100", "gen.n_drugs=6",
                                     "gen.n_conditions=5", "gen.n_spiked=2",
                                     "run.data_dir=" + dir.str("data"),
                                     "run.out_dir=" + dir.str("out")};
    REQUIRE(cli::run("generate", "", base) == 0);
    REQUIRE(cli::run("count", "", base) == 0);
    CHECK(fs::exists(fs::path(dir.str("out")) / "counts.bin"));
    REQUIRE(cli::run("rate", "", base) == 0);
    CHECK(fs::exists(fs::path(dir.str("out")) / "s_dpa1_y01.csv"));
    CHECK(fs::exists(fs::path(dir.str("out")) / "s_dpa2_y10.csv"));
}

TEST_CASE("pipeline outputs are byte-identical across reruns and worker counts") {
    TempDir a;
    REQUIRE(cli::run("pipeline", "", tiny_pipeline_overrides(a.str("data"), a.str("out"))) == 0);
    // run_report carries wall-clock timings; resolved_config echoes the
    // requested worker count. Everything else must match byte for byte.
    const std::vector<std::string> skip = {"run_report.csv", "resolved_config.ini"};
    auto out_a = snapshot(a.str("out"), skip);
    auto data_a = snapshot(a.str("data"));
    CHECK(out_a.count("submission.csv") == 1);
    CHECK(out_a.count("z_dpa1_y01.csv") == 1);
    CHECK(out_a.count("z_dpa2_y10.csv") == 1);
    CHECK(out_a.count("ens_y10.csv") == 1);
    CHECK(out_a.count("eval_ens.csv") == 1);
    CHECK(out_a.count("report.csv") == 1);

    TempDir b;  // same config, rerun
    REQUIRE(cli::run("pipeline", "", tiny_pipeline_overrides(b.str("data"), b.str("out"))) == 0);
    CHECK(snapshot(b.str("out"), skip) == out_a);
    CHECK(snapshot(b.str("data")) == data_a);

    TempDir c;  // different worker count
    auto overrides = tiny_pipeline_overrides(c.str("data"), c.str("out"));
    overrides.push_back("run.workers=5");
    REQUIRE(cli::run("pipeline", "", overrides) == 0);
    CHECK(snapshot(c.str("out"), skip) == out_a);
}

TEST_CASE("pipeline can run from existing data instead of generating") {
    TempDir dir;
    auto overrides = tiny_pipeline_overrides(dir.str("data"), dir.str("out"));
    REQUIRE(cli::run("generate", "", overrides) == 0);

    auto from_disk = overrides;
    from_disk.push_back("gen.n_patients=0");  // 0 = load data_dir instead
    REQUIRE(cli::run("pipeline", "", from_disk) == 0);
    CHECK(fs::exists(fs::path(dir.str("out")) / "submission.csv"));
    CHECK(fs::exists(fs::path(dir.str("out")) / "eval_ens.csv"));
}

TEST_CASE("fuse with tau zero reproduces the dpa2 matrices exactly") {
    TempDir dir;
    auto overrides = tiny_pipeline_overrides(dir.str("data"), dir.str("out"));
    REQUIRE(cli::run("pipeline", "", overrides) == 0);

    auto fuse_overrides = overrides;
    fuse_overrides.push_back("ensemble.tau=0");
    REQUIRE(cli::run("fuse", "", fuse_overrides) == 0);
    for (int y = 1; y <= 10; ++y) {
        char ens[32], dpa2[32];
        std::snprintf(ens, sizeof(ens), "ens_y%02d.csv", y);
        std::snprintf(dpa2, sizeof(dpa2), "z_dpa2_y%02d.csv", y);
        CHECK(read_file(dir.str("out") + "/" + ens) == read_file(dir.str("out") + "/" + dpa2));
    }
}

TEST_CASE("dense submissions carry the full year x scope grid") {
    TempDir dir;
    auto overrides = tiny_pipeline_overrides(dir.str("data"), dir.str("out"));
    for (std::string& o : overrides) {
        if (o.rfind("gen.n_drugs=", 0) == 0) o = "gen.n_drugs=50";
        if (o.rfind("gen.n_conditions=", 0) == 0) o = "gen.n_conditions=40";
        if (o.rfind("bag.k=", 0) == 0) o = "bag.k=2";
    }
    overrides.push_back("run.dense_submission=true");
    REQUIRE(cli::run("pipeline", "", overrides) == 0);

    std::string text = read_file(dir.str("out") + "/submission.csv");
    const auto rows = std::count(text.begin(), text.end(), '\n') - 1;  // minus header
    CHECK(rows == 10 * 50 * 40);  // m x |drug_scope| x |condition_scope|
}

TEST_CASE("evaluate scores a submission against the truth") {
    TempDir dir;
    fs::create_directories(dir.str("data"));
    write_file(dir.str("data") + "/truth.csv",
               "drug_id,condition_id,label\n"
               "1,1,1\n"
               "2,2,1\n"
               "3,3,0\n");
    write_file(dir.str("sub.csv"),
               "year,drug_id,condition_id,score\n"
               "1,1,1,0.900000\n"
               "1,2,2,0.800000\n"
               "1,3,3,0.100000\n"
               "2,1,1,0.900000\n"
               "2,2,2,0.800000\n"
               "2,3,3,0.100000\n");
    std::vector<std::string> overrides = {"run.data_dir=" + dir.str("data"),
                                          "run.out_dir=" + dir.str("out"),
                                          "run.eval_input=" + dir.str("sub.csv")};
    REQUIRE(cli::run("evaluate", "", overrides) == 0);
    CHECK(read_file(dir.str("out") + "/evaluation.csv") ==
          "year,ap\n"
          "1,1.000000\n"
          "2,1.000000\n"
          "mean,1.000000\n");
}

TEST_CASE("report lists top pairs with their yearly trajectories") {
    TempDir dir;
    auto overrides = tiny_pipeline_overrides(dir.str("data"), dir.str("out"));
    overrides.push_back("run.report_top_k=5");
    REQUIRE(cli::run("pipeline", "", overrides) == 0);
    REQUIRE(cli::run("report", "", overrides) == 0);

    std::string text = read_file(dir.str("out") + "/report.csv");
    CHECK(text.rfind("rank,drug_id,condition_id,y1,y2,y3,y4,y5,y6,y7,y8,y9,y10\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);  // header + top 5
}

TEST_CASE("exit codes distinguish config, data and usage failures") {
    TempDir dir;
    CHECK(cli::run("pipeline", dir.str("missing.ini"), {}) == 1);
    CHECK(cli::run("pipeline", "", {"bag.k=0"}) == 1);
    CHECK(cli::run("frobnicate", "", {}) == 1);

    // Era with start after end: a data error surfaced while loading.
    fs::create_directories(dir.str("data"));
    write_file(dir.str("data") + "/patients.csv",
               "patient_id,obs_start,obs_end,age_years,sex\n1,0,3000,40,F\n");
    write_file(dir.str("data") + "/drug_eras.csv",
               "patient_id,drug_id,start_day,end_day\n1,7,100,50\n");
    write_file(dir.str("data") + "/conditions.csv", "patient_id,condition_id,start_day\n");
    std::vector<std::string> overrides = {"run.data_dir=" + dir.str("data"),
                                          "run.out_dir=" + dir.str("out")};
    CHECK(cli::run("count", "", overrides) == 2);

    // Missing truth file during evaluation.
    std::vector<std::string> eval_overrides = {"run.data_dir=" + dir.str("nodata"),
                                               "run.out_dir=" + dir.str("out")};
    CHECK(cli::run("evaluate", "", eval_overrides) == 2);
}

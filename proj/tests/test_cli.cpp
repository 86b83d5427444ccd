#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

/// Runs the pipeline binary through the shell and returns its exit status.
int run(const std::string& args) {
    const std::string cmd = std::string(NOVEVAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Same, but capture stderr into a file for inspection.
int run_capture(const std::string& args, const fs::path& stderr_file,
                const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(NOVEVAL_CLI_PATH) + " " +
                            args + " >/dev/null 2>" + stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const fs::path& path) {
    const std::string text = testutil::read_file_bytes(path);
    std::size_t n = 0;
    for (const char c : text)
        if (c == '\n') ++n;
    return n;
}

std::size_t count_ppms(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(dir / "crops"))
        if (entry.path().extension() == ".ppm") ++n;
    return n;
}

}  // namespace

TEST_CASE("full pipeline: generate, train, embed, score, detect, evaluate, interpret") {
    testutil::TempDir dir("pipeline");
    const fs::path train_dir = dir / "train";
    const fs::path test_dir = dir / "test";

    REQUIRE(run("gen-data --n-per-class 12 --size 8 --seed 5 --out " + train_dir.string()) == 0);
    REQUIRE(run("gen-data --n-per-class 12 --size 8 --seed 6 --out " + test_dir.string()) == 0);
    CHECK(count_ppms(train_dir) == 36);
    CHECK(count_ppms(test_dir) == 36);

    const fs::path model = dir / "vae.json";
    REQUIRE(run("train-vae --data " + train_dir.string() + " --out " + model.string() +
                " --epochs 4 --batch-size 16 --d 3 --hidden 12 --seed 1 --history " +
                (dir / "history.csv").string()) == 0);
    CHECK(count_lines(dir / "history.csv") == 5);  // header + one row per epoch

    const fs::path z_train = dir / "z_train.csv";
    const fs::path z_test = dir / "z_test.csv";
    REQUIRE(run("encode --model " + model.string() + " --data " + train_dir.string() +
                " --out " + z_train.string()) == 0);
    REQUIRE(run("encode --model " + model.string() + " --data " + test_dir.string() + " --out " +
                z_test.string()) == 0);
    CHECK(count_lines(z_train) == 37);
    CHECK(count_lines(z_test) == 37);

    const fs::path scorer = dir / "kde.json";
    REQUIRE(run("fit-scorer --embeddings " + z_train.string() +
                " --scorer kde --out " + scorer.string()) == 0);
    const fs::path novelty = dir / "novelty.csv";
    REQUIRE(run("score --model " + scorer.string() + " --embeddings " + z_test.string() +
                " --out " + novelty.string()) == 0);
    CHECK(count_lines(novelty) == 37);

    const fs::path detections = dir / "detections.jsonl";
    REQUIRE(run("detect --annotations " + (test_dir / "annotations.jsonl").string() +
                " --detector stub:noise=0.02 --seed 3 --out " + detections.string()) == 0);
    CHECK(count_lines(detections) >= 1);

    const fs::path report_dir = dir / "report";
    REQUIRE(run("evaluate --annotations " + (test_dir / "annotations.jsonl").string() +
                " --detections " + detections.string() + " --novelty " + novelty.string() +
                " --out-dir " + report_dir.string()) == 0);
    const nlohmann::json report =
        nlohmann::json::parse(testutil::read_file_bytes(report_dir / "report.json"));
    CHECK(report["n_objects"].get<std::size_t>() == 36);
    const double g = report["g_score"].get<double>();
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    CHECK(count_lines(report_dir / "curve.csv") == 11);  // header + 10 windows

    const fs::path interp_dir = dir / "interp";
    REQUIRE(run("interpret --vae-model " + model.string() + " --train-embeddings " +
                z_train.string() + " --embeddings " + z_test.string() + " --novelty " +
                novelty.string() + " --top-k 2 --steps 4 --out-dir " + interp_dir.string()) == 0);
    const nlohmann::json manifest = nlohmann::json::parse(
        testutil::read_file_bytes(interp_dir / "traversal_manifest.json"));
    REQUIRE(manifest.size() == 2);
    CHECK(fs::exists(interp_dir / manifest[0]["file"].get<std::string>()));
    CHECK(count_lines(interp_dir / "parallel_coordinates.csv") == 37);

    // The benchmark consumes the same artifacts.
    const fs::path bench_csv = dir / "bench.csv";
    REQUIRE(run("benchmark --train-embeddings " + z_train.string() + " --train-factors " +
                (train_dir / "factors.csv").string() + " --test-embeddings " + z_test.string() +
                " --test-factors " + (test_dir / "factors.csv").string() +
                " --scorers kde,knn --repeats 2 --fraction 0.25 --seed 2 --out " +
                bench_csv.string()) == 0);
    const std::string bench = testutil::read_file_bytes(bench_csv);
    CHECK(bench.rfind("scorer,class,fraction,mean_auc,std_auc,repeats\n", 0) == 0);
    CHECK(count_lines(bench_csv) == 3);
}

TEST_CASE("gen-data reruns byte-identically and honors class exclusion") {
    testutil::TempDir dir("gen_rerun");
    const fs::path a = dir / "a";
    const fs::path b = dir / "b";
    REQUIRE(run("gen-data --n-per-class 6 --size 8 --seed 7 --out " + a.string()) == 0);
    REQUIRE(run("gen-data --n-per-class 6 --size 8 --seed 7 --out " + b.string()) == 0);
    CHECK(testutil::read_file_bytes(a / "factors.csv") ==
          testutil::read_file_bytes(b / "factors.csv"));
    CHECK(testutil::read_file_bytes(a / "annotations.jsonl") ==
          testutil::read_file_bytes(b / "annotations.jsonl"));
    CHECK(testutil::read_file_bytes(a / "crops" / "crop_000000.ppm") ==
          testutil::read_file_bytes(b / "crops" / "crop_000000.ppm"));

    const fs::path c = dir / "c";
    REQUIRE(run("gen-data --n-per-class 6 --size 8 --seed 7 --exclude-class green --out " +
                c.string()) == 0);
    CHECK(count_ppms(c) == 12);
    CHECK(testutil::read_file_bytes(c / "factors.csv").find("green") == std::string::npos);
}

TEST_CASE("seed falls back to the environment variable") {
    testutil::TempDir dir("env_seed");
    const fs::path flagged = dir / "flagged";
    const fs::path from_env = dir / "env";
    REQUIRE(run("gen-data --n-per-class 4 --size 8 --seed 9 --out " + flagged.string()) == 0);
    REQUIRE(run_capture("gen-data --n-per-class 4 --size 8 --out " + from_env.string(),
                        dir / "err.txt", "NOVELTY_EVAL_SEED=9") == 0);
    CHECK(testutil::read_file_bytes(flagged / "factors.csv") ==
          testutil::read_file_bytes(from_env / "factors.csv"));

    CHECK(run_capture("gen-data --n-per-class 4 --size 8 --out " + (dir / "bad").string(),
                      dir / "err2.txt", "NOVELTY_EVAL_SEED=banana") == 2);
    CHECK(testutil::read_file_bytes(dir / "err2.txt").find("NOVELTY_EVAL_SEED") !=
          std::string::npos);
}

TEST_CASE("config file supplies defaults and explicit flags win") {
    testutil::TempDir dir("config");
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"n-per-class": 4, "size": 8, "seed": 3})" << "\n";

    const fs::path a = dir / "a";
    REQUIRE(run("--config " + cfg.string() + " gen-data --out " + a.string()) == 0);
    CHECK(count_ppms(a) == 12);
    CHECK(count_lines(a / "factors.csv") == 13);

    const fs::path b = dir / "b";
    REQUIRE(run("--config " + cfg.string() + " gen-data --n-per-class 2 --out " + b.string()) ==
            0);
    CHECK(count_ppms(b) == 6);

    CHECK(run("--config " + (dir / "missing.json").string() + " gen-data --out " +
              (dir / "c").string()) == 2);
    const fs::path broken = dir / "broken.json";
    std::ofstream(broken) << "[1, 2]\n";
    CHECK(run("--config " + broken.string() + " gen-data --out " + (dir / "d").string()) == 2);
}

TEST_CASE("evaluate rejects novelty rows without annotations, as JSON when asked") {
    testutil::TempDir dir("orphan");
    const fs::path data = dir / "data";
    REQUIRE(run("gen-data --n-per-class 4 --size 8 --seed 11 --out " + data.string()) == 0);
    const fs::path detections = dir / "det.jsonl";
    REQUIRE(run("detect --annotations " + (data / "annotations.jsonl").string() +
                " --detector stub --out " + detections.string()) == 0);

    // A novelty table with an id the annotations never mention.
    const fs::path novelty = dir / "novelty.csv";
    {
        std::ofstream out(novelty);
        out << "id,raw,novelty\n";
        for (int i = 0; i < 12; ++i) out << i << ",0.5,0.5\n";
        out << "999,0.5,0.5\n";
    }

    const std::string args = "evaluate --annotations " + (data / "annotations.jsonl").string() +
                             " --detections " + detections.string() + " --novelty " +
                             novelty.string() + " --out-dir " + (dir / "rep").string();
    CHECK(run_capture(args, dir / "err.txt") == 2);
    CHECK(testutil::read_file_bytes(dir / "err.txt").find("999") != std::string::npos);

    CHECK(run_capture("--json " + args, dir / "err.json") == 2);
    const nlohmann::json err =
        nlohmann::json::parse(testutil::read_file_bytes(dir / "err.json"));
    CHECK(err["error"].get<std::string>().find("has no matching annotation") !=
          std::string::npos);
}

TEST_CASE("thread count does not change scoring output bytes") {
    testutil::TempDir dir("threads");
    const fs::path data = dir / "data";
    REQUIRE(run("gen-data --n-per-class 10 --size 8 --seed 13 --out " + data.string()) == 0);
    const fs::path model = dir / "vae.json";
    REQUIRE(run("train-vae --data " + data.string() + " --out " + model.string() +
                " --epochs 2 --batch-size 8 --d 2 --hidden 8 --seed 1") == 0);
    const fs::path z = dir / "z.csv";
    REQUIRE(run("encode --model " + model.string() + " --data " + data.string() + " --out " +
                z.string()) == 0);
    const fs::path scorer = dir / "lof.json";
    REQUIRE(run("fit-scorer --embeddings " + z.string() + " --scorer lof --lof-k 5 --out " +
                scorer.string()) == 0);

    const fs::path s1 = dir / "s1.csv";
    const fs::path s4 = dir / "s4.csv";
    REQUIRE(run("--threads 1 score --model " + scorer.string() + " --embeddings " + z.string() +
                " --out " + s1.string()) == 0);
    REQUIRE(run("--threads 4 score --model " + scorer.string() + " --embeddings " + z.string() +
                " --out " + s4.string()) == 0);
    CHECK(testutil::read_file_bytes(s1) == testutil::read_file_bytes(s4));
}

TEST_CASE("bad invocations fail with a useful exit status") {
    testutil::TempDir dir("badflags");
    CHECK(run("gen-data --bogus-flag 1 --out " + (dir / "x").string()) != 0);
    CHECK(run("") != 0);  // a subcommand is required
    CHECK(run("detect --annotations missing.jsonl --out " + (dir / "d.jsonl").string()) == 2);

    const fs::path data = dir / "data";
    REQUIRE(run("gen-data --n-per-class 4 --size 8 --seed 1 --out " + data.string()) == 0);
    CHECK(run_capture("detect --annotations " + (data / "annotations.jsonl").string() +
                          " --detector warp9 --out " + (dir / "d.jsonl").string(),
                      dir / "err.txt") == 2);
    CHECK(testutil::read_file_bytes(dir / "err.txt").find("unknown detector") !=
          std::string::npos);
    CHECK(run("detect --annotations " + (data / "annotations.jsonl").string() +
              " --detector stub:bulb-noise=0.1 --out " + (dir / "d.jsonl").string()) == 2);
}

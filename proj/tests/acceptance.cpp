// Acceptance suite for the novelty-weighted evaluation pipeline. Each
// criterion prints one [PASS]/[FAIL] line; the process exits non-zero if any
// criterion fails. Tolerances are fixed here and are not tunable.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "noveval/benchmark.hpp"
#include "noveval/detect_eval.hpp"
#include "noveval/genscore.hpp"
#include "noveval/interpret.hpp"
#include "noveval/scorers.hpp"
#include "noveval/synthgen.hpp"
#include "noveval/vae.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace noveval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NOVEVAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// --- criterion 1: generalization-score identities ---------------------------

Outcome criterion_g_formula() {
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0;

    // Equal novelty weights reduce G to 1 - mean loss.
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + eng() % 50;
        const double w = 0.05 + unit(eng);
        std::vector<double> novelty(n, w), losses(n);
        double loss_sum = 0;
        for (double& l : losses) loss_sum += (l = unit(eng));
        const double g = generalization_score(novelty, losses);
        worst = std::max(worst, std::abs(g - (1.0 - loss_sum / static_cast<double>(n))));
    }
    if (worst >= 1e-12) return {false, "equal-weight deviation " + fmt(worst)};

    // Positive scaling of the weights leaves G unchanged.
    double worst_scale = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + eng() % 30;
        std::vector<double> novelty(n), losses(n);
        for (double& v : novelty) v = 0.1 + unit(eng);
        for (double& l : losses) l = unit(eng);
        const double base = generalization_score(novelty, losses);
        for (const double c : {1e-3, 0.37, 19.5, 1e6}) {
            std::vector<double> scaled(novelty);
            for (double& v : scaled) v *= c;
            worst_scale =
                std::max(worst_scale, std::abs(generalization_score(scaled, losses) - base));
        }
    }
    if (worst_scale >= 1e-12) return {false, "scaling deviation " + fmt(worst_scale)};

    // Hand example.
    const std::vector<double> novelty{1.0, 0.5};
    const std::vector<double> losses{0.0, 1.0};
    if (generalization_score(novelty, losses) != 2.0 / 3.0)
        return {false, "hand example [1,0.5]/[0,1] did not give exactly 2/3"};

    // Bounds over 10^4 random instances.
    for (int t = 0; t < 10000; ++t) {
        const std::size_t n = 1 + eng() % 20;
        std::vector<double> nv(n), ls(n);
        for (double& v : nv) v = unit(eng);
        nv[eng() % n] += 0.5;  // keep the weight sum positive
        for (double& l : ls) l = unit(eng);
        const double g = generalization_score(nv, ls);
        if (!(g >= 0.0 && g <= 1.0)) return {false, "G out of [0,1]: " + fmt(g)};
    }
    return {true, "max identity deviation " + fmt(std::max(worst, worst_scale))};
}

// --- criterion 2: brute-force oracle equivalence -----------------------------

Outcome criterion_oracles() {
    double worst_lof = 0, worst_maha = 0, worst_iou = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScorerHyper hyper;
        hyper.standardize = false;

        // LOF against the from-first-principles construction.
        {
            const std::size_t n = 50 + seed % 151;
            const int k = 1 + static_cast<int>(seed % 10);
            const Matrix train = testutil::random_matrix(n, 3, 1000 + seed, -2.0, 2.0);
            const Matrix queries = testutil::random_matrix(20, 3, 2000 + seed, -2.5, 2.5);
            hyper.lof_k = k;
            const ScorerModel model = fit_scorer(train, ScorerKind::lof, hyper);
            const std::vector<double> got = raw_scores(model, queries);
            for (std::size_t q = 0; q < queries.rows; ++q) {
                const double want = oracle::lof(train, queries.row(q), k);
                const double dev = std::abs(got[q] - want) / std::max(1.0, std::abs(want));
                worst_lof = std::max(worst_lof, dev);
            }
        }

        // kNN distance must be bitwise equal: both sides pick the same element.
        {
            const std::size_t n = 20 + seed % 181;
            const int k = 1 + static_cast<int>(seed % 12);
            const Matrix train = testutil::random_matrix(n, 4, 3000 + seed, -1.0, 1.0);
            const Matrix queries = testutil::random_matrix(20, 4, 4000 + seed, -1.0, 1.0);
            hyper.knn_k = k;
            const ScorerModel model = fit_scorer(train, ScorerKind::knn, hyper);
            const std::vector<double> got = raw_scores(model, queries);
            for (std::size_t q = 0; q < queries.rows; ++q)
                if (got[q] != oracle::knn_distance(train, queries.row(q), k))
                    return {false, "kNN distance mismatch at seed " + std::to_string(seed)};
        }

        // Mahalanobis against an explicit Gauss-Jordan inverse.
        {
            const std::size_t n = 50 + seed % 151;
            const Matrix train = testutil::random_normal_matrix(n, 4, 5000 + seed);
            const Matrix queries = testutil::random_normal_matrix(20, 4, 6000 + seed);
            const ScorerModel model = fit_scorer(train, ScorerKind::mahalanobis, hyper);
            const std::vector<double> got = raw_scores(model, queries);
            for (std::size_t q = 0; q < queries.rows; ++q) {
                const double want = oracle::mahalanobis(train, queries.row(q));
                const double dev = std::abs(got[q] - want) / std::max(1.0, std::abs(want));
                worst_maha = std::max(worst_maha, dev);
            }
        }

        // AUC against all-pairs counting, with deliberate tie groups.
        {
            std::mt19937_64 eng(7000 + seed);
            const std::size_t n = 200;
            std::vector<double> scores(n);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i)
                scores[i] = static_cast<double>(eng() % 15) / 14.0;
            labels[0] = 1;
            labels[1] = 0;
            for (std::size_t i = 2; i < n; ++i) labels[i] = eng() % 2;
            if (roc_auc(scores, labels) != oracle::auc(scores, labels))
                return {false, "AUC mismatch at seed " + std::to_string(seed)};
        }

        // IoU against grid counting.
        {
            std::mt19937_64 eng(8000 + seed);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            auto make_box = [&] {
                BoundingBox b;
                const double x = u(eng) * 0.7, y = u(eng) * 0.7;
                b.x1 = x;
                b.y1 = y;
                b.x2 = x + 0.05 + u(eng) * 0.25;
                b.y2 = y + 0.05 + u(eng) * 0.25;
                return b;
            };
            const BoundingBox a = make_box(), b = make_box();
            const double dev = std::abs(iou(a, b) - oracle::iou_grid(a, b, 1000));
            worst_iou = std::max(worst_iou, dev);
        }
    }
    if (worst_lof >= 1e-8) return {false, "LOF deviation " + fmt(worst_lof)};
    if (worst_maha >= 1e-8) return {false, "Mahalanobis deviation " + fmt(worst_maha)};
    if (worst_iou > 1e-3) return {false, "IoU grid deviation " + fmt(worst_iou)};
    return {true, "LOF dev " + fmt(worst_lof) + ", Mahalanobis dev " + fmt(worst_maha) +
                      ", IoU dev " + fmt(worst_iou) + "; kNN and AUC exact"};
}

// --- criterion 3: KDE analytic values ----------------------------------------

Outcome criterion_kde() {
    ScorerHyper hyper;
    hyper.standardize = false;

    Matrix single(1, 2);
    single.at(0, 0) = 0.7;
    single.at(0, 1) = -0.3;
    const ScorerModel point_model = fit_scorer(single, ScorerKind::kde, hyper);
    const std::vector<double> at_point{0.7, -0.3};
    const double peak = kde_log_density(point_model, at_point);
    const double want = -std::log(2.0 * std::numbers::pi);
    if (std::abs(peak - want) >= 1e-12)
        return {false, "single-point log density off by " + fmt(std::abs(peak - want))};

    const Matrix cloud = testutil::random_normal_matrix(50, 2, 33);
    const ScorerModel cloud_model = fit_scorer(cloud, ScorerKind::kde, hyper);
    const double mass = oracle::kde_mass(cloud_model, -9.0, 9.0, 400);
    if (std::abs(mass - 1.0) > 0.02)
        return {false, "density mass " + fmt(mass) + " not within 2% of 1"};
    return {true, "peak deviation " + fmt(std::abs(peak - want)) + ", quadrature mass " +
                      fmt(mass)};
}

// --- criterion 4: VAE numerics ------------------------------------------------

Outcome criterion_vae() {
    // KL closed-form spot values.
    const std::vector<double> zero{0.0}, one{1.0};
    if (kl_divergence(zero, zero) != 0.0) return {false, "KL(0,0) != 0"};
    if (kl_divergence(one, zero) != 0.5) return {false, "KL((1),(0)) != 0.5"};

    // Central finite differences over every parameter of a tiny model.
    VaeParams p = make_params(3, 3, 2, 8, 0.1);
    {
        std::mt19937_64 eng(44);
        std::normal_distribution<double> g(0.0, 0.4);
        for (double* v : param_ptrs(p)) *v = g(eng);
    }
    std::vector<ImageCrop> batch;
    for (int s = 0; s < 2; ++s) {
        ImageCrop crop(3, 3);
        std::mt19937_64 eng(45 + s);
        std::uniform_real_distribution<double> u(0.1, 0.9);
        for (float& px : crop.px) px = static_cast<float>(u(eng));
        batch.push_back(crop);
    }
    const std::vector<std::vector<double>> eps{{0.3, -0.7}, {-0.2, 0.5}};
    const VaeParams grad = batch_gradients(p, batch, eps, 0.1);
    const std::vector<const double*> gs = param_ptrs(grad);
    const std::vector<double*> ps = param_ptrs(p);
    const double h = 1e-4;
    double worst_rel = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double saved = *ps[i];
        *ps[i] = saved + h;
        const double up = batch_loss(p, batch, eps, 0.1).total;
        *ps[i] = saved - h;
        const double down = batch_loss(p, batch, eps, 0.1).total;
        *ps[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = *gs[i];
        const double rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-8);
        worst_rel = std::max(worst_rel, rel);
    }
    if (worst_rel >= 1e-3)
        return {false, "finite-difference relative error " + fmt(worst_rel)};

    // Loss halves on 300 synthetic crops within 200 epochs. Mid-range pixel
    // values carry irreducible entropy (min over q of BCE(p, q) = H(p), about
    // 0.5 nats at p = 0.5 versus 0.693 for the untrained gray output), so
    // bright uniform backgrounds would cap the achievable reduction near 30%
    // no matter how well training works. Dark backgrounds keep the floor low
    // and make the halving a statement about optimization, not about H(p).
    DatasetSpec spec;
    spec.n_per_class = 100;
    spec.seed = 20;
    spec.ranges.background_brightness = {0.0, 0.1};
    spec.ranges.blur_sigma = {0.0, 0.75};
    const GeneratedDataset ds = generate_dataset(spec);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 2e-3;
    cfg.seed = 1;
    cfg.threads = 4;
    const auto [params, history] = train(ds.crops, cfg);
    (void)params;
    const double first = history.front().total;
    const double last = history.back().total;
    if (!(last < 0.5 * first))
        return {false, "loss fell only from " + fmt(first) + " to " + fmt(last)};
    return {true, "FD rel err " + fmt(worst_rel) + "; loss " + fmt(first) + " -> " + fmt(last)};
}

// --- criterion 5: contamination benchmark ------------------------------------

Outcome criterion_benchmark() {
    DatasetSpec train_spec;
    train_spec.n_per_class = 200;
    train_spec.seed = 100;
    DatasetSpec test_spec;
    test_spec.n_per_class = 100;
    test_spec.seed = 101;
    const GeneratedDataset train_ds = generate_dataset(train_spec);
    const GeneratedDataset test_ds = generate_dataset(test_spec);

    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.seed = 2;
    cfg.threads = 4;
    const auto [params, history] = train(train_ds.crops, cfg);
    (void)history;
    const LatentMatrix z_train = embed_dataset(params, train_ds.crops);
    const LatentMatrix z_test = embed_dataset(params, test_ds.crops);

    std::vector<ColorClass> train_labels, test_labels;
    for (const CropFactors& f : train_ds.factors) train_labels.push_back(f.color_class);
    for (const CropFactors& f : test_ds.factors) test_labels.push_back(f.color_class);

    ContaminationSpec spec;
    spec.fraction = 0.10;
    spec.repeats = 3;
    spec.scorers = {ScorerKind::kde, ScorerKind::lof};
    spec.seed = 5;
    const std::vector<BenchmarkRow> rows = run_contamination_benchmark(
        z_train.z, train_labels, z_test.z, test_labels, spec, 4);

    std::string aucs;
    for (const BenchmarkRow& row : rows) {
        aucs += to_string(row.scorer) + " " + fmt(row.mean_auc) + " ";
        if (!(row.mean_auc >= 0.9))
            return {false, to_string(row.scorer) + " mean AUC " + fmt(row.mean_auc) + " < 0.9"};
        if (std::abs(row.std_auc - sample_std(row.per_repeat)) >= 1e-12)
            return {false, to_string(row.scorer) + " std column does not match its repeats"};
    }
    return {true, "mean AUC: " + aucs + "(std columns recomputed exactly)"};
}

// --- criterion 6: loss-vs-novelty trend ---------------------------------------

Outcome criterion_trend() {
    // Train on small bulbs only; the test range extends to large bulbs, so
    // bulb size is a planted novelty factor.
    DatasetSpec train_spec;
    train_spec.n_per_class = 150;
    train_spec.seed = 200;
    train_spec.ranges.bulb_radius = {0.08, 0.17};
    DatasetSpec test_spec;
    test_spec.n_per_class = 100;
    test_spec.seed = 201;
    const GeneratedDataset train_ds = generate_dataset(train_spec);
    const GeneratedDataset test_ds = generate_dataset(test_spec);

    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.seed = 3;
    cfg.threads = 4;
    const auto [params, history] = train(train_ds.crops, cfg);
    (void)history;
    const LatentMatrix z_train = embed_dataset(params, train_ds.crops);
    const LatentMatrix z_test = embed_dataset(params, test_ds.crops);

    ScorerHyper hyper;
    const ScorerModel model = fit_scorer(z_train, ScorerKind::kde, hyper);
    const std::vector<double> raw = raw_scores(model, z_test.z, 4);
    const std::vector<double> novelty = novelty_from_raw(model.orientation, raw);

    // Stub detector: extra box noise on crops whose bulb exceeds the training
    // range.
    StubDetectorConfig det;
    det.noise = 0.01;
    det.boost_noise = 0.08;
    det.boost_threshold = 0.18;
    det.seed = 6;
    std::unordered_map<std::int64_t, double> bulb;
    for (std::size_t i = 0; i < test_ds.factors.size(); ++i)
        bulb[static_cast<std::int64_t>(i)] = test_ds.factors[i].bulb_radius;
    const std::vector<Detection> detections = stub_detect(test_ds.annotations, det, bulb);
    const DatasetEvaluation ev = evaluate_dataset(test_ds.annotations, detections);

    std::vector<double> losses(ev.losses.size(), 0.0);
    std::vector<double> novelty_by_object(ev.losses.size(), 0.0);
    for (std::size_t i = 0; i < ev.losses.size(); ++i) {
        const auto id = static_cast<std::size_t>(ev.losses[i].object_id);
        losses[i] = ev.losses[i].loss;
        novelty_by_object[i] = novelty[id];
    }
    const std::vector<CurvePoint> curve = loss_novelty_curve(novelty_by_object, losses, 10);
    std::vector<double> window_index(curve.size()), window_loss(curve.size());
    for (std::size_t w = 0; w < curve.size(); ++w) {
        window_index[w] = static_cast<double>(w);
        window_loss[w] = curve[w].mean_loss;
    }
    const double rho = testutil::spearman_rho(window_index, window_loss);
    if (!(rho > 0.5)) return {false, "Spearman rho " + fmt(rho) + " <= 0.5"};
    return {true, "Spearman rho " + fmt(rho) + " over " + std::to_string(curve.size()) +
                      " windows"};
}

// --- criterion 7: mutual-information interpretation ---------------------------

Outcome criterion_mi() {
    // Perfect binary dependence carries exactly one bit (ln 2 nats).
    const std::size_t n = 200;
    std::vector<double> column(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i % 2 == 0 ? 0 : 1;
        column[i] = static_cast<double>(labels[i]);
    }
    const double mi = mutual_information(column, labels);
    if (std::abs(mi - std::numbers::ln2) >= 1e-12)
        return {false, "perfect-dependence MI off by " + fmt(std::abs(mi - std::numbers::ln2))};

    // Planted-dimension recovery, 100 seeds.
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 eng(900 + seed);
        std::normal_distribution<double> g(0.0, 1.0);
        const std::size_t planted = seed % 4;
        LatentMatrix z;
        z.z = Matrix(120, 4);
        NoveltyBins bins;
        for (std::size_t i = 0; i < 120; ++i) {
            z.ids.push_back(static_cast<std::int64_t>(i));
            const int label = i % 2 == 0 ? 0 : 1;
            for (std::size_t j = 0; j < 4; ++j)
                z.z.at(i, j) = j == planted ? static_cast<double>(label) : g(eng);
            bins.labels.push_back(label == 1 ? NoveltyBin::high : NoveltyBin::low);
        }
        if (select_informative_dims(z, bins, 1).ranking[0] == planted) ++hits;
    }
    if (hits != 100)
        return {false, "planted dimension recovered in only " + std::to_string(hits) +
                           "/100 trials"};
    return {true, "MI deviation " + fmt(std::abs(mi - std::numbers::ln2)) +
                      ", recovery 100/100"};
}

// --- criterion 8: end-to-end byte determinism ----------------------------------

Outcome criterion_determinism() {
    testutil::TempDir work("acceptance_cli");

    auto chain = [&](const std::string& name, int threads) -> fs::path {
        const fs::path root = work / name;
        const std::string t = "--threads " + std::to_string(threads) + " ";
        const fs::path train_dir = root / "train";
        const fs::path test_dir = root / "test";
        const auto step = [&](const std::string& args) {
            if (run_cli(args) != 0)
                throw std::runtime_error("pipeline step failed: " + args);
        };
        step("gen-data --n-per-class 12 --size 8 --seed 5 --out " + train_dir.string());
        step("gen-data --n-per-class 12 --size 8 --seed 6 --out " + test_dir.string());
        step(t + "train-vae --data " + train_dir.string() + " --out " +
             (root / "vae.json").string() + " --epochs 4 --batch-size 16 --d 3 --hidden 12 --seed 1");
        step("encode --model " + (root / "vae.json").string() + " --data " + train_dir.string() +
             " --out " + (root / "z_train.csv").string());
        step("encode --model " + (root / "vae.json").string() + " --data " + test_dir.string() +
             " --out " + (root / "z_test.csv").string());
        step("fit-scorer --embeddings " + (root / "z_train.csv").string() +
             " --scorer kde --out " + (root / "kde.json").string());
        step(t + "score --model " + (root / "kde.json").string() + " --embeddings " +
             (root / "z_test.csv").string() + " --out " + (root / "novelty.csv").string());
        step("detect --annotations " + (test_dir / "annotations.jsonl").string() +
             " --detector stub:noise=0.02 --seed 3 --out " + (root / "det.jsonl").string());
        step("evaluate --annotations " + (test_dir / "annotations.jsonl").string() +
             " --detections " + (root / "det.jsonl").string() + " --novelty " +
             (root / "novelty.csv").string() + " --out-dir " + (root / "report").string());
        step(t + "benchmark --train-embeddings " + (root / "z_train.csv").string() +
             " --train-factors " + (train_dir / "factors.csv").string() +
             " --test-embeddings " + (root / "z_test.csv").string() + " --test-factors " +
             (test_dir / "factors.csv").string() +
             " --scorers kde,knn --repeats 2 --fraction 0.25 --seed 2 --out " +
             (root / "bench.csv").string());
        step("interpret --vae-model " + (root / "vae.json").string() + " --train-embeddings " +
             (root / "z_train.csv").string() + " --embeddings " + (root / "z_test.csv").string() +
             " --novelty " + (root / "novelty.csv").string() +
             " --top-k 2 --steps 4 --out-dir " + (root / "interp").string());
        return root;
    };

    const fs::path a = chain("a", 1);
    const fs::path b = chain("b", 1);
    const fs::path c = chain("c", 4);

    auto same = [&](const fs::path& lhs, const fs::path& rhs, const std::string& rel) {
        return testutil::read_file_bytes(lhs / rel) == testutil::read_file_bytes(rhs / rel);
    };
    std::vector<std::string> artifacts{"report/report.json", "report/curve.csv", "bench.csv",
                                       "novelty.csv"};
    for (const auto& entry : fs::directory_iterator(a / "interp"))
        if (entry.path().extension() == ".ppm")
            artifacts.push_back("interp/" + entry.path().filename().string());
    if (artifacts.size() < 6) return {false, "expected at least two traversal strips"};

    for (const std::string& rel : artifacts) {
        if (!same(a, b, rel)) return {false, rel + " differs between identical runs"};
        if (!same(a, c, rel)) return {false, rel + " differs between --threads 1 and 4"};
    }
    return {true, std::to_string(artifacts.size()) +
                      " artifacts byte-identical across reruns and thread counts"};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* label;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "generalization-score identities", criterion_g_formula},
        {2, "brute-force oracle equivalence", criterion_oracles},
        {3, "KDE analytic peak and unit mass", criterion_kde},
        {4, "VAE gradients, KL values and training descent", criterion_vae},
        {5, "contamination benchmark AUC", criterion_benchmark},
        {6, "loss-vs-novelty trend under planted novelty", criterion_trend},
        {7, "mutual-information interpretation", criterion_mi},
        {8, "end-to-end byte determinism", criterion_determinism},
    };

    int failures = 0;
    for (const Entry& entry : entries) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", outcome.pass ? "PASS" : "FAIL",
                    entry.id, entry.label, outcome.detail.c_str(), secs);
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    if (failures > 0) std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

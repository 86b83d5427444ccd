// Pipeline driver: every stage runs as its own subcommand so intermediate
// artifacts (crops, embeddings, scorer models, detections, reports) live on
// disk in formats any language can parse.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noveval/benchmark.hpp"
#include "noveval/common.hpp"
#include "noveval/detect_eval.hpp"
#include "noveval/genscore.hpp"
#include "noveval/image.hpp"
#include "noveval/interpret.hpp"
#include "noveval/latent.hpp"
#include "noveval/scorers.hpp"
#include "noveval/synthgen.hpp"
#include "noveval/vae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string crop_filename(std::int64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "crop_%06lld.ppm", static_cast<long long>(id));
    return buf;
}

void require_file(const fs::path& path) {
    if (!fs::exists(path))
        throw noveval::ValidationError("missing input file: " + path.string());
}

json load_config_file(const fs::path& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw noveval::ValidationError("malformed config " + path.string() + ": " + e.what());
    }
    if (!j.is_object())
        throw noveval::ValidationError("config " + path.string() + " must be a JSON object");
    return j;
}

// Resolution order per option: explicit flag > config file > caller default.
template <class T>
void overlay(const CLI::App& cmd, const json& config, const std::string& key, T& var) {
    if (cmd.count("--" + key) > 0 || !config.contains(key)) return;
    try {
        var = config.at(key).get<T>();
    } catch (const json::exception&) {
        throw noveval::ValidationError("config key '" + key + "' has the wrong type");
    }
}

// Seeds additionally fall back to NOVELTY_EVAL_SEED before the default 0.
void overlay_seed(const CLI::App& cmd, const json& config, std::uint64_t& seed) {
    if (cmd.count("--seed") > 0) return;
    if (config.contains("seed")) {
        seed = config.at("seed").get<std::uint64_t>();
        return;
    }
    if (const char* env = std::getenv("NOVELTY_EVAL_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw noveval::ValidationError("NOVELTY_EVAL_SEED must be an unsigned integer, got '" +
                                           std::string(env) + "'");
        seed = v;
    }
}

struct LoadedDataset {
    std::vector<noveval::ImageCrop> crops;
    std::vector<noveval::CropFactors> factors;
    std::vector<std::int64_t> ids;
};

LoadedDataset load_dataset_dir(const fs::path& dir) {
    require_file(dir / "factors.csv");
    LoadedDataset ds;
    ds.factors = noveval::read_factors_csv(dir / "factors.csv");
    ds.ids.resize(ds.factors.size());
    ds.crops.reserve(ds.factors.size());
    for (std::size_t i = 0; i < ds.factors.size(); ++i) {
        ds.ids[i] = static_cast<std::int64_t>(i);
        const fs::path crop_path = dir / "crops" / crop_filename(ds.ids[i]);
        require_file(crop_path);
        ds.crops.push_back(noveval::read_ppm(crop_path));
    }
    return ds;
}

std::vector<noveval::ColorClass> labels_for_embeddings(const noveval::LatentMatrix& z,
                                                       const std::vector<noveval::CropFactors>& factors,
                                                       const std::string& what) {
    std::vector<noveval::ColorClass> labels;
    labels.reserve(z.size());
    for (const std::int64_t id : z.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= factors.size())
            throw noveval::ValidationError(what + " id " + std::to_string(id) +
                                           " not present in factors.csv");
        labels.push_back(factors[static_cast<std::size_t>(id)].color_class);
    }
    return labels;
}

noveval::StubDetectorConfig parse_stub_detector(const std::string& spec, bool& wants_factors) {
    if (spec != "stub" && spec.rfind("stub:", 0) != 0)
        throw noveval::ValidationError("unknown detector '" + spec +
                                       "' (only the stub detector is built in)");
    noveval::StubDetectorConfig config;
    wants_factors = false;
    if (spec == "stub") return config;

    std::string rest = spec.substr(5);
    std::size_t pos = 0;
    while (pos < rest.size()) {
        std::size_t comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        const std::string item = rest.substr(pos, comma - pos);
        pos = comma + 1;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw noveval::ValidationError("detector option '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        double value = 0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw noveval::ValidationError("detector option '" + item + "' has a non-numeric value");
        }
        if (key == "noise") {
            config.noise = value;
        } else if (key == "drop") {
            config.drop = value;
        } else if (key == "bulb-noise") {
            config.boost_noise = value;
            wants_factors = wants_factors || value > 0;
        } else if (key == "bulb-threshold") {
            config.boost_threshold = value;
        } else {
            throw noveval::ValidationError("unknown detector option '" + key +
                                           "' (expected noise, drop, bulb-noise or bulb-threshold)");
        }
    }
    return config;
}

void write_history_csv(const fs::path& path, const std::vector<noveval::LossBreakdown>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw noveval::ValidationError("cannot write " + path.string());
    out << "epoch,reconstruction,kl,total\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        out << e << ',' << noveval::format_double(history[e].reconstruction) << ','
            << noveval::format_double(history[e].kl) << ','
            << noveval::format_double(history[e].total) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"novelty-weighted generalization scoring pipeline"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_path;
    bool json_errors = false;
    int threads = 1;
    app.add_option("--config", config_path, "JSON config file; explicit flags override it");
    app.add_flag("--json", json_errors, "emit errors as JSON on stderr");
    app.add_option("--threads", threads, "worker thread cap (outputs do not depend on it)")
        ->default_val(1);

    json config = json::object();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "render a synthetic traffic-light crop dataset");
    struct {
        int n_per_class = 100;
        int size = 16;
        std::uint64_t seed = 0;
        std::string out;
        std::vector<std::string> exclude;
        double arrow_prob = 0.25;
        double bulb_min = 0.08, bulb_max = 0.30;
        double blur_max = 1.5;
    } gen_args;
    gen->add_option("--n-per-class", gen_args.n_per_class, "crops per color class")->default_val(100);
    gen->add_option("--size", gen_args.size, "crop edge length in pixels")->default_val(16);
    gen->add_option("--seed", gen_args.seed, "generation seed");
    gen->add_option("--out", gen_args.out, "output dataset directory")->required();
    gen->add_option("--exclude-class", gen_args.exclude, "color class to leave out (repeatable)");
    gen->add_option("--arrow-prob", gen_args.arrow_prob, "probability of an arrow inlay");
    gen->add_option("--bulb-radius-min", gen_args.bulb_min, "smallest bulb radius fraction");
    gen->add_option("--bulb-radius-max", gen_args.bulb_max, "largest bulb radius fraction");
    gen->add_option("--blur-max", gen_args.blur_max, "largest blur sigma in pixels");
    gen->callback([&] {
        overlay(*gen, config, "n-per-class", gen_args.n_per_class);
        overlay(*gen, config, "size", gen_args.size);
        overlay(*gen, config, "out", gen_args.out);
        overlay(*gen, config, "exclude-class", gen_args.exclude);
        overlay(*gen, config, "arrow-prob", gen_args.arrow_prob);
        overlay(*gen, config, "bulb-radius-min", gen_args.bulb_min);
        overlay(*gen, config, "bulb-radius-max", gen_args.bulb_max);
        overlay(*gen, config, "blur-max", gen_args.blur_max);
        overlay_seed(*gen, config, gen_args.seed);

        noveval::DatasetSpec spec;
        spec.n_per_class = gen_args.n_per_class;
        spec.size = gen_args.size;
        spec.seed = gen_args.seed;
        spec.ranges.arrow_probability = gen_args.arrow_prob;
        spec.ranges.bulb_radius = {gen_args.bulb_min, gen_args.bulb_max};
        spec.ranges.blur_sigma = {0.0, gen_args.blur_max};
        for (const std::string& name : gen_args.exclude)
            spec.include_class[static_cast<std::size_t>(noveval::color_class_from_string(name))] =
                false;
        noveval::validate_spec(spec);

        const noveval::GeneratedDataset ds = noveval::generate_dataset(spec);
        const fs::path out_dir(gen_args.out);
        fs::create_directories(out_dir / "crops");
        for (std::size_t i = 0; i < ds.crops.size(); ++i)
            noveval::write_ppm(out_dir / "crops" / crop_filename(static_cast<std::int64_t>(i)),
                               ds.crops[i]);
        noveval::write_factors_csv(out_dir / "factors.csv", ds.factors);
        noveval::write_annotations_jsonl(out_dir / "annotations.jsonl", ds.annotations);
        std::cout << "wrote " << ds.crops.size() << " crops to " << out_dir.string() << "\n";
    });

    // train-vae
    auto* train = app.add_subcommand("train-vae", "train the embedding model on a dataset");
    struct {
        std::string data, out, history;
        bool full_scale = false;
        int epochs = -1, batch_size = -1, d = -1, hidden = -1;
        double lr = -1, beta = -1;
        std::uint64_t seed = 0;
    } train_args;
    train->add_option("--data", train_args.data, "dataset directory from gen-data")->required();
    train->add_option("--out", train_args.out, "output model JSON")->required();
    train->add_option("--history", train_args.history, "optional per-epoch loss CSV");
    train->add_flag("--full-scale", train_args.full_scale,
                    "use the full-scale training preset (750 epochs, d=32, lr=1e-4)");
    train->add_option("--epochs", train_args.epochs, "training epochs");
    train->add_option("--batch-size", train_args.batch_size, "minibatch size");
    train->add_option("--lr", train_args.lr, "Adam learning rate");
    train->add_option("--d", train_args.d, "latent dimension");
    train->add_option("--hidden", train_args.hidden, "hidden layer width");
    train->add_option("--beta", train_args.beta, "KL weight");
    train->add_option("--seed", train_args.seed, "training seed");
    train->callback([&] {
        overlay(*train, config, "data", train_args.data);
        overlay(*train, config, "out", train_args.out);
        overlay(*train, config, "history", train_args.history);
        overlay_seed(*train, config, train_args.seed);
        overlay(app, config, "threads", threads);

        noveval::TrainConfig cfg =
            train_args.full_scale ? noveval::full_scale_config() : noveval::TrainConfig{};
        cfg.seed = train_args.seed;
        cfg.threads = threads;
        auto pick = [&](const std::string& key, auto& dst, auto parsed) {
            if (train->count("--" + key) > 0) {
                dst = parsed;
            } else if (config.contains(key)) {
                dst = config.at(key).get<std::decay_t<decltype(dst)>>();
            }
        };
        pick("epochs", cfg.epochs, train_args.epochs);
        pick("batch-size", cfg.batch_size, train_args.batch_size);
        pick("lr", cfg.learning_rate, train_args.lr);
        pick("d", cfg.d, train_args.d);
        pick("hidden", cfg.hidden, train_args.hidden);
        pick("beta", cfg.beta, train_args.beta);

        const LoadedDataset ds = load_dataset_dir(train_args.data);
        const auto [params, history] = noveval::train(ds.crops, cfg);
        noveval::save_params_json(train_args.out, params);
        if (!train_args.history.empty()) write_history_csv(train_args.history, history);
        std::cout << "trained " << cfg.epochs << " epochs on " << ds.crops.size()
                  << " crops; final loss " << noveval::format_double(history.back().total)
                  << " (reconstruction " << noveval::format_double(history.back().reconstruction)
                  << ", kl " << noveval::format_double(history.back().kl) << ")\n";
    });

    // encode
    auto* encode = app.add_subcommand("encode", "embed a dataset with a trained model");
    struct {
        std::string model, data, out;
    } enc_args;
    encode->add_option("--model", enc_args.model, "model JSON from train-vae")->required();
    encode->add_option("--data", enc_args.data, "dataset directory")->required();
    encode->add_option("--out", enc_args.out, "output embeddings CSV")->required();
    encode->callback([&] {
        overlay(*encode, config, "model", enc_args.model);
        overlay(*encode, config, "data", enc_args.data);
        overlay(*encode, config, "out", enc_args.out);
        require_file(enc_args.model);
        const noveval::VaeParams params = noveval::load_params_json(enc_args.model);
        const LoadedDataset ds = load_dataset_dir(enc_args.data);
        const noveval::LatentMatrix z = noveval::embed_dataset(params, ds.crops, ds.ids);
        noveval::write_latent_csv(enc_args.out, z);
        std::cout << "embedded " << z.size() << " crops into " << z.dim() << " dims\n";
    });

    // fit-scorer
    auto* fit = app.add_subcommand("fit-scorer", "fit a novelty scorer on training embeddings");
    struct {
        std::string embeddings, scorer, out;
        noveval::ScorerHyper hyper;
        bool no_standardize = false;
        std::uint64_t seed = 0;
    } fit_args;
    fit->add_option("--embeddings", fit_args.embeddings, "training embeddings CSV")->required();
    fit->add_option("--scorer", fit_args.scorer, "kde, lof, knn, mahalanobis, hbos or iforest")
        ->required();
    fit->add_option("--out", fit_args.out, "output scorer model JSON")->required();
    fit->add_option("--lof-k", fit_args.hyper.lof_k, "LOF neighborhood size");
    fit->add_option("--knn-k", fit_args.hyper.knn_k, "kNN neighbor index");
    fit->add_option("--hbos-bins", fit_args.hyper.hbos_bins, "HBOS histogram bins");
    fit->add_option("--kde-bandwidth", fit_args.hyper.kde_bandwidth,
                    "KDE bandwidth (0 = Scott's rule)");
    fit->add_option("--iforest-trees", fit_args.hyper.iforest_trees, "isolation forest size");
    fit->add_option("--iforest-subsample", fit_args.hyper.iforest_subsample,
                    "isolation forest subsample");
    fit->add_flag("--no-standardize", fit_args.no_standardize,
                  "skip per-dimension standardization");
    fit->add_option("--seed", fit_args.seed, "scorer seed (isolation forest)");
    fit->callback([&] {
        overlay(*fit, config, "embeddings", fit_args.embeddings);
        overlay(*fit, config, "scorer", fit_args.scorer);
        overlay(*fit, config, "out", fit_args.out);
        overlay(*fit, config, "lof-k", fit_args.hyper.lof_k);
        overlay(*fit, config, "knn-k", fit_args.hyper.knn_k);
        overlay(*fit, config, "hbos-bins", fit_args.hyper.hbos_bins);
        overlay(*fit, config, "kde-bandwidth", fit_args.hyper.kde_bandwidth);
        overlay(*fit, config, "iforest-trees", fit_args.hyper.iforest_trees);
        overlay(*fit, config, "iforest-subsample", fit_args.hyper.iforest_subsample);
        overlay_seed(*fit, config, fit_args.seed);
        require_file(fit_args.embeddings);

        fit_args.hyper.seed = fit_args.seed;
        fit_args.hyper.standardize = !fit_args.no_standardize;
        const noveval::LatentMatrix z = noveval::read_latent_csv(fit_args.embeddings);
        const noveval::ScorerModel model =
            noveval::fit_scorer(z, noveval::scorer_kind_from_string(fit_args.scorer),
                                fit_args.hyper);
        noveval::save_scorer_json(fit_args.out, model);
        std::cout << "fitted " << fit_args.scorer << " on " << z.size() << " embeddings ("
                  << model.kept_dims.size() << " of " << model.original_dim << " dims kept)\n";
    });

    // score
    auto* score = app.add_subcommand("score", "score test embeddings with a fitted scorer");
    struct {
        std::string model, embeddings, out;
    } score_args;
    score->add_option("--model", score_args.model, "scorer model JSON")->required();
    score->add_option("--embeddings", score_args.embeddings, "test embeddings CSV")->required();
    score->add_option("--out", score_args.out, "output novelty CSV")->required();
    score->callback([&] {
        overlay(*score, config, "model", score_args.model);
        overlay(*score, config, "embeddings", score_args.embeddings);
        overlay(*score, config, "out", score_args.out);
        overlay(app, config, "threads", threads);
        require_file(score_args.model);
        require_file(score_args.embeddings);

        const noveval::ScorerModel model = noveval::load_scorer_json(score_args.model);
        const noveval::LatentMatrix z = noveval::read_latent_csv(score_args.embeddings);
        noveval::ScoreTable table;
        table.ids = z.ids;
        table.raw = noveval::raw_scores(model, z.z, threads);
        table.novelty = noveval::novelty_from_raw(model.orientation, table.raw);
        noveval::write_scores_csv(score_args.out, table);
        std::cout << "scored " << table.ids.size() << " objects with "
                  << noveval::to_string(model.kind) << "\n";
    });

    // detect
    auto* detect = app.add_subcommand("detect",
                                      "synthesize detections from ground truth (stub detector)");
    struct {
        std::string annotations, detector = "stub", factors, out;
        std::uint64_t seed = 0;
    } det_args;
    detect->add_option("--annotations", det_args.annotations, "ground-truth JSONL")->required();
    detect->add_option("--detector", det_args.detector,
                       "stub:noise=S,drop=P,bulb-noise=S2,bulb-threshold=R");
    detect->add_option("--factors", det_args.factors,
                       "factors.csv (required for bulb-noise boosting)");
    detect->add_option("--out", det_args.out, "output detections JSONL")->required();
    detect->add_option("--seed", det_args.seed, "detector seed");
    detect->callback([&] {
        overlay(*detect, config, "annotations", det_args.annotations);
        overlay(*detect, config, "detector", det_args.detector);
        overlay(*detect, config, "factors", det_args.factors);
        overlay(*detect, config, "out", det_args.out);
        overlay_seed(*detect, config, det_args.seed);
        require_file(det_args.annotations);

        bool wants_factors = false;
        noveval::StubDetectorConfig cfg = parse_stub_detector(det_args.detector, wants_factors);
        cfg.seed = det_args.seed;
        std::unordered_map<std::int64_t, double> boost;
        if (wants_factors) {
            if (det_args.factors.empty())
                throw noveval::ValidationError("--factors is required when bulb-noise is set");
            require_file(det_args.factors);
            const auto factors = noveval::read_factors_csv(det_args.factors);
            for (std::size_t i = 0; i < factors.size(); ++i)
                boost[static_cast<std::int64_t>(i)] = factors[i].bulb_radius;
        }
        const auto annotations = noveval::read_annotations_jsonl(det_args.annotations);
        const auto detections = noveval::stub_detect(annotations, cfg, boost);
        noveval::write_detections_jsonl(det_args.out, detections);
        std::cout << "synthesized " << detections.size() << " detections for "
                  << annotations.size() << " objects\n";
    });

    // evaluate
    auto* evaluate = app.add_subcommand(
        "evaluate", "match detections, compute losses and the generalization score");
    struct {
        std::string annotations, detections, novelty, out_dir;
        double iou_threshold = 0.5;
        std::size_t windows = 10;
    } eval_args;
    evaluate->add_option("--annotations", eval_args.annotations, "ground-truth JSONL")->required();
    evaluate->add_option("--detections", eval_args.detections, "detections JSONL")->required();
    evaluate->add_option("--novelty", eval_args.novelty, "novelty CSV from score")->required();
    evaluate->add_option("--out-dir", eval_args.out_dir, "directory for report.json + curve.csv")
        ->required();
    evaluate->add_option("--iou-threshold", eval_args.iou_threshold, "match threshold");
    evaluate->add_option("--windows", eval_args.windows, "loss-curve window count");
    evaluate->callback([&] {
        overlay(*evaluate, config, "annotations", eval_args.annotations);
        overlay(*evaluate, config, "detections", eval_args.detections);
        overlay(*evaluate, config, "novelty", eval_args.novelty);
        overlay(*evaluate, config, "out-dir", eval_args.out_dir);
        overlay(*evaluate, config, "iou-threshold", eval_args.iou_threshold);
        overlay(*evaluate, config, "windows", eval_args.windows);
        require_file(eval_args.annotations);
        require_file(eval_args.detections);
        require_file(eval_args.novelty);

        const auto annotations = noveval::read_annotations_jsonl(eval_args.annotations);
        const auto detections = noveval::read_detections_jsonl(eval_args.detections);
        const noveval::ScoreTable scores = noveval::read_scores_csv(eval_args.novelty);

        std::unordered_set<std::int64_t> annotated;
        for (const auto& a : annotations) annotated.insert(a.object_id);
        std::unordered_map<std::int64_t, double> novelty_by_id;
        for (std::size_t i = 0; i < scores.ids.size(); ++i) {
            if (!annotated.count(scores.ids[i]))
                throw noveval::ValidationError("novelty id " + std::to_string(scores.ids[i]) +
                                               " has no matching annotation");
            novelty_by_id[scores.ids[i]] = scores.novelty[i];
        }

        const noveval::DatasetEvaluation ev =
            noveval::evaluate_dataset(annotations, detections, eval_args.iou_threshold);
        std::vector<double> novelty, losses;
        novelty.reserve(ev.losses.size());
        losses.reserve(ev.losses.size());
        for (const noveval::ObjectLoss& l : ev.losses) {
            const auto it = novelty_by_id.find(l.object_id);
            if (it == novelty_by_id.end())
                throw noveval::ValidationError("annotation object " + std::to_string(l.object_id) +
                                               " has no novelty score");
            novelty.push_back(it->second);
            losses.push_back(l.loss);
        }

        const double acc = noveval::accuracy(ev.matches);
        const noveval::GeneralizationReport report =
            noveval::make_report(novelty, losses, acc, ev.fp_count);
        const auto curve = noveval::loss_novelty_curve(novelty, losses, eval_args.windows);

        fs::create_directories(eval_args.out_dir);
        noveval::write_report_json(fs::path(eval_args.out_dir) / "report.json", report);
        noveval::write_curve_csv(fs::path(eval_args.out_dir) / "curve.csv", curve);
        std::printf("G = %.4f over %zu objects (accuracy %.4f, %zu false positives)\n",
                    report.g_score, report.n_objects, report.accuracy, report.fp_count);
    });

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "contamination study across scorers");
    struct {
        std::string train_embeddings, train_factors, test_embeddings, test_factors;
        std::string color = "green", scorers, out;
        double fraction = 0.10;
        int repeats = 3;
        std::uint64_t seed = 0;
    } bench_args;
    bench->add_option("--train-embeddings", bench_args.train_embeddings, "training embeddings CSV")
        ->required();
    bench->add_option("--train-factors", bench_args.train_factors, "training factors.csv")
        ->required();
    bench->add_option("--test-embeddings", bench_args.test_embeddings, "test embeddings CSV")
        ->required();
    bench->add_option("--test-factors", bench_args.test_factors, "test factors.csv")->required();
    bench->add_option("--class", bench_args.color, "contamination color class");
    bench->add_option("--fraction", bench_args.fraction, "contamination share of the test set");
    bench->add_option("--repeats", bench_args.repeats, "contamination resampling repeats");
    bench->add_option("--scorers", bench_args.scorers, "comma-separated scorer list");
    bench->add_option("--seed", bench_args.seed, "benchmark seed");
    bench->add_option("--out", bench_args.out, "output CSV")->required();
    bench->callback([&] {
        overlay(*bench, config, "train-embeddings", bench_args.train_embeddings);
        overlay(*bench, config, "train-factors", bench_args.train_factors);
        overlay(*bench, config, "test-embeddings", bench_args.test_embeddings);
        overlay(*bench, config, "test-factors", bench_args.test_factors);
        overlay(*bench, config, "class", bench_args.color);
        overlay(*bench, config, "fraction", bench_args.fraction);
        overlay(*bench, config, "repeats", bench_args.repeats);
        overlay(*bench, config, "scorers", bench_args.scorers);
        overlay(*bench, config, "out", bench_args.out);
        overlay_seed(*bench, config, bench_args.seed);
        overlay(app, config, "threads", threads);
        for (const std::string& p : {bench_args.train_embeddings, bench_args.train_factors,
                                     bench_args.test_embeddings, bench_args.test_factors})
            require_file(p);

        noveval::ContaminationSpec spec;
        spec.contamination_class = noveval::color_class_from_string(bench_args.color);
        spec.fraction = bench_args.fraction;
        spec.repeats = bench_args.repeats;
        spec.seed = bench_args.seed;
        if (!bench_args.scorers.empty()) {
            spec.scorers.clear();
            std::size_t pos = 0;
            while (pos <= bench_args.scorers.size()) {
                std::size_t comma = bench_args.scorers.find(',', pos);
                if (comma == std::string::npos) comma = bench_args.scorers.size();
                spec.scorers.push_back(noveval::scorer_kind_from_string(
                    bench_args.scorers.substr(pos, comma - pos)));
                pos = comma + 1;
            }
        }

        const noveval::LatentMatrix z_train =
            noveval::read_latent_csv(bench_args.train_embeddings);
        const noveval::LatentMatrix z_test = noveval::read_latent_csv(bench_args.test_embeddings);
        const auto train_labels = labels_for_embeddings(
            z_train, noveval::read_factors_csv(bench_args.train_factors), "training embedding");
        const auto test_labels = labels_for_embeddings(
            z_test, noveval::read_factors_csv(bench_args.test_factors), "test embedding");

        const auto rows = noveval::run_contamination_benchmark(z_train.z, train_labels, z_test.z,
                                                               test_labels, spec, threads);
        noveval::write_benchmark_csv(bench_args.out, rows);
        std::cout << noveval::format_benchmark_table(rows);
    });

    // interpret
    auto* interp = app.add_subcommand(
        "interpret", "rank latent dimensions by MI and export traversals");
    struct {
        std::string vae_model, train_embeddings, embeddings, novelty, out_dir;
        std::size_t top_k = 3;
        int steps = 8;
        double range_sigmas = 2.0;
    } int_args;
    interp->add_option("--vae-model", int_args.vae_model, "model JSON from train-vae")->required();
    interp->add_option("--train-embeddings", int_args.train_embeddings,
                       "training embeddings CSV (traversal base)")
        ->required();
    interp->add_option("--embeddings", int_args.embeddings, "test embeddings CSV")->required();
    interp->add_option("--novelty", int_args.novelty, "novelty CSV from score")->required();
    interp->add_option("--out-dir", int_args.out_dir, "output directory")->required();
    interp->add_option("--top-k", int_args.top_k, "dimensions to surface");
    interp->add_option("--steps", int_args.steps, "tiles per traversal strip");
    interp->add_option("--range-sigmas", int_args.range_sigmas, "traversal half-range in stds");
    interp->callback([&] {
        overlay(*interp, config, "vae-model", int_args.vae_model);
        overlay(*interp, config, "train-embeddings", int_args.train_embeddings);
        overlay(*interp, config, "embeddings", int_args.embeddings);
        overlay(*interp, config, "novelty", int_args.novelty);
        overlay(*interp, config, "out-dir", int_args.out_dir);
        overlay(*interp, config, "top-k", int_args.top_k);
        overlay(*interp, config, "steps", int_args.steps);
        overlay(*interp, config, "range-sigmas", int_args.range_sigmas);
        for (const std::string& p : {int_args.vae_model, int_args.train_embeddings,
                                     int_args.embeddings, int_args.novelty})
            require_file(p);

        const noveval::VaeParams params = noveval::load_params_json(int_args.vae_model);
        const noveval::LatentMatrix z_train =
            noveval::read_latent_csv(int_args.train_embeddings);
        const noveval::LatentMatrix z_test = noveval::read_latent_csv(int_args.embeddings);
        const noveval::ScoreTable scores = noveval::read_scores_csv(int_args.novelty);
        if (scores.ids != z_test.ids)
            throw noveval::ValidationError(
                "novelty CSV and test embeddings must list the same ids in the same order");

        const noveval::NoveltyBins bins = noveval::bin_by_novelty(scores.novelty);
        const noveval::MiRanking ranking =
            noveval::select_informative_dims(z_test, bins, int_args.top_k);
        const auto strips = noveval::export_traversal_grid(
            params, z_train, ranking, int_args.top_k, int_args.steps, int_args.range_sigmas,
            int_args.out_dir);
        noveval::export_parallel_coordinates(
            z_test, scores.novelty, ranking, int_args.top_k,
            fs::path(int_args.out_dir) / "parallel_coordinates.csv");

        std::cout << "top dimensions by mutual information:";
        for (const auto& s : strips) {
            std::printf(" z%zu (%.4f)", s.dim, s.mi);
        }
        std::cout << "\n";
    });

    // Load the config before parse so callbacks can overlay it; spot --json
    // early so even config-loading failures report in the requested format.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--json") json_errors = true;
    }
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                config = load_config_file(argv[i + 1]);
                break;
            }
            if (arg.rfind("--config=", 0) == 0) {
                config = load_config_file(arg.substr(9));
                break;
            }
        }
    } catch (const noveval::ValidationError& e) {
        if (json_errors)
            std::cerr << json{{"error", e.what()}}.dump() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    auto report_error = [&](const std::string& message) {
        if (json_errors)
            std::cerr << json{{"error", message}}.dump() << "\n";
        else
            std::cerr << "error: " << message << "\n";
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const noveval::ValidationError& e) {
        report_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error(e.what());
        return 1;
    }
    return 0;
}

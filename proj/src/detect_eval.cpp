#include "noveval/detect_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "noveval/common.hpp"
#include "noveval/rng.hpp"

namespace noveval {

void validate_box(const BoundingBox& b) {
    if (!(b.x1 < b.x2 && b.y1 < b.y2))
        throw ValidationError("degenerate box: x1 < x2 and y1 < y2 required");
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > 1 || b.y2 > 1)
        throw ValidationError("box coordinates must lie in [0,1]");
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    return inter / (area_a + area_b - inter);
}

MatchResult match_detections(std::span<const Annotation> annotations,
                             std::span<const Detection> detections,
                             double threshold) {
    if (!annotations.empty()) {
        std::set<std::int64_t> ids;
        for (const auto& a : annotations) {
            if (!ids.insert(a.object_id).second)
                throw ValidationError("duplicate object_id " + std::to_string(a.object_id) +
                                      " in image " + std::to_string(a.image_id));
            if (a.image_id != annotations.front().image_id)
                throw ValidationError("match_detections called with mixed image_ids");
        }
    }
    for (const auto& d : detections)
        if (!annotations.empty() && d.image_id != annotations.front().image_id)
            throw ValidationError("detection image_id does not match annotations");

    std::vector<std::size_t> det_order(detections.size());
    std::iota(det_order.begin(), det_order.end(), 0);
    std::stable_sort(det_order.begin(), det_order.end(), [&](std::size_t i, std::size_t j) {
        return detections[i].confidence > detections[j].confidence;
    });

    MatchResult result;
    std::vector<bool> gt_taken(annotations.size(), false);
    for (std::size_t di : det_order) {
        double best_iou = 0.0;
        std::size_t best_gt = annotations.size();
        for (std::size_t gi = 0; gi < annotations.size(); ++gi) {
            if (gt_taken[gi]) continue;
            double ov = iou(detections[di].box, annotations[gi].box);
            bool better = ov > best_iou ||
                          (ov == best_iou && best_gt < annotations.size() &&
                           annotations[gi].object_id < annotations[best_gt].object_id);
            if (ov >= threshold && better) {
                best_iou = ov;
                best_gt = gi;
            }
        }
        if (best_gt < annotations.size()) {
            gt_taken[best_gt] = true;
            result.tp.push_back({annotations[best_gt].object_id, di, best_iou});
        } else {
            result.fp.push_back(di);
        }
    }
    std::sort(result.fp.begin(), result.fp.end());
    for (std::size_t gi = 0; gi < annotations.size(); ++gi)
        if (!gt_taken[gi]) result.fn.push_back(annotations[gi].object_id);
    return result;
}

std::vector<ObjectLoss> detection_loss(const MatchResult& match,
                                       std::span<const Annotation> annotations,
                                       std::span<const Detection> detections) {
    std::map<std::int64_t, const Annotation*> by_id;
    for (const auto& a : annotations) by_id[a.object_id] = &a;

    std::vector<ObjectLoss> losses;
    losses.reserve(match.tp.size() + match.fn.size());
    for (const auto& tp : match.tp) {
        const BoundingBox& g = by_id.at(tp.object_id)->box;
        const BoundingBox& p = detections[tp.detection_index].box;
        double mae = (std::abs(g.x1 - p.x1) + std::abs(g.y1 - p.y1) +
                      std::abs(g.x2 - p.x2) + std::abs(g.y2 - p.y2)) / 4.0;
        losses.push_back({tp.object_id, std::min(1.0, mae)});
    }
    for (std::int64_t id : match.fn) losses.push_back({id, 1.0});
    std::sort(losses.begin(), losses.end(),
              [](const ObjectLoss& a, const ObjectLoss& b) { return a.object_id < b.object_id; });
    return losses;
}

double accuracy(std::span<const MatchResult> matches) {
    std::size_t tp = 0, fn = 0;
    for (const auto& m : matches) {
        tp += m.tp.size();
        fn += m.fn.size();
    }
    if (tp + fn == 0) throw ValidationError("accuracy undefined: no ground-truth objects");
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

DatasetEvaluation evaluate_dataset(std::span<const Annotation> annotations,
                                   std::span<const Detection> detections,
                                   double threshold) {
    std::map<std::int64_t, std::vector<Annotation>> ann_by_image;
    for (const auto& a : annotations) ann_by_image[a.image_id].push_back(a);
    std::map<std::int64_t, std::vector<Detection>> det_by_image;
    for (const auto& d : detections) det_by_image[d.image_id].push_back(d);

    DatasetEvaluation eval;
    for (const auto& [image_id, anns] : ann_by_image) {
        static const std::vector<Detection> kNone;
        auto it = det_by_image.find(image_id);
        const auto& dets = it == det_by_image.end() ? kNone : it->second;
        MatchResult m = match_detections(anns, dets, threshold);
        auto losses = detection_loss(m, anns, dets);
        eval.fp_count += m.fp.size();
        eval.losses.insert(eval.losses.end(), losses.begin(), losses.end());
        eval.matches.push_back(std::move(m));
    }
    // Detections for images without any annotation still count as FPs.
    for (const auto& [image_id, dets] : det_by_image)
        if (!ann_by_image.contains(image_id)) eval.fp_count += dets.size();
    return eval;
}

namespace {

nlohmann::json box_to_json(const BoundingBox& b) {
    return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

BoundingBox box_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw ValidationError(where + ": box must be an array of 4 coordinates");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

std::vector<Annotation> read_annotations_jsonl(const std::filesystem::path& path) {
    std::vector<Annotation> out;
    for (const auto& line : read_lines(path)) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError("malformed JSON line in " + path.string());
        std::int64_t image_id = j.at("image_id").get<std::int64_t>();
        for (const auto& obj : j.at("objects")) {
            Annotation a;
            a.image_id = image_id;
            a.object_id = obj.at("object_id").get<std::int64_t>();
            a.box = box_from_json(obj.at("box"), path.string());
            validate_box(a.box);
            out.push_back(a);
        }
    }
    return out;
}

std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path) {
    std::vector<Detection> out;
    for (const auto& line : read_lines(path)) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError("malformed JSON line in " + path.string());
        std::int64_t image_id = j.at("image_id").get<std::int64_t>();
        for (const auto& det : j.at("detections")) {
            Detection d;
            d.image_id = image_id;
            d.box = box_from_json(det.at("box"), path.string());
            d.confidence = det.at("confidence").get<double>();
            if (d.confidence < 0.0 || d.confidence > 1.0)
                throw ValidationError("confidence outside [0,1] in " + path.string());
            out.push_back(d);
        }
    }
    return out;
}

void write_annotations_jsonl(const std::filesystem::path& path,
                             std::span<const Annotation> annotations) {
    std::map<std::int64_t, std::vector<const Annotation*>> by_image;
    for (const auto& a : annotations) by_image[a.image_id].push_back(&a);
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path.string());
    for (const auto& [image_id, anns] : by_image) {
        nlohmann::json objs = nlohmann::json::array();
        for (const auto* a : anns)
            objs.push_back({{"object_id", a->object_id}, {"box", box_to_json(a->box)}});
        nlohmann::json rec{{"image_id", image_id}, {"objects", objs}};
        f << rec.dump() << "\n";
    }
}

void write_detections_jsonl(const std::filesystem::path& path,
                            std::span<const Detection> detections) {
    std::map<std::int64_t, std::vector<const Detection*>> by_image;
    for (const auto& d : detections) by_image[d.image_id].push_back(&d);
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path.string());
    for (const auto& [image_id, dets] : by_image) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto* d : dets)
            arr.push_back({{"box", box_to_json(d->box)}, {"confidence", d->confidence}});
        nlohmann::json rec{{"image_id", image_id}, {"detections", arr}};
        f << rec.dump() << "\n";
    }
}

std::vector<Detection> stub_detect(
    std::span<const Annotation> annotations, const StubDetectorConfig& config,
    const std::unordered_map<std::int64_t, double>& noise_boost_by_object) {
    std::vector<Detection> out;
    for (const auto& a : annotations) {
        Rng rng = derive_rng(config.seed, {0x5718u, static_cast<std::uint64_t>(a.image_id),
                                           static_cast<std::uint64_t>(a.object_id)});
        if (rng.bernoulli(config.drop)) continue;
        double sigma = config.noise;
        if (auto it = noise_boost_by_object.find(a.object_id); it != noise_boost_by_object.end())
            if (it->second >= config.boost_threshold) sigma += config.boost_noise;
        Detection d;
        d.image_id = a.image_id;
        auto jitter = [&](double v) { return std::clamp(v + sigma * rng.normal(), 0.0, 1.0); };
        d.box.x1 = jitter(a.box.x1);
        d.box.y1 = jitter(a.box.y1);
        d.box.x2 = jitter(a.box.x2);
        d.box.y2 = jitter(a.box.y2);
        if (d.box.x2 <= d.box.x1) d.box.x2 = std::min(1.0, d.box.x1 + 1e-3);
        if (d.box.y2 <= d.box.y1) d.box.y2 = std::min(1.0, d.box.y1 + 1e-3);
        d.confidence = 0.5 + 0.5 * rng.uniform();
        out.push_back(d);
    }
    return out;
}

}  // namespace noveval

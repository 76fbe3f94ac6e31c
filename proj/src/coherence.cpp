#include "geoevent/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "geoevent/log.hpp"
#include "geoevent/seed.hpp"

namespace geoevent {

using nlohmann::json;

// ------------------------------------------------------------
// Annotations
// ------------------------------------------------------------

HumanAnnotation parse_annotation(const json& record) {
    HumanAnnotation a;
    try {
        a.image_id = record.at("image_id").get<std::string>();
        if (auto it = record.find("boxes"); it != record.end()) {
            for (const auto& b : *it) {
                PersonBox box{b.at("x0").get<double>(), b.at("y0").get<double>(),
                              b.at("x1").get<double>(), b.at("y1").get<double>(),
                              b.value("confidence", 1.0)};
                for (double v : {box.x0, box.y0, box.x1, box.y1}) {
                    if (!(v >= 0.0 && v <= 1.0)) {
                        throw RangeError("annotation for " + a.image_id +
                                         ": box coordinate outside [0, 1]");
                    }
                }
                if (box.x1 < box.x0 || box.y1 < box.y0) {
                    throw RangeError("annotation for " + a.image_id + ": inverted box");
                }
                a.person_boxes.push_back(box);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid annotation record: ") + e.what());
    }
    return a;
}

json serialize_annotation(const HumanAnnotation& a) {
    json boxes = json::array();
    for (const auto& b : a.person_boxes) {
        boxes.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1},
                         {"confidence", b.confidence}});
    }
    return {{"image_id", a.image_id}, {"boxes", boxes}};
}

AnnotationIndex read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotations: " + path.string());
    AnnotationIndex out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        auto a = parse_annotation(record);
        out[a.image_id] = std::move(a);
    }
    return out;
}

void write_annotations(const std::filesystem::path& path, const AnnotationIndex& annotations) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write annotations: " + path.string());
    for (const auto& [id, a] : annotations) out << serialize_annotation(a).dump() << '\n';
}

// ------------------------------------------------------------
// Human filter
// ------------------------------------------------------------

double union_area(std::span<const PersonBox> boxes) {
    // Coordinate compression: every elementary rectangle is either fully
    // covered by some box or not covered at all.
    std::vector<double> xs{0.0, 1.0}, ys{0.0, 1.0};
    for (const auto& b : boxes) {
        xs.push_back(std::clamp(b.x0, 0.0, 1.0));
        xs.push_back(std::clamp(b.x1, 0.0, 1.0));
        ys.push_back(std::clamp(b.y0, 0.0, 1.0));
        ys.push_back(std::clamp(b.y1, 0.0, 1.0));
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double cx = 0.5 * (xs[i] + xs[i + 1]);
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cy = 0.5 * (ys[j] + ys[j + 1]);
            const bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const PersonBox& b) {
                return cx > b.x0 && cx < b.x1 && cy > b.y0 && cy < b.y1;
            });
            if (covered) area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
        }
    }
    return area;
}

bool is_human_image(const HumanAnnotation& annotation, const DetectorConfig& config) {
    for (const auto& b : annotation.person_boxes) {
        if (b.area() >= config.human_area_single_threshold) return true;
    }
    return union_area(annotation.person_boxes) >= config.human_area_total_threshold;
}

std::vector<std::string> filter_human_images(const std::vector<std::string>& image_ids,
                                             const AnnotationIndex& annotations,
                                             const DetectorConfig& config) {
    std::vector<std::string> kept;
    for (const auto& id : image_ids) {
        auto it = annotations.find(id);
        if (it == annotations.end()) {
            warn("no human annotation for image " + id + "; assuming no people");
            kept.push_back(id);
            continue;
        }
        if (!is_human_image(it->second, config)) kept.push_back(id);
    }
    return kept;
}

std::vector<std::string> select_images(const EventCandidate& candidate,
                                       const AnnotationIndex& annotations,
                                       const DetectorConfig& config) {
    std::set<std::string> top;
    for (const auto& k : candidate.top_keywords) top.insert(k.keyword);

    std::vector<std::pair<Timestamp, std::string>> posted;
    for (const auto& t : candidate.tweets) {
        const bool has_top =
            std::any_of(t.hashtags.begin(), t.hashtags.end(),
                        [&](const std::string& h) { return top.contains(h); }) ||
            std::any_of(t.mentions.begin(), t.mentions.end(),
                        [&](const std::string& m) { return top.contains(m); });
        if (!has_top) continue;
        for (const auto& ref : t.image_refs) posted.emplace_back(t.timestamp, ref);
    }
    std::sort(posted.begin(), posted.end());
    std::vector<std::string> ordered;
    std::set<std::string> seen;
    for (const auto& [ts, id] : posted) {
        if (seen.insert(id).second) ordered.push_back(id);
    }
    return filter_human_images(ordered, annotations, config);
}

// ------------------------------------------------------------
// Crops and partition
// ------------------------------------------------------------

std::uint64_t crop_seed(std::uint64_t global_seed, const std::string& image_id) {
    return derive_seed(global_seed, fnv1a(image_id));
}

std::vector<Crop> generate_crops(const Image& image, const std::string& image_id, int count,
                                 int crop_size, std::uint64_t seed) {
    if (image.width < crop_size || image.height < crop_size) {
        throw ShapeError("image " + image_id + " (" + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + ") is smaller than the crop size " +
                         std::to_string(crop_size));
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ox(0, image.width - crop_size);
    std::uniform_int_distribution<int> oy(0, image.height - crop_size);
    std::vector<Crop> crops;
    crops.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int x0 = ox(rng);
        const int y0 = oy(rng);
        Crop c;
        c.size = crop_size;
        c.source_image_id = image_id;
        c.crop_index = i;
        c.pixels.resize(static_cast<std::size_t>(3) * crop_size * crop_size);
        for (int ch = 0; ch < 3; ++ch) {
            for (int y = 0; y < crop_size; ++y) {
                for (int x = 0; x < crop_size; ++x) {
                    c.pixels[(static_cast<std::size_t>(ch) * crop_size + y) * crop_size + x] =
                        std::clamp(image.at(ch, y0 + y, x0 + x), 0.0, 1.0);
                }
            }
        }
        crops.push_back(std::move(c));
    }
    return crops;
}

std::optional<CropPartition> split_partition(const std::vector<std::string>& image_ids,
                                             double train_fraction, int min_images,
                                             int crops_per_image, std::uint64_t seed) {
    const auto k = static_cast<int>(image_ids.size());
    if (k < min_images || k < 2) return std::nullopt;
    std::vector<std::string> shuffled = image_ids;
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    // the epsilon absorbs representation error in fractions such as 2/3
    int n_train = static_cast<int>(std::floor(train_fraction * k + 1e-9));
    n_train = std::clamp(n_train, 1, k - 1);
    CropPartition p;
    p.train_images.assign(shuffled.begin(), shuffled.begin() + n_train);
    p.test_images.assign(shuffled.begin() + n_train, shuffled.end());
    p.crops_per_image = crops_per_image;
    return p;
}

// ------------------------------------------------------------
// Ratio
// ------------------------------------------------------------

REStats summarize(std::vector<double> errors) {
    REStats s;
    s.errors = std::move(errors);
    if (s.errors.empty()) return s;
    const auto n = static_cast<double>(s.errors.size());
    s.mean = std::accumulate(s.errors.begin(), s.errors.end(), 0.0) / n;
    std::vector<double> sorted = s.errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    double ss = 0.0;
    for (double e : s.errors) ss += (e - s.mean) * (e - s.mean);
    s.variance = ss / n;
    return s;
}

namespace {

double safe_ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

CoherenceReport coherence_from_errors(std::vector<double> train_errors,
                                      std::vector<double> test_errors, double threshold) {
    if (train_errors.empty() || test_errors.empty()) {
        throw Error("coherence ratio needs both training and test errors");
    }
    CoherenceReport r;
    r.train = summarize(std::move(train_errors));
    r.test = summarize(std::move(test_errors));
    r.r_median = safe_ratio(r.test.median, r.train.median);
    r.r_variance = safe_ratio(r.test.variance, r.train.variance);
    if (r.train.mean > 0.0) {
        r.r_mean = r.test.mean / r.train.mean;
        r.verdict = r.r_mean >= threshold ? Verdict::Reject : Verdict::Accept;
    } else {
        // perfect reconstruction of the training side: ratio undefined
        r.r_mean = std::numeric_limits<double>::quiet_NaN();
        r.degenerate = true;
        r.verdict = Verdict::Accept;
    }
    return r;
}

CoherenceReport coherence_ratio(const AEModel& model, const CropPartition& partition,
                                const std::map<std::string, std::vector<Crop>>& crops,
                                double threshold) {
    auto score = [&](const std::vector<std::string>& ids) {
        std::vector<double> errors;
        for (const auto& id : ids) {
            auto it = crops.find(id);
            if (it == crops.end()) throw Error("no crops for image " + id);
            const auto e = reconstruction_errors(model, it->second);
            errors.insert(errors.end(), e.begin(), e.end());
        }
        return errors;
    };
    auto report = coherence_from_errors(score(partition.train_images),
                                        score(partition.test_images), threshold);
    report.images_used = partition.train_images.size() + partition.test_images.size();
    return report;
}

// ------------------------------------------------------------
// Composition
// ------------------------------------------------------------

ImageAnalysis analyze_images(const std::vector<std::string>& image_ids, const ImageSource& images,
                             const DetectorConfig& config) {
    ImageAnalysis out;
    std::map<std::string, std::vector<Crop>> crops;
    for (const auto& id : image_ids) {
        if (crops.contains(id)) continue;
        auto img = images.load(id);
        if (!img) {
            warn("image " + id + " is unavailable; skipped");
            continue;
        }
        if (img->width < config.crop_size || img->height < config.crop_size) {
            warn("image " + id + " is smaller than the crop size; skipped");
            continue;
        }
        crops[id] = generate_crops(*img, id, config.crops_per_image, config.crop_size,
                                   crop_seed(config.rng_seed, id));
        out.eligible_images.push_back(id);
    }

    std::vector<std::string> sorted_ids = out.eligible_images;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    std::string key;
    for (const auto& id : sorted_ids) key += id + '\n';
    const std::uint64_t set_seed = derive_seed(config.rng_seed, fnv1a(key));

    auto partition = split_partition(sorted_ids, config.train_crop_fraction,
                                     config.min_images, config.crops_per_image,
                                     derive_seed(set_seed, 1));
    if (!partition) {
        out.status = ImageStageStatus::Bypassed;
        out.note = "fewer than " + std::to_string(config.min_images) + " eligible images";
        return out;
    }

    std::vector<Crop> training;
    for (const auto& id : partition->train_images) {
        training.insert(training.end(), crops[id].begin(), crops[id].end());
    }
    try {
        TrainOptions options;
        options.epochs = config.ae_epochs;
        options.learning_rate = config.ae_learning_rate;
        options.batch_size = config.ae_batch_size;
        options.seed = derive_seed(set_seed, 3);
        const AEModel model =
            train(AEModel::init(derive_seed(set_seed, 2), config.crop_size), training, options);
        out.report = coherence_ratio(model, *partition, crops, config.coherence_threshold);
    } catch (const DivergenceError& e) {
        out.status = ImageStageStatus::Degraded;
        out.note = e.what();
        return out;
    }
    out.status = out.report->verdict == Verdict::Reject ? ImageStageStatus::Rejected
                                                        : ImageStageStatus::Accepted;
    return out;
}

ImageAnalysis analyze_candidate(const EventCandidate& candidate, const ImageSource& images,
                                const AnnotationIndex& annotations, const DetectorConfig& config) {
    const auto selected = select_images(candidate, annotations, config);
    if (static_cast<int>(selected.size()) < config.min_images) {
        ImageAnalysis out;
        out.status = ImageStageStatus::Bypassed;
        out.eligible_images = selected;
        out.note = "fewer than " + std::to_string(config.min_images) + " eligible images";
        return out;
    }
    return analyze_images(selected, images, config);
}

// ------------------------------------------------------------
// Serialization
// ------------------------------------------------------------

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json stats_to_json(const REStats& s, bool include_errors) {
    json j{{"count", s.errors.size()},
           {"mean", s.mean},
           {"median", s.median},
           {"variance", s.variance}};
    if (include_errors) j["errors"] = s.errors;
    return j;
}

}  // namespace

json report_to_json(const CoherenceReport& r, bool include_errors) {
    return {{"r_mean", finite_or_null(r.r_mean)},
            {"r_median", finite_or_null(r.r_median)},
            {"r_variance", finite_or_null(r.r_variance)},
            {"train", stats_to_json(r.train, include_errors)},
            {"test", stats_to_json(r.test, include_errors)},
            {"verdict", r.verdict == Verdict::Reject ? "reject" : "accept"},
            {"images_used", r.images_used},
            {"degenerate", r.degenerate}};
}

const char* to_string(ImageStageStatus status) {
    switch (status) {
        case ImageStageStatus::Bypassed: return "bypassed";
        case ImageStageStatus::Accepted: return "accepted";
        case ImageStageStatus::Rejected: return "rejected";
        case ImageStageStatus::Degraded: return "degraded";
    }
    return "unknown";
}

}  // namespace geoevent

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geoevent/coherence.hpp"
#include "geoevent/config.hpp"
#include "geoevent/embedding.hpp"
#include "geoevent/evaluate.hpp"
#include "geoevent/event_io.hpp"
#include "geoevent/image.hpp"
#include "geoevent/pipeline.hpp"
#include "geoevent/powerlaw.hpp"
#include "geoevent/synth.hpp"
#include "geoevent/tweet_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace geoevent;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

DetectorConfig config_from(const std::string& path) {
    DetectorConfig config = path.empty() ? DetectorConfig{} : load_config(path);
    config.validate();
    return config;
}

AnnotationIndex annotations_from(const std::string& path) {
    return path.empty() ? AnnotationIndex{} : read_annotations(path);
}

/// Writes `j` as one JSONL record to `path`, or to stdout when empty.
void emit(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump() << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing " + path);
}

struct SimulateArgs {
    std::string out_dir;
    std::string scenario;
    std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
    std::map<std::string, std::string> values;
    if (!a.scenario.empty()) values = read_key_values(a.scenario);
    const ScenarioConfig config = scenario_from_values(values, a.seed);
    const Scenario sc = generate_scenario(config);
    write_scenario(sc, a.out_dir);
    std::cout << json{{"out", a.out_dir},
                      {"tweets", sc.stream.size()},
                      {"events", sc.truth.size()},
                      {"images", sc.images.size()}}
                     .dump()
              << '\n';
    return 0;
}

struct DetectArgs {
    std::string input, vectors, images_dir, annotations, config, out, stats, dump_dir;
    bool no_image_stage = false;
    int threads = 0;
};

int run_detect(const DetectArgs& a) {
    DetectorConfig config = config_from(a.config);
    if (a.no_image_stage) config.image_stage = false;
    if (a.threads > 0) config.threads = a.threads;
    const auto stream = read_tweets(a.input);
    const VectorTable table = load_vectors(a.vectors);
    const AnnotationIndex annotations = annotations_from(a.annotations);
    std::optional<DirectoryImageSource> images;
    if (config.image_stage) {
        if (a.images_dir.empty()) throw ConfigError("--images-dir is required unless --no-image-stage");
        images.emplace(a.images_dir);
    }

    ClusteringObserver observer;
    if (!a.dump_dir.empty()) {
        fs::create_directories(a.dump_dir);
        observer = [dir = fs::path(a.dump_dir)](const std::string& prefix, const QuadTree& tree,
                                                const std::vector<TweetVector>& vectors,
                                                const ClusterAssignment& assignment) {
            std::ofstream t(dir / (prefix + ".tree.txt"));
            tree.dump(t);
            std::ofstream c(dir / (prefix + ".clusters.csv"));
            write_assignment_csv(c, vectors, assignment);
            if (!t || !c) throw IoError("cannot write debug dumps under " + dir.string());
        };
    }

    ImageAnalysisCache cache;
    DetectionContext ctx{config, table, images ? &*images : nullptr, &annotations, &cache,
                         a.dump_dir.empty() ? nullptr : &observer};
    const StreamResult result = run_stream(stream, ctx);
    write_events(a.out, result.events);
    if (!a.stats.empty()) {
        std::ofstream out(a.stats);
        if (!out) throw IoError("cannot write " + a.stats);
        for (const auto& w : result.windows) {
            out << json{{"window", w.window_id},     {"tweets", w.tweets},
                        {"clusters", w.clusters},    {"candidates", w.candidates},
                        {"verified", w.verified},    {"pruned_kept", w.pruned_kept},
                        {"image_rejected", w.image_rejected}, {"events", w.events}}
                       .dump()
                << '\n';
        }
    }
    return 0;
}

struct EvaluateArgs {
    std::string events, truth, out;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto detected = read_event_records(a.events);
    const auto truth = read_truth(a.truth);
    emit(eval_to_json(evaluate(detected, truth)), a.out);
    return 0;
}

struct AblateArgs {
    std::string input, vectors, images_dir, annotations, truth, config, out;
    int threads = 0;
};

int run_ablate(const AblateArgs& a) {
    DetectorConfig config = config_from(a.config);
    if (a.threads > 0) config.threads = a.threads;
    const auto stream = read_tweets(a.input);
    const auto truth = read_truth(a.truth);
    const VectorTable table = load_vectors(a.vectors);
    const AnnotationIndex annotations = annotations_from(a.annotations);
    const DirectoryImageSource images(a.images_dir);
    emit(ablation_to_json(ablate(stream, truth, table, images, annotations, config)), a.out);
    return 0;
}

struct FitArgs {
    std::string input;
    int bootstrap = 100;
    int min_tail = 10;
    std::uint64_t seed = 20190101;
    int threads = 1;
};

CountSample read_counts(const std::string& path) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (!path.empty() && path != "-") {
        file.open(path);
        if (!file) throw IoError("cannot open " + path);
        in = &file;
    }
    CountSample counts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        long long v = 0;
        const char* b = line.data() + first;
        const char* e = line.data() + last + 1;
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || v < 1) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected a positive integer");
        }
        counts.push_back(v);
    }
    return counts;
}

int run_fit(const FitArgs& a) {
    const CountSample counts = read_counts(a.input);
    PowerLawFit f = fit(counts, a.min_tail);
    json p_value = nullptr;
    if (a.bootstrap > 0) {
        f.p_value = goodness_of_fit(counts, f, a.bootstrap, a.seed, a.min_tail, a.threads);
        p_value = f.p_value;
    }
    std::cout << json{{"alpha", f.alpha},   {"xmin", f.xmin},     {"ks_stat", f.ks_stat},
                      {"p_value", p_value}, {"n_tail", f.n_tail}, {"degenerate", f.degenerate}}
                     .dump()
              << '\n';
    return 0;
}

struct CoherenceArgs {
    std::vector<std::string> images;
    std::string annotations, config;
    std::optional<std::uint64_t> seed;
};

int run_coherence(const CoherenceArgs& a) {
    DetectorConfig config = config_from(a.config);
    if (a.seed) config.rng_seed = *a.seed;
    // Annotations may be keyed by the path as given or by the file name.
    const AnnotationIndex raw = annotations_from(a.annotations);
    AnnotationIndex annotations;
    for (const auto& path : a.images) {
        auto it = raw.find(path);
        if (it == raw.end()) it = raw.find(fs::path(path).filename().string());
        if (it != raw.end()) annotations[path] = it->second;
    }
    const auto eligible = filter_human_images(a.images, annotations, config);
    const DirectoryImageSource source("");
    const ImageAnalysis analysis = analyze_images(eligible, source, config);
    json out{{"status", to_string(analysis.status)},
             {"eligible_images", analysis.eligible_images},
             {"report", analysis.report ? report_to_json(*analysis.report) : json(nullptr)}};
    if (!analysis.note.empty()) out["note"] = analysis.note;
    std::cout << out.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geo-tagged event detection with an image coherence gate"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic stream with planted events");
    simulate->add_option("--out", sim.out_dir, "Output directory")->required();
    simulate->add_option("--scenario", sim.scenario, "Scenario key=value file");
    simulate->add_option("--seed", sim.seed, "Scenario seed");

    DetectArgs det;
    auto* detect = app.add_subcommand("detect", "Detect events in a tweet stream");
    detect->add_option("--input", det.input, "Tweet stream (JSONL)")->required();
    detect->add_option("--vectors", det.vectors, "Word vectors (text format)")->required();
    detect->add_option("--images-dir", det.images_dir, "Directory holding referenced images");
    detect->add_option("--annotations", det.annotations, "Person annotations (JSONL)");
    detect->add_option("--config", det.config, "Detector key=value config");
    detect->add_option("--out", det.out, "Detected events (JSONL)")->required();
    detect->add_flag("--no-image-stage", det.no_image_stage, "Disable the image coherence gate");
    detect->add_option("--threads", det.threads, "Worker threads (overrides config)");
    detect->add_option("--stats", det.stats, "Per-window stage counts (JSONL)");
    detect->add_option("--dump-dir", det.dump_dir, "Write per-window quad-tree and cluster dumps");

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score detections against ground truth");
    evaluate_cmd->add_option("--events", ev.events, "Detected events (JSONL)")->required();
    evaluate_cmd->add_option("--truth", ev.truth, "Ground truth (JSONL)")->required();
    evaluate_cmd->add_option("--out", ev.out, "Result file (default stdout)");

    AblateArgs ab;
    auto* ablate_cmd = app.add_subcommand("ablate", "Evaluate with and without the image gate");
    ablate_cmd->add_option("--input", ab.input, "Tweet stream (JSONL)")->required();
    ablate_cmd->add_option("--vectors", ab.vectors, "Word vectors (text format)")->required();
    ablate_cmd->add_option("--images-dir", ab.images_dir, "Directory holding referenced images")->required();
    ablate_cmd->add_option("--annotations", ab.annotations, "Person annotations (JSONL)");
    ablate_cmd->add_option("--truth", ab.truth, "Ground truth (JSONL)")->required();
    ablate_cmd->add_option("--config", ab.config, "Detector key=value config");
    ablate_cmd->add_option("--out", ab.out, "Result file (default stdout)");
    ablate_cmd->add_option("--threads", ab.threads, "Worker threads (overrides config)");

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit-powerlaw", "Fit a discrete power law to integer counts");
    fit_cmd->add_option("--input,input", fa.input, "One positive integer per line ('-' for stdin)");
    fit_cmd->add_option("--bootstrap", fa.bootstrap, "Bootstrap iterations")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--min-tail", fa.min_tail, "Minimum tail size for xmin")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--seed", fa.seed, "Bootstrap seed");
    fit_cmd->add_option("--threads", fa.threads, "Bootstrap threads")->check(CLI::PositiveNumber);

    CoherenceArgs co;
    auto* coherence = app.add_subcommand("coherence", "Coherence ratio of an image set");
    coherence->add_option("--images", co.images, "Image files (PNG or PPM)")->required()->expected(1, -1);
    coherence->add_option("--annotations", co.annotations, "Person annotations (JSONL)");
    coherence->add_option("--config", co.config, "Detector key=value config");
    coherence->add_option("--seed", co.seed, "Seed for crops, split and training");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*detect) return run_detect(det);
        if (*evaluate_cmd) return run_evaluate(ev);
        if (*ablate_cmd) return run_ablate(ab);
        if (*fit_cmd) return run_fit(fa);
        if (*coherence) return run_coherence(co);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const LoadError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const RangeError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

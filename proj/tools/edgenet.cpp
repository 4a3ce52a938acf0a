#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "edgenet/augment.hpp"
#include "edgenet/checkpoint.hpp"
#include "edgenet/dataset.hpp"
#include "edgenet/eval.hpp"
#include "edgenet/idx.hpp"
#include "edgenet/imageio.hpp"
#include "edgenet/model.hpp"
#include "edgenet/optimizer.hpp"
#include "edgenet/vision.hpp"

namespace fs = std::filesystem;
using namespace edgenet;

namespace {

std::string g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// All artifacts go through temp-then-rename so a failing command never leaves
// a partial output behind.
void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw std::runtime_error("short write on '" + tmp + "'");
    }
    fs::rename(tmp, path);
}

/// Overlays config-file values onto options the command line did not set.
/// Every key must be bound, so typos in a config file fail loudly.
class ConfigBinder {
public:
    void bind(const std::string& key, CLI::Option* opt,
              std::function<void(const std::string&)> apply) {
        entries_[key] = {opt, std::move(apply)};
    }

    void overlay(const std::string& path) const {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto last = line.find_last_not_of(" \t\r");
            line = line.substr(first, last - first + 1);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("config '" + path + "' line " +
                                         std::to_string(lineno) + " is not key=value");
            }
            std::string key = line.substr(0, eq);
            std::string value = line.substr(eq + 1);
            auto strip = [](std::string& s) {
                const auto a = s.find_first_not_of(" \t");
                const auto b = s.find_last_not_of(" \t");
                s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
            };
            strip(key);
            strip(value);
            const auto it = entries_.find(key);
            if (it == entries_.end()) {
                throw std::runtime_error("config '" + path + "' line " +
                                         std::to_string(lineno) + ": unknown key '" + key +
                                         "'");
            }
            // Command-line flags win over the file.
            if (it->second.opt != nullptr && it->second.opt->count() > 0) continue;
            it->second.apply(value);
        }
    }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(const std::string&)> apply;
    };
    std::map<std::string, Entry> entries_;
};

uint64_t parse_u64(const std::string& s) {
    size_t pos = 0;
    const uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::runtime_error("'" + s + "' is not an integer");
    return v;
}

int parse_int(const std::string& s) {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::runtime_error("'" + s + "' is not an integer");
    return v;
}

double parse_double(const std::string& s) {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("'" + s + "' is not a number");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::runtime_error("'" + s + "' is not a boolean");
}

struct EdgeOverrides {
    std::string method;  // empty = variant default
    double min_val = -1.0;
    double max_val = -1.0;

    EdgeParams resolve(EdgeMethod fallback) const {
        EdgeParams p =
            default_edge_params(method.empty() ? fallback : edge_method_from_name(method));
        if (min_val >= 0.0) p.min_val = min_val;
        if (max_val >= 0.0) p.max_val = max_val;
        return p;
    }
};

Image preprocess_single(const Image& img) {
    Image out = resize(img, 28, 28);
    out = ensure_white_background(out).image;
    return thicken_strokes(out);
}

int run_prepare(const std::vector<std::string>& sources, const std::string& out_dir,
                uint64_t seed, bool augment) {
    std::vector<Corpus> corpora;
    for (const std::string& src : sources) {
        Corpus c;
        c.name = src;
        const auto comma = src.find(',');
        if (comma != std::string::npos) {
            c.samples = load_idx(src.substr(0, comma), src.substr(comma + 1));
        } else {
            c.samples = load_image_dir(src);
        }
        corpora.push_back(std::move(c));
    }
    UnifiedDataset ds = preprocess(unify(std::move(corpora), seed));
    if (augment) {
        ds.train = expand_training_set(ds.train, seed);
        ds.augmented = true;
    }
    save_dataset(ds, out_dir);

    std::cout << "train=" << ds.train.size() << " validation=" << ds.validation.size()
              << " test=" << ds.test.size() << "\n";
    for (const CorpusCount& c : ds.corpora) {
        std::cout << "corpus '" << c.name << "' count=" << c.count << "\n";
    }
    std::cout << "augmented=" << (ds.augmented ? "true" : "false") << "\n";
    std::cout << "saved " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& dataset_dir, const std::string& out_dir, Variant variant,
              const TrainConfig& cfg, const EdgeOverrides& eo) {
    const UnifiedDataset ds = load_dataset(dataset_dir);
    const ModelGraph graph = build(variant);
    const EdgeParams ep = eo.resolve(variant_edge_method(variant));

    std::cout << "variant=" << variant_name(graph.variant) << "\n";
    std::cout << "params_standard=" << count_params_standard(graph) << "\n";
    std::cout << "params_eq1=" << count_params_eq1(graph) << "\n";
    if (variant == Variant::wc) {
        std::cout << "edge_extractor=none (edge branch disabled)\n";
    } else {
        std::cout << "edge_extractor=" << edge_method_name(ep.method)
                  << " min=" << g9(ep.min_val) << " max=" << g9(ep.max_val) << "\n";
    }
    std::cout << "precision=" << precision_name(cfg.precision) << " seed=" << cfg.master_seed
              << " epochs=" << cfg.epochs << " batch=" << cfg.batch_size
              << " lr=" << g9(cfg.lr) << "\n";

    const TrainResult result = train_model(graph, ds.train, ds.validation, ep, cfg);
    for (const EpochMetrics& m : result.history) {
        std::cout << "epoch=" << m.epoch << " train_loss=" << g9(m.train_loss)
                  << " val_accuracy=" << g9(m.val_accuracy) << "\n";
    }
    std::cout << "best_epoch=" << result.best_epoch
              << " best_val_accuracy=" << g9(result.best_val_accuracy) << "\n";

    fs::create_directories(out_dir);
    std::string csv = "epoch,train_loss,val_accuracy\n";
    for (const EpochMetrics& m : result.history) {
        csv += std::to_string(m.epoch) + "," + g9(m.train_loss) + "," + g9(m.val_accuracy) +
               "\n";
    }
    write_file_atomic((fs::path(out_dir) / "metrics.csv").string(), csv);

    const std::string ckpt = (fs::path(out_dir) / "checkpoint.enet").string();
    const std::string tmp = ckpt + ".tmp";
    save_checkpoint(graph, result.best_weights, tmp);
    fs::rename(tmp, ckpt);
    std::cout << "wrote " << (fs::path(out_dir) / "metrics.csv").string() << " and " << ckpt
              << "\n";
    return 0;
}

int run_eval(const std::string& dataset_dir, const std::string& ckpt, Variant variant,
             const std::string& split_name, const std::string& out_dir, int threads,
             const EdgeOverrides& eo) {
    const UnifiedDataset ds = load_dataset(dataset_dir);
    const std::vector<Sample>* split = nullptr;
    if (split_name == "train") {
        split = &ds.train;
    } else if (split_name == "validation") {
        split = &ds.validation;
    } else if (split_name == "test") {
        split = &ds.test;
    } else {
        throw std::runtime_error("unknown split '" + split_name +
                                 "' (expected train, validation, or test)");
    }
    const ModelGraph graph = build(variant);
    const ModelWeights<float> w = load_checkpoint<float>(graph, ckpt);
    const EdgeParams ep = eo.resolve(variant_edge_method(variant));

    const Metrics m = evaluate(graph, w, *split, ep, threads);
    std::cout << "split=" << split_name << "\n" << metrics_summary(m);
    for (const ConfusionEntry& e : top_confusions(m, 3)) {
        std::cout << "confused true=" << e.true_label << " predicted=" << e.predicted
                  << " count=" << e.count << "\n";
    }

    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "confusion.csv").string();
    write_file_atomic(csv_path, confusion_csv(m));
    std::cout << "wrote " << csv_path << "\n";
    return 0;
}

int run_edge(const std::string& image_path, const std::string& method,
             const std::string& out_path, const EdgeOverrides& eo) {
    const Image img = load_image(image_path);
    EdgeOverrides with_method = eo;
    if (with_method.method.empty()) with_method.method = method;
    const EdgeParams ep = with_method.resolve(EdgeMethod::canny);
    const Image edges = extract_edges(img, ep);
    const std::string tmp = out_path + ".tmp";
    save_pgm(edges, tmp);
    fs::rename(tmp, out_path);
    std::cout << "method=" << edge_method_name(ep.method) << " edges="
              << static_cast<int64_t>(std::count(edges.pixels.begin(), edges.pixels.end(),
                                                 1.0f))
              << " wrote " << out_path << "\n";
    return 0;
}

int run_params(Variant variant) {
    const ModelGraph graph = build(variant);
    std::cout << "variant=" << variant_name(variant) << "\n";
    std::cout << "standard=" << count_params_standard(graph) << "\n";
    std::cout << "eq1=" << count_params_eq1(graph) << "\n";
    return 0;
}

int run_predict(const std::string& image_path, const std::string& ckpt, Variant variant,
                const EdgeOverrides& eo) {
    const ModelGraph graph = build(variant);
    const ModelWeights<float> w = load_checkpoint<float>(graph, ckpt);
    const Image img = preprocess_single(load_image(image_path));
    const EdgeParams ep = eo.resolve(variant_edge_method(variant));
    const Prediction pred = predict(graph, w, img, ep);
    std::cout << "label=" << pred.label << "\n";
    std::string probs;
    for (size_t i = 0; i < pred.probs.size(); ++i) {
        if (i) probs += ",";
        probs += g9(pred.probs[i]);
    }
    std::cout << "probs=" << probs << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EdgeNet: edge-guided digit classification pipeline"};
    app.require_subcommand(1);

    // ---- prepare ----
    auto* prepare = app.add_subcommand(
        "prepare", "Ingest corpora, unify, preprocess, optionally augment, and save");
    std::vector<std::string> prep_sources;
    std::string prep_out;
    uint64_t prep_seed = kDefaultSeed;
    bool prep_augment = false;
    std::string prep_config;
    prepare->add_option("sources", prep_sources,
                        "Corpus sources: an image directory (class subdirs 0-9) or an "
                        "'images.idx,labels.idx' pair")
        ->required();
    auto* prep_out_opt = prepare->add_option("--out", prep_out, "Output dataset directory");
    prep_out_opt->required();
    auto* prep_seed_opt = prepare->add_option("--seed", prep_seed, "Shuffle/augment seed");
    auto* prep_aug_opt = prepare->add_flag("--augment", prep_augment,
                                           "Expand the training split 4x");
    prepare->add_option("--config", prep_config, "key=value config file");

    // ---- train ----
    auto* train = app.add_subcommand("train", "Train a variant on a prepared dataset");
    std::string train_dataset, train_out = "run", train_variant = "edgenet";
    std::string train_precision = "f32", train_config;
    EdgeOverrides train_edges;
    TrainConfig tcfg;
    tcfg.epochs = 5;  // full-scale schedules are configured explicitly
    train->add_option("dataset", train_dataset, "Prepared dataset directory")->required();
    auto* t_variant = train->add_option("--variant", train_variant,
                                        "edgenet, wc, se, id, or log");
    auto* t_seed = train->add_option("--seed", tcfg.master_seed, "Master seed");
    auto* t_epochs = train->add_option("--epochs", tcfg.epochs, "Training epochs");
    auto* t_batch = train->add_option("--batch", tcfg.batch_size, "Mini-batch size");
    auto* t_lr = train->add_option("--lr", tcfg.lr, "Learning-rate multiplier");
    auto* t_threads = train->add_option("--threads", tcfg.threads, "Worker threads");
    auto* t_out = train->add_option("--out", train_out, "Output directory for artifacts");
    auto* t_precision = train->add_option("--precision", train_precision, "f32 or f64");
    auto* t_method = train->add_option("--edge-method", train_edges.method,
                                       "Override the variant's edge extractor");
    train->add_option("--config", train_config, "key=value config file");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string eval_dataset, eval_ckpt, eval_variant = "edgenet", eval_split = "test";
    std::string eval_out = ".", eval_config;
    int eval_threads = 1;
    EdgeOverrides eval_edges;
    eval_cmd->add_option("dataset", eval_dataset, "Prepared dataset directory")->required();
    eval_cmd->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
    auto* e_variant = eval_cmd->add_option("--variant", eval_variant, "Graph variant");
    auto* e_split = eval_cmd->add_option("--split", eval_split, "train, validation, or test");
    auto* e_out = eval_cmd->add_option("--out", eval_out, "Directory for confusion.csv");
    auto* e_threads = eval_cmd->add_option("--threads", eval_threads, "Worker threads");
    auto* e_method = eval_cmd->add_option("--edge-method", eval_edges.method,
                                          "Override the variant's edge extractor");
    eval_cmd->add_option("--config", eval_config, "key=value config file");

    // ---- edge ----
    auto* edge_cmd = app.add_subcommand("edge", "Extract an edge map to a PGM image");
    std::string edge_image, edge_method = "canny", edge_out = "edges.pgm", edge_config;
    EdgeOverrides edge_edges;
    edge_cmd->add_option("image", edge_image, "Input image (PNG or PGM)")->required();
    auto* g_method = edge_cmd->add_option("--method", edge_method, "canny, sobel, or log");
    auto* g_out = edge_cmd->add_option("--out", edge_out, "Output PGM path");
    edge_cmd->add_option("--config", edge_config, "key=value config file");

    // ---- params ----
    auto* params_cmd = app.add_subcommand("params", "Print parameter counts for a variant");
    std::string params_variant = "edgenet";
    params_cmd->add_option("--variant", params_variant, "Graph variant");

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "Classify one image");
    std::string pred_image, pred_ckpt, pred_variant = "edgenet", pred_config;
    EdgeOverrides pred_edges;
    predict_cmd->add_option("image", pred_image, "Input image (PNG or PGM)")->required();
    predict_cmd->add_option("checkpoint", pred_ckpt, "Checkpoint file")->required();
    auto* p_variant = predict_cmd->add_option("--variant", pred_variant, "Graph variant");
    auto* p_method = predict_cmd->add_option("--edge-method", pred_edges.method,
                                             "Override the variant's edge extractor");
    predict_cmd->add_option("--config", pred_config, "key=value config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            ConfigBinder cb;
            cb.bind("seed", prep_seed_opt, [&](const std::string& v) { prep_seed = parse_u64(v); });
            cb.bind("out", prep_out_opt, [&](const std::string& v) { prep_out = v; });
            cb.bind("augment", prep_aug_opt,
                    [&](const std::string& v) { prep_augment = parse_bool(v); });
            if (!prep_config.empty()) cb.overlay(prep_config);
            return run_prepare(prep_sources, prep_out, prep_seed, prep_augment);
        }
        if (train->parsed()) {
            ConfigBinder cb;
            cb.bind("variant", t_variant, [&](const std::string& v) { train_variant = v; });
            cb.bind("seed", t_seed, [&](const std::string& v) { tcfg.master_seed = parse_u64(v); });
            cb.bind("epochs", t_epochs, [&](const std::string& v) { tcfg.epochs = parse_int(v); });
            cb.bind("batch", t_batch, [&](const std::string& v) { tcfg.batch_size = parse_int(v); });
            cb.bind("lr", t_lr, [&](const std::string& v) { tcfg.lr = parse_double(v); });
            cb.bind("rho", nullptr, [&](const std::string& v) { tcfg.rho = parse_double(v); });
            cb.bind("epsilon", nullptr,
                    [&](const std::string& v) { tcfg.epsilon = parse_double(v); });
            cb.bind("threads", t_threads,
                    [&](const std::string& v) { tcfg.threads = parse_int(v); });
            cb.bind("out", t_out, [&](const std::string& v) { train_out = v; });
            cb.bind("precision", t_precision,
                    [&](const std::string& v) { train_precision = v; });
            cb.bind("edge-method", t_method,
                    [&](const std::string& v) { train_edges.method = v; });
            cb.bind("min-val", nullptr,
                    [&](const std::string& v) { train_edges.min_val = parse_double(v); });
            cb.bind("max-val", nullptr,
                    [&](const std::string& v) { train_edges.max_val = parse_double(v); });
            if (!train_config.empty()) cb.overlay(train_config);
            tcfg.precision = precision_from_name(train_precision);
            return run_train(train_dataset, train_out, variant_from_name(train_variant), tcfg,
                             train_edges);
        }
        if (eval_cmd->parsed()) {
            ConfigBinder cb;
            cb.bind("variant", e_variant, [&](const std::string& v) { eval_variant = v; });
            cb.bind("split", e_split, [&](const std::string& v) { eval_split = v; });
            cb.bind("out", e_out, [&](const std::string& v) { eval_out = v; });
            cb.bind("threads", e_threads,
                    [&](const std::string& v) { eval_threads = parse_int(v); });
            cb.bind("edge-method", e_method,
                    [&](const std::string& v) { eval_edges.method = v; });
            cb.bind("min-val", nullptr,
                    [&](const std::string& v) { eval_edges.min_val = parse_double(v); });
            cb.bind("max-val", nullptr,
                    [&](const std::string& v) { eval_edges.max_val = parse_double(v); });
            if (!eval_config.empty()) cb.overlay(eval_config);
            return run_eval(eval_dataset, eval_ckpt, variant_from_name(eval_variant),
                            eval_split, eval_out, eval_threads, eval_edges);
        }
        if (edge_cmd->parsed()) {
            ConfigBinder cb;
            cb.bind("method", g_method, [&](const std::string& v) { edge_method = v; });
            cb.bind("out", g_out, [&](const std::string& v) { edge_out = v; });
            cb.bind("min-val", nullptr,
                    [&](const std::string& v) { edge_edges.min_val = parse_double(v); });
            cb.bind("max-val", nullptr,
                    [&](const std::string& v) { edge_edges.max_val = parse_double(v); });
            if (!edge_config.empty()) cb.overlay(edge_config);
            return run_edge(edge_image, edge_method, edge_out, edge_edges);
        }
        if (params_cmd->parsed()) {
            return run_params(variant_from_name(params_variant));
        }
        if (predict_cmd->parsed()) {
            ConfigBinder cb;
            cb.bind("variant", p_variant, [&](const std::string& v) { pred_variant = v; });
            cb.bind("edge-method", p_method,
                    [&](const std::string& v) { pred_edges.method = v; });
            cb.bind("min-val", nullptr,
                    [&](const std::string& v) { pred_edges.min_val = parse_double(v); });
            cb.bind("max-val", nullptr,
                    [&](const std::string& v) { pred_edges.max_val = parse_double(v); });
            if (!pred_config.empty()) cb.overlay(pred_config);
            return run_predict(pred_image, pred_ckpt, variant_from_name(pred_variant),
                               pred_edges);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "edgenet/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "edgenet/idx.hpp"
#include "edgenet/imageio.hpp"
#include "edgenet/rng.hpp"
#include "edgenet/vision.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace edgenet {

namespace {

uint32_t file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open '" + path.string() + "' for checksum");
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf),
                    static_cast<uInt>(in.gcount()));
    }
    return static_cast<uint32_t>(crc);
}

void preprocess_split(std::vector<Sample>& split) {
    for (Sample& s : split) {
        Image img = resize(s.image, 28, 28);
        img = ensure_white_background(img).image;
        s.image = thicken_strokes(img);
    }
}

const char* kSplitNames[3] = {"train", "validation", "test"};

std::vector<Sample>& split_by_index(UnifiedDataset& ds, int i) {
    switch (i) {
        case 0: return ds.train;
        case 1: return ds.validation;
        default: return ds.test;
    }
}

}  // namespace

std::vector<Sample> load_image_dir(const std::string& root) {
    if (!fs::is_directory(root)) {
        throw DatasetError("'" + root + "' is not a directory");
    }
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());

    std::vector<Sample> out;
    for (const fs::path& dir : class_dirs) {
        const std::string name = dir.filename().string();
        if (name.size() != 1 || name[0] < '0' || name[0] > '9') {
            throw DatasetError("class directory '" + name + "' under '" + root +
                               "' is not a digit 0-9");
        }
        const uint8_t label = static_cast<uint8_t>(name[0] - '0');
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            Sample s;
            s.image = load_image(f.string());
            s.label = label;
            out.push_back(std::move(s));
        }
    }
    return out;
}

UnifiedDataset unify(std::vector<Corpus> corpora, uint64_t seed) {
    UnifiedDataset ds;
    ds.seed = seed;
    std::vector<Sample> pool;
    for (Corpus& c : corpora) {
        ds.corpora.push_back({c.name, static_cast<int64_t>(c.samples.size())});
        for (Sample& s : c.samples) {
            s.source = c.name;
            pool.push_back(std::move(s));
        }
    }
    if (pool.empty()) {
        throw DatasetError("unify: merged pool is empty");
    }
    // Identity is assigned before shuffling, so downstream per-sample seeds do
    // not depend on where the shuffle puts a sample.
    for (size_t i = 0; i < pool.size(); ++i) pool[i].id = static_cast<uint64_t>(i);
    seeded_shuffle(pool, seed);

    // Integer split arithmetic: floor(0.8N) and floor(0.15N) without any
    // float rounding hazard.
    const size_t n = pool.size();
    const size_t n_train = n * 8 / 10;
    const size_t n_val = n * 3 / 20;
    ds.train.assign(std::make_move_iterator(pool.begin()),
                    std::make_move_iterator(pool.begin() + static_cast<ptrdiff_t>(n_train)));
    ds.validation.assign(
        std::make_move_iterator(pool.begin() + static_cast<ptrdiff_t>(n_train)),
        std::make_move_iterator(pool.begin() + static_cast<ptrdiff_t>(n_train + n_val)));
    ds.test.assign(std::make_move_iterator(pool.begin() + static_cast<ptrdiff_t>(n_train + n_val)),
                   std::make_move_iterator(pool.end()));
    return ds;
}

UnifiedDataset preprocess(UnifiedDataset ds) {
    preprocess_split(ds.train);
    preprocess_split(ds.validation);
    preprocess_split(ds.test);
    return ds;
}

void save_dataset(const UnifiedDataset& ds, const std::string& path) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    json manifest;
    manifest["version"] = kDatasetFormatVersion;
    manifest["preprocessing_version"] = kPreprocessingVersion;
    manifest["seed"] = ds.seed;
    manifest["augmented"] = ds.augmented;
    manifest["corpora"] = json::array();
    for (const CorpusCount& c : ds.corpora) {
        manifest["corpora"].push_back({{"name", c.name}, {"count", c.count}});
    }
    manifest["split_counts"] = {{"train", ds.train.size()},
                                {"validation", ds.validation.size()},
                                {"test", ds.test.size()}};

    json checksums;
    const std::vector<Sample>* splits[3] = {&ds.train, &ds.validation, &ds.test};
    for (int i = 0; i < 3; ++i) {
        const std::string imgs = std::string(kSplitNames[i]) + "-images.idx";
        const std::string lbls = std::string(kSplitNames[i]) + "-labels.idx";
        save_idx(*splits[i], (tmp / imgs).string(), (tmp / lbls).string());
        checksums[imgs] = file_crc32(tmp / imgs);
        checksums[lbls] = file_crc32(tmp / lbls);
    }
    manifest["checksums"] = checksums;

    {
        std::ofstream out(tmp / "manifest.json", std::ios::trunc);
        if (!out) throw DatasetError("cannot write manifest under '" + tmp.string() + "'");
        out << manifest.dump(2) << "\n";
    }

    fs::remove_all(target);
    fs::rename(tmp, target);
}

UnifiedDataset load_dataset(const std::string& path) {
    const fs::path dir(path);
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw DatasetError("cannot open '" + manifest_path.string() + "'");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DatasetError("'" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }

    const int version = manifest.value("version", -1);
    if (version != kDatasetFormatVersion) {
        throw DatasetVersionError("dataset '" + path + "' has format version " +
                                  std::to_string(version) + ", this build reads version " +
                                  std::to_string(kDatasetFormatVersion));
    }

    UnifiedDataset ds;
    ds.seed = manifest.value("seed", uint64_t{0});
    ds.augmented = manifest.value("augmented", false);
    if (manifest.contains("corpora")) {
        for (const auto& c : manifest["corpora"]) {
            ds.corpora.push_back({c.value("name", ""), c.value("count", int64_t{0})});
        }
    }

    const json& checksums = manifest.at("checksums");
    for (int i = 0; i < 3; ++i) {
        const std::string imgs = std::string(kSplitNames[i]) + "-images.idx";
        const std::string lbls = std::string(kSplitNames[i]) + "-labels.idx";
        for (const std::string& f : {imgs, lbls}) {
            if (!checksums.contains(f)) {
                throw DatasetError("manifest in '" + path + "' lacks checksum for " + f);
            }
            const uint32_t want = checksums[f].get<uint32_t>();
            const uint32_t got = file_crc32(dir / f);
            if (want != got) {
                throw DatasetChecksumError("'" + (dir / f).string() + "' checksum " +
                                           std::to_string(got) + " != manifest " +
                                           std::to_string(want));
            }
        }
        split_by_index(ds, i) = load_idx((dir / imgs).string(), (dir / lbls).string());
    }

    // Fresh sequential identities across the three splits keep them disjoint.
    uint64_t id = 0;
    for (int i = 0; i < 3; ++i) {
        for (Sample& s : split_by_index(ds, i)) s.id = id++;
    }

    const json& counts = manifest.at("split_counts");
    if (counts.value("train", size_t{0}) != ds.train.size() ||
        counts.value("validation", size_t{0}) != ds.validation.size() ||
        counts.value("test", size_t{0}) != ds.test.size()) {
        throw DatasetError("dataset '" + path + "' split sizes disagree with manifest");
    }
    return ds;
}

}  // namespace edgenet

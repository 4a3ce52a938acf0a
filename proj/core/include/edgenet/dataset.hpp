#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgenet/image.hpp"

namespace edgenet {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Persisted dataset was written by an unknown format version.
struct DatasetVersionError : DatasetError {
    using DatasetError::DatasetError;
};
/// Persisted payload does not match its manifest checksum.
struct DatasetChecksumError : DatasetError {
    using DatasetError::DatasetError;
};

struct Corpus {
    std::string name;
    std::vector<Sample> samples;
};

struct CorpusCount {
    std::string name;
    int64_t count = 0;
};

/// Merged pool split into train/validation/test, plus the provenance needed
/// to reproduce it.
struct UnifiedDataset {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    uint64_t seed = 0;
    std::vector<CorpusCount> corpora;
    bool augmented = false;
};

/// Current on-disk format and preprocessing recipe versions.
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kPreprocessingVersion = 1;

/// Loads every PNG/PGM under root/0 .. root/9; the directory name is the
/// label. Files within a class load in sorted name order so ingestion is
/// reproducible across filesystems. A non-digit subdirectory is an error.
std::vector<Sample> load_image_dir(const std::string& root);

/// Concatenates the corpora, stamps each sample with its corpus name and a
/// stable id, shuffles with the seed, and splits 80/15/5 using integer
/// arithmetic: train = 8N/10, validation = 3N/20, test = remainder.
UnifiedDataset unify(std::vector<Corpus> corpora, uint64_t seed);

/// Per sample, across all splits: resize to 28x28, normalize to a white
/// background, thicken strokes. Split membership and labels are untouched.
UnifiedDataset preprocess(UnifiedDataset ds);

/// Persists to a directory: a JSON manifest plus one IDX image/label pair per
/// split, pixels quantized to 8 bits, CRC-32 checksums in the manifest. The
/// directory is written atomically (temp dir + rename).
void save_dataset(const UnifiedDataset& ds, const std::string& path);

/// Loads a directory written by save_dataset, verifying version and
/// checksums. Sample ids are reassigned sequentially (train, then
/// validation, then test); corpus tags live only in the manifest.
UnifiedDataset load_dataset(const std::string& path);

}  // namespace edgenet

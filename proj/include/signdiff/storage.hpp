#pragma once

#include <map>
#include <string>
#include <vector>

#include "signdiff/model.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/vocab.hpp"

namespace signdiff {

// Datasets are JSON lines: {"id": ..., "text": [...], "frames": [[...], ...]}.
// Doubles round-trip exactly through the shortest-representation printer, so
// identical configs produce byte-identical files.
struct DatasetRecord {
    int id = 0;
    std::vector<int> text;
    Matrix frames;
};

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> load_dataset(const std::string& path);

std::vector<Sample> records_to_samples(const std::vector<DatasetRecord>& records);

// Generated outputs: token streams plus decoded motions, id-aligned with the
// reference split.
struct GeneratedRecord {
    int id = 0;
    TokenSequence tokens;
    Matrix frames;
};

void save_generated(const std::string& path, const std::vector<GeneratedRecord>& records);
std::vector<GeneratedRecord> load_generated(const std::string& path);

// manifest.json in each run directory: one entry per command, carrying the
// config hash, the seed, and the dataset hash the artifacts trace back to.
struct Manifest {
    std::map<std::string, std::map<std::string, std::string>> entries;

    void put(const std::string& command, const std::string& key, const std::string& value);
    const std::string* get(const std::string& command, const std::string& key) const;
};

void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

// Checkpoints: magic "MDSM", version, then a named tensor table with
// row-major float32 payloads. Loading requires an initialized model with
// matching names and shapes.
void save_checkpoint(const std::string& path, const SeqModel& model);
void load_checkpoint(const std::string& path, SeqModel& model);

}  // namespace signdiff

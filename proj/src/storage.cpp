#include "signdiff/storage.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "signdiff/errors.hpp"

namespace signdiff {

using nlohmann::json;

namespace {

json frames_to_json(const Matrix& frames) {
    json rows = json::array();
    for (int r = 0; r < frames.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < frames.cols; ++c) {
            row.push_back(frames.at(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix frames_from_json(const json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
    Matrix frames(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c) {
            throw DataError("ragged frame rows in dataset");
        }
        for (int j = 0; j < c; ++j) {
            frames.at(i, j) = rows[i][j].get<double>();
        }
    }
    return frames;
}

}  // namespace

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open dataset for writing: " + path);
    }
    for (const auto& rec : records) {
        json line;
        line["id"] = rec.id;
        line["text"] = rec.text;
        line["frames"] = frames_to_json(rec.frames);
        os << line.dump() << "\n";
    }
    if (!os.good()) {
        throw DataError("failed writing dataset: " + path);
    }
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open dataset: " + path);
    }
    std::vector<DatasetRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        json parsed;
        try {
            parsed = json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(std::string("bad dataset line: ") + e.what());
        }
        DatasetRecord rec;
        rec.id = parsed.at("id").get<int>();
        rec.text = parsed.at("text").get<std::vector<int>>();
        rec.frames = frames_from_json(parsed.at("frames"));
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Sample> records_to_samples(const std::vector<DatasetRecord>& records) {
    std::vector<Sample> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        Sample s;
        s.text = rec.text;
        s.motion.frames = rec.frames;
        out.push_back(std::move(s));
    }
    return out;
}

void save_generated(const std::string& path, const std::vector<GeneratedRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open output for writing: " + path);
    }
    for (const auto& rec : records) {
        json line;
        line["id"] = rec.id;
        line["text"] = rec.tokens.text;
        line["body"] = rec.tokens.sign[0];
        line["left"] = rec.tokens.sign[1];
        line["right"] = rec.tokens.sign[2];
        line["frames"] = frames_to_json(rec.frames);
        os << line.dump() << "\n";
    }
    if (!os.good()) {
        throw DataError("failed writing generated records: " + path);
    }
}

std::vector<GeneratedRecord> load_generated(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open generated records: " + path);
    }
    std::vector<GeneratedRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        json parsed;
        try {
            parsed = json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(std::string("bad generated line: ") + e.what());
        }
        GeneratedRecord rec;
        rec.id = parsed.at("id").get<int>();
        rec.tokens.text = parsed.at("text").get<std::vector<int>>();
        rec.tokens.sign[0] = parsed.at("body").get<std::vector<int>>();
        rec.tokens.sign[1] = parsed.at("left").get<std::vector<int>>();
        rec.tokens.sign[2] = parsed.at("right").get<std::vector<int>>();
        rec.frames = frames_from_json(parsed.at("frames"));
        out.push_back(std::move(rec));
    }
    return out;
}

void Manifest::put(const std::string& command, const std::string& key, const std::string& value) {
    entries[command][key] = value;
}

const std::string* Manifest::get(const std::string& command, const std::string& key) const {
    auto it = entries.find(command);
    if (it == entries.end()) {
        return nullptr;
    }
    auto kit = it->second.find(key);
    return kit == it->second.end() ? nullptr : &kit->second;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    json root;
    for (const auto& [command, kv] : manifest.entries) {
        root[command] = kv;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open manifest for writing: " + path);
    }
    os << root.dump(2) << "\n";
}

Manifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open manifest: " + path);
    }
    json root;
    try {
        is >> root;
    } catch (const std::exception& e) {
        throw DataError(std::string("bad manifest: ") + e.what());
    }
    Manifest manifest;
    for (const auto& [command, kv] : root.items()) {
        for (const auto& [key, value] : kv.items()) {
            manifest.put(command, key, value.get<std::string>());
        }
    }
    return manifest;
}

namespace {

constexpr char kCkptMagic[4] = {'M', 'D', 'S', 'M'};
constexpr uint32_t kCkptVersion = 1;

void write_u32(std::ofstream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const SeqModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open checkpoint for writing: " + path);
    }
    const auto params = model.params();
    os.write(kCkptMagic, 4);
    write_u32(os, kCkptVersion);
    write_u32(os, static_cast<uint32_t>(params.size()));
    for (const Tensor* tensor : params) {
        write_u32(os, static_cast<uint32_t>(tensor->name.size()));
        os.write(tensor->name.data(), static_cast<std::streamsize>(tensor->name.size()));
        write_u32(os, static_cast<uint32_t>(tensor->shape.size()));
        for (int d : tensor->shape) {
            write_u32(os, static_cast<uint32_t>(d));
        }
        for (double v : tensor->data) {
            const float f = static_cast<float>(v);
            os.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
    if (!os.good()) {
        throw DataError("failed writing checkpoint: " + path);
    }
}

void load_checkpoint(const std::string& path, SeqModel& model) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("cannot open checkpoint: " + path);
    }
    char magic[4];
    is.read(magic, 4);
    if (!is.good() || std::memcmp(magic, kCkptMagic, 4) != 0) {
        throw DataError("bad checkpoint magic: " + path);
    }
    if (read_u32(is) != kCkptVersion) {
        throw DataError("unsupported checkpoint version: " + path);
    }
    const uint32_t count = read_u32(is);
    size_t loaded = 0;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const uint32_t ndim = read_u32(is);
        std::vector<int> shape(ndim);
        int64_t numel = 1;
        for (uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<int>(read_u32(is));
            numel *= shape[d];
        }
        Tensor* target = model.find_param(name);
        if (target == nullptr) {
            throw DataError("checkpoint tensor not in model: " + name);
        }
        if (target->shape != shape) {
            throw DataError("checkpoint shape mismatch for " + name);
        }
        for (int64_t e = 0; e < numel; ++e) {
            float f = 0.0f;
            is.read(reinterpret_cast<char*>(&f), sizeof(f));
            target->data[static_cast<size_t>(e)] = static_cast<double>(f);
        }
        ++loaded;
    }
    if (!is.good()) {
        throw DataError("truncated checkpoint: " + path);
    }
    if (loaded != model.params().size()) {
        throw DataError("checkpoint does not cover every model tensor");
    }
}

}  // namespace signdiff

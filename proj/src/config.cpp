#include "signdiff/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "signdiff/errors.hpp"

namespace signdiff {

namespace {

int to_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + value);
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + value);
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on") {
        return true;
    }
    if (value == "0" || value == "false" || value == "off") {
        return false;
    }
    throw ConfigError("bad boolean for " + key + ": " + value);
}

uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const uint64_t v = std::stoull(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad seed for " + key + ": " + value);
    }
}

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    size_t end = s.find_last_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        seed = to_u64(key, value);
    } else if (key == "out") {
        out_dir = value;
    } else if (key == "n") {
        n = to_int(key, value);
    } else if (key == "lexicon") {
        lexicon = to_int(key, value);
    } else if (key == "dims") {
        dims = to_int(key, value);
    } else if (key == "min_signs") {
        min_signs = to_int(key, value);
    } else if (key == "max_signs") {
        max_signs = to_int(key, value);
    } else if (key == "min_sign_frames") {
        min_sign_frames = to_int(key, value);
    } else if (key == "max_sign_frames") {
        max_sign_frames = to_int(key, value);
    } else if (key == "single_hand_fraction") {
        single_hand_fraction = to_double(key, value);
    } else if (key == "n_codes") {
        n_codes = to_int(key, value);
    } else if (key == "code_dim") {
        code_dim = to_int(key, value);
    } else if (key == "kmeans_iters") {
        kmeans_iters = to_int(key, value);
    } else if (key == "model_dim") {
        model_dim = to_int(key, value);
    } else if (key == "blocks") {
        blocks = to_int(key, value);
    } else if (key == "max_len") {
        max_len = to_int(key, value);
    } else if (key == "embed") {
        embed = value;
    } else if (key == "M") {
        M = to_int(key, value);
    } else if (key == "k") {
        k = to_int(key, value);
    } else if (key == "variant") {
        variant = value;
    } else if (key == "pretrain_epochs") {
        pretrain_epochs = to_int(key, value);
    } else if (key == "epochs") {
        epochs = to_int(key, value);
    } else if (key == "batch") {
        batch = to_int(key, value);
    } else if (key == "lr") {
        lr = to_double(key, value);
    } else if (key == "alpha") {
        alpha = to_double(key, value);
    } else if (key == "grad_clip") {
        grad_clip = to_double(key, value);
    } else if (key == "loss_lat") {
        loss_lat = to_bool(key, value);
    } else if (key == "loss_phy") {
        loss_phy = to_bool(key, value);
    } else if (key == "bench_repeats") {
        bench_repeats = to_int(key, value);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

void RunConfig::validate() const {
    try {
        motion_config().validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (n < 10) {
        throw ConfigError("need at least 10 samples for the 80/10/10 split");
    }
    if (n_codes < 2 || code_dim < 1 || kmeans_iters < 1) {
        throw ConfigError("invalid tokenizer settings");
    }
    if (code_dim > 4 * (dims / 3)) {
        throw ConfigError("code_dim larger than the part window");
    }
    if (model_dim < 1 || blocks < 1 || max_len < 1) {
        throw ConfigError("invalid model settings");
    }
    if (M < 1 || k < 1 || k > M) {
        throw ConfigError("invalid schedule settings: need 1 <= k <= M");
    }
    if (4 * M < max_signs * max_sign_frames) {
        throw ConfigError("span budget M too small for the longest motion");
    }
    if (variant != "plain" && variant != "utc") {
        throw ConfigError("variant must be plain or utc");
    }
    if (embed != "dense" && embed != "avg" && embed != "top1" && embed != "top2") {
        throw ConfigError("embed must be dense, avg, top1 or top2");
    }
    if (pretrain_epochs < 0 || epochs < 1 || batch < 1) {
        throw ConfigError("invalid training settings");
    }
    if (lr <= 0.0 || alpha < 0.0) {
        throw ConfigError("lr must be positive and alpha nonnegative");
    }
    if (bench_repeats < 1) {
        throw ConfigError("bench_repeats must be positive");
    }
    const int longest_text = max_signs;
    if (longest_text + 1 + M > max_len) {
        throw ConfigError("max_len too small for text + separator + span");
    }
}

MotionConfig RunConfig::motion_config() const {
    MotionConfig cfg;
    cfg.dims = dims;
    cfg.lexicon_size = lexicon;
    cfg.min_signs = min_signs;
    cfg.max_signs = max_signs;
    cfg.min_sign_frames = min_sign_frames;
    cfg.max_sign_frames = max_sign_frames;
    cfg.max_frames = 4 * M;
    cfg.single_hand_fraction = single_hand_fraction;
    return cfg;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig cfg;
    cfg.vocab = VocabSpec{lexicon, n_codes};
    cfg.model_dim = model_dim;
    cfg.blocks = blocks;
    cfg.max_len = max_len;
    cfg.code_dim = code_dim;
    cfg.embed_variant = parse_mop_variant(embed);
    cfg.direction = Direction::bidirectional;
    return cfg;
}

std::string RunConfig::canonical() const {
    std::map<std::string, std::string> kv;
    std::ostringstream num;
    auto put_num = [&kv, &num](const std::string& key, auto value) {
        num.str("");
        num << value;
        kv[key] = num.str();
    };
    put_num("seed", seed);
    kv["out"] = out_dir;
    put_num("n", n);
    put_num("lexicon", lexicon);
    put_num("dims", dims);
    put_num("min_signs", min_signs);
    put_num("max_signs", max_signs);
    put_num("min_sign_frames", min_sign_frames);
    put_num("max_sign_frames", max_sign_frames);
    put_num("single_hand_fraction", single_hand_fraction);
    put_num("n_codes", n_codes);
    put_num("code_dim", code_dim);
    put_num("kmeans_iters", kmeans_iters);
    put_num("model_dim", model_dim);
    put_num("blocks", blocks);
    put_num("max_len", max_len);
    kv["embed"] = embed;
    put_num("M", M);
    put_num("k", k);
    kv["variant"] = variant;
    put_num("pretrain_epochs", pretrain_epochs);
    put_num("epochs", epochs);
    put_num("batch", batch);
    put_num("lr", lr);
    put_num("alpha", alpha);
    put_num("grad_clip", grad_clip);
    kv["loss_lat"] = loss_lat ? "1" : "0";
    kv["loss_phy"] = loss_phy ? "1" : "0";
    put_num("bench_repeats", bench_repeats);

    std::string out;
    for (const auto& [key, value] : kv) {
        if (key == "out") {
            continue;  // the output root does not identify the experiment
        }
        out += key + "=" + value + "\n";
    }
    return out;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string RunConfig::hash16() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

std::string RunConfig::run_dir() const {
    return (std::filesystem::path(out_dir) / hash16()).string();
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.rfind("include ", 0) == 0) {
            const std::string target = trim(line.substr(8));
            const auto base = std::filesystem::path(path).parent_path();
            apply_file((base / target).string());
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply_file(path);
    return cfg;
}

}  // namespace signdiff

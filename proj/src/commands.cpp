#include "signdiff/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "signdiff/errors.hpp"
#include "signdiff/metrics.hpp"
#include "signdiff/storage.hpp"
#include "signdiff/train.hpp"

namespace signdiff {

namespace fs = std::filesystem;

namespace {

fs::path run_path(const RunConfig& config) { return fs::path(config.run_dir()); }

Manifest load_or_new_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    if (fs::exists(path)) {
        return load_manifest(path.string());
    }
    return Manifest{};
}

void record_command(const RunConfig& config, const std::string& command, Manifest& manifest) {
    manifest.put(command, "config_hash", config.hash16());
    manifest.put(command, "seed", std::to_string(config.seed));
    manifest.put(command, "dataset_hash", config.hash16());
}

std::vector<DatasetRecord> require_split(const RunConfig& config, const std::string& split) {
    const fs::path path = run_path(config) / ("dataset_" + split + ".jsonl");
    if (!fs::exists(path)) {
        throw DataError("missing dataset split (run gen-data first): " + path.string());
    }
    return load_dataset(path.string());
}

std::array<Codebook, kNumParts> require_codebooks(const RunConfig& config) {
    const fs::path path = run_path(config) / "codebooks.mdsc";
    if (!fs::exists(path)) {
        throw DataError("missing codebooks (run fit-codebooks first): " + path.string());
    }
    return load_codebooks(path.string());
}

SeqModel build_model(const RunConfig& config, const std::array<Codebook, kNumParts>& books) {
    SeqModel model;
    model.init(config.model_config(), config.seed);
    model.set_codebooks(books);
    return model;
}

std::vector<TrainSample> prepare_samples(const RunConfig& config, const std::string& split,
                                         const std::array<Codebook, kNumParts>& books) {
    return make_train_samples(records_to_samples(require_split(config, split)), books);
}

struct TextInput {
    int id = 0;
    std::vector<int> text;
};

std::vector<TextInput> load_text_inputs(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open input texts: " + path);
    }
    std::vector<TextInput> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            const auto parsed = nlohmann::json::parse(line);
            TextInput input;
            input.id = parsed.at("id").get<int>();
            input.text = parsed.at("text").get<std::vector<int>>();
            out.push_back(std::move(input));
        } catch (const std::exception& e) {
            throw DataError(std::string("bad input line: ") + e.what());
        }
    }
    return out;
}

}  // namespace

void cmd_gen_data(const RunConfig& config, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    fs::create_directories(dir);
    if (!fs::is_directory(dir)) {
        throw DataError("cannot create run directory: " + dir.string());
    }

    const auto samples = gen_synthetic_pairs(config.n, config.seed, config.motion_config());
    std::vector<DatasetRecord> records;
    records.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        DatasetRecord rec;
        rec.id = static_cast<int>(i);
        rec.text = samples[i].text;
        rec.frames = samples[i].motion.frames;
        records.push_back(std::move(rec));
    }

    const int n_train = config.n * 8 / 10;
    const int n_dev = config.n / 10;
    const auto save_slice = [&](const std::string& split, int begin, int end) {
        std::vector<DatasetRecord> slice(records.begin() + begin, records.begin() + end);
        save_dataset((dir / ("dataset_" + split + ".jsonl")).string(), slice);
        return end - begin;
    };
    const int train_n = save_slice("train", 0, n_train);
    const int dev_n = save_slice("dev", n_train, n_train + n_dev);
    const int test_n = save_slice("test", n_train + n_dev, config.n);

    Manifest manifest = load_or_new_manifest(dir);
    record_command(config, "gen-data", manifest);
    manifest.put("gen-data", "train", std::to_string(train_n));
    manifest.put("gen-data", "dev", std::to_string(dev_n));
    manifest.put("gen-data", "test", std::to_string(test_n));
    save_manifest((dir / "manifest.json").string(), manifest);

    out << "wrote " << train_n << "/" << dev_n << "/" << test_n << " samples under "
        << dir.string() << "\n";
}

void cmd_fit_codebooks(const RunConfig& config, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    const auto train = require_split(config, "train");

    std::vector<MotionSequence> motions;
    motions.reserve(train.size());
    for (const auto& rec : train) {
        MotionSequence m;
        m.frames = rec.frames;
        motions.push_back(std::move(m));
    }
    CodebookFitReport report;
    const auto books = fit_codebooks(motions, config.n_codes, config.code_dim,
                                     config.kmeans_iters, config.seed, &report);
    save_codebooks((dir / "codebooks.mdsc").string(), books);

    Manifest manifest = load_or_new_manifest(dir);
    record_command(config, "fit-codebooks", manifest);
    for (int p = 0; p < kNumParts; ++p) {
        manifest.put("fit-codebooks", std::string("quant_error_") + part_name(p),
                     std::to_string(books[p].quant_error));
    }
    save_manifest((dir / "manifest.json").string(), manifest);

    out << "fitted codebooks";
    for (int p = 0; p < kNumParts; ++p) {
        out << " " << part_name(p) << "=" << books[p].quant_error;
    }
    out << "\n";
}

void cmd_pretrain(const RunConfig& config, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    const auto books = require_codebooks(config);
    const auto samples = prepare_samples(config, "train", books);

    SeqModel model = build_model(config, books);
    TrainOptions opt;
    opt.phase = Phase::pretrain;
    opt.epochs = config.pretrain_epochs;
    opt.batch_size = config.batch;
    opt.lr0 = config.lr;
    opt.alpha = config.alpha;
    opt.grad_clip = config.grad_clip;
    opt.with_lat = config.loss_lat;
    opt.with_phy = config.loss_phy;
    opt.span_budget = config.M;
    opt.seed = config.seed;

    std::ofstream log((dir / "pretrain_log.txt").string());
    const TrainResult result = train_model(model, samples, opt, &log);
    save_checkpoint((dir / "pretrain.mdsm").string(), model);

    Manifest manifest = load_or_new_manifest(dir);
    record_command(config, "pretrain", manifest);
    manifest.put("pretrain", "final_total", std::to_string(result.history.back().total));
    save_manifest((dir / "manifest.json").string(), manifest);

    out << "pretrained " << opt.epochs << " epochs, final l_total "
        << result.history.back().total << "\n";
}

void cmd_finetune(const RunConfig& config, const std::string& init, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    const auto books = require_codebooks(config);
    const auto samples = prepare_samples(config, "train", books);

    SeqModel model = build_model(config, books);
    if (init == "pretrain") {
        load_checkpoint((dir / "pretrain.mdsm").string(), model);
    } else if (init != "none" && !init.empty()) {
        load_checkpoint(init, model);
    }

    TrainOptions opt;
    opt.phase = Phase::finetune;
    opt.variant = config.schedule_variant();
    opt.epochs = config.epochs;
    opt.batch_size = config.batch;
    opt.lr0 = config.lr;
    opt.alpha = config.alpha;
    opt.grad_clip = config.grad_clip;
    opt.with_lat = config.loss_lat;
    opt.with_phy = config.loss_phy;
    opt.span_budget = config.M;
    opt.seed = config.seed + 1;

    std::ofstream log((dir / "finetune_log.txt").string());
    const TrainResult result = train_model(model, samples, opt, &log);
    save_checkpoint((dir / "finetune.mdsm").string(), model);

    // dev-set summary for quick comparisons across runs
    const auto dev = prepare_samples(config, "dev", books);
    const double dev_tok = eval_token_loss(model, dev, config.M, config.seed + 2);
    const double dev_bleu = eval_sibleu(
        model, dev, build_schedule(config.M, config.k, config.schedule_variant()),
        config.seed + 3);

    Manifest manifest = load_or_new_manifest(dir);
    record_command(config, "finetune", manifest);
    manifest.put("finetune", "init", init.empty() ? "none" : init);
    manifest.put("finetune", "final_tok", std::to_string(result.history.back().tok));
    manifest.put("finetune", "dev_tok", std::to_string(dev_tok));
    manifest.put("finetune", "dev_sibleu", std::to_string(dev_bleu));
    save_manifest((dir / "manifest.json").string(), manifest);

    out << "finetuned " << opt.epochs << " epochs (" << config.variant << "), final l_tok "
        << result.history.back().tok << ", dev l_tok " << dev_tok << ", dev sibleu " << dev_bleu
        << "\n";
}

void cmd_generate(const RunConfig& config, const std::string& checkpoint, bool use_oracle,
                  std::ostream& out, const std::string& input_path) {
    config.validate();
    const fs::path dir = run_path(config);
    const auto books = require_codebooks(config);

    // inputs: either an explicit id/text file or the test split
    std::vector<TextInput> inputs;
    std::vector<TrainSample> test;
    if (!input_path.empty()) {
        if (use_oracle) {
            throw ConfigError("oracle generation needs reference tokens; drop --input");
        }
        inputs = load_text_inputs(input_path);
    } else {
        test = prepare_samples(config, "test", books);
        const auto records = require_split(config, "test");
        for (size_t i = 0; i < test.size(); ++i) {
            inputs.push_back({records[i].id, test[i].tokens.text});
        }
    }
    for (const auto& input : inputs) {
        for (int tok : input.text) {
            if (tok < 0 || tok >= config.lexicon) {
                throw DataError("text token outside the vocabulary: " + std::to_string(tok));
            }
        }
    }

    SeqModel model = build_model(config, books);
    if (!use_oracle) {
        fs::path ckpt;
        if (checkpoint.empty() || checkpoint == "finetune") {
            ckpt = dir / "finetune.mdsm";
        } else if (checkpoint == "pretrain") {
            ckpt = dir / "pretrain.mdsm";
        } else {
            ckpt = checkpoint;
        }
        load_checkpoint(ckpt.string(), model);
    }

    const UnmaskSchedule schedule =
        build_schedule(config.M, config.k, config.schedule_variant());
    {
        std::ofstream sched_file((dir / "schedule.txt").string());
        sched_file << schedule.to_table();
    }

    std::vector<GeneratedRecord> generated;
    CounterRng root = CounterRng(config.seed).split(909);
    for (size_t i = 0; i < inputs.size(); ++i) {
        TokenSequence tokens;
        if (use_oracle) {
            const PaddedSequence truth =
                pad_sequence(test[i].tokens, config.M, model.cfg.vocab);
            tokens = generate_with(oracle_predictor(truth, model.cfg.vocab), inputs[i].text,
                                   schedule, root.split(i).next_u64(), model.cfg.vocab);
        } else {
            tokens = generate(model, inputs[i].text, schedule, root.split(i).next_u64());
        }
        GeneratedRecord rec;
        rec.id = inputs[i].id;
        rec.tokens = tokens;
        rec.frames = detokenize(tokens.sign, books).frames;
        generated.push_back(std::move(rec));
    }
    save_generated((dir / "generated.jsonl").string(), generated);

    Manifest manifest = load_or_new_manifest(dir);
    record_command(config, "generate", manifest);
    manifest.put("generate", "oracle", use_oracle ? "1" : "0");
    manifest.put("generate", "count", std::to_string(generated.size()));
    save_manifest((dir / "manifest.json").string(), manifest);

    out << "generated " << generated.size() << " sequences into "
        << (dir / "generated.jsonl").string() << "\n";
}

void cmd_evaluate(const RunConfig& config, const std::string& generated_dir, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    const fs::path gen_dir = generated_dir.empty() ? dir : fs::path(generated_dir);

    // manifests must chain back to one dataset
    const Manifest own = load_or_new_manifest(dir);
    const Manifest theirs = load_or_new_manifest(gen_dir);
    const std::string* own_hash = own.get("gen-data", "dataset_hash");
    const std::string* their_hash = theirs.get("generate", "dataset_hash");
    if (own_hash == nullptr) {
        throw DataError("reference run has no dataset manifest entry");
    }
    if (their_hash == nullptr) {
        throw DataError("generated run has no generate manifest entry");
    }
    if (*own_hash != *their_hash) {
        throw DataError("generated outputs trace to a different dataset: " + *their_hash +
                        " vs " + *own_hash);
    }

    const auto books = require_codebooks(config);
    const auto refs = require_split(config, "test");
    const auto ref_samples = prepare_samples(config, "test", books);
    const auto generated = load_generated((gen_dir / "generated.jsonl").string());
    if (generated.size() != refs.size()) {
        throw DataError("generated/reference counts differ");
    }

    std::vector<TokenSequence> hyp_tokens;
    std::vector<TokenSequence> ref_tokens;
    std::vector<MotionSequence> hyp_motions;
    std::vector<MotionSequence> ref_motions;
    for (size_t i = 0; i < generated.size(); ++i) {
        if (generated[i].id != refs[i].id) {
            throw DataError("generated/reference id mismatch at position " + std::to_string(i));
        }
        hyp_tokens.push_back(generated[i].tokens);
        ref_tokens.push_back(ref_samples[i].tokens);
        MotionSequence hyp;
        hyp.frames = generated[i].frames;
        hyp_motions.push_back(std::move(hyp));
        // references decode through the same frozen decoder, so the motion
        // metric scores generation quality, not tokenizer reconstruction
        ref_motions.push_back(detokenize(ref_samples[i].tokens.sign, books));
    }

    MetricReport report;
    report.samples = static_cast<int>(generated.size());
    report.sibleu = sibleu_corpus(hyp_tokens, ref_tokens);
    report.dtw = dtw_corpus(hyp_motions, ref_motions);

    {
        std::ofstream table((dir / "eval.txt").string());
        table << "# sibleu_hands averages the left and right streams\n";
        table << report.to_table();
        std::ofstream line((dir / "eval_line.txt").string(), std::ios::app);
        line << report.to_line() << "\n";
    }
    out << report.to_table();
}

void cmd_bench(const RunConfig& config, std::ostream& out) {
    config.validate();
    const fs::path dir = run_path(config);
    fs::create_directories(dir);
    const auto books = require_codebooks(config);

    SeqModel mdlm = build_model(config, books);
    ModelConfig ar_cfg = config.model_config();
    ar_cfg.direction = Direction::causal;
    SeqModel ar;
    ar.init(ar_cfg, config.seed);
    ar.set_codebooks(books);

    std::vector<std::vector<int>> texts;
    for (const auto& rec : require_split(config, "test")) {
        texts.push_back(rec.text);
    }

    const LatencyReport report =
        bench_latency(mdlm, ar, texts, config.M, config.k, config.bench_repeats);
    {
        std::ofstream file((dir / "bench.txt").string());
        file << report.to_table();
    }
    out << report.to_table();
}

void cmd_order_count(int M, int k, std::ostream& out) {
    if (M < 1 || k < 1 || k > M) {
        throw ConfigError("order-count requires 1 <= k <= M");
    }
    const BigUint plain = count_orders_plain(M, k);
    const BigUint utc = count_orders_utc(M, k);
    out << "plain = " << plain.to_string() << "\n";
    out << "utc   = " << utc.to_string() << "\n";
    out << "plain ~ " << plain.scientific(4) << " (magnitude " << plain.magnitude() << ")\n";
    out << "utc   ~ " << utc.scientific(4) << " (magnitude " << utc.magnitude() << ")\n";
    const auto [quot, rem] = BigUint::divmod(plain, utc);
    out << "ratio = " << quot.to_string();
    if (!rem.is_zero()) {
        out << " + " << rem.to_string() << "/" << utc.to_string();
    }
    out << "\n";
    out << "ratio ~ " << quot.scientific(4) << " (magnitude " << quot.magnitude() << ")\n";
}

}  // namespace signdiff

// Command-line front end: synthetic data, tokenizer fitting, the two
// training stages, generation, evaluation, and the latency/order-count
// diagnostics. `signdiff --help` lists every option with its default.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "signdiff/commands.hpp"
#include "signdiff/errors.hpp"

using namespace signdiff;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    bool seed_set = false;
    uint64_t seed = 0;
};

RunConfig resolve_config(const GlobalArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) {
        config.apply_file(args.config_path);
    }
    if (args.seed_set) {
        config.seed = args.seed;
    }
    if (!args.out_dir.empty()) {
        config.out_dir = args.out_dir;
    }
    return config;
}

void add_config_overrides(CLI::App* cmd, std::vector<std::string>& overrides) {
    cmd->add_option("--set", overrides,
                    "override a config value as key=value (repeatable)");
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got: " + kv);
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked-diffusion sign generation toolkit"};
    app.require_subcommand(1);
    app.footer(
        "Config keys for --config files and --set overrides (key = default):\n"
        "  seed = 1            master seed for data, fitting and training\n"
        "  out = runs          output root; runs live in <out>/<config hash>\n"
        "  n = 200             synthetic samples (split 80/10/10)\n"
        "  lexicon = 64        sign templates (>= 50); also the text vocab\n"
        "  dims = 24           pose dimensions, split evenly over 3 parts\n"
        "  min_signs = 2       signs composed per sample\n"
        "  max_signs = 8\n"
        "  min_sign_frames = 16  frames per sign, multiples of 4\n"
        "  max_sign_frames = 40\n"
        "  single_hand_fraction = 0.3\n"
        "  n_codes = 64        codebook entries per part\n"
        "  code_dim = 16       code embedding width\n"
        "  kmeans_iters = 25\n"
        "  model_dim = 64      hidden width\n"
        "  blocks = 2          mixing blocks\n"
        "  max_len = 128       positional table size\n"
        "  embed = dense       sign embedding: dense | avg | top1 | top2\n"
        "  M = 100             generated sign tokens (span budget)\n"
        "  k = 4               tokens unmasked per reverse step\n"
        "  variant = plain     unmasking schedule: plain | utc\n"
        "  pretrain_epochs = 50\n"
        "  epochs = 50         fine-tuning epochs\n"
        "  batch = 16\n"
        "  lr = 0.05           initial step size (cosine decayed)\n"
        "  alpha = 0.5         latent+physical weight during fine-tuning\n"
        "  grad_clip = 5       global gradient-norm clip (0 disables)\n"
        "  loss_lat = 1        latent-space pretraining term\n"
        "  loss_phy = 1        physical-space pretraining term\n"
        "  bench_repeats = 50");

    GlobalArgs global;
    app.add_option("--config", global.config_path, "key=value config file");
    app.add_option("--out", global.out_dir, "output root (default: runs)");
    app.add_option("--seed", global.seed, "master seed override")
        ->each([&global](const std::string&) { global.seed_set = true; });

    std::vector<std::string> overrides;

    auto* gen_data = app.add_subcommand("gen-data", "write synthetic train/dev/test splits");
    add_config_overrides(gen_data, overrides);

    auto* fit = app.add_subcommand("fit-codebooks", "fit the three part-wise codebooks");
    add_config_overrides(fit, overrides);

    auto* pretrain = app.add_subcommand("pretrain", "token + latent + physical pretraining");
    add_config_overrides(pretrain, overrides);

    auto* finetune = app.add_subcommand("finetune", "text-conditioned fine-tuning");
    std::string init = "none";
    finetune->add_option("--init", init, "none | pretrain | <checkpoint path>");
    add_config_overrides(finetune, overrides);

    auto* generate = app.add_subcommand("generate", "decode the test split into tokens/motions");
    std::string checkpoint = "finetune";
    std::string input_path;
    bool use_oracle = false;
    generate->add_option("--checkpoint", checkpoint, "finetune | pretrain | <path>");
    generate->add_option("--input", input_path, "JSON-lines {id, text} file to decode instead");
    generate->add_flag("--oracle", use_oracle, "fill from reference tokens (plumbing check)");
    add_config_overrides(generate, overrides);

    auto* evaluate = app.add_subcommand("evaluate", "token and motion metrics on the test split");
    std::string generated_dir;
    evaluate->add_option("--generated", generated_dir,
                         "run dir holding generated.jsonl (default: own)");
    add_config_overrides(evaluate, overrides);

    auto* bench = app.add_subcommand("bench", "latency: parallel vs left-to-right decoding");
    add_config_overrides(bench, overrides);

    auto* order = app.add_subcommand("order-count", "exact unmasking-order counts");
    int M = 100;
    int k = 4;
    order->add_option("-M,--tokens", M, "generated tokens")->capture_default_str();
    order->add_option("-k,--per-step", k, "tokens unmasked per step")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (order->parsed()) {
            cmd_order_count(M, k, std::cout);
            return kExitOk;
        }
        RunConfig config = resolve_config(global);
        apply_overrides(config, overrides);
        if (gen_data->parsed()) {
            cmd_gen_data(config, std::cout);
        } else if (fit->parsed()) {
            cmd_fit_codebooks(config, std::cout);
        } else if (pretrain->parsed()) {
            cmd_pretrain(config, std::cout);
        } else if (finetune->parsed()) {
            cmd_finetune(config, init, std::cout);
        } else if (generate->parsed()) {
            cmd_generate(config, checkpoint, use_oracle, std::cout, input_path);
        } else if (evaluate->parsed()) {
            cmd_evaluate(config, generated_dir, std::cout);
        } else if (bench->parsed()) {
            cmd_bench(config, std::cout);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

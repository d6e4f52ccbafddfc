#pragma once

#include <iosfwd>
#include <string>

#include "signdiff/config.hpp"

namespace signdiff {

// End-to-end pipelines over one run directory (out/<config hash>/). Each
// command records itself in manifest.json; downstream commands check that
// their inputs trace back to the same dataset hash.
//
// Files in a run directory:
//   manifest.json
//   dataset_train.jsonl / dataset_dev.jsonl / dataset_test.jsonl
//   codebooks.mdsc
//   pretrain.mdsm / finetune.mdsm, pretrain_log.txt / finetune_log.txt
//   schedule.txt, generated.jsonl
//   eval.txt, eval_line.txt, bench.txt

void cmd_gen_data(const RunConfig& config, std::ostream& out);
void cmd_fit_codebooks(const RunConfig& config, std::ostream& out);
void cmd_pretrain(const RunConfig& config, std::ostream& out);

// init: "pretrain" continues from pretrain.mdsm, "none" starts fresh, any
// other value is a checkpoint path.
void cmd_finetune(const RunConfig& config, const std::string& init, std::ostream& out);

// checkpoint: "finetune" (default), "pretrain", or a path. With use_oracle
// the fills come from the reference tokens instead of the model. input_path
// optionally points at a JSON-lines file of {"id", "text"} records to decode
// instead of the test split (an empty file yields an empty output).
void cmd_generate(const RunConfig& config, const std::string& checkpoint, bool use_oracle,
                  std::ostream& out, const std::string& input_path = "");

// generated_dir: run directory holding generated.jsonl (defaults to the
// config's own run dir).
void cmd_evaluate(const RunConfig& config, const std::string& generated_dir, std::ostream& out);

void cmd_bench(const RunConfig& config, std::ostream& out);

void cmd_order_count(int M, int k, std::ostream& out);

}  // namespace signdiff

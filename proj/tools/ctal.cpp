// Batch CLI for the cross-modal audio-and-language model: tokenizer
// training, feature extraction, pre-training, fine-tuning, evaluation,
// embedding export, synthetic corpora, and checkpoint inspection.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ctal/data.hpp"
#include "ctal/feature_cache.hpp"
#include "ctal/finetune.hpp"
#include "ctal/pretrain.hpp"
#include "ctal/run_config.hpp"
#include "ctal/synth.hpp"

namespace fs = std::filesystem;
using namespace ctal;

namespace {

std::string fnv64_hex(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open input for hashing: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv64_hex(bytes);
}

// Every run directory echoes its resolved configuration and a content hash
// of the inputs it consumed.
void write_run_metadata(const std::string& dir, const RunConfig& rc,
                        const std::vector<std::string>& input_files) {
  fs::create_directories(dir);
  std::ofstream cfg(dir + "/resolved_config.txt");
  cfg << rc.dump();
  std::ofstream hashes(dir + "/inputs.hash");
  for (const auto& p : input_files) hashes << p << "\t" << file_hash(p) << "\n";
}

RunConfig make_config(const std::string& config_path,
                      const std::vector<std::string>& overrides, long seed_flag,
                      long threads_flag) {
  RunConfig rc;
  if (!config_path.empty()) rc.load_file(config_path);
  for (const auto& kv : overrides) rc.set_kv(kv);
  if (seed_flag >= 0) rc.set("seed", std::to_string(seed_flag));
  if (threads_flag > 0) rc.set("threads", std::to_string(threads_flag));
  return rc;
}

ModelConfig resolve_model_config(const RunConfig& rc, int tokenizer_size) {
  ModelConfig cfg = ModelConfig::preset(rc.str("model.preset"));
  if (rc.was_set("model.layers")) cfg.layers = static_cast<int>(rc.integer("model.layers"));
  if (rc.was_set("model.heads")) cfg.heads = static_cast<int>(rc.integer("model.heads"));
  if (rc.was_set("model.hidden")) cfg.hidden = static_cast<int>(rc.integer("model.hidden"));
  if (rc.was_set("model.ffn_mult"))
    cfg.ffn_mult = static_cast<int>(rc.integer("model.ffn_mult"));
  if (rc.was_set("model.vocab_size"))
    cfg.vocab_size = static_cast<int>(rc.integer("model.vocab_size"));
  else if (tokenizer_size > 0)
    cfg.vocab_size = tokenizer_size;
  if (rc.was_set("model.max_text_len"))
    cfg.max_text_len = static_cast<int>(rc.integer("model.max_text_len"));
  if (rc.was_set("model.max_audio_frames"))
    cfg.max_audio_frames = static_cast<int>(rc.integer("model.max_audio_frames"));
  if (rc.was_set("model.dropout")) cfg.dropout = rc.real("model.dropout");
  if (rc.was_set("model.tie_mlm")) cfg.tie_mlm = rc.boolean("model.tie_mlm");
  cfg.validate();
  if (tokenizer_size > cfg.vocab_size)
    throw ConfigError("tokenizer has " + std::to_string(tokenizer_size) +
                      " ids but model.vocab_size is only " + std::to_string(cfg.vocab_size));
  return cfg;
}

FrontendConfig resolve_frontend(const RunConfig& rc) {
  FrontendConfig f;
  f.sample_rate = static_cast<int>(rc.integer("audio.sample_rate"));
  f.frame_ms = rc.real("audio.frame_ms");
  f.step_ms = rc.real("audio.step_ms");
  f.num_mel = static_cast<int>(rc.integer("audio.num_mel"));
  return f;
}

std::string require_key(const RunConfig& rc, const std::string& key) {
  const std::string v = rc.str(key);
  if (v.empty()) throw ConfigError("config key " + key + " is required for this command");
  return v;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(1, sep) : "") + parts[i];
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    auto at = s.find(sep, start);
    if (at == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, at - start));
    start = at + 1;
  }
  return out;
}

int cmd_train_tokenizer(const std::string& corpus_path, const std::string& manifest_path,
                        int vocab_size, const std::string& out) {
  std::vector<std::string> corpus;
  if (!corpus_path.empty()) {
    std::ifstream f(corpus_path);
    if (!f) throw IoError("cannot open corpus: " + corpus_path);
    std::string line;
    while (std::getline(f, line)) corpus.push_back(line);
  } else if (!manifest_path.empty()) {
    for (const auto& e : read_manifest(manifest_path, false)) corpus.push_back(e.transcript);
  } else {
    throw ConfigError("train-tokenizer needs --corpus or --manifest");
  }
  auto vocab = BbpeVocab::train(corpus, vocab_size);
  vocab.save(out);
  std::cout << "vocab_size=" << vocab.size() << " merges=" << vocab.num_merges() << " -> "
            << out << "\n";
  return 0;
}

int cmd_extract_features(const std::string& manifest_path, const std::string& out_dir,
                         const RunConfig& rc) {
  const auto entries = read_manifest(manifest_path, false);
  const FrontendConfig fcfg = resolve_frontend(rc);
  fs::create_directories(out_dir);
  const int threads = static_cast<int>(rc.integer("threads"));
  std::atomic<long> done{0}, failed{0};
  parallel_items(static_cast<int>(entries.size()), threads, [&](int i, int) {
    try {
      auto seq = extract(read_wav(entries[i].audio_path), fcfg, entries[i].audio_path);
      write_feature_cache(feature_cache_path(out_dir, entries[i].audio_path), seq);
      ++done;
    } catch (const Error& e) {
      ++failed;
      log_warn(std::string("extract failed: ") + e.what());
    }
  });
  std::cout << "extracted=" << done.load() << " failed=" << failed.load() << " -> " << out_dir
            << "\n";
  return failed.load() == 0 ? 0 : 1;
}

int cmd_pretrain(const RunConfig& rc) {
  const std::string manifest = require_key(rc, "data.manifest");
  const std::string vocab_path = require_key(rc, "tokenizer.path");
  const std::string out_dir = rc.str("out.dir");

  auto vocab = BbpeVocab::load(vocab_path);
  const ModelConfig mcfg = resolve_model_config(rc, vocab.size());
  const FrontendConfig fcfg = resolve_frontend(rc);
  write_run_metadata(out_dir, rc, {manifest, vocab_path});

  long skipped = 0;
  auto entries = read_manifest(manifest, false, &skipped);
  auto data = load_examples(entries, vocab, fcfg, rc.str("data.feature_dir"),
                            static_cast<int>(rc.integer("threads")), &skipped);

  PretrainConfig pcfg;
  pcfg.steps = rc.integer("pretrain.steps");
  pcfg.batch_size = static_cast<int>(rc.integer("pretrain.batch_size"));
  pcfg.lr = rc.real("pretrain.lr");
  pcfg.warmup_frac = rc.real("pretrain.warmup_frac");
  pcfg.seed = static_cast<uint64_t>(rc.integer("seed"));
  pcfg.checkpoint_every = rc.integer("pretrain.checkpoint_every");
  pcfg.threads = static_cast<int>(rc.integer("threads"));
  pcfg.mcam.contiguous_replacement = rc.boolean("masking.contiguous_replacement");

  CtalModel<float> model(mcfg, pcfg.seed);
  run_pretraining(model, data, pcfg, out_dir);
  std::cout << "pretrained " << pcfg.steps << " steps over " << data.size() << " pairs -> "
            << out_dir << "\n";
  return 0;
}

// Rebuilds the architecture a checkpoint was written with; fine-tune
// checkpoints also restore their task spec.
struct LoadedCheckpoint {
  TensorTable table;
  ModelConfig cfg;
  bool finetuned = false;
  TaskSpec task;
};

LoadedCheckpoint open_checkpoint(const std::string& path) {
  LoadedCheckpoint lc;
  lc.table = read_tensor_table(path);
  lc.cfg = model_config_from_kv(lc.table.config);
  lc.finetuned = lc.table.config_value("kind") == "finetune";
  if (lc.finetuned) {
    lc.task.kind = TaskSpec::parse_kind(lc.table.config_value("task.name"));
    if (lc.task.kind != TaskKind::Regression)
      lc.task.classes = split(lc.table.config_value("task.classes"), ',');
  }
  return lc;
}

int cmd_finetune(const RunConfig& rc, const std::string& checkpoint) {
  const std::string manifest = require_key(rc, "data.manifest");
  const std::string vocab_path = require_key(rc, "tokenizer.path");
  const std::string out_dir = rc.str("out.dir");
  const std::string task_name = rc.str("finetune.task");

  auto vocab = BbpeVocab::load(vocab_path);
  auto lc = open_checkpoint(checkpoint);
  const FrontendConfig front = resolve_frontend(rc);
  write_run_metadata(out_dir, rc, {manifest, vocab_path, checkpoint});

  long skipped = 0;
  auto train = load_examples(read_manifest(manifest, true, &skipped), vocab, front,
                             rc.str("data.feature_dir"),
                             static_cast<int>(rc.integer("threads")), &skipped);
  const TaskKind kind = TaskSpec::parse_kind(task_name);
  const TaskSpec task = TaskSpec::from_examples(kind, train);

  const uint64_t seed = static_cast<uint64_t>(rc.integer("seed"));
  CtalModel<float> model(lc.cfg, seed, /*with_pretrain_heads=*/false);
  add_finetune_params(model.params(), lc.cfg, task.output_dim(), seed);
  load_params_from_table(model.params(), lc.table, finetune_fresh_prefixes());

  FinetuneConfig ft;
  ft.lr = rc.real("finetune.lr");
  ft.min_lr = rc.real("finetune.min_lr");
  ft.weight_decay = rc.real("finetune.weight_decay");
  ft.orth_weight = rc.real("finetune.orth_weight");
  ft.epochs = static_cast<int>(rc.integer("finetune.epochs"));
  ft.batch_size = static_cast<int>(rc.integer("finetune.batch_size"));
  ft.threads = static_cast<int>(rc.integer("threads"));
  ft.seed = seed;
  auto stats = run_finetune(model, task, train, ft, out_dir + "/train_log.csv");

  auto kv = model_config_kv(lc.cfg);
  kv.push_back({"kind", "finetune"});
  kv.push_back({"task.name", task_name});
  if (kind != TaskKind::Regression) kv.push_back({"task.classes", join(task.classes, ',')});
  kv.push_back({"seed", std::to_string(seed)});
  save_checkpoint(out_dir + "/checkpoint_finetuned.ckpt", model.params(), kv);

  nlohmann::json report;
  report["train_loss"] = stats.final_train_loss;
  if (kind != TaskKind::Regression) report["train_accuracy"] = stats.train_accuracy;
  report["steps"] = stats.steps;

  const std::string eval_manifest = rc.str("data.eval_manifest");
  if (!eval_manifest.empty()) {
    auto eval = load_examples(read_manifest(eval_manifest, true, &skipped), vocab, front,
                              rc.str("data.feature_dir"),
                              static_cast<int>(rc.integer("threads")), &skipped);
    auto result = evaluate_task(model, task, eval, static_cast<int>(rc.integer("threads")));
    for (auto& [k, v] : result.metrics) report[k] = v;
  }
  std::ofstream(out_dir + "/metrics.json") << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& rc, const std::string& checkpoint,
                 const std::string& manifest, const std::string& task_name,
                 const std::string& out_path) {
  const std::string vocab_path = require_key(rc, "tokenizer.path");
  auto vocab = BbpeVocab::load(vocab_path);
  auto lc = open_checkpoint(checkpoint);
  if (!lc.finetuned) throw ConfigError("evaluate needs a fine-tuned checkpoint");
  if (!task_name.empty() && TaskSpec::parse_kind(task_name) != lc.task.kind)
    throw ConfigError("checkpoint was fine-tuned for task '" +
                      lc.table.config_value("task.name") + "', not '" + task_name + "'");

  const uint64_t seed = static_cast<uint64_t>(rc.integer("seed"));
  CtalModel<float> model(lc.cfg, seed, false);
  add_finetune_params(model.params(), lc.cfg, lc.task.output_dim(), seed);
  load_params_from_table(model.params(), lc.table);

  long skipped = 0;
  auto eval = load_examples(read_manifest(manifest, true, &skipped), vocab,
                            resolve_frontend(rc), rc.str("data.feature_dir"),
                            static_cast<int>(rc.integer("threads")), &skipped);
  auto result = evaluate_task(model, lc.task, eval, static_cast<int>(rc.integer("threads")));

  nlohmann::json report;
  for (auto& [k, v] : result.metrics) report[k] = v;
  std::cout << report.dump(2) << "\n";
  if (!out_path.empty()) {
    const auto parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream(out_path) << report.dump(2) << "\n";
    if (!result.prediction_rows.empty()) {
      std::ofstream preds(fs::path(out_path).replace_extension(".preds.csv"));
      preds << "example_id,prediction,gold\n";
      for (const auto& row : result.prediction_rows) preds << row << "\n";
    }
  }
  return 0;
}

int cmd_embed(const RunConfig& rc, const std::string& checkpoint, const std::string& manifest,
              const std::string& out) {
  const std::string vocab_path = require_key(rc, "tokenizer.path");
  auto vocab = BbpeVocab::load(vocab_path);
  auto lc = open_checkpoint(checkpoint);
  const uint64_t seed = static_cast<uint64_t>(rc.integer("seed"));

  CtalModel<float> model(lc.cfg, seed, false);
  const int out_dim = lc.finetuned ? lc.task.output_dim() : 2;
  add_finetune_params(model.params(), lc.cfg, out_dim, seed);
  // pre-train checkpoints carry no pooling/task tensors; those stay at their
  // seeded initialization
  load_params_from_table(model.params(), lc.table, finetune_fresh_prefixes());

  long skipped = 0;
  auto examples = load_examples(read_manifest(manifest, false, &skipped), vocab,
                                resolve_frontend(rc), rc.str("data.feature_dir"),
                                static_cast<int>(rc.integer("threads")), &skipped);

  TensorTable table;
  table.config = {{"kind", "embeddings"},
                  {"dim", std::to_string(2 * lc.cfg.hidden)},
                  {"checkpoint", checkpoint}};
  table.tensors.resize(examples.size());
  parallel_items(static_cast<int>(examples.size()), static_cast<int>(rc.integer("threads")),
                 [&](int i, int) {
                   auto e = extract_identity_embedding(model, examples[i]);
                   NamedTensor t;
                   char name[24];
                   std::snprintf(name, sizeof(name), "ex%06d", i);
                   t.name = name;
                   t.dims = {static_cast<uint32_t>(e.size())};
                   t.data.assign(e.data(), e.data() + e.size());
                   table.tensors[i] = std::move(t);
                 });
  write_tensor_table(out, table);
  std::cout << "wrote " << examples.size() << " embeddings -> " << out << "\n";
  return 0;
}

int cmd_synth(const std::string& kind, int n, const std::string& out, uint64_t seed,
              int speakers, int first_index) {
  SynthConfig cfg;
  cfg.kind = parse_synth_kind(kind);
  cfg.n = n;
  cfg.seed = seed;
  cfg.num_speakers = speakers;
  cfg.first_index = first_index;
  auto entries = write_synth_corpus(cfg, out);
  std::cout << "wrote " << entries.size() << " " << kind << " examples -> " << out
            << "/manifest.tsv\n";
  return 0;
}

int cmd_inspect(const std::string& checkpoint, const std::string& preset, bool as_json) {
  std::vector<std::pair<std::string, std::vector<Index>>> shapes;
  std::string title;
  if (!checkpoint.empty()) {
    auto table = read_tensor_table(checkpoint);
    for (const auto& t : table.tensors)
      shapes.push_back({t.name, std::vector<Index>(t.dims.begin(), t.dims.end())});
    title = checkpoint;
  } else {
    shapes = ctal_param_shapes(ModelConfig::preset(preset), true);
    title = "preset:" + preset;
  }

  std::vector<std::pair<std::string, long>> groups;
  long total = 0;
  for (const auto& [name, dims] : shapes) {
    long n = 1;
    for (Index d : dims) n *= d;
    total += n;
    const std::string group = param_group(name);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == group; });
    if (it == groups.end())
      groups.push_back({group, n});
    else
      it->second += n;
  }

  if (as_json) {
    nlohmann::json j;
    j["source"] = title;
    j["total"] = total;
    for (auto& [g, n] : groups) j["groups"][g] = n;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "parameters of " << title << "\n";
  for (const auto& [name, dims] : shapes) {
    long n = 1;
    for (Index d : dims) n *= d;
    std::cout << "  " << name << "  " << shape_str(dims) << "  " << n << "\n";
  }
  std::cout << "per-module totals:\n";
  for (auto& [g, n] : groups) std::cout << "  " << g << "  " << n << "\n";
  std::cout << "total " << total << "\n";
  return 0;
}

int cmd_config_keys() {
  for (const auto& k : RunConfig::registry())
    std::cout << k.name
              << " (default: " << (k.default_value.empty() ? "<empty>" : k.default_value)
              << ")\n    " << k.doc << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-modal audio-and-language transformer toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  long seed_flag = -1, threads_flag = 0;
  app.add_option("--config", config_path, "run configuration file (key=value lines)");
  app.add_option("--set", overrides, "override a config key, e.g. --set pretrain.steps=100");
  app.add_option("--seed", seed_flag, "override the global seed");
  app.add_option("--threads", threads_flag, "override the worker count");

  auto* tok = app.add_subcommand("train-tokenizer", "train a byte-level BPE vocabulary");
  std::string tok_corpus, tok_manifest, tok_out = "vocab.txt";
  int tok_size = 1000;
  tok->add_option("--corpus", tok_corpus, "text file, one sentence per line");
  tok->add_option("--manifest", tok_manifest, "use the transcripts of a manifest");
  tok->add_option("--vocab-size", tok_size, "total vocabulary size including bytes/specials");
  tok->add_option("--out", tok_out, "output vocab file");

  auto* feat = app.add_subcommand("extract-features", "write .feat caches for a manifest");
  std::string feat_manifest, feat_out = "features";
  feat->add_option("--manifest", feat_manifest)->required();
  feat->add_option("--out-dir", feat_out);

  auto* pre = app.add_subcommand("pretrain", "run the masked pre-training loop");

  auto* fin = app.add_subcommand("finetune", "fine-tune from a checkpoint");
  std::string fin_ckpt;
  fin->add_option("--checkpoint", fin_ckpt)->required();

  auto* eva = app.add_subcommand("evaluate", "evaluate a fine-tuned checkpoint");
  std::string eva_ckpt, eva_manifest, eva_task, eva_out;
  eva->add_option("--checkpoint", eva_ckpt)->required();
  eva->add_option("--manifest", eva_manifest)->required();
  eva->add_option("--task", eva_task, "sanity check against the checkpoint's task");
  eva->add_option("--out", eva_out, "metrics JSON path (predictions CSV beside it)");

  auto* emb = app.add_subcommand("embed", "export fused identity embeddings");
  std::string emb_ckpt, emb_manifest, emb_out = "embeddings.ckpt";
  emb->add_option("--checkpoint", emb_ckpt)->required();
  emb->add_option("--manifest", emb_manifest)->required();
  emb->add_option("--out", emb_out);

  auto* syn = app.add_subcommand("synth", "generate a synthetic paired corpus");
  std::string syn_kind = "pairs", syn_out = "synth";
  int syn_n = 32, syn_speakers = 8, syn_first = 0;
  uint64_t syn_seed = 42;
  syn->add_option("--kind", syn_kind, "pairs|emotion|sentiment|speaker");
  syn->add_option("--n", syn_n);
  syn->add_option("--out", syn_out);
  syn->add_option("--synth-seed", syn_seed, "corpus seed (voices derive from it)");
  syn->add_option("--speakers", syn_speakers);
  syn->add_option("--first-index", syn_first, "start index; reuse the seed for iid splits");

  auto* ins = app.add_subcommand("inspect", "parameter table and per-module counts");
  std::string ins_ckpt, ins_preset = "base";
  bool ins_json = false;
  ins->add_option("--checkpoint", ins_ckpt);
  ins->add_option("--preset", ins_preset, "base|large|tiny (used when no checkpoint)");
  ins->add_flag("--json", ins_json);

  auto* cfgkeys = app.add_subcommand("config-keys", "list config keys, defaults and docs");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig rc = make_config(config_path, overrides, seed_flag, threads_flag);
    if (tok->parsed()) return cmd_train_tokenizer(tok_corpus, tok_manifest, tok_size, tok_out);
    if (feat->parsed()) return cmd_extract_features(feat_manifest, feat_out, rc);
    if (pre->parsed()) return cmd_pretrain(rc);
    if (fin->parsed()) return cmd_finetune(rc, fin_ckpt);
    if (eva->parsed()) return cmd_evaluate(rc, eva_ckpt, eva_manifest, eva_task, eva_out);
    if (emb->parsed()) return cmd_embed(rc, emb_ckpt, emb_manifest, emb_out);
    if (syn->parsed())
      return cmd_synth(syn_kind, syn_n, syn_out, syn_seed, syn_speakers, syn_first);
    if (ins->parsed()) return cmd_inspect(ins_ckpt, ins_preset, ins_json);
    if (cfgkeys->parsed()) return cmd_config_keys();
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const MetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

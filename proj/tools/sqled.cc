#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "sqled/error.h"
#include "sqled/exec_eval.h"
#include "sqled/features.h"
#include "sqled/metrics.h"
#include "sqled/pipeline.h"
#include "sqled/question.h"
#include "sqled/sql.h"
#include "sqled/sql_rewrite.h"
#include "sqled/synth.h"
#include "sqled/tasks.h"
#include "sqled/trainer.h"

namespace fs = std::filesystem;
using namespace sqled;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * x);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

std::vector<ScoreMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<ScoreMethod> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

// Model scores when a score file is given; other methods come from the beams.
std::vector<std::pair<std::string, BeamScores>> gather_scores(const std::vector<BeamRecord>& beams,
                                                              const std::vector<ScoreMethod>& methods,
                                                              const std::string& score_file) {
  std::vector<std::pair<std::string, BeamScores>> out;
  BeamScores model;
  if (!score_file.empty()) model = read_scores(score_file, beams);
  for (ScoreMethod m : methods) {
    if (m == ScoreMethod::kModel && score_file.empty()) throw ConfigError("method 'model' needs --scores");
    out.emplace_back(std::string(method_name(m)), method_scores(beams, m, &model));
  }
  return out;
}

// Model and training options shared by train, ablation and grad-check.
struct ModelOptions {
  int hidden_dim = 256;
  int heads = 4;
  int layers = 3;
  int ffn_hidden = 0;
  double dropout = 0.1;
  double init_scale = 0.02;
  bool share_encoders = false;
  std::uint64_t model_seed = 0;
  bool simplify = true;
  bool prune_joins = true;
  bool add_reverse = true;

  void add(CLI::App* app) {
    app->add_option("--hidden-dim", hidden_dim, "Node representation width")->capture_default_str();
    app->add_option("--heads", heads, "Attention heads")->capture_default_str();
    app->add_option("--layers", layers, "Attention layers (other than 3 enables the layer ablation)")
        ->capture_default_str();
    app->add_option("--ffn-hidden", ffn_hidden, "FFN hidden width, 0 = hidden-dim")->capture_default_str();
    app->add_option("--dropout", dropout, "Dropout on the pooled representation")->capture_default_str();
    app->add_option("--init-scale", init_scale, "Std of embedding rows at initialization")->capture_default_str();
    app->add_flag("--share-encoders,!--separate-encoders", share_encoders, "One encoder for question and SQL");
    app->add_option("--model-seed", model_seed, "Initialization seed")->capture_default_str();
    app->add_flag("--simplify,!--no-simplify", simplify, "Simplify parse trees")->capture_default_str();
    app->add_flag("--prune-joins,!--no-prune-joins", prune_joins, "Drop JOIN ON constraints from SQL graphs")
        ->capture_default_str();
    app->add_flag("--reverse-edges,!--no-reverse-edges", add_reverse, "Pass messages both ways along edges")
        ->capture_default_str();
  }

  FeatureOptions features() const { return {simplify, prune_joins, add_reverse}; }

  ModelConfig config(int token_vocab, int label_vocab, int external_dim) const {
    ModelConfig c;
    c.hidden_dim = hidden_dim;
    c.attention_heads = heads;
    c.gat_layers = layers;
    c.layer_ablation = layers != 3;
    c.ffn_hidden = ffn_hidden;
    c.dropout_rate = dropout;
    c.init_scale = init_scale;
    c.share_encoders = share_encoders;
    c.seed = model_seed;
    c.token_vocab = token_vocab;
    c.label_vocab = label_vocab;
    c.external_dim = external_dim;
    return c;
  }
};

struct TrainOptions {
  TrainConfig config;

  void add(CLI::App* app) {
    app->add_option("--batch-beams", config.batch_beams, "Beams per optimization step")->capture_default_str();
    app->add_option("--epochs", config.epochs)->capture_default_str();
    app->add_option("--lr", config.learning_rate, "Peak learning rate")->capture_default_str();
    app->add_option("--warmup", config.warmup_fraction, "Warmup fraction of all steps")->capture_default_str();
    app->add_option("--weight-decay", config.weight_decay)->capture_default_str();
    app->add_option("--train-seed", config.seed, "Shuffling and dropout seed")->capture_default_str();
  }
};

struct Trained {
  Model model;
  TrainResult result;
};

Trained train_model(const std::vector<BeamRecord>& train_beams, const std::vector<BeamRecord>& dev_beams,
                    const AnnotationMap& annotations, const EmbeddingTable* embeddings, const ModelOptions& mo,
                    const TrainConfig& tc, std::ostream* log) {
  Trained t;
  const FeatureOptions fo = mo.features();
  std::tie(t.model.tokens, t.model.labels) = build_vocabularies(train_beams, annotations, fo);
  t.model.simplify_graphs = fo.simplify_graphs;
  t.model.prune_joins = fo.prune_joins;
  t.model.add_reverse = fo.add_reverse;
  int external = 0;
  if (embeddings && !embeddings->empty()) {
    const int dim = static_cast<int>(embeddings->begin()->second.subwords.cols());
    external = dim == mo.hidden_dim ? 0 : dim;
  }
  t.model.params = init_parameters(mo.config(t.model.tokens.size(), t.model.labels.size(), external));
  const auto train_set = make_examples(train_beams, annotations, t.model, embeddings);
  const auto dev_set = make_examples(dev_beams, annotations, t.model, embeddings);
  t.result = train(train_set, dev_set, t.model.params, tc, log);
  t.model.params = t.result.best;
  return t;
}

std::optional<EmbeddingTable> maybe_embeddings(const std::string& path) {
  if (path.empty()) return std::nullopt;
  require_file(path, "embedding file");
  return read_embeddings(path);
}

int run(int argc, char** argv) {
  CLI::App app{"Error detection for text-to-SQL parsers"};
  app.set_config("--config", "", "Key-value configuration file; command line flags take precedence")
      ->check(CLI::ExistingFile);
  app.require_subcommand(1);
  int workers = 1;
  std::string db_root;
  app.add_option("--workers", workers, "Worker threads for labeling and scoring")->capture_default_str();
  app.add_option("--db-root", db_root, "Directory holding <db_id>/<db_id>.sqlite")->envname("SQLED_DB_ROOT");

  // label
  auto* label = app.add_subcommand("label", "Execution-based labels for every beam prediction");
  std::string label_in, label_out, label_cache;
  bool naive = false;
  std::size_t cap = 5;
  label->add_option("--beams", label_in, "Input beam file (JSON lines)")->required();
  label->add_option("--out", label_out, "Labeled beam file")->required();
  label->add_option("--cap", cap, "Beam size after deduplication")->capture_default_str();
  label->add_option("--cache", label_cache, "Persistent label cache file");
  label->add_flag("--naive", naive, "Label without the evaluation fixes");

  // split
  auto* split = app.add_subcommand("split", "Database-level partitions");
  std::string split_in, split_dir, split_mode = "train-dev";
  std::uint64_t split_seed = 0;
  double dev_fraction = 0.2;
  split->add_option("--beams", split_in)->required();
  split->add_option("--out-dir", split_dir)->required();
  split->add_option("--mode", split_mode, "train-dev or halves")->check(CLI::IsMember({"train-dev", "halves"}))
      ->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("--dev-fraction", dev_fraction)->capture_default_str();

  // stats
  auto* stats = app.add_subcommand("stats", "Hits and misses per split");
  std::vector<std::string> stats_inputs;
  bool stats_all = false;
  stats->add_option("--input", stats_inputs, "name=path of a labeled beam file")->required();
  stats->add_flag("--keep-unexecutable", stats_all, "Count beams whose top prediction fails to execute");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the error detector");
  std::string train_beams, in_domain_beams, dev_beams, annotations_path, embeddings_path, checkpoint, train_log;
  std::string error_source = "cross-domain";
  std::uint64_t train_split_seed = 0;
  ModelOptions model_opts;
  TrainOptions train_opts;
  train_cmd->add_option("--beams", train_beams, "Labeled training beams collected across domains");
  train_cmd->add_option("--in-domain-beams", in_domain_beams, "Labeled training beams collected in domain");
  train_cmd->add_option("--error-source", error_source, "Which training beams to use")
      ->check(CLI::IsMember({"cross-domain", "in-domain"}))
      ->capture_default_str();
  train_cmd->add_option("--dev-beams", dev_beams, "Development beams; default is a database split of the training beams");
  train_cmd->add_option("--split-seed", train_split_seed)->capture_default_str();
  train_cmd->add_option("--annotations", annotations_path)->required();
  train_cmd->add_option("--embeddings", embeddings_path, "External leaf vectors");
  train_cmd->add_option("--checkpoint", checkpoint)->required();
  train_cmd->add_option("--log", train_log, "CSV training log");
  model_opts.add(train_cmd);
  train_opts.add(train_cmd);

  // score
  auto* score_cmd = app.add_subcommand("score", "Score every prediction with a checkpoint");
  std::string score_in, score_out;
  score_cmd->add_option("--checkpoint", checkpoint)->required();
  score_cmd->add_option("--beams", score_in)->required();
  score_cmd->add_option("--annotations", annotations_path)->required();
  score_cmd->add_option("--embeddings", embeddings_path);
  score_cmd->add_option("--out", score_out, "Score CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Error detection metrics with cross-validated thresholds");
  std::string eval_beams, eval_scores, eval_json;
  std::vector<std::string> methods = {"confidence", "dropout", "model"};
  int folds = 5;
  std::uint64_t fold_seed = 0;
  eval->add_option("--beams", eval_beams)->required();
  eval->add_option("--scores", eval_scores, "Model score CSV");
  eval->add_option("--methods", methods)->delimiter(',')->capture_default_str();
  eval->add_option("--folds", folds)->capture_default_str();
  eval->add_option("--seed", fold_seed)->capture_default_str();
  eval->add_option("--json", eval_json, "Machine-readable report");

  // rerank
  auto* rerank = app.add_subcommand("rerank", "Re-rank beams with detector scores");
  std::string rerank_beams, rerank_scores, rerank_out;
  double rerank_threshold = 0.5;
  rerank->add_option("--beams", rerank_beams)->required();
  rerank->add_option("--scores", rerank_scores)->required();
  rerank->add_option("--threshold", rerank_threshold, "Error threshold for ED+RR")->capture_default_str();
  rerank->add_option("--out", rerank_out, "Beams after ED+RR");

  // trigger
  auto* trigger = app.add_subcommand("trigger", "Answer and interaction triggering curves");
  std::string trigger_beams, trigger_scores, trigger_dir, trigger_mode = "answer";
  double target = 0.95;
  std::vector<std::string> trigger_methods = {"confidence", "dropout", "model"};
  trigger->add_option("--mode", trigger_mode)->check(CLI::IsMember({"answer", "interaction"}))->capture_default_str();
  trigger->add_option("--beams", trigger_beams)->required();
  trigger->add_option("--scores", trigger_scores);
  trigger->add_option("--methods", trigger_methods)->delimiter(',')->capture_default_str();
  trigger->add_option("--target", target, "Precision or accuracy target")->capture_default_str();
  trigger->add_option("--out-dir", trigger_dir)->required();

  // ablation
  auto* ablation = app.add_subcommand("ablation", "Graph simplification x error source");
  std::string ablation_test;
  ablation->add_option("--beams", train_beams, "Labeled training beams collected across domains")->required();
  ablation->add_option("--in-domain-beams", in_domain_beams)->required();
  ablation->add_option("--test-beams", ablation_test)->required();
  ablation->add_option("--annotations", annotations_path)->required();
  ablation->add_option("--split-seed", train_split_seed)->capture_default_str();
  ablation->add_option("--folds", folds)->capture_default_str();
  model_opts.add(ablation);
  train_opts.add(ablation);

  // parse-sql
  auto* parse_cmd = app.add_subcommand("parse-sql", "Tokens, tree and graph of SQL queries");
  std::vector<std::string> queries;
  bool show_graph = false;
  parse_cmd->add_option("sql", queries, "Queries; read from stdin when absent");
  parse_cmd->add_flag("--graph", show_graph, "Also print the simplified graph");

  // grad-check
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference check of the backward pass");
  std::string grad_beams;
  int grad_pairs = 3;
  double grad_eps = 1e-4, grad_tol = 1e-4;
  grad_cmd->add_option("--beams", grad_beams)->required();
  grad_cmd->add_option("--annotations", annotations_path)->required();
  grad_cmd->add_option("--pairs", grad_pairs)->capture_default_str();
  grad_cmd->add_option("--eps", grad_eps)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_tol)->capture_default_str();
  ModelOptions grad_model;
  grad_model.hidden_dim = 8;
  grad_model.heads = 2;
  grad_model.dropout = 0.0;
  grad_model.init_scale = 0.5;
  grad_model.add(grad_cmd);

  // convert-annotations
  auto* convert = app.add_subcommand("convert-annotations", "CoNLL-U plus bracketed trees to annotation records");
  std::string conllu, trees, convert_out;
  convert->add_option("--conllu", conllu)->required()->check(CLI::ExistingFile);
  convert->add_option("--trees", trees)->required()->check(CLI::ExistingFile);
  convert->add_option("--out", convert_out)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  SynthConfig synth_cfg;
  std::string synth_dir;
  synth->add_option("--out-dir", synth_dir)->required();
  synth->add_option("--databases", synth_cfg.databases)->capture_default_str();
  synth->add_option("--pairs", synth_cfg.pairs)->capture_default_str();
  synth->add_option("--beam-size", synth_cfg.beam_size)->capture_default_str();
  synth->add_option("--top1-rate", synth_cfg.top1_correct_rate)->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  double in_domain_rate = 0.0;
  synth->add_option("--in-domain-top1-rate", in_domain_rate,
                    "Also write in_domain_beams.jsonl over the same databases with this top-1 rate");

  // init-dbs
  auto* init_dbs = app.add_subcommand("init-dbs", "Build SQLite files from <db>/<db>.sql scripts");
  std::string scripts_dir;
  init_dbs->add_option("--scripts", scripts_dir, "Directory of scripts, default is the db root itself");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto need_db_root = [&] {
    if (db_root.empty()) throw ConfigError("--db-root or SQLED_DB_ROOT is required");
    if (!fs::is_directory(db_root)) throw ConfigError("database root not found: " + db_root);
  };
  auto read_annotation_file = [&] {
    require_file(annotations_path, "annotation file");
    return read_annotations(fs::path(annotations_path));
  };
  auto load = [](const std::string& path) {
    require_file(path, "beam file");
    return load_beams(fs::path(path));
  };

  if (*label) {
    need_db_root();
    std::vector<BeamRecord> beams;
    for (const auto& b : load(label_in)) beams.push_back(dedup_and_cap(b, cap));
    std::optional<LabelCache> cache;
    if (!label_cache.empty()) cache.emplace(label_cache);
    const Stopwatch clock;
    label_beams(beams, db_root, naive ? PipelineOptions::naive() : PipelineOptions{}, workers,
                cache ? &*cache : nullptr);
    if (cache) cache->save();
    write_beams(fs::path(label_out), beams);
    std::size_t predictions = 0, correct = 0, unexecutable = 0;
    for (const auto& b : beams) {
      for (const auto& p : b.predictions) {
        ++predictions;
        correct += p.label->correct() ? 1 : 0;
        unexecutable += p.label->verdict == Verdict::kUnexecutable ? 1 : 0;
      }
    }
    std::cout << "beams " << beams.size() << ", predictions " << predictions << ", correct " << correct
              << ", unexecutable " << unexecutable << "\n";
    const ParserEvaluation ev = evaluate_parser(beams, db_root);
    std::cout << "top-1 execution accuracy: fixed " << percent(ev.accuracy) << ", naive "
              << percent(ev.naive_accuracy) << ", disagreements " << ev.disagreement << "\n";
    std::cerr << "labeled in " << clock.seconds() << " s\n";
    return 0;
  }

  if (*split) {
    const auto beams = load(split_in);
    const SplitSpec spec = split_mode == "halves" ? cross_domain_halves(distinct_db_ids(beams), split_seed)
                                                  : train_dev_split(beams, split_seed, dev_fraction);
    const std::vector<std::string> parts =
        split_mode == "halves" ? std::vector<std::string>{"A", "B"} : std::vector<std::string>{"train", "dev"};
    fs::create_directories(split_dir);
    for (const auto& part : parts) {
      write_manifest(fs::path(split_dir) / (part + ".txt"), spec.members(part));
      const auto selected = select_partition(beams, spec, part);
      write_beams(fs::path(split_dir) / (part + ".jsonl"), selected);
      std::cout << part << ": " << spec.members(part).size() << " databases, " << selected.size() << " beams\n";
    }
    return 0;
  }

  if (*stats) {
    std::vector<std::pair<std::string, CorpusStats>> rows;
    for (const auto& spec : stats_inputs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--input expects name=path, got " + spec);
      auto beams = load(spec.substr(eq + 1));
      if (!stats_all) beams = filter_executable(beams);
      rows.emplace_back(spec.substr(0, eq), corpus_stats(beams));
    }
    std::cout << format_stats_table(rows);
    return 0;
  }

  if (*train_cmd) {
    const std::string source = error_source == "in-domain" ? in_domain_beams : train_beams;
    if (source.empty()) throw ConfigError("no training beams for error source " + error_source);
    auto beams = load(source);
    std::vector<BeamRecord> train_part, dev_part;
    if (!dev_beams.empty()) {
      train_part = beams;
      dev_part = load(dev_beams);
    } else {
      const SplitSpec spec = train_dev_split(beams, train_split_seed);
      train_part = select_partition(beams, spec, "train");
      dev_part = select_partition(beams, spec, "dev");
    }
    const AnnotationMap annotations = read_annotation_file();
    const auto embeddings = maybe_embeddings(embeddings_path);
    std::ofstream log_file;
    if (!train_log.empty()) {
      log_file.open(train_log);
      if (!log_file) throw ConfigError("cannot write " + train_log);
    }
    const Stopwatch clock;
    const Trained t = train_model(train_part, dev_part, annotations, embeddings ? &*embeddings : nullptr, model_opts,
                                  train_opts.config, log_file.is_open() ? &log_file : nullptr);
    save_model(checkpoint, t.model);
    std::cout << "trained " << t.result.total_steps << " steps over " << train_part.size() << " beams; best epoch "
              << t.result.best_epoch << ", dev accuracy " << percent(t.result.best_dev_accuracy) << "\n";
    std::cerr << "trained in " << clock.seconds() << " s\n";
    return 0;
  }

  if (*score_cmd) {
    require_file(checkpoint, "checkpoint");
    const Model model = load_model(checkpoint);
    const auto beams = load(score_in);
    const auto embeddings = maybe_embeddings(embeddings_path);
    const BeamScores scores =
        score_predictions(model, beams, read_annotation_file(), embeddings ? &*embeddings : nullptr, workers);
    write_scores(score_out, beams, scores);
    std::size_t rows = 0;
    for (const auto& s : scores) rows += s.size();
    std::cout << "scored " << rows << " predictions\n";
    return 0;
  }

  if (*eval) {
    const auto beams = filter_executable(load(eval_beams));
    std::vector<std::pair<std::string, MetricsReport>> table;
    std::vector<std::pair<std::string, KFoldReport>> reports;
    for (const auto& [name, scores] : gather_scores(beams, parse_methods(methods), eval_scores)) {
      KFoldReport r = kfold_eval(top1_examples(beams, scores), folds, fold_seed);
      table.emplace_back(name, r.mean);
      reports.emplace_back(name, std::move(r));
    }
    std::cout << format_metrics_table(table);
    if (!eval_json.empty()) std::ofstream(eval_json) << metrics_to_json(reports) << "\n";
    return 0;
  }

  if (*rerank) {
    const auto beams = filter_executable(load(rerank_beams));
    const BeamScores scores = read_scores(rerank_scores, beams);
    std::vector<BeamRecord> rr, ed;
    std::size_t touched = 0;
    for (std::size_t i = 0; i < beams.size(); ++i) {
      rr.push_back(rerank_all(beams[i], scores[i]));
      ed.push_back(ed_then_rerank(beams[i], scores[i], rerank_threshold));
      touched += scores[i][0] < rerank_threshold ? 1 : 0;
    }
    std::cout << pad("Method", 12) << " | Top-1\n";
    std::cout << pad("Parser", 12) << " | " << percent(top1_accuracy(beams)) << "\n";
    std::cout << pad("RR", 12) << " | " << percent(top1_accuracy(rr)) << "\n";
    std::cout << pad("ED+RR", 12) << " | " << percent(top1_accuracy(ed)) << "\n";
    std::cout << pad("Beam hit", 12) << " | " << percent(beam_hit_rate(beams)) << "\n";
    std::cout << "ED+RR re-ranked " << touched << " of " << beams.size() << " beams\n";
    if (!rerank_out.empty()) write_beams(fs::path(rerank_out), ed);
    return 0;
  }

  if (*trigger) {
    const auto beams = filter_executable(load(trigger_beams));
    std::vector<Curve> curves;
    const bool answer = trigger_mode == "answer";
    std::cout << pad("Method", 12) << " | " << (answer ? "Questions at precision " : "Interactions for accuracy ")
              << percent(target) << "\n";
    for (const auto& [name, scores] : gather_scores(beams, parse_methods(trigger_methods), trigger_scores)) {
      const auto top1 = top1_examples(beams, scores);
      curves.push_back(answer ? answer_curve(top1, name) : interaction_curve(top1, name));
      const int x = answer ? questions_at_precision(curves.back(), target)
                           : interactions_for_accuracy(curves.back(), target);
      std::cout << pad(name, 12) << " | " << x << " of " << top1.size() << "\n";
    }
    fs::create_directories(trigger_dir);
    const fs::path dir(trigger_dir);
    std::ofstream csv(dir / (trigger_mode + "_curves.csv"));
    write_curves_csv(csv, curves);
    std::ofstream(dir / (trigger_mode + "_curves.svg"))
        << (answer ? render_svg(curves, "Answer triggering", "questions answered", "precision")
                   : render_svg(curves, "Interaction triggering", "interactions", "accuracy"));
    return 0;
  }

  if (*ablation) {
    const AnnotationMap annotations = read_annotation_file();
    const auto test = filter_executable(load(ablation_test));
    std::vector<std::pair<std::string, MetricsReport>> table;
    for (const bool simplified : {true, false}) {
      for (const std::string source : {"cross-domain", "in-domain"}) {
        const auto beams = load(source == "in-domain" ? in_domain_beams : train_beams);
        const SplitSpec spec = train_dev_split(beams, train_split_seed);
        ModelOptions mo = model_opts;
        mo.simplify = simplified;
        const Trained t = train_model(select_partition(beams, spec, "train"), select_partition(beams, spec, "dev"),
                                      annotations, nullptr, mo, train_opts.config, nullptr);
        const BeamScores scores = score_predictions(t.model, test, annotations, nullptr, workers);
        const KFoldReport r = kfold_eval(top1_examples(test, scores), folds, 0);
        table.emplace_back(std::string(simplified ? "Simplified" : "Original") + " / " + source, r.mean);
      }
    }
    std::cout << format_metrics_table(table);
    return 0;
  }

  if (*parse_cmd) {
    if (queries.empty()) {
      for (std::string line; std::getline(std::cin, line);) {
        if (!line.empty()) queries.push_back(line);
      }
    }
    for (const auto& q : queries) {
      std::cout << "sql:    " << q << "\n";
      std::cout << "tokens:";
      for (const auto& t : tokenize(q)) std::cout << " [" << token_kind_name(t.kind) << " " << t.text << "]";
      std::cout << "\n";
      const SqlAst ast = parse_sql(q);
      std::cout << "tree:   " << to_sexpr(ast) << "\n";
      std::cout << "render: " << render(ast) << "\n";
      if (show_graph) std::cout << to_text(ast_to_graph(ast));
    }
    return 0;
  }

  if (*grad_cmd) {
    const auto beams = load(grad_beams);
    const AnnotationMap annotations = read_annotation_file();
    Model model;
    const FeatureOptions fo = grad_model.features();
    std::tie(model.tokens, model.labels) = build_vocabularies(beams, annotations, fo);
    model.simplify_graphs = fo.simplify_graphs;
    model.prune_joins = fo.prune_joins;
    model.add_reverse = fo.add_reverse;
    model.params = init_parameters(grad_model.config(model.tokens.size(), model.labels.size(), 0));
    std::mt19937_64 rng(grad_model.model_seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    for (auto& [name, m] : model.params.tensors()) {
      if (name == "ffn.w2" || name.ends_with("edge_bias")) {
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
      }
    }
    double worst = 0.0;
    int done = 0;
    for (const auto& b : beams) {
      if (done >= grad_pairs) break;
      const auto it = annotations.find(b.question_id);
      if (it == annotations.end() || b.predictions.empty()) continue;
      const PairInput in = make_pair_input(it->second, b.predictions[0].sql, model);
      const GradCheckResult r = grad_check(in, done % 2, model.params, grad_eps);
      std::cout << b.question_id << ": max relative error " << r.max_relative_error << " (" << r.worst_tensor
                << "), checked " << r.checked << ", skipped at kinks " << r.skipped_kinks << "\n";
      worst = std::max(worst, r.max_relative_error);
      ++done;
    }
    if (done == 0) throw DataError("no annotated beams to check");
    if (worst > grad_tol) throw NumericalError("gradient check failed: " + std::to_string(worst));
    return 0;
  }

  if (*convert) {
    std::ifstream c(conllu), t(trees);
    write_annotations(fs::path(convert_out), convert_conllu(c, t));
    return 0;
  }

  if (*synth) {
    const fs::path dir(synth_dir);
    const SynthCorpus corpus = generate_synthetic_corpus(dir / "databases", synth_cfg);
    write_beams(dir / "beams.jsonl", corpus.beams);
    AnnotationMap annotations = corpus.annotations;
    if (in_domain_rate > 0) {
      SynthConfig c = synth_cfg;
      c.top1_correct_rate = in_domain_rate;
      c.question_prefix = "indomain";
      const SynthCorpus in_domain = generate_synthetic_corpus(dir / "databases", c);
      write_beams(dir / "in_domain_beams.jsonl", in_domain.beams);
      annotations.insert(in_domain.annotations.begin(), in_domain.annotations.end());
    }
    write_annotations(dir / "annotations.tsv", annotations);
    std::size_t pairs = 0;
    for (const auto& b : corpus.beams) pairs += b.predictions.size();
    std::cout << corpus.db_ids.size() << " databases, " << corpus.beams.size() << " beams, " << pairs
              << " predictions\n";
    return 0;
  }

  if (*init_dbs) {
    need_db_root();
    if (!scripts_dir.empty()) {
      for (const auto& entry : fs::directory_iterator(scripts_dir)) {
        if (!entry.is_directory()) continue;
        const std::string db = entry.path().filename().string();
        const fs::path script = entry.path() / (db + ".sql");
        if (!fs::exists(script)) continue;
        fs::create_directories(fs::path(db_root) / db);
        fs::copy_file(script, fs::path(db_root) / db / (db + ".sql"), fs::copy_options::overwrite_existing);
      }
    }
    std::cout << "built " << init_databases(db_root) << " databases\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.family());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorFamily::kData);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorFamily::kConfig);
  }
}

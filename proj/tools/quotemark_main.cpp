// quotemark: quotation attribution pipeline for annotated novels.
//
// Subcommands: ingest, characters, quotes, mentions, attribute, train,
// evaluate, report. Every run writes a manifest (inputs, resolved config,
// content hashes) next to its primary output. Exit codes: 0 success,
// 1 validation error, 2 usage error.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "quotemark/attrib.hpp"
#include "quotemark/charid.hpp"
#include "quotemark/corpus.hpp"
#include "quotemark/errors.hpp"
#include "quotemark/metrics.hpp"
#include "quotemark/pipeline.hpp"
#include "quotemark/quotes.hpp"
#include "quotemark/seqmodel.hpp"
#include "quotemark/utf8.hpp"

namespace fs = std::filesystem;
using namespace quotemark;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  RunConfig config;

  void finalize() {
    if (!config_path.empty()) {
      RunConfig file_cfg = RunConfig::from_json(read_file(config_path));
      file_cfg.seed = config.seed;  // explicit --seed wins over the file
      config = file_cfg;
    }
    config.resolve_lexicon_paths();
  }
};

std::vector<std::string> list_novel_dirs(const std::string& root) {
  std::vector<std::string> dirs;
  if (fs::exists(fs::path(root) / "novel_text.txt")) {
    dirs.push_back(root);
    return dirs;
  }
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "novel_text.txt"))
      dirs.push_back(e.path().string());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw Error(ErrorKind::MissingFile, "no novel folders under " + root);
  return dirs;
}

std::vector<std::string> list_bundle_files(const std::string& root) {
  std::vector<std::string> files;
  if (!fs::is_directory(root)) {
    files.push_back(root);
    return files;
  }
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().string().find(".manifest.") == std::string::npos)
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw Error(ErrorKind::MissingFile, "no bundle JSON under " + root);
  return files;
}

// Non-explicit derived types get refined with the lexical classifier.
void refine_derived_types(NovelBundle& bundle, const Lexicon& lexicon) {
  for (auto& q : bundle.quotations) {
    if (q.quote_type != QuoteType::Implicit || q.referring_expression)
      continue;
    QuoteSpanCandidate cand;
    cand.span = q.span;
    int fp = paragraph_of(bundle.paragraph_index, q.span.start);
    int lp = paragraph_of(bundle.paragraph_index, q.span.end - 1);
    if (fp >= 0) cand.paragraph_ids.push_back(fp);
    if (lp >= 0 && lp != fp) cand.paragraph_ids.push_back(lp);
    q.quote_type = classify_quote_type(cand, bundle, std::nullopt, lexicon);
  }
}

int cmd_ingest(CommonArgs& common, const std::string& pdnc_dir,
               const std::string& out, bool refine_types) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  auto dirs = list_novel_dirs(pdnc_dir);
  bool out_is_dir = dirs.size() > 1 || fs::is_directory(out);
  std::vector<std::string> outputs;
  for (const auto& dir : dirs) {
    LoadResult loaded = load_pdnc_bundle(dir);
    for (const auto& w : loaded.warnings)
      std::cerr << "[ingest] " << loaded.bundle.novel_id << ": " << w << "\n";
    if (loaded.quote_types_derived) {
      std::cerr << "[ingest] " << loaded.bundle.novel_id
                << ": quote types derived (no annotation column)\n";
      if (refine_types) refine_derived_types(loaded.bundle, lexicon);
    }
    std::string path =
        out_is_dir
            ? (fs::path(out) / (loaded.bundle.novel_id + ".json")).string()
            : out;
    write_file_atomic(path, bundle_to_json(loaded.bundle) + "\n");
    outputs.push_back(path);
  }
  std::string manifest =
      out_is_dir ? (fs::path(out) / "ingest.manifest.json").string()
                 : out + ".manifest.json";
  std::vector<std::string> inputs;
  for (const auto& d : dirs) {
    inputs.push_back((fs::path(d) / "novel_text.txt").string());
    inputs.push_back((fs::path(d) / "character_info.csv").string());
    inputs.push_back((fs::path(d) / "quotation_info.csv").string());
  }
  write_manifest(manifest, "ingest", inputs, outputs, common.config);
  return 0;
}

int cmd_characters(CommonArgs& common, const std::string& corpus,
                   const std::string& out) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  NovelBundle bundle = load_bundle_file(corpus);
  auto candidates =
      extract_name_candidates(bundle, common.config.min_count, lexicon);
  std::vector<CharacterEntity> entities;
  if (!candidates.empty()) entities = cluster_aliases(candidates, lexicon);
  write_file_atomic(out, characters_to_json(entities) + "\n");
  write_manifest(out + ".manifest.json", "characters", {corpus}, {out},
                 common.config);
  return 0;
}

int cmd_quotes(CommonArgs& common, const std::string& corpus,
               const std::string& out) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  NovelBundle bundle = load_bundle_file(corpus);
  QuoteStyle style = resolve_quote_style(bundle, common.config.quote_style);
  QuoteExtraction ex = extract_quotations(bundle, style);
  for (const auto& w : ex.warnings)
    std::cerr << "[quotes] " << bundle.novel_id << ": " << w << "\n";
  std::ostringstream lines;
  for (const auto& c : ex.candidates) {
    if (c.nesting_depth > 0) continue;
    QuoteType t = classify_quote_type(c, bundle, std::nullopt, lexicon);
    ordered_json j;
    j["start"] = c.span.start;
    j["end"] = c.span.end;
    j["paragraphs"] = c.paragraph_ids;
    j["type"] = quote_type_name(t);
    lines << j.dump() << "\n";
  }
  write_file_atomic(out, lines.str());
  write_manifest(out + ".manifest.json", "quotes", {corpus}, {out},
                 common.config);
  return 0;
}

int cmd_mentions(CommonArgs& common, const std::string& corpus,
                 const std::string& coref, const std::string& out) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  NovelBundle bundle = load_bundle_file(corpus);
  MentionConfig mc;
  mc.use_inside_quote_spans = common.config.use_inside_quote_spans;
  std::optional<std::string> coref_path;
  if (!coref.empty()) coref_path = coref;
  CandidateInventory inv = build_inventory(bundle, lexicon, coref_path, mc);
  for (const auto& w : inv.warnings)
    std::cerr << "[mentions] " << bundle.novel_id << ": " << w << "\n";
  write_file_atomic(out, inventory_to_jsonl(inv));
  std::vector<std::string> inputs = {corpus};
  if (coref_path) inputs.push_back(*coref_path);
  write_manifest(out + ".manifest.json", "mentions", inputs, {out},
                 common.config);
  return 0;
}

int cmd_attribute(CommonArgs& common, const std::string& corpus,
                  const std::string& coref, const std::string& model_path,
                  const std::string& out) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  NovelBundle bundle = load_bundle_file(corpus);
  MentionConfig mc;
  mc.use_inside_quote_spans = common.config.use_inside_quote_spans;
  std::optional<std::string> coref_path;
  if (!coref.empty()) coref_path = coref;
  CandidateInventory inv = build_inventory(bundle, lexicon, coref_path, mc);

  std::vector<Attribution> attrs;
  if (common.config.method == "seq") {
    if (model_path.empty())
      throw Error(ErrorKind::UsageError, "--method seq requires --model");
    SeqModelParams params = model_from_json(read_file(model_path));
    attrs = predict_batch(params, bundle.quotations, inv);
  } else {
    attrs = run_rule_attribution(bundle, inv, lexicon, common.config.method,
                                 common.config.use_gold_referring);
  }
  write_file_atomic(out, attributions_to_jsonl(attrs));
  std::vector<std::string> inputs = {corpus};
  if (coref_path) inputs.push_back(*coref_path);
  if (!model_path.empty()) inputs.push_back(model_path);
  write_manifest(out + ".manifest.json", "attribute", inputs, {out},
                 common.config);
  return 0;
}

int cmd_train(CommonArgs& common, const std::string& corpus_dir,
              const std::string& coref_dir, const std::string& out_dir) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  auto files = list_bundle_files(corpus_dir);

  std::vector<NovelBundle> bundles;
  for (const auto& f : files) bundles.push_back(load_bundle_file(f));
  std::vector<CandidateInventory> inventories;
  MentionConfig mc;
  mc.use_inside_quote_spans = common.config.use_inside_quote_spans;
  for (const auto& b : bundles) {
    std::optional<std::string> coref_path;
    if (!coref_dir.empty()) {
      fs::path p = fs::path(coref_dir) / (b.novel_id + ".coref.jsonl");
      if (fs::exists(p)) coref_path = p.string();
    }
    inventories.push_back(build_inventory(b, lexicon, coref_path, mc));
  }
  std::vector<NovelData> novels;
  for (size_t i = 0; i < bundles.size(); ++i)
    novels.push_back({&bundles[i], &inventories[i]});

  SplitMode mode = common.config.split == "novels" ? SplitMode::Novels
                                                   : SplitMode::Quotations;
  CvResult cv = run_speaker_cv(novels, mode, common.config);

  std::vector<std::string> outputs;
  for (size_t k = 0; k < cv.fold_models.size(); ++k) {
    std::string mp =
        (fs::path(out_dir) / ("model_fold" + std::to_string(k) + ".json"))
            .string();
    std::string tp =
        (fs::path(out_dir) / ("loss_trace_fold" + std::to_string(k) + ".csv"))
            .string();
    write_file_atomic(mp, model_to_json(cv.fold_models[k].params) + "\n");
    write_file_atomic(tp, trace_to_csv(cv.fold_models[k].trace));
    outputs.push_back(mp);
    outputs.push_back(tp);
  }
  // Final model over all quotations, for `attribute --method seq`.
  std::vector<ContextEncoding> all;
  SeqModelConfig final_cfg = common.config.model;
  final_cfg.include_internal = common.config.include_internal;
  final_cfg.seed = common.config.seed;
  for (const auto& nd : novels)
    for (const auto& q : nd.bundle->quotations)
      all.push_back(encode_context(q, *nd.inventory, final_cfg));
  TrainResult final_model = train_model(all, final_cfg);
  std::string final_path = (fs::path(out_dir) / "model.json").string();
  std::string final_trace = (fs::path(out_dir) / "loss_trace.csv").string();
  write_file_atomic(final_path, model_to_json(final_model.params) + "\n");
  write_file_atomic(final_trace, trace_to_csv(final_model.trace));
  outputs.push_back(final_path);
  outputs.push_back(final_trace);

  std::string report_path = (fs::path(out_dir) / "cv_report.json").string();
  std::map<std::string, std::map<std::string, AttributionReport>> table;
  table["seq_model"][common.config.split] = cv.report;
  write_file_atomic(report_path, attribution_report_to_json(table) + "\n");
  outputs.push_back(report_path);

  std::string pred_path = (fs::path(out_dir) / "predictions.jsonl").string();
  std::ostringstream preds;
  for (const auto& [novel, attrs] : cv.predictions) {
    for (const auto& a : attrs) {
      ordered_json j;
      j["novel_id"] = novel;
      j["quote_id"] = a.quote_id;
      j["predicted_char_id"] = a.predicted == kUnresolved
                                   ? ordered_json(nullptr)
                                   : ordered_json(a.predicted);
      preds << j.dump() << "\n";
    }
  }
  write_file_atomic(pred_path, preds.str());
  outputs.push_back(pred_path);

  write_manifest((fs::path(out_dir) / "train.manifest.json").string(),
                 "train", files, outputs, common.config);
  std::cout << "cv_overall_accuracy " << cv.report.overall << "\n";
  return 0;
}

int cmd_evaluate(CommonArgs& common, const std::string& task,
                 const std::string& gold, const std::string& pred,
                 const std::string& out) {
  common.finalize();
  Lexicon lexicon = common.config.make_lexicon();
  ordered_json j;
  if (task == "charid") {
    std::vector<CharacterEntity> gold_chars;
    std::string gtext = read_file(gold);
    if (ordered_json::parse(gtext).is_array()) {
      gold_chars = characters_from_json(gtext);
    } else {
      gold_chars = bundle_from_json(gtext).characters;
    }
    auto pred_chars = characters_from_json(read_file(pred));
    auto cr = character_recognition_score(pred_chars, gold_chars, lexicon);
    auto cl = clustering_scores(pred_chars, gold_chars, lexicon);
    j["task"] = "charid";
    j["n_gold"] = cr.n_gold;
    j["n_pred_entities"] = cr.n_pred_entities;
    j["n_matched_pred"] = cr.n_matched_pred;
    j["n_matched_gold"] = cr.n_matched_gold;
    j["cr"] = cr.cr;
    j["n_clus"] = cl.n_clusters;
    j["c_hom"] = cl.homogeneity ? ordered_json(*cl.homogeneity)
                                : ordered_json(nullptr);
    j["c_comp"] = cl.completeness ? ordered_json(*cl.completeness)
                                  : ordered_json(nullptr);
    j["v_score"] =
        cl.v_score ? ordered_json(*cl.v_score) : ordered_json(nullptr);
  } else if (task == "coref") {
    NovelBundle bundle = load_bundle_file(gold);
    auto loaded = load_cluster_dump(pred, bundle);
    NameMatcher matcher(bundle.characters, lexicon);
    MentionConfig mc;
    mc.use_inside_quote_spans = common.config.use_inside_quote_spans;
    ClusterMatcher cm(bundle, matcher, lexicon, mc);
    std::vector<ClusterMatch> matches;
    for (const auto& cl : loaded.clusters) matches.push_back(cm.match(cl));
    auto stats = mention_cluster_stats(matches);
    auto res = mention_resolution_accuracy(loaded.clusters, matches, bundle);
    j["task"] = "coref";
    j["n_clus"] = stats.n_clusters;
    j["uniq"] = stats.frac_uniq;
    j["mult"] = stats.frac_mult;
    j["none"] = stats.frac_none;
    j["n_eval"] = res.n_eval;
    j["accuracy"] =
        res.accuracy ? ordered_json(*res.accuracy) : ordered_json(nullptr);
  } else if (task == "quotes") {
    NovelBundle bundle = load_bundle_file(gold);
    std::vector<Span> spans;
    std::istringstream in(read_file(pred));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ordered_json pj = ordered_json::parse(line);
      spans.push_back(
          {pj.at("start").get<uint32_t>(), pj.at("end").get<uint32_t>()});
    }
    auto score = quotation_identification_score(spans, bundle);
    j["task"] = "quotes";
    j["n_gold"] = score.n_gold;
    j["n_pred"] = score.n_pred;
    j["exact_match_rate"] = score.exact_match_rate;
    j["overlap_recall"] = score.overlap_recall;
    j["precision_proxy"] = score.precision_proxy;
  } else if (task == "attrib") {
    NovelBundle bundle = load_bundle_file(gold);
    auto attrs = attributions_from_jsonl(read_file(pred));
    std::map<std::string, std::vector<Attribution>> per_novel;
    per_novel[bundle.novel_id] = attrs;
    std::map<std::string, const NovelBundle*> bundles;
    bundles[bundle.novel_id] = &bundle;
    auto rep = attribution_accuracy_report(per_novel, bundles);
    std::string method = attribution_method_name(
        attrs.empty() ? AttributionMethod::ExplicitRule
                      : attrs.front().method);
    j = ordered_json::parse(
        attribution_report_to_json({{method, {{"all", rep}}}}));
  } else {
    throw Error(ErrorKind::UsageError, "unknown task '" + task + "'");
  }
  std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
    write_manifest(out + ".manifest.json", "evaluate", {gold, pred}, {out},
                   common.config);
  }
  return 0;
}

int cmd_report(const std::string& in_path) {
  ordered_json j = ordered_json::parse(read_file(in_path));
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  auto cell = [&](const ordered_json& v) {
    if (v.is_null()) return std::string("-");
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << v.get<double>();
    return s.str();
  };
  if (j.contains("rows")) {  // character identification table
    out << "novel\tn_chars\tCR\tn_clus\tC.Hom\tC.Comp\tv-score\n";
    for (const auto& r : j["rows"]) {
      out << r["novel"].get<std::string>() << "\t" << r["n_chars"] << "\t"
          << cell(r["cr"]) << "\t" << r["n_clus"] << "\t" << cell(r["c_hom"])
          << "\t" << cell(r["c_comp"]) << "\t" << cell(r["v_score"]) << "\n";
    }
    out << "mean\t" << cell(j["mean"]["n_chars"]) << "\t"
        << cell(j["mean"]["cr"]) << "\t" << cell(j["mean"]["n_clus"]) << "\t"
        << cell(j["mean"]["c_hom"]) << "\t" << cell(j["mean"]["c_comp"])
        << "\t" << cell(j["mean"]["v_score"]) << "\n";
  } else if (j.contains("per_novel") && j.contains("mean")) {
    out << "novel\tn_quotations\tunresolved_rate\n";
    for (const auto& [novel, e] : j["per_novel"].items())
      out << novel << "\t" << e["n_quotations"] << "\t"
          << e["rate"].get<double>() << "\n";
    out << "mean " << j["mean"].get<double>() << "  min "
        << j["min"].get<double>() << "  max " << j["max"].get<double>()
        << "\n";
  } else {  // attribution report: method x split x {Exp., Rest}
    out << "method\tsplit\toverall\texplicit\trest\n";
    for (const auto& [method, splits] : j.items()) {
      if (!splits.is_object()) continue;
      for (const auto& [split, rep] : splits.items()) {
        auto acc = [&](const char* k) {
          if (!rep.contains("by_type") || !rep["by_type"].contains(k))
            return std::string("-");
          return cell(rep["by_type"][k]["accuracy"]);
        };
        out << method << "\t" << split << "\t"
            << rep["overall"].get<double>() << "\t" << acc("explicit") << "\t"
            << acc("rest") << "\n";
      }
    }
  }
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quotation attribution pipeline for annotated novels"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string pdnc_dir, corpus, coref, coref_dir, out, model_path;
  std::string task, gold, pred, in_path;
  bool refine_types = true;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.config.seed, "random seed");
    cmd->add_option("--config", common.config_path, "run config JSON");
    cmd->add_option("--honorifics", common.config.honorifics_path,
                    "honorific lexicon file");
    cmd->add_option("--speech-verbs", common.config.speech_verbs_path,
                    "speech verb lexicon file");
  };

  auto* ingest = app.add_subcommand("ingest", "PDNC folder -> bundle JSON");
  ingest->add_option("--pdnc-dir", pdnc_dir, "PDNC novel folder or root")
      ->required();
  ingest->add_option("--out", out, "output bundle file or directory")
      ->required();
  ingest->add_flag("--refine-types,!--no-refine-types", refine_types,
                   "classify derived non-explicit quote types");
  add_common(ingest);

  auto* characters =
      app.add_subcommand("characters", "extract a character list from text");
  characters->add_option("--corpus", corpus, "bundle JSON")->required();
  characters->add_option("--out", out, "character list JSON")->required();
  characters->add_option("--min-count", common.config.min_count,
                         "minimum candidate frequency");
  add_common(characters);

  auto* quotes = app.add_subcommand("quotes", "parse dialogue spans");
  quotes->add_option("--corpus", corpus, "bundle JSON")->required();
  quotes->add_option("--out", out, "quote spans JSONL")->required();
  quotes->add_option("--quote-style", common.config.quote_style,
                     "auto|double|single|smart-double|smart-single");
  add_common(quotes);

  auto* mentions =
      app.add_subcommand("mentions", "curate the candidate inventory");
  mentions->add_option("--corpus", corpus, "bundle JSON")->required();
  mentions->add_option("--coref", coref, "external coref clusters JSONL");
  mentions->add_option("--out", out, "inventory JSONL")->required();
  add_common(mentions);

  auto* attribute = app.add_subcommand("attribute", "predict speakers");
  attribute->add_option("--corpus", corpus, "bundle JSON")->required();
  attribute->add_option("--method", common.config.method,
                        "explicit-rule|nearest|seq");
  attribute->add_option("--coref", coref, "external coref clusters JSONL");
  attribute->add_option("--model", model_path, "seq model JSON");
  attribute->add_flag("--use-gold-referring", common.config.use_gold_referring,
                      "resolve annotated referring expressions");
  attribute->add_option("--out", out, "attributions JSONL")->required();
  add_common(attribute);

  auto* train = app.add_subcommand("train", "cross-validated sequential model");
  train->add_option("--corpus-dir", corpus, "bundle JSON file or directory")
      ->required();
  train->add_option("--coref-dir", coref_dir,
                    "directory of <novel_id>.coref.jsonl dumps");
  train->add_option("--split", common.config.split, "quotations|novels");
  train->add_option("--folds", common.config.n_folds, "fold count");
  train->add_flag("--include-internal", common.config.include_internal,
                  "feed internal mentions to the model");
  train->add_option("--out", out, "output directory")->required();
  add_common(train);

  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--task", task, "charid|coref|quotes|attrib")
      ->required();
  evaluate->add_option("--gold", gold, "gold bundle or character list")
      ->required();
  evaluate->add_option("--pred", pred, "prediction file")->required();
  evaluate->add_option("--out", out, "report JSON (stdout when omitted)");
  add_common(evaluate);

  auto* report = app.add_subcommand("report", "render a report as a table");
  report->add_option("--in", in_path, "report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed())
      return cmd_ingest(common, pdnc_dir, out, refine_types);
    if (characters->parsed()) return cmd_characters(common, corpus, out);
    if (quotes->parsed()) return cmd_quotes(common, corpus, out);
    if (mentions->parsed()) return cmd_mentions(common, corpus, coref, out);
    if (attribute->parsed())
      return cmd_attribute(common, corpus, coref, model_path, out);
    if (train->parsed()) return cmd_train(common, corpus, coref_dir, out);
    if (evaluate->parsed()) return cmd_evaluate(common, task, gold, pred, out);
    if (report->parsed()) return cmd_report(in_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == ErrorKind::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

#include "quotemark/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "quotemark/errors.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace quotemark {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

std::string RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["quote_style"] = quote_style;
  j["honorifics_path"] = honorifics_path;
  j["speech_verbs_path"] = speech_verbs_path;
  j["method"] = method;
  j["split"] = split;
  j["n_folds"] = n_folds;
  j["include_internal"] = include_internal;
  j["use_gold_referring"] = use_gold_referring;
  j["use_inside_quote_spans"] = use_inside_quote_spans;
  j["min_count"] = min_count;
  ordered_json m;
  m["max_slots"] = model.max_slots;
  m["max_internal"] = model.max_internal;
  m["pre_window"] = model.pre_window;
  m["embedding_dim"] = model.embedding_dim;
  m["hidden_dim"] = model.hidden_dim;
  m["learning_rate"] = model.learning_rate;
  m["batch_size"] = model.batch_size;
  m["max_epochs"] = model.max_epochs;
  m["patience"] = model.patience;
  m["dev_fraction"] = model.dev_fraction;
  j["model"] = std::move(m);
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.quote_style = j.value("quote_style", c.quote_style);
  c.honorifics_path = j.value("honorifics_path", c.honorifics_path);
  c.speech_verbs_path = j.value("speech_verbs_path", c.speech_verbs_path);
  c.method = j.value("method", c.method);
  c.split = j.value("split", c.split);
  c.n_folds = j.value("n_folds", c.n_folds);
  c.include_internal = j.value("include_internal", c.include_internal);
  c.use_gold_referring = j.value("use_gold_referring", c.use_gold_referring);
  c.use_inside_quote_spans =
      j.value("use_inside_quote_spans", c.use_inside_quote_spans);
  c.min_count = j.value("min_count", c.min_count);
  if (j.contains("model")) {
    const auto& m = j["model"];
    c.model.max_slots = m.value("max_slots", c.model.max_slots);
    c.model.max_internal = m.value("max_internal", c.model.max_internal);
    c.model.pre_window = m.value("pre_window", c.model.pre_window);
    c.model.embedding_dim = m.value("embedding_dim", c.model.embedding_dim);
    c.model.hidden_dim = m.value("hidden_dim", c.model.hidden_dim);
    c.model.learning_rate = m.value("learning_rate", c.model.learning_rate);
    c.model.batch_size = m.value("batch_size", c.model.batch_size);
    c.model.max_epochs = m.value("max_epochs", c.model.max_epochs);
    c.model.patience = m.value("patience", c.model.patience);
    c.model.dev_fraction = m.value("dev_fraction", c.model.dev_fraction);
  }
  return c;
}

void RunConfig::resolve_lexicon_paths() {
  const char* dir = std::getenv("QUOTEMARK_LEXICON_DIR");
  if (!dir) return;
  if (honorifics_path.empty()) {
    fs::path p = fs::path(dir) / "honorifics.txt";
    if (fs::exists(p)) honorifics_path = p.string();
  }
  if (speech_verbs_path.empty()) {
    fs::path p = fs::path(dir) / "speech_verbs.txt";
    if (fs::exists(p)) speech_verbs_path = p.string();
  }
}

Lexicon RunConfig::make_lexicon() const {
  return Lexicon::load(honorifics_path, speech_verbs_path);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_file(const std::string& path) {
  return fnv1a64_hex(read_file(path));
}

void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path);
    out << content;
  }
  fs::rename(tmp, target);
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const RunConfig& config) {
  ordered_json j;
  j["format"] = "quotemark-manifest";
  j["version"] = 1;
  j["command"] = command;
  ordered_json ins = ordered_json::array();
  for (const auto& p : inputs) {
    ordered_json e;
    e["path"] = p;
    e["fnv1a64"] = hash_file(p);
    ins.push_back(std::move(e));
  }
  j["inputs"] = std::move(ins);
  j["config"] = ordered_json::parse(config.to_json());
  ordered_json outs = ordered_json::array();
  for (const auto& p : outputs) {
    ordered_json e;
    e["path"] = p;
    e["fnv1a64"] = hash_file(p);
    outs.push_back(std::move(e));
  }
  j["outputs"] = std::move(outs);
  write_file_atomic(out_path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Pipeline steps
// ---------------------------------------------------------------------------

QuoteStyle resolve_quote_style(const NovelBundle& bundle,
                               const std::string& name) {
  if (name.empty() || name == "auto") return detect_quote_style(bundle.text);
  auto style = QuoteStyle::by_name(name);
  if (!style)
    throw Error(ErrorKind::UsageError, "unknown quote style '" + name + "'");
  return *style;
}

CandidateInventory build_inventory(const NovelBundle& bundle,
                                   const Lexicon& lexicon,
                                   const std::optional<std::string>& coref_path,
                                   const MentionConfig& config) {
  auto explicit_mentions = scan_explicit_mentions(bundle, lexicon);
  std::vector<MentionCluster> clusters;
  std::vector<ClusterMatch> matches;
  std::vector<std::string> warnings;
  if (coref_path) {
    auto loaded = load_cluster_dump(*coref_path, bundle);
    warnings = loaded.warnings;
    clusters = std::move(loaded.clusters);
    NameMatcher matcher(bundle.characters, lexicon);
    ClusterMatcher cm(bundle, matcher, lexicon, config);
    for (const auto& cl : clusters) matches.push_back(cm.match(cl));
  }
  CandidateInventory inv =
      curate_candidates(bundle, explicit_mentions, clusters, matches);
  inv.warnings.insert(inv.warnings.begin(), warnings.begin(), warnings.end());
  return inv;
}

std::vector<Attribution> run_rule_attribution(
    const NovelBundle& bundle, const CandidateInventory& inventory,
    const Lexicon& lexicon, const std::string& method,
    bool use_gold_referring) {
  std::vector<Attribution> out;
  out.reserve(bundle.quotations.size());
  for (const auto& q : bundle.quotations) {
    if (method == "nearest") {
      out.push_back(attribute_nearest(q, bundle, inventory));
    } else if (method == "explicit-rule") {
      out.push_back(
          attribute_explicit(q, bundle, inventory, lexicon, use_gold_referring));
    } else {
      throw Error(ErrorKind::UsageError,
                  "unknown rule method '" + method + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validated sequential model
// ---------------------------------------------------------------------------

CvResult run_speaker_cv(const std::vector<NovelData>& novels, SplitMode mode,
                        const RunConfig& config) {
  if (novels.empty()) throw Error(ErrorKind::EmptyInput, "no novels");
  std::vector<const NovelBundle*> bundles;
  for (const auto& n : novels) bundles.push_back(n.bundle);

  CvResult result;
  result.folds = make_cv_folds(bundles, mode, config.seed, config.n_folds);

  // Qualified id -> (novel index, quotation index)
  std::map<std::string, std::pair<size_t, size_t>> locator;
  for (size_t ni = 0; ni < novels.size(); ++ni) {
    const auto& quotes = novels[ni].bundle->quotations;
    for (size_t qi = 0; qi < quotes.size(); ++qi) {
      locator[novels[ni].bundle->novel_id + "/" + quotes[qi].quote_id] = {ni,
                                                                          qi};
    }
  }

  SeqModelConfig model_cfg = config.model;
  model_cfg.include_internal = config.include_internal;

  for (size_t fold = 0; fold < result.folds.folds.size(); ++fold) {
    // Membership of the held-out fold.
    std::set<std::string> held;
    if (mode == SplitMode::Novels) {
      for (const auto& novel_id : result.folds.folds[fold])
        held.insert(novel_id);
    } else {
      held.insert(result.folds.folds[fold].begin(),
                  result.folds.folds[fold].end());
    }
    auto in_fold = [&](size_t ni, const std::string& qual) {
      return mode == SplitMode::Novels
                 ? held.count(novels[ni].bundle->novel_id) > 0
                 : held.count(qual) > 0;
    };

    std::vector<ContextEncoding> train_set;
    std::vector<std::pair<std::string, std::pair<size_t, size_t>>> test_refs;
    for (const auto& [qual, loc] : locator) {
      const auto& nd = novels[loc.first];
      const Quotation& q = nd.bundle->quotations[loc.second];
      if (in_fold(loc.first, qual)) {
        test_refs.push_back({qual, loc});
      } else {
        train_set.push_back(encode_context(q, *nd.inventory, model_cfg));
      }
    }
    if (train_set.empty())
      throw Error(ErrorKind::EmptyDataset,
                  "fold " + std::to_string(fold) + " has no training data");

    SeqModelConfig fold_cfg = model_cfg;
    fold_cfg.seed = config.seed + fold;
    TrainResult trained = train_model(train_set, fold_cfg);
    for (const auto& [qual, loc] : test_refs) {
      const auto& nd = novels[loc.first];
      const Quotation& q = nd.bundle->quotations[loc.second];
      Attribution a = predict_speaker(trained.params, q, *nd.inventory);
      result.predictions[nd.bundle->novel_id].push_back(a);
    }
    result.fold_models.push_back(
        {std::move(trained.params), std::move(trained.trace)});
  }

  std::map<std::string, const NovelBundle*> bundle_map;
  for (const auto& n : novels) bundle_map[n.bundle->novel_id] = n.bundle;
  result.report = attribution_accuracy_report(result.predictions, bundle_map);
  return result;
}

}  // namespace quotemark

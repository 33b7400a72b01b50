#include "palg/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "palg/algebra.hpp"
#include "palg/data.hpp"
#include "palg/error.hpp"
#include "palg/eval.hpp"
#include "palg/format.hpp"
#include "palg/io.hpp"
#include "palg/regularize.hpp"
#include "palg/tuning.hpp"

namespace palg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// A JSON object whose keys must all be consumed; anything left over is an
// unknown key and rejected.
class Section {
 public:
  Section(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) fail(ErrorKind::Config, where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return required<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail(ErrorKind::Config, "missing key '" + key + "' in " + where_);
    try {
      return doc_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::Config, "bad value for key '" + key + "' in " + where_);
    }
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    return required<T>(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(doc_.at(key), where_ + "." + key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return doc_.at(key);
  }

  void finish() const {
    for (const auto& item : doc_.items())
      if (!used_.count(item.key()))
        fail(ErrorKind::Config, "unknown key '" + item.key() + "' in " + where_);
  }

 private:
  const json& doc_;
  std::string where_;
  std::set<std::string> used_;
};

struct Context {
  json config;
  std::uint64_t config_hash = 0;
  fs::path out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::ostream* log = nullptr;

  std::ostream& info() const {
    static std::ostream null(nullptr);
    return quiet ? null : *log;
  }
};

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

TrainConfig read_train_config(Section s, const Vocabulary& vocab, std::optional<std::uint64_t> seed) {
  TrainConfig c;
  c.epochs = s.get<std::size_t>("epochs", c.epochs);
  c.batch_size = s.get<std::size_t>("batch_size", c.batch_size);
  c.learning_rate = s.get<double>("learning_rate", c.learning_rate);
  c.dropout_rate = s.get<double>("dropout_rate", c.dropout_rate);
  c.use_projection = s.get<bool>("use_projection", c.use_projection);
  c.energy_fraction = s.get<double>("energy_fraction", c.energy_fraction);
  c.logit_scale = s.get<double>("logit_scale", c.logit_scale);
  c.reg_weight = s.get<double>("reg_weight", c.reg_weight);
  c.seed = s.get<std::uint64_t>("seed", c.seed);
  c.init_sigma = s.get<double>("init_sigma", c.init_sigma);
  if (seed) c.seed = *seed;
  (void)vocab;
  s.finish();
  c.validate();
  return c;
}

RegularizerSpec read_regularizer(Section s, const Vocabulary& vocab) {
  RegularizerSpec spec;
  const auto kind = s.required<std::string>("kind");
  if (kind == "ca" || kind == "class_agnostic") {
    spec.kind = RegularizerKind::ClassAgnostic;
    const auto names = s.get<std::vector<std::string>>("support", default_support_classes());
    spec.support = resolve_support(vocab, names);
  } else if (kind == "mv" || kind == "multi_view") {
    spec.kind = RegularizerKind::MultiView;
  } else {
    fail(ErrorKind::Config, "unknown regularizer kind '" + kind + "'");
  }
  spec.k = s.get<std::size_t>("k", spec.k);
  spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  s.finish();
  return spec;
}

void warn_overlap(const Context& ctx, const RegularizerSpec& spec, const MultiViewDataset& data) {
  for (const auto& name : support_overlap(spec, data))
    ctx.info() << "warning: support class '" << name << "' is also a classifier class\n";
}

std::optional<ProjectionBasis> read_basis(Section& s, const std::string& key) {
  if (const auto path = s.optional<std::string>(key)) return load_basis(*path);
  return std::nullopt;
}

json metrics_json(const Metrics& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void write_log(const fs::path& path, const Context& ctx, const std::string& name,
               const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << json{{"config_hash", hex(ctx.config_hash)}, {"prompt", name}}.dump() << '\n';
  for (const auto& e : log)
    out << json{{"epoch", e.epoch}, {"loss", e.loss}, {"reg_loss", e.reg_loss}, {"accuracy", e.accuracy}}.dump()
        << '\n';
  write_text(path, out.str());
}

int cmd_gen(Context& ctx) {
  Section s(ctx.config, "gen config");
  SyntheticSpec spec;
  spec.d = s.get<std::size_t>("d", spec.d);
  spec.n_objects = s.get<std::size_t>("n_objects", spec.n_objects);
  spec.n_attributes = s.get<std::size_t>("n_attributes", spec.n_attributes);
  spec.samples_per_pair = s.get<std::size_t>("samples_per_pair", spec.samples_per_pair);
  spec.noise_sigma = s.get<double>("noise_sigma", spec.noise_sigma);
  spec.alpha = s.get<double>("alpha", spec.alpha);
  spec.beta = s.get<double>("beta", spec.beta);
  spec.distractor_tokens = s.get<std::size_t>("distractor_tokens", spec.distractor_tokens);
  spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  spec.unseen_fraction = s.get<double>("unseen_fraction", spec.unseen_fraction);
  spec.test_fraction = s.get<double>("test_fraction", spec.test_fraction);
  spec.orthogonal_encoder = s.get<bool>("orthogonal_encoder", spec.orthogonal_encoder);
  if (ctx.seed) spec.seed = *ctx.seed;
  s.finish();

  const auto bundle = generate_synthetic(spec);
  const fs::path dir = ctx.out / "dataset";
  save_dataset(dir, bundle.model, bundle.dataset, ctx.config_hash);
  ctx.info() << "dataset " << (dir / "manifest.json").string() << " images=" << bundle.dataset.size()
             << " vocab=" << bundle.model.vocab.size() << "\n";
  return 0;
}

int cmd_spectra(Context& ctx) {
  Section s(ctx.config, "spectra config");
  const auto data = load_dataset(s.required<std::string>("manifest"));
  const double energy = s.get<double>("energy", 0.9);
  const auto name = s.get<std::string>("name", "basis");
  s.finish();

  const auto basis = spectral_basis(data.model.vocab.embeddings, energy);
  save_basis(basis, ctx.out / "bases" / (name + ".json"), ctx.config_hash);

  std::ostringstream tsv;
  tsv << "# config_hash=" << hex(ctx.config_hash) << "\n";
  tsv << "index\teigenvalue\tcumulative_fraction\tretained\n";
  double total = 0.0;
  for (double x : basis.eigenvalues) total += x;
  double kept = 0.0;
  for (std::size_t i = 0; i < basis.eigenvalues.size(); ++i) {
    kept += basis.eigenvalues[i];
    tsv << i << '\t' << format_number(basis.eigenvalues[i]) << '\t' << format_number(kept / total) << '\t'
        << (i < basis.m ? 1 : 0) << '\n';
  }
  write_text(ctx.out / "results" / (name + "_eigenvalues.tsv"), tsv.str());
  ctx.info() << "m=" << basis.m << " retained_energy=" << format_number(basis.retained_energy())
             << " fingerprint=" << hex(basis.fingerprint()) << "\n";
  return 0;
}

int cmd_train(Context& ctx) {
  Section s(ctx.config, "train config");
  const auto data = load_dataset(s.required<std::string>("manifest"));
  const std::size_t view = data.dataset.find_view(s.required<std::string>("view"));
  const auto name = s.get<std::string>("name", data.dataset.views[view].view_name);
  auto basis = read_basis(s, "basis");
  TrainConfig cfg = s.has("train") ? read_train_config(s.child("train"), data.model.vocab, ctx.seed)
                                   : read_train_config(Section(json::object(), "train"), data.model.vocab, ctx.seed);
  if (s.has("regularizer")) cfg.reg = read_regularizer(s.child("regularizer"), data.model.vocab);
  auto seeds = s.get<std::vector<std::uint64_t>>("seeds", {});
  if (ctx.seed) seeds.clear();
  s.finish();

  if (cfg.use_projection && !basis) basis = spectral_basis(data.model.vocab.embeddings, cfg.energy_fraction);
  if (!cfg.use_projection && basis)
    fail(ErrorKind::Config, "a basis was given but train.use_projection is false");
  if (cfg.reg) warn_overlap(ctx, *cfg.reg, data.dataset);

  const bool multi = !seeds.empty();
  if (!multi) seeds.push_back(cfg.seed);
  for (std::uint64_t seed : seeds) {
    TrainConfig run = cfg;
    run.seed = seed;
    const std::string stem = multi ? name + ".s" + std::to_string(seed) : name;
    auto result = train_prompt(data.dataset, view, run, data.model, basis ? &*basis : nullptr);
    result.prompt.source_task = name;
    result.prompt.config_hash = ctx.config_hash;
    save_prompt(result.prompt, ctx.out / "prompts" / (stem + ".prompt"));
    write_log(ctx.out / "logs" / (stem + ".jsonl"), ctx, stem, result.log);
    const auto& last = result.log.back();
    ctx.info() << "prompt " << (ctx.out / "prompts" / (stem + ".prompt")).string()
               << " loss=" << format_number(last.loss) << " accuracy=" << format_number(last.accuracy) << "\n";
  }
  return 0;
}

int cmd_compose(Context& ctx) {
  Section s(ctx.config, "compose config");
  const auto paths = s.required<std::vector<std::string>>("prompts");
  std::vector<Prompt> prompts;
  for (const auto& p : paths) prompts.push_back(load_prompt(p));
  std::vector<double> weights;
  if (!s.has("weights") || (s.has("weights") && s.raw("weights").is_string())) {
    if (s.has("weights") && s.raw("weights").get<std::string>() != "equal")
      fail(ErrorKind::Config, "weights must be a list of numbers or \"equal\"");
    weights = equal_weights(prompts.size());
  } else {
    weights = s.required<std::vector<double>>("weights");
  }
  auto basis = read_basis(s, "basis");
  const auto name = s.get<std::string>("name", "composite");
  s.finish();

  Prompt out = compose(prompts, weights, basis ? &*basis : nullptr);
  out.config_hash = ctx.config_hash;
  save_prompt(out, ctx.out / "prompts" / (name + ".prompt"));
  ctx.info() << "prompt " << (ctx.out / "prompts" / (name + ".prompt")).string() << " from "
             << out.source_task << "\n";
  return 0;
}

int cmd_eval(Context& ctx) {
  Section s(ctx.config, "eval config");
  const auto data = load_dataset(s.required<std::string>("manifest"));
  const double scale = s.get<double>("logit_scale", 100.0);
  const auto name = s.get<std::string>("name", "eval");
  require(scale > 0.0, ErrorKind::Config, "logit_scale must be positive");

  std::vector<std::pair<std::string, std::vector<std::string>>> models;
  if (const auto p = s.optional<std::string>("prompt")) models.push_back({"prompt", {*p}});
  if (s.has("models")) {
    const auto& m = s.raw("models");
    if (!m.is_object()) fail(ErrorKind::Config, "models must map model names to prompt file lists");
    for (const auto& item : m.items()) {
      try {
        models.push_back({item.key(), item.value().get<std::vector<std::string>>()});
      } catch (const json::exception&) {
        fail(ErrorKind::Config, "bad value for key '" + item.key() + "' in eval config.models");
      }
      if (models.back().second.empty()) fail(ErrorKind::Config, "model '" + item.key() + "' has no prompts");
    }
  }
  const bool zero_shot = s.get<bool>("zero_shot", models.empty());
  s.finish();

  const EvalBundle bundle{&data.dataset, &data.model, scale, Exec::Parallel};
  json doc;
  doc["config_hash"] = hex(ctx.config_hash);
  doc["models"] = json::array();
  std::ostringstream tsv;
  tsv << "# config_hash=" << hex(ctx.config_hash) << "\n";
  tsv << "model\tmetric\tmean\tstd\ttrials\n";

  auto emit = [&](const std::string& model, const std::vector<Metrics>& trials) {
    json entry{{"model", model}, {"trials", json::array()}, {"summary", json::object()}};
    for (const auto& t : trials) entry["trials"].push_back(metrics_json(t));
    for (const auto& [metric, sum] : summarize(trials)) {
      entry["summary"][metric] = {{"mean", sum.mean}, {"std", sum.stddev}, {"trials", sum.trials}};
      tsv << model << '\t' << metric << '\t' << format_number(sum.mean) << '\t' << format_number(sum.stddev)
          << '\t' << sum.trials << '\n';
      ctx.info() << model << ' ' << metric << ' ' << format_number(sum.mean) << '\n';
    }
    doc["models"].push_back(entry);
  };

  if (zero_shot) emit("zero-shot", {evaluate(nullptr, bundle)});
  for (const auto& [model, paths] : models) {
    std::vector<Metrics> trials;
    for (const auto& path : paths) {
      const Prompt prompt = load_prompt(path);
      require(prompt.values.size() == data.model.dim(), ErrorKind::Dimension,
              path + ": prompt dimension does not match the dataset");
      trials.push_back(evaluate(&prompt, bundle));
    }
    emit(model, trials);
  }
  write_text(ctx.out / "results" / (name + ".json"), doc.dump(1) + "\n");
  write_text(ctx.out / "results" / (name + ".tsv"), tsv.str());
  return 0;
}

int cmd_sweep(Context& ctx) {
  Section s(ctx.config, "sweep config");
  const auto data = load_dataset(s.required<std::string>("manifest"));
  const Prompt a = load_prompt(s.required<std::string>("prompt_a"));
  const Prompt b = load_prompt(s.required<std::string>("prompt_b"));
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  grid = s.get<std::vector<double>>("grid", grid);
  auto basis = read_basis(s, "basis");
  const double scale = s.get<double>("logit_scale", 100.0);
  const auto name = s.get<std::string>("name", "sweep");
  s.finish();

  const EvalBundle bundle{&data.dataset, &data.model, scale, Exec::Parallel};
  const auto rows = weight_sweep(a, b, grid, bundle, basis ? &*basis : nullptr);
  write_text(ctx.out / "results" / (name + ".tsv"),
             "# config_hash=" + hex(ctx.config_hash) + "\n" + sweep_tsv(rows));
  ctx.info() << "sweep " << (ctx.out / "results" / (name + ".tsv")).string() << " points=" << rows.size()
             << "\n";
  return 0;
}

int cmd_continual(Context& ctx) {
  Section s(ctx.config, "continual config");
  const auto data = load_dataset(s.required<std::string>("manifest"));
  ContinualConfig cfg;
  cfg.view = data.dataset.find_view(s.get<std::string>("view", data.dataset.views[0].view_name));
  cfg.n_steps = s.get<std::size_t>("n_steps", cfg.n_steps);
  cfg.classes_per_step = s.get<std::size_t>("classes_per_step", cfg.classes_per_step);
  cfg.n_classes = s.get<std::size_t>("n_classes", cfg.n_steps * cfg.classes_per_step);
  cfg.train = s.has("train") ? read_train_config(s.child("train"), data.model.vocab, ctx.seed)
                             : read_train_config(Section(json::object(), "train"), data.model.vocab, ctx.seed);
  if (s.has("regularizer")) cfg.train.reg = read_regularizer(s.child("regularizer"), data.model.vocab);
  auto basis = read_basis(s, "basis");
  const auto name = s.get<std::string>("name", "continual");
  s.finish();

  if (cfg.train.use_projection && !basis)
    basis = spectral_basis(data.model.vocab.embeddings, cfg.train.energy_fraction);
  if (!cfg.train.use_projection && basis)
    fail(ErrorKind::Config, "a basis was given but train.use_projection is false");
  if (cfg.train.reg) warn_overlap(ctx, *cfg.train.reg, data.dataset);

  const auto result = continual_run(cfg, data.dataset, data.model, basis ? &*basis : nullptr);
  Prompt final_prompt = result.final_composite;
  final_prompt.config_hash = ctx.config_hash;
  save_prompt(final_prompt, ctx.out / "prompts" / (name + ".final.prompt"));

  json doc{{"config_hash", hex(ctx.config_hash)},
           {"average_acc", result.average_acc},
           {"last_acc", result.last_acc},
           {"per_step", result.per_step},
           {"first_prompt_union_acc", result.first_prompt_union_acc}};
  write_text(ctx.out / "results" / (name + ".json"), doc.dump(1) + "\n");
  ctx.info() << "average=" << format_number(result.average_acc) << " last=" << format_number(result.last_acc)
             << "\n";
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void report(std::ostream& err, std::string_view kind, int code, const std::string& message) {
  err << "error: kind=" << kind << " code=" << code << " message=" << json(one_line(message)).dump() << "\n";
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt tuning, prompt algebra and evaluation on vision-language scores", "palg"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  using Handler = int (*)(Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"gen", "generate a synthetic multi-view dataset", cmd_gen},
      {"spectra", "eigendecompose the vocabulary and pick the projection basis", cmd_spectra},
      {"train", "train a task prompt", cmd_train},
      {"compose", "combine prompts with non-negative weights", cmd_compose},
      {"eval", "evaluate prompts (or the zero-shot model)", cmd_eval},
      {"sweep", "evaluate compose((a, b), (θ, 1-θ)) over a grid", cmd_sweep},
      {"continual", "run the class-incremental composition protocol", cmd_continual},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, handler] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_flag("--quiet", quiet, "suppress progress output");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "config", 2, e.what());
    return 2;
  }

  try {
    Context ctx;
    ctx.out = out_dir;
    ctx.seed = seed;
    ctx.quiet = quiet;
    ctx.log = &out;
    const auto bytes = read_file(config_path);
    try {
      ctx.config = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, config_path + ": invalid JSON: " + e.what());
    }
    std::string canonical = ctx.config.dump();
    if (seed) canonical += "\nseed=" + std::to_string(*seed);
    ctx.config_hash = fnv1a64(canonical);

    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return std::get<2>(commands[i])(ctx);
    return 2;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report(err, to_string(e.kind()), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report(err, "io", 3, e.what());
    return 3;
  } catch (const std::exception& e) {
    report(err, "runtime", 1, e.what());
    return 1;
  }
}

}  // namespace palg::cli

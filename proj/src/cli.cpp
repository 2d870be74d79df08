#include "mplab/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

namespace mplab {

namespace fs = std::filesystem;

DiffusionModel load_model(const ModelSource& src) {
  if (!src.checkpoint_path.empty()) {
    DiffusionModel model = model_from_checkpoint(read_json(src.checkpoint_path));
    if (!src.world_path.empty() && world_hash(world_from_json(read_json(src.world_path))) != world_hash(model.world))
      throw std::invalid_argument("the world file differs from the checkpoint's world");
    return model;
  }
  const ToyWorld world = src.world_path.empty() ? make_world() : world_from_json(read_json(src.world_path));
  return make_analytic_model(world, make_schedule(src.T, src.schedule), src.text_seed, src.tilt);
}

Json describe_model(const ModelSource& src, const DiffusionModel& model) {
  Json j;
  j["variant"] = model.eps->variant();
  j["world_hash"] = world_hash(model.world);
  j["schedule"] = {{"T", model.schedule.steps()}, {"kind", to_string(model.schedule.kind())}};
  if (!src.checkpoint_path.empty()) {
    j["checkpoint_hash"] = file_hash(src.checkpoint_path);
  } else {
    j["tilt"] = src.tilt;
    j["text_seed"] = src.text_seed;
  }
  return j;
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::Objective: return "objective";
    case AblationAxis::Init: return "init";
    case AblationAxis::Position: return "position";
    case AblationAxis::Tokens: return "tokens";
    case AblationAxis::Flaws: return "flaws";
  }
  return "objective";
}

AblationAxis ablation_axis_from_string(const std::string& name) {
  for (auto a : {AblationAxis::Objective, AblationAxis::Init, AblationAxis::Position, AblationAxis::Tokens, AblationAxis::Flaws})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown ablation axis: " + name + " (expected objective, init, position, tokens or flaws)");
}

std::vector<AblationRow> ablation_rows(AblationAxis axis, const SamplerConfig& base) {
  std::vector<AblationRow> rows;
  const auto with = [&](std::string label, auto edit) {
    AblationRow row{std::move(label), SamplerKind::Minority, base};
    edit(row.config);
    rows.push_back(std::move(row));
  };
  switch (axis) {
    case AblationAxis::Objective:
      rows.push_back({"unoptimized", SamplerKind::Ddim, base});
      for (auto k : {ObjectiveKind::Naive, ObjectiveKind::Ours, ObjectiveKind::OursSg})
        with(to_string(k), [k](SamplerConfig& c) { c.objective = k; });
      break;
    case AblationAxis::Init:
      for (auto m : {InitMode::Default, InitMode::Gaussian, InitMode::Word})
        with(to_string(m), [m](SamplerConfig& c) { c.init_mode = m; });
      break;
    case AblationAxis::Position:
      for (auto p : {PlaceholderPosition::Prefix, PlaceholderPosition::Postfix})
        with(to_string(p), [p](SamplerConfig& c) { c.position = p; });
      break;
    case AblationAxis::Tokens:
      for (int m : {1, 2, 4}) with(std::to_string(m), [m](SamplerConfig& c) { c.m = m; });
      break;
    case AblationAxis::Flaws:
      with("ours", [](SamplerConfig& c) { c.objective = ObjectiveKind::Ours; });
      with("+cfg", [](SamplerConfig& c) { c.objective = ObjectiveKind::FlawCfg; });
      with("+sg", [](SamplerConfig& c) { c.objective = ObjectiveKind::FlawSg; });
      with("+cv", [](SamplerConfig& c) { c.objective = ObjectiveKind::FlawCv; });
      with("+all", [](SamplerConfig& c) { c.objective = ObjectiveKind::Naive; });
      break;
  }
  return rows;
}

RunRecord sample_conditions(SamplerKind kind, const DiffusionModel& model, const std::vector<int>& conds,
                            const SamplerConfig& cfg, int n) {
  if (conds.empty()) throw std::invalid_argument("no conditions selected");
  RunRecord all;
  all.sampler = kind;
  all.config = cfg;
  for (int c : conds) {
    // Conditions get distinct master seeds so their noise is independent.
    SamplerConfig per = cfg;
    per.seed = mix_seed(cfg.seed, 50 + static_cast<std::uint64_t>(c));
    RunRecord run = run_sampler(kind, model, c, per, n);
    all.wall_clock_seconds += run.wall_clock_seconds;
    for (auto& s : run.samples) all.samples.push_back(std::move(s));
  }
  return all;
}

AblationResult run_ablation(AblationAxis axis, const DiffusionModel& model, const SamplerConfig& base,
                            const std::vector<int>& conds, int n, const EvalOptions& eval) {
  AblationResult out;
  for (const auto& row : ablation_rows(axis, base))
    out.runs.push_back({row.label, sample_conditions(row.sampler, model, conds, row.config, n)});
  out.report = aggregate_report(out.runs, model, eval);
  return out;
}

namespace {

struct ModelFlags {
  ModelSource src;
  bool analytic = false;
  std::string schedule = "cosine";

  void attach(CLI::App* app) {
    app->add_option("--world", src.world_path, "World JSON (default preset when omitted)")->check(CLI::ExistingFile);
    app->add_option("--checkpoint", src.checkpoint_path, "Trained checkpoint JSON")->check(CLI::ExistingFile);
    app->add_flag("--analytic", analytic, "Use the exact analytic denoiser of the world");
    app->add_option("--T", src.T, "Steps of the analytic model's schedule")->check(CLI::Range(2, 100000));
    app->add_option("--schedule", schedule, "Analytic model schedule: cosine or linear-beta");
    app->add_option("--tilt", src.tilt, "Analytic model embedding tilt strength");
    app->add_option("--text-seed", src.text_seed, "Analytic model text-encoder seed");
  }

  DiffusionModel load() {
    if (analytic == !src.checkpoint_path.empty())
      throw std::invalid_argument("choose exactly one of --analytic and --checkpoint");
    src.schedule = schedule_kind_from_string(schedule);
    return load_model(src);
  }
};

// Sampler overrides; only flags given on the command line are applied.
struct SamplerFlags {
  std::string config_path;
  std::map<std::string, std::string> raw;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Sampler config JSON (keys as in the run manifest)")->check(CLI::ExistingFile);
    for (const char* key : {"w", "N", "K", "lr", "lambda", "s_schedule", "objective", "init_mode", "init_word", "m",
                            "position", "mc_samples", "sgms_lr", "sgms_s_fraction", "cads_tau1", "cads_tau2",
                            "cads_noise_scale", "batch"}) {
      std::string flag = std::string("--") + key;
      std::replace(flag.begin() + 2, flag.end(), '_', '-');
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { raw[key] = v; },
                                            std::string("Override sampler ") + key);
    }
    app->add_flag_function("--no-fallback", [this](std::int64_t) { raw["fallback"] = "false"; },
                           "Reuse the latest optimized embedding on non-optimizing steps");
  }

  SamplerConfig build(int T, std::uint64_t seed) const {
    SamplerConfig cfg;
    cfg.T = T;
    if (!config_path.empty()) cfg = sampler_config_from_json(read_json(config_path), cfg);
    Json overrides = Json::object();
    for (const auto& [key, value] : raw) {
      Json parsed = Json::parse(value, nullptr, false);
      const bool text_key = key == "s_schedule" || key == "objective" || key == "init_mode" || key == "init_word" ||
                            key == "position";
      overrides[key] = (text_key || parsed.is_discarded()) ? Json(value) : parsed;
    }
    cfg = sampler_config_from_json(overrides, cfg);
    cfg.T = T;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

std::vector<int> parse_conditions(const std::string& text, const ToyWorld& world) {
  std::vector<int> out;
  if (text == "all") {
    for (int c = 0; c < world.num_conditions(); ++c) out.push_back(c);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const int c = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad condition list: " + text);
    world.condition(c);
    out.push_back(c);
  }
  if (out.empty()) throw std::invalid_argument("empty condition list");
  return out;
}

std::set<std::string> parse_metrics(const std::string& text) {
  if (text == "all") return kAllMetrics;
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(item);
  return out;
}

Json eval_options_json(const EvalOptions& e) {
  return {{"metrics", e.metrics},
          {"bootstrap_resamples", e.bootstrap_resamples},
          {"seed", e.seed},
          {"pr_k", e.pr_k},
          {"ibs_group", e.ibs_group},
          {"ode", {{"rtol", e.ode.rtol}, {"atol", e.ode.atol}, {"t_start", e.ode.t_start}}}};
}

// report_<hash>.csv / .json, hash over everything the report depends on.
std::string write_report(const fs::path& dir, const EvalReport& report, Json manifest) {
  const std::string hash = json_hash(manifest);
  write_text(dir / ("report_" + hash + ".csv"), report_csv(report));
  Json j = report_to_json(report);
  j["manifest"] = std::move(manifest);
  j["manifest_hash"] = hash;
  write_json(dir / ("report_" + hash + ".json"), j);
  return hash;
}

struct EvalFlags {
  std::string metrics = "all";
  std::uint64_t seed = 0;
  double ode_t0 = PfOdeOptions{}.t_start;
  double ode_tol = PfOdeOptions{}.rtol;
  int ibs_group = 0;

  void attach(CLI::App* app) {
    app->add_option("--metrics", metrics, "Comma list of bpd,density,minority,consistency,pr,ibs or 'all'");
    app->add_option("--eval-seed", seed, "Seed for reference draws and bootstrap");
    app->add_option("--ode-t0", ode_t0, "PF-ODE start time");
    app->add_option("--ode-tol", ode_tol, "PF-ODE tolerance (relative and absolute)");
    app->add_option("--ibs-group", ibs_group, "Group size for in-batch similarity (0: sampler batch)");
  }

  EvalOptions build() const {
    EvalOptions e;
    e.metrics = parse_metrics(metrics);
    e.seed = seed;
    e.ode.t_start = ode_t0;
    e.ode.rtol = e.ode.atol = ode_tol;
    e.ibs_group = ibs_group;
    return e;
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Minority-focused prompt optimization lab on synthetic diffusion worlds"};
  app.require_subcommand(1);

  // world
  auto* world_cmd = app.add_subcommand("world", "Write a validated world JSON");
  std::string preset = "default", spec_path, world_out;
  world_cmd->add_option("--preset", preset, "Preset name: default or standard-normal");
  world_cmd->add_option("--spec", spec_path, "World JSON to validate and normalize")->check(CLI::ExistingFile);
  world_cmd->add_option("--out", world_out, "Output path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the eps network and write a checkpoint");
  std::string train_world, train_out, train_report, train_schedule = "cosine";
  TrainConfig tcfg;
  int train_T = 50;
  train_cmd->add_option("--world", train_world, "World JSON (default preset when omitted)")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", tcfg.seed, "Master seed")->required();
  train_cmd->add_option("--steps", tcfg.steps, "Optimizer steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", tcfg.batch, "Batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tcfg.lr, "Adam learning rate");
  train_cmd->add_option("--dropout", tcfg.dropout, "Condition dropout probability");
  train_cmd->add_option("--ema", tcfg.ema_decay, "EMA decay (0 disables)");
  train_cmd->add_option("--attribute-prob", tcfg.attribute_prob, "Probability of appending the attribute word");
  train_cmd->add_option("--hidden", tcfg.hidden, "Hidden width")->check(CLI::PositiveNumber);
  train_cmd->add_option("--T", train_T, "Diffusion steps")->check(CLI::Range(2, 100000));
  train_cmd->add_option("--schedule", train_schedule, "cosine or linear-beta");
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--report", train_report, "Training report path (default: <out>.report.json)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Run a sampler and write run records");
  ModelFlags sample_model;
  SamplerFlags sample_flags;
  std::string sampler_name = "ddim", sample_conds = "all", sample_out;
  int sample_n = 10;
  std::uint64_t sample_seed_value = 0;
  sample_model.attach(sample_cmd);
  sample_flags.attach(sample_cmd);
  sample_cmd->add_option("--sampler", sampler_name, "ddim, minority, sgms, cads or diverse");
  sample_cmd->add_option("--n", sample_n, "Samples per condition")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--cond", sample_conds, "Condition ids (comma list) or 'all'");
  sample_cmd->add_option("--seed", sample_seed_value, "Master seed")->required();
  sample_cmd->add_option("--out", sample_out, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate run directories");
  ModelFlags eval_model;
  EvalFlags eval_flags;
  std::vector<std::string> eval_runs;
  std::string eval_out;
  eval_model.attach(eval_cmd);
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--run", eval_runs, "Run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation grid with paired seeds");
  ModelFlags ablate_model;
  SamplerFlags ablate_flags;
  EvalFlags ablate_eval;
  std::string axis_name, ablate_conds = "all", ablate_out;
  int ablate_n = 50;
  std::uint64_t ablate_seed = 0;
  ablate_model.attach(ablate_cmd);
  ablate_flags.attach(ablate_cmd);
  ablate_eval.attach(ablate_cmd);
  ablate_cmd->add_option("--axis", axis_name, "objective, init, position, tokens or flaws")->required();
  ablate_cmd->add_option("--n", ablate_n, "Samples per condition and row")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--cond", ablate_conds, "Condition ids (comma list) or 'all'");
  ablate_cmd->add_option("--seed", ablate_seed, "Master seed")->required();
  ablate_cmd->add_option("--out", ablate_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*world_cmd) {
      const ToyWorld world = spec_path.empty() ? make_preset(preset) : world_from_json(read_json(spec_path));
      if (preset == "standard-normal" && spec_path.empty())
        throw std::invalid_argument("the standard-normal preset is an oracle fixture and cannot be written as a world");
      write_json(world_out, world_to_json(world));
      std::cout << "world " << world_hash(world) << " -> " << world_out << "\n";
    } else if (*train_cmd) {
      const ToyWorld world = train_world.empty() ? make_world() : world_from_json(read_json(train_world));
      const NoiseSchedule sched = make_schedule(train_T, schedule_kind_from_string(train_schedule));
      const TrainResult result = train_denoiser(world, sched, tcfg);
      write_json(train_out, checkpoint_to_json(result.model));
      const std::string report_path = train_report.empty() ? train_out + ".report.json" : train_report;
      Json report = train_report_to_json(result.report);
      report["checkpoint_hash"] = file_hash(train_out);
      report["world_hash"] = world_hash(world);
      report["config"] = train_config_to_json(tcfg);
      write_json(report_path, report);
      std::cout << "trained " << tcfg.steps << " steps, final loss " << result.report.final_loss << ", validation loss "
                << result.report.validation_loss << (result.report.null_branch_trained ? "" : " (null branch untrained)")
                << "\n";
    } else if (*sample_cmd) {
      const DiffusionModel model = sample_model.load();
      const SamplerKind kind = sampler_kind_from_string(sampler_name);
      const SamplerConfig cfg = sample_flags.build(model.schedule.steps(), sample_seed_value);
      const auto conds = parse_conditions(sample_conds, model.world);
      const RunRecord run = sample_conditions(kind, model, conds, cfg, sample_n);
      Json extra;
      extra["model"] = describe_model(sample_model.src, model);
      extra["conditions"] = conds;
      extra["n_per_condition"] = sample_n;
      const RunFiles files = write_run(sample_out, run, extra, model.world);
      std::cout << run.samples.size() << " samples -> " << sample_out << " (manifest " << files.manifest_hash << ")\n";
    } else if (*eval_cmd) {
      const DiffusionModel model = eval_model.load();
      const EvalOptions opts = eval_flags.build();
      std::vector<NamedRun> runs;
      Json manifest;
      for (const auto& dir : eval_runs) {
        std::string name = fs::path(dir).lexically_normal().filename().string();
        if (name.empty()) name = fs::path(dir).lexically_normal().parent_path().filename().string();
        runs.push_back({name, read_run(dir)});
        manifest["runs"].push_back({{"method", name}, {"manifest_hash", json_hash(read_json(fs::path(dir) / "manifest.json"))}});
      }
      manifest["model"] = describe_model(eval_model.src, model);
      manifest["eval"] = eval_options_json(opts);
      const EvalReport report = aggregate_report(runs, model, opts);
      const std::string hash = write_report(eval_out, report, manifest);
      std::cout << report_csv(report) << "report " << hash << " -> " << eval_out << "\n";
    } else if (*ablate_cmd) {
      const DiffusionModel model = ablate_model.load();
      const AblationAxis axis = ablation_axis_from_string(axis_name);
      const SamplerConfig base = ablate_flags.build(model.schedule.steps(), ablate_seed);
      const auto conds = parse_conditions(ablate_conds, model.world);
      const EvalOptions opts = ablate_eval.build();
      const AblationResult result = run_ablation(axis, model, base, conds, ablate_n, opts);
      Json manifest;
      manifest["axis"] = to_string(axis);
      manifest["model"] = describe_model(ablate_model.src, model);
      manifest["conditions"] = conds;
      manifest["n_per_condition"] = ablate_n;
      manifest["eval"] = eval_options_json(opts);
      for (const auto& run : result.runs) {
        const fs::path dir = fs::path(ablate_out) / ("row_" + run.method);
        Json extra{{"model", manifest["model"]}, {"conditions", conds}, {"n_per_condition", ablate_n}, {"row", run.method}};
        const RunFiles files = write_run(dir, run.run, extra, model.world);
        manifest["rows"].push_back({{"label", run.method}, {"manifest_hash", files.manifest_hash}});
      }
      const std::string hash = write_report(ablate_out, result.report, manifest);
      std::cout << report_csv(result.report) << "ablation " << hash << " -> " << ablate_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mplab

#include "mplab/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace mplab {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string json_hash(const Json& j) { return hex64(fnv1a(j.dump())); }

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

Json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const Json& j) {
  const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw std::invalid_argument("matrix data has the wrong length");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
}

// ---------------------------------------------------------------------------
// World

Json world_to_json(const ToyWorld& world) {
  Json conds = Json::array();
  for (const auto& c : world.conditions) {
    Json comps = Json::array();
    for (const auto& g : c.components)
      comps.push_back({{"mean", vector_to_json(g.mean)}, {"stdev", g.stdev}, {"weight", g.weight}, {"tag", to_string(g.tag)}});
    conds.push_back({{"id", c.id}, {"word", c.word}, {"components", comps}});
  }
  Json attrs = Json::object();
  for (const auto& [word, ref] : world.attribute_words) attrs[word] = {{"condition", ref.condition}, {"component", ref.component}};
  return {{"version", kWorldVersion}, {"d", world.d}, {"conditions", conds}, {"attribute_words", attrs}};
}

ToyWorld world_from_json(const Json& j) {
  if (j.value("version", kWorldVersion) != kWorldVersion) throw std::invalid_argument("unsupported world version");
  ToyWorld world;
  world.d = j.at("d").get<int>();
  for (const auto& c : j.at("conditions")) {
    WorldCondition wc;
    wc.id = c.at("id").get<int>();
    wc.word = c.at("word").get<std::string>();
    for (const auto& g : c.at("components")) {
      GaussianComponent comp;
      comp.mean = vector_from_json(g.at("mean"));
      comp.stdev = g.at("stdev").get<double>();
      comp.weight = g.at("weight").get<double>();
      const auto tag = g.at("tag").get<std::string>();
      if (tag != "majority" && tag != "minority") throw std::invalid_argument("unknown component tag: " + tag);
      comp.tag = tag == "majority" ? ComponentTag::Majority : ComponentTag::Minority;
      wc.components.push_back(std::move(comp));
    }
    world.conditions.push_back(std::move(wc));
  }
  if (j.contains("attribute_words"))
    for (const auto& [word, ref] : j.at("attribute_words").items())
      world.attribute_words[word] = {ref.at("condition").get<int>(), ref.at("component").get<int>()};
  return make_world(std::move(world));
}

std::string world_hash(const ToyWorld& world) { return json_hash(world_to_json(world)); }

// ---------------------------------------------------------------------------
// Model

Json schedule_to_json(const NoiseSchedule& sched) {
  return {{"T", sched.steps()}, {"kind", to_string(sched.kind())}, {"alpha_bar", vector_to_json(sched.alpha_bar())}};
}

NoiseSchedule schedule_from_json(const Json& j) {
  NoiseSchedule sched(schedule_kind_from_string(j.at("kind").get<std::string>()), vector_from_json(j.at("alpha_bar")));
  if (sched.steps() != j.at("T").get<int>()) throw std::invalid_argument("schedule length disagrees with T");
  return sched;
}

namespace {

Json mlp_to_json(const Mlp& net) {
  Json w = Json::array(), b = Json::array();
  for (const auto& m : net.weights()) w.push_back(matrix_to_json(m));
  for (const auto& v : net.biases()) b.push_back(vector_to_json(v));
  return {{"activate_output", net.activate_output()}, {"weights", w}, {"biases", b}};
}

void mlp_from_json(const Json& j, Mlp& net) {
  const auto& w = j.at("weights");
  const auto& b = j.at("biases");
  if (w.size() != net.weights().size() || b.size() != net.biases().size())
    throw std::invalid_argument("checkpoint network has the wrong depth");
  if (j.at("activate_output").get<bool>() != net.activate_output())
    throw std::invalid_argument("checkpoint network has the wrong output activation");
  for (std::size_t k = 0; k < w.size(); ++k) {
    Matrix m = matrix_from_json(w[k]);
    Vector v = vector_from_json(b[k]);
    if (m.rows() != net.weights()[k].rows() || m.cols() != net.weights()[k].cols() || v.size() != net.biases()[k].size())
      throw std::invalid_argument("checkpoint layer shape mismatch");
    net.weights()[k] = std::move(m);
    net.biases()[k] = std::move(v);
  }
}

Mlp mlp_shaped(const Json& j) {
  std::vector<int> sizes;
  const auto& w = j.at("weights");
  if (w.empty()) throw std::invalid_argument("checkpoint network has no layers");
  sizes.push_back(w[0].at("cols").get<int>());
  for (const auto& m : w) sizes.push_back(m.at("rows").get<int>());
  Rng rng(0);
  Mlp net(sizes, j.at("activate_output").get<bool>(), rng);
  mlp_from_json(j, net);
  return net;
}

}  // namespace

Json train_config_to_json(const TrainConfig& cfg) {
  return {{"steps", cfg.steps}, {"batch", cfg.batch},         {"lr", cfg.lr},
          {"dropout", cfg.dropout}, {"seed", cfg.seed},       {"ema_decay", cfg.ema_decay},
          {"attribute_prob", cfg.attribute_prob}, {"hidden", cfg.hidden}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig cfg;
  cfg.steps = j.at("steps").get<int>();
  cfg.batch = j.at("batch").get<int>();
  cfg.lr = j.at("lr").get<double>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.ema_decay = j.at("ema_decay").get<double>();
  cfg.attribute_prob = j.at("attribute_prob").get<double>();
  cfg.hidden = j.at("hidden").get<int>();
  return cfg;
}

Json train_report_to_json(const TrainReport& r) {
  return {{"steps", r.steps},
          {"final_loss", r.final_loss},
          {"validation_loss", r.validation_loss},
          {"null_branch_trained", r.null_branch_trained},
          {"loss_trace", r.loss_trace}};
}

Json checkpoint_to_json(const DiffusionModel& model) {
  const auto* net = dynamic_cast<const MlpDenoiser*>(model.eps.get());
  if (!net) throw std::invalid_argument("only trained models have checkpoints");
  const TextEncoder& text = model.text;
  Json j;
  j["version"] = kCheckpointVersion;
  j["schedule"] = schedule_to_json(model.schedule);
  j["world"] = world_to_json(model.world);
  j["world_hash"] = world_hash(model.world);
  j["vocabulary"] = {{"words", text.vocab().words},
                     {"table", matrix_to_json(text.vocab().table)},
                     {"null_embedding", vector_to_json(text.vocab().null_embedding)},
                     {"placeholder_row", text.vocab().placeholder_row}};
  j["encoder"] = {{"positions", matrix_to_json(text.positions())},
                  {"leading_positions", matrix_to_json(text.leading_positions())},
                  {"slot_map", mlp_to_json(text.slot_map())},
                  {"head", mlp_to_json(text.head())}};
  j["denoiser"] = {{"net", mlp_to_json(net->net())},
                   {"null_embedding", vector_to_json(net->null_embedding())},
                   {"unconditional_trained", net->unconditional_trained()}};
  if (model.train_config) j["train_config"] = train_config_to_json(*model.train_config);
  if (model.train_report) j["train_report"] = train_report_to_json(*model.train_report);
  return j;
}

DiffusionModel model_from_checkpoint(const Json& j) {
  if (!j.contains("version")) throw std::invalid_argument("checkpoint has no version field");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("unsupported checkpoint version " + j.at("version").dump());
  DiffusionModel model;
  model.world = world_from_json(j.at("world"));
  if (world_hash(model.world) != j.at("world_hash").get<std::string>())
    throw std::invalid_argument("checkpoint world hash does not match its world");
  model.schedule = schedule_from_json(j.at("schedule"));
  model.text = TextEncoder(model.world, 0);
  Vocabulary& vocab = model.text.vocab();
  if (j.at("vocabulary").at("words").get<std::vector<std::string>>() != vocab.words)
    throw std::invalid_argument("checkpoint vocabulary does not match its world");
  vocab.table = matrix_from_json(j.at("vocabulary").at("table"));
  vocab.null_embedding = vector_from_json(j.at("vocabulary").at("null_embedding"));
  vocab.placeholder_row = j.at("vocabulary").at("placeholder_row").get<int>();
  const Json& enc = j.at("encoder");
  model.text.positions() = matrix_from_json(enc.at("positions"));
  model.text.leading_positions() = matrix_from_json(enc.at("leading_positions"));
  mlp_from_json(enc.at("slot_map"), model.text.slot_map());
  mlp_from_json(enc.at("head"), model.text.head());
  const Json& den = j.at("denoiser");
  model.eps = std::make_shared<MlpDenoiser>(model.schedule, mlp_shaped(den.at("net")),
                                            vector_from_json(den.at("null_embedding")),
                                            den.at("unconditional_trained").get<bool>());
  if (model.eps->dim() != model.world.d) throw std::invalid_argument("checkpoint network output size differs from d");
  if (j.contains("train_config")) model.train_config = train_config_from_json(j.at("train_config"));
  if (j.contains("train_report")) {
    const Json& r = j.at("train_report");
    TrainReport rep;
    rep.steps = r.at("steps").get<int>();
    rep.final_loss = r.at("final_loss").get<double>();
    rep.validation_loss = r.at("validation_loss").get<double>();
    rep.null_branch_trained = r.at("null_branch_trained").get<bool>();
    rep.loss_trace = r.at("loss_trace").get<std::vector<double>>();
    model.train_report = rep;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Sampler config and records

Json sampler_config_to_json(const SamplerConfig& c) {
  return {{"T", c.T},
          {"w", c.w},
          {"N", c.N},
          {"K", c.K},
          {"lr", c.lr},
          {"lambda", c.lambda},
          {"s_schedule", to_string(c.s_schedule)},
          {"objective", to_string(c.objective)},
          {"init_mode", to_string(c.init_mode)},
          {"init_word", c.init_word},
          {"m", c.m},
          {"position", to_string(c.position)},
          {"fallback", c.fallback},
          {"mc_samples", c.mc_samples},
          {"seed", c.seed},
          {"sgms_lr", c.sgms_lr},
          {"sgms_s_fraction", c.sgms_s_fraction},
          {"cads_tau1", c.cads_tau1},
          {"cads_tau2", c.cads_tau2},
          {"cads_noise_scale", c.cads_noise_scale},
          {"batch", c.batch}};
}

SamplerConfig sampler_config_from_json(const Json& j, SamplerConfig c) {
  if (!j.is_object()) throw std::invalid_argument("sampler config must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (key == "T") c.T = val.get<int>();
    else if (key == "w") c.w = val.get<double>();
    else if (key == "N") c.N = val.get<int>();
    else if (key == "K") c.K = val.get<int>();
    else if (key == "lr") c.lr = val.get<double>();
    else if (key == "lambda") c.lambda = val.get<double>();
    else if (key == "s_schedule") c.s_schedule = s_schedule_from_string(val.get<std::string>());
    else if (key == "objective") c.objective = objective_kind_from_string(val.get<std::string>());
    else if (key == "init_mode") c.init_mode = init_mode_from_string(val.get<std::string>());
    else if (key == "init_word") c.init_word = val.get<std::string>();
    else if (key == "m") c.m = val.get<int>();
    else if (key == "position") c.position = placeholder_position_from_string(val.get<std::string>());
    else if (key == "fallback") c.fallback = val.get<bool>();
    else if (key == "mc_samples") c.mc_samples = val.get<int>();
    else if (key == "seed") c.seed = val.get<std::uint64_t>();
    else if (key == "sgms_lr") c.sgms_lr = val.get<double>();
    else if (key == "sgms_s_fraction") c.sgms_s_fraction = val.get<double>();
    else if (key == "cads_tau1") c.cads_tau1 = val.get<double>();
    else if (key == "cads_tau2") c.cads_tau2 = val.get<double>();
    else if (key == "cads_noise_scale") c.cads_noise_scale = val.get<double>();
    else if (key == "batch") c.batch = val.get<int>();
    else throw std::invalid_argument("unknown sampler config key: " + key);
  }
  return c;
}

Json sample_to_json(const SampleRecord& r) {
  Json obj = Json::array();
  for (const auto& s : r.objective) obj.push_back({{"t", s.t}, {"values", s.values}});
  return {{"index", r.index},
          {"batch", r.batch},
          {"seed", r.seed},
          {"cond", r.cond},
          {"prompt", r.prompt},
          {"z0", vector_to_json(r.z0)},
          {"objective", obj},
          {"optimized_steps", r.optimized_steps},
          {"v_init_norm", r.v_init_norm},
          {"v_final_norm", r.v_final_norm},
          {"v_drift", r.v_drift}};
}

SampleRecord sample_from_json(const Json& j) {
  SampleRecord r;
  r.index = j.at("index").get<int>();
  r.batch = j.at("batch").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.cond = j.at("cond").get<int>();
  r.prompt = j.at("prompt").get<std::string>();
  r.z0 = vector_from_json(j.at("z0"));
  for (const auto& s : j.at("objective")) r.objective.push_back({s.at("t").get<int>(), s.at("values").get<std::vector<double>>()});
  r.optimized_steps = j.at("optimized_steps").get<int>();
  r.v_init_norm = j.at("v_init_norm").get<double>();
  r.v_final_norm = j.at("v_final_norm").get<double>();
  r.v_drift = j.at("v_drift").get<double>();
  if (!all_finite(r.z0)) throw std::invalid_argument("record has a non-finite latent");
  return r;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream ss;
  ss << std::setprecision(10) << x;
  return ss.str();
}

Json num_json(double x) { return std::isnan(x) ? Json(nullptr) : Json(x); }

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "method,count,bpd_mean,bpd_median,bpd_hw,log_density_mean,log_density_hw,minority_hit_rate,minority_hit_hw,"
         "consistency,consistency_hw,precision,recall,in_batch_similarity\n";
  for (const auto& r : report.rows)
    out << r.method << ',' << r.count << ',' << num(r.bpd_mean) << ',' << num(r.bpd_median) << ','
        << num(r.bpd_half_width) << ',' << num(r.log_density_mean) << ',' << num(r.log_density_half_width) << ','
        << num(r.minority_hit_rate) << ',' << num(r.minority_hit_half_width) << ',' << num(r.consistency) << ','
        << num(r.consistency_half_width) << ',' << num(r.precision) << ',' << num(r.recall) << ','
        << num(r.in_batch_similarity) << '\n';
  return out.str();
}

Json report_to_json(const EvalReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"method", r.method},
                    {"count", r.count},
                    {"bpd", {{"mean", num_json(r.bpd_mean)}, {"median", num_json(r.bpd_median)}, {"half_width", num_json(r.bpd_half_width)}}},
                    {"log_density", {{"mean", num_json(r.log_density_mean)}, {"half_width", num_json(r.log_density_half_width)}}},
                    {"minority_hit_rate", {{"mean", num_json(r.minority_hit_rate)}, {"half_width", num_json(r.minority_hit_half_width)}}},
                    {"consistency", {{"mean", num_json(r.consistency)}, {"half_width", num_json(r.consistency_half_width)}}},
                    {"precision", num_json(r.precision)},
                    {"recall", num_json(r.recall)},
                    {"in_batch_similarity", num_json(r.in_batch_similarity)}});
  return {{"rows", rows}};
}

// ---------------------------------------------------------------------------
// Files

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

RunFiles write_run(const fs::path& dir, const RunRecord& run, const Json& manifest_extra, const ToyWorld& world) {
  RunFiles files;
  files.manifest = dir / "manifest.json";
  files.records = dir / "records.jsonl";
  files.timing = dir / "timing.json";

  std::string lines;
  for (const auto& s : run.samples) lines += sample_to_json(s).dump() + "\n";
  write_text(files.records, lines);

  Json manifest = manifest_extra;
  manifest["version"] = kManifestVersion;
  manifest["sampler"] = to_string(run.sampler);
  manifest["config"] = sampler_config_to_json(run.config);
  manifest["config_hash"] = json_hash(manifest["config"]);
  manifest["n"] = run.samples.size();
  manifest["records_hash"] = hex64(fnv1a(lines));
  write_json(files.manifest, manifest);
  files.manifest_hash = json_hash(manifest);
  write_json(files.timing, {{"wall_clock_seconds", run.wall_clock_seconds}, {"manifest_hash", files.manifest_hash}});

  if (world.d == 2) {
    std::map<int, std::vector<Latent>> by_cond;
    for (const auto& s : run.samples) by_cond[s.cond].push_back(s.z0);
    for (const auto& [cond, pts] : by_cond) {
      fs::path p = dir / ("scatter_c" + std::to_string(cond) + ".svg");
      write_text(p, scatter_svg(world, cond, pts));
      files.plots.push_back(p);
    }
  }
  return files;
}

RunRecord read_run(const fs::path& dir) {
  const Json manifest = read_json(dir / "manifest.json");
  if (manifest.value("version", 0) != kManifestVersion) throw std::invalid_argument("unsupported manifest version in " + dir.string());
  RunRecord run;
  run.sampler = sampler_kind_from_string(manifest.at("sampler").get<std::string>());
  run.config = sampler_config_from_json(manifest.at("config"));
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw std::runtime_error("cannot read " + (dir / "records.jsonl").string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      run.samples.push_back(sample_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("records.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (run.samples.size() != manifest.at("n").get<std::size_t>())
    throw std::invalid_argument("record count differs from the manifest in " + dir.string());
  return run;
}

std::string scatter_svg(const ToyWorld& world, int cond, const std::vector<Latent>& samples) {
  if (world.d != 2) throw std::invalid_argument("scatter plots need d = 2");
  const WorldCondition& wc = world.condition(cond);
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  const auto grow = [&](double x, double y, double r) {
    lo_x = std::min(lo_x, x - r);
    hi_x = std::max(hi_x, x + r);
    lo_y = std::min(lo_y, y - r);
    hi_y = std::max(hi_y, y + r);
  };
  for (const auto& c : wc.components) grow(c.mean[0], c.mean[1], 3.0 * c.stdev);
  for (const auto& s : samples) grow(s[0], s[1], 0.0);
  const double size = 480.0, pad = 20.0;
  const double span = std::max(hi_x - lo_x, hi_y - lo_y);
  const double scale = (size - 2 * pad) / (span > 0 ? span : 1.0);
  const auto px = [&](double x) { return pad + (x - lo_x) * scale; };
  const auto py = [&](double y) { return size - pad - (y - lo_y) * scale; };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n"
      << "<title>condition " << cond << " (" << wc.word << "), " << samples.size() << " samples</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& c : wc.components)
    if (c.tag == ComponentTag::Minority)
      svg << "<circle cx=\"" << px(c.mean[0]) << "\" cy=\"" << py(c.mean[1]) << "\" r=\"" << 2.0 * c.stdev * scale
          << "\" fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& s : samples) {
    const bool minority = classify_component(world, cond, s).tag == ComponentTag::Minority;
    svg << "<circle cx=\"" << px(s[0]) << "\" cy=\"" << py(s[1]) << "\" r=\"2.5\" fill=\""
        << (minority ? "#d62728" : "#1f77b4") << "\" fill-opacity=\"0.7\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mplab

#include "gridtrack/config.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "gridtrack/error.hpp"
#include "text.hpp"

namespace gridtrack {

namespace {

template <class T>
T number(std::string_view key, std::string_view value) {
  const auto v = text::parse_number<T>(value);
  if (!v) throw ConfigError("config: bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  return *v;
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

void assign(RunConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "data") cfg.data = value;
  else if (key == "format") cfg.format = value;
  else if (key == "year_first") cfg.year_first = number<int>(key, value);
  else if (key == "year_last") cfg.year_last = number<int>(key, value);
  else if (key == "cell_size") cfg.cell_size = number<double>(key, value);
  else if (key == "epochs") cfg.epochs = number<int>(key, value);
  else if (key == "patience") cfg.patience = number<int>(key, value);
  else if (key == "lr") cfg.lr = number<double>(key, value);
  else if (key == "dropout") cfg.dropout = number<double>(key, value);
  else if (key == "hidden") cfg.hidden = number<int>(key, value);
  else if (key == "clip_norm") cfg.clip_norm = number<double>(key, value);
  else if (key == "seed") cfg.seed = number<std::uint64_t>(key, value);
  else if (key == "split_seed") {
    if (value.empty()) cfg.split_seed.reset();
    else cfg.split_seed = number<std::uint64_t>(key, value);
  } else if (key == "features") cfg.features = value;
  else if (key == "bearing_sincos") cfg.bearing_sincos = boolean(key, value);
  else if (key == "layers") cfg.layers = number<int>(key, value);
  else if (key == "allow_layer_override") cfg.allow_layer_override = boolean(key, value);
  else if (key == "warmup") cfg.warmup = number<int>(key, value);
  else if (key == "horizon") cfg.horizon = number<int>(key, value);
  else if (key == "out") cfg.out = value;
  else throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

TrainingConfig RunConfig::training() const {
  TrainingConfig t;
  t.epochs = epochs;
  t.patience = patience;
  t.lr = lr;
  t.dropout = dropout;
  t.hidden = hidden;
  t.clip_norm = clip_norm > 0.0 ? std::optional<double>(clip_norm) : std::nullopt;
  t.seed = seed;
  t.features = parse_feature_list(features, bearing_sincos);
  t.layers = layers;
  t.allow_layer_override = allow_layer_override;
  return t;
}

void RunConfig::validate() const {
  if (format != "hurdat2" && format != "csv") throw ConfigError("format must be hurdat2 or csv");
  if (year_first > year_last) throw ConfigError("year_first must not exceed year_last");
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (hidden < 1) throw ConfigError("hidden must be at least 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (warmup < 2) throw ConfigError("warmup must be at least 2");
  if (horizon < 0 || horizon > kMaxHorizonHours || horizon % kStepHours != 0) {
    throw ConfigError("horizon must be a multiple of 6 in [0, 120]");
  }
  if (layers != kDefaultLayers && !allow_layer_override) {
    throw ConfigError("layers differs from 3; set allow_layer_override=true");
  }
  (void)parse_feature_list(features, bearing_sincos);
}

RunConfig load_config(std::istream& in, RunConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    assign(base, text::trim(t.substr(0, eq)), text::trim(t.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return load_config(in, std::move(base));
}

void save_config(std::ostream& out, const RunConfig& cfg) {
  out << "data=" << cfg.data << '\n'
      << "format=" << cfg.format << '\n'
      << "year_first=" << cfg.year_first << '\n'
      << "year_last=" << cfg.year_last << '\n'
      << "cell_size=" << text::format_double(cfg.cell_size) << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "patience=" << cfg.patience << '\n'
      << "lr=" << text::format_double(cfg.lr) << '\n'
      << "dropout=" << text::format_double(cfg.dropout) << '\n'
      << "hidden=" << cfg.hidden << '\n'
      << "clip_norm=" << text::format_double(cfg.clip_norm) << '\n'
      << "seed=" << cfg.seed << '\n'
      << "split_seed=" << (cfg.split_seed ? std::to_string(*cfg.split_seed) : std::string()) << '\n'
      << "features=" << cfg.features << '\n'
      << "bearing_sincos=" << (cfg.bearing_sincos ? "true" : "false") << '\n'
      << "layers=" << cfg.layers << '\n'
      << "allow_layer_override=" << (cfg.allow_layer_override ? "true" : "false") << '\n'
      << "warmup=" << cfg.warmup << '\n'
      << "horizon=" << cfg.horizon << '\n'
      << "out=" << cfg.out << '\n';
}

void save_config_file(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_config(out, cfg);
}

}  // namespace gridtrack

#include "brushgym/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>
#include <vector>

namespace brushgym {

namespace {

using FieldPtr = std::variant<int RunConfig::*, long RunConfig::*, uint64_t RunConfig::*,
                              double RunConfig::*, bool RunConfig::*, std::string RunConfig::*>;

struct Field {
  const char* section;
  const char* key;
  FieldPtr ptr;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"env", "canvas_h", &RunConfig::canvas_h},
      {"env", "canvas_w", &RunConfig::canvas_w},
      {"env", "channels", &RunConfig::channels},
      {"env", "window", &RunConfig::window},
      {"env", "l_max", &RunConfig::l_max},
      {"env", "w_max", &RunConfig::w_max},
      {"env", "opacity", &RunConfig::opacity},

      {"training", "seed", &RunConfig::seed},
      {"training", "episodes", &RunConfig::episodes},
      {"training", "batch_episodes", &RunConfig::batch_episodes},
      {"training", "update_epochs", &RunConfig::update_epochs},
      {"training", "workers", &RunConfig::workers},
      {"training", "learning_rate", &RunConfig::learning_rate},
      {"training", "gamma", &RunConfig::gamma},
      {"training", "clip", &RunConfig::clip},
      {"training", "entropy_coef", &RunConfig::entropy_coef},
      {"training", "value_coef", &RunConfig::value_coef},
      {"training", "mean_reg", &RunConfig::mean_reg},
      {"training", "max_grad_norm", &RunConfig::max_grad_norm},
      {"training", "log_std_init", &RunConfig::log_std_init},
      {"training", "curriculum", &RunConfig::curriculum},
      {"training", "horizon_init", &RunConfig::horizon_init},
      {"training", "horizon_max", &RunConfig::horizon_max},
      {"training", "horizon_grow_every", &RunConfig::horizon_grow_every},
      {"training", "r_thresh_final", &RunConfig::r_thresh_final},
      {"training", "r_thresh_ramp", &RunConfig::r_thresh_ramp},
      {"training", "strokes_per_canvas", &RunConfig::strokes_per_canvas},
      {"training", "log_every", &RunConfig::log_every},
      {"training", "checkpoint_every", &RunConfig::checkpoint_every},
      {"training", "preset", &RunConfig::preset},
      {"training", "log_wall_time", &RunConfig::log_wall_time},

      {"bc", "svg_dir", &RunConfig::svg_dir},
      {"bc", "epochs", &RunConfig::bc_epochs},
      {"bc", "batch", &RunConfig::bc_batch},
      {"bc", "learning_rate", &RunConfig::bc_learning_rate},
      {"bc", "val_fraction", &RunConfig::bc_val_fraction},
      {"bc", "w_demo", &RunConfig::w_demo},
      {"bc", "ink", &RunConfig::ink},
      {"bc", "margin_frac", &RunConfig::margin_frac},
      {"bc", "replay_margin", &RunConfig::bc_replay_margin},

      {"calibration", "a_p_min", &RunConfig::a_p_min},
      {"calibration", "a_p_max", &RunConfig::a_p_max},
      {"calibration", "a_step", &RunConfig::a_step},
      {"calibration", "sweep_samples", &RunConfig::sweep_samples},
      {"calibration", "two_sided", &RunConfig::two_sided},
      {"calibration", "restrict_to_knee", &RunConfig::restrict_to_knee},
      {"calibration", "sim_p_sat", &RunConfig::sim_p_sat},
      {"calibration", "sim_w_max", &RunConfig::sim_w_max},
      {"calibration", "sim_kappa", &RunConfig::sim_kappa},
      {"calibration", "sim_noise", &RunConfig::sim_noise},
      {"calibration", "sim_seed", &RunConfig::sim_seed},
      {"calibration", "travel_clearance", &RunConfig::travel_clearance},
      {"calibration", "pressure_depth_scale", &RunConfig::pressure_depth_scale},
      {"calibration", "correspondences_csv", &RunConfig::correspondences_csv},

      {"style", "enabled", &RunConfig::style_enabled},
      {"style", "mean", &RunConfig::style_mean},
      {"style", "stddev", &RunConfig::style_stddev},
      {"style", "clamp_lo", &RunConfig::style_clamp_lo},
      {"style", "clamp_hi", &RunConfig::style_clamp_hi},

      {"rollout", "max_strokes", &RunConfig::rollout_max_strokes},
      {"rollout", "max_dabs", &RunConfig::rollout_max_dabs},
      {"rollout", "thresh", &RunConfig::rollout_thresh},
      {"rollout", "stop_on_value", &RunConfig::rollout_stop_on_value},

      {"eval", "patches", &RunConfig::eval_patches},
      {"eval", "patch_size", &RunConfig::eval_patch_size},
      {"eval", "max_strokes", &RunConfig::eval_max_strokes},
      {"eval", "max_dabs", &RunConfig::eval_max_dabs},
      {"eval", "thresh", &RunConfig::eval_thresh},
      {"eval", "stop_on_value", &RunConfig::eval_stop_on_value},
      {"eval", "seed", &RunConfig::eval_seed},

      {"paths", "corpus_dir", &RunConfig::corpus_dir},
      {"paths", "corpus_count", &RunConfig::corpus_count},
      {"paths", "corpus_seed", &RunConfig::corpus_seed},
      {"paths", "output_dir", &RunConfig::output_dir},
  };
  return table;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void assign(const Field& field, RunConfig& cfg, const std::string& raw, const std::string& where) {
  std::string value = trim(raw);
  auto fail = [&](const char* what) {
    throw UserError("config " + where + ": " + what + " for " + field.section + "." + field.key +
                    " (got '" + value + "')");
  };
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          std::string v = value;
          if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
            v = v.substr(1, v.size() - 2);
            std::string out;
            for (size_t i = 0; i < v.size(); ++i) {
              if (v[i] == '\\' && i + 1 < v.size()) {
                out += v[++i];
              } else {
                out += v[i];
              }
            }
            v = out;
          }
          cfg.*member = v;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true") {
            cfg.*member = true;
          } else if (value == "false") {
            cfg.*member = false;
          } else {
            fail("expected true/false");
          }
        } else if constexpr (std::is_same_v<T, double>) {
          char* end = nullptr;
          double v = std::strtod(value.c_str(), &end);
          if (end == value.c_str() || *end != '\0') fail("expected a number");
          cfg.*member = v;
        } else {
          char* end = nullptr;
          long long v = std::strtoll(value.c_str(), &end, 10);
          if constexpr (std::is_same_v<T, uint64_t>) {
            unsigned long long u = std::strtoull(value.c_str(), &end, 10);
            if (end == value.c_str() || *end != '\0') fail("expected an integer");
            cfg.*member = static_cast<uint64_t>(u);
            return;
          }
          if (end == value.c_str() || *end != '\0') fail("expected an integer");
          cfg.*member = static_cast<T>(v);
        }
      },
      field.ptr);
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
  RunConfig cfg;
  merge_config_file(cfg, path);
  return cfg;
}

void merge_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open config file " + path);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string where = path + ":" + std::to_string(line_no);
    std::string text = line;
    // strip comments outside quotes
    bool in_quote = false;
    for (size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '"') in_quote = !in_quote;
      if (text[i] == '#' && !in_quote) {
        text = text.substr(0, i);
        break;
      }
    }
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw UserError("config " + where + ": malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw UserError("config " + where + ": expected key = value");
    }
    std::string key = trim(text.substr(0, eq));
    const Field* field = find_field(section, key);
    if (!field) {
      throw UserError("config " + where + ": unknown key '" + section + "." + key + "'");
    }
    assign(*field, cfg, text.substr(eq + 1), where);
  }
}

void apply_config_override(RunConfig& cfg, const std::string& assignment) {
  size_t eq = assignment.find('=');
  size_t dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw UserError("override must look like section.key=value (got '" + assignment + "')");
  }
  std::string section = trim(assignment.substr(0, dot));
  std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const Field* field = find_field(section, key);
  if (!field) throw UserError("unknown config key '" + section + "." + key + "'");
  assign(*field, cfg, assignment.substr(eq + 1), "<override>");
}

std::string emit_config(const RunConfig& cfg) {
  std::ostringstream out;
  const char* current = "";
  char buf[64];
  for (const Field& f : fields()) {
    if (std::strcmp(current, f.section) != 0) {
      if (*current) out << "\n";
      out << "[" << f.section << "]\n";
      current = f.section;
    }
    out << f.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out << '"';
            for (char c : cfg.*member) {
              if (c == '"' || c == '\\') out << '\\';
              out << c;
            }
            out << '"';
          } else if constexpr (std::is_same_v<T, bool>) {
            out << ((cfg.*member) ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            std::snprintf(buf, sizeof(buf), "%.17g", cfg.*member);
            out << buf;
          } else {
            out << (cfg.*member);
          }
        },
        f.ptr);
    out << "\n";
  }
  return out.str();
}

void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw UserError(std::string("config: ") + msg);
  };
  require(cfg.canvas_h >= 8 && cfg.canvas_w >= 8, "canvas must be at least 8x8");
  require(cfg.channels == 1 || cfg.channels == 3, "channels must be 1 or 3");
  require(cfg.window >= 36 && cfg.window % 2 == 0,
          "window must be even and at least 36 (conv stack minimum)");
  require(cfg.l_max >= 0.0 && cfg.w_max >= 0.0, "l_max/w_max must be nonnegative");
  require(cfg.opacity > 0.0 && cfg.opacity <= 1.0, "opacity must be in (0, 1]");
  require(cfg.episodes >= 0, "episodes must be nonnegative");
  require(cfg.batch_episodes >= 1, "batch_episodes must be positive");
  require(cfg.update_epochs >= 1, "update_epochs must be positive");
  require(cfg.workers >= 1 && cfg.workers <= 64, "workers must be in [1, 64]");
  require(cfg.learning_rate >= 0.0, "learning_rate must be nonnegative");
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "gamma must be in [0, 1]");
  require(cfg.clip > 0.0, "clip must be positive");
  require(cfg.horizon_init >= 1 && cfg.horizon_max >= cfg.horizon_init,
          "horizon range is invalid");
  require(cfg.strokes_per_canvas >= 1, "strokes_per_canvas must be positive");
  require(cfg.preset == "desk" || cfg.preset == "full", "preset must be 'desk' or 'full'");
  require(cfg.bc_epochs >= 1, "bc epochs must be positive");
  require(cfg.bc_val_fraction >= 0.0 && cfg.bc_val_fraction < 1.0,
          "bc val_fraction must be in [0, 1)");
  require(cfg.w_demo > 0.0 && cfg.w_demo <= 1.0, "w_demo must be in (0, 1]");
  require(cfg.a_p_min < cfg.a_p_max, "a_p_min must be below a_p_max");
  require(cfg.a_step > 0.0, "a_step must be positive");
  require(cfg.sweep_samples >= 4, "sweep_samples must be at least 4");
  require(cfg.sim_p_sat > 0.0, "sim_p_sat must be positive");
  require(cfg.style_stddev >= 0.0, "style stddev must be nonnegative");
  require(cfg.style_clamp_lo <= cfg.style_clamp_hi, "style clamp bounds are inverted");
  require(cfg.rollout_max_strokes >= 1 && cfg.rollout_max_dabs >= 1, "rollout budget invalid");
  require(cfg.eval_patches >= 1 && cfg.eval_patch_size >= 8, "eval patch config invalid");
  require(cfg.corpus_count >= 1, "corpus_count must be positive");
  require(!cfg.output_dir.empty(), "output_dir must not be empty");
}

bool config_equal(const RunConfig& a, const RunConfig& b) {
  bool equal = true;
  for (const Field& f : fields()) {
    std::visit([&](auto member) { equal = equal && (a.*member == b.*member); }, f.ptr);
  }
  return equal;
}

}  // namespace brushgym

#include "rbsr/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace rbsr {

const std::filesystem::path& RunConfig::require_path(const std::string& key) const {
  const auto it = paths.find(key);
  if (it == paths.end())
    throw ConfigError(ConfigError::Kind::MissingPath, paths_line, "missing required path [paths] " + key);
  return it->second;
}

std::optional<std::filesystem::path> RunConfig::path(const std::string& key) const {
  const auto it = paths.find(key);
  if (it == paths.end())
    return std::nullopt;
  return it->second;
}

RunConfig default_config(bool desk_scale) {
  RunConfig c;
  if (!desk_scale) {
    c.discriminator.input_size = c.lookalike_schedule.crop;
    return c;
  }
  c.lookalike = {2, 16};
  c.sr = {4, 16, 4};
  c.e2e = {6, 16, 4};
  c.discriminator = {8, 3, 64, 32};
  for (TrainSchedule* s : {&c.lookalike_schedule, &c.sr_schedule, &c.e2e_schedule}) {
    s->batch = 4;
    s->crop = 32;
  }
  c.lookalike_schedule.phase1_epochs = 25;
  c.lookalike_schedule.phase2_epochs = 75;
  c.lookalike_schedule.decay_every = 20;
  c.sr_schedule.phase1_epochs = 100;
  c.sr_schedule.decay_every = 25;
  c.e2e_schedule.phase1_epochs = 100;
  c.e2e_schedule.decay_every = 20;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Binder {
  std::string type;
  std::function<void(const std::string&, int)> set;
};

template <class I>
std::function<void(const std::string&, int)> bind_int(I* slot, long long lo) {
  return [slot, lo](const std::string& v, int line) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError(ConfigError::Kind::TypeMismatch, line, "expected an integer, got '" + v + "'");
    if (x < lo)
      throw ConfigError(ConfigError::Kind::TypeMismatch, line, "value " + v + " below minimum " + std::to_string(lo));
    *slot = I(x);
  };
}

std::function<void(const std::string&, int)> bind_real(double* slot, bool positive) {
  return [slot, positive](const std::string& v, int line) {
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
      throw ConfigError(ConfigError::Kind::TypeMismatch, line, "expected a number, got '" + v + "'");
    if (positive ? !(x > 0.0) : !(x >= 0.0))
      throw ConfigError(ConfigError::Kind::TypeMismatch, line, "value " + v + " out of range");
    *slot = x;
  };
}

std::function<void(const std::string&, int)> bind_bool(bool* slot) {
  return [slot](const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes")
      *slot = true;
    else if (v == "false" || v == "0" || v == "no")
      *slot = false;
    else
      throw ConfigError(ConfigError::Kind::TypeMismatch, line, "expected true or false, got '" + v + "'");
  };
}

void bind_schedule(std::map<std::string, Binder>& keys, const std::string& section, TrainSchedule* s,
                   bool two_phase) {
  if (two_phase) {
    keys[section + ".phase1_epochs"] = {"int", bind_int(&s->phase1_epochs, 0)};
    keys[section + ".phase2_epochs"] = {"int", bind_int(&s->phase2_epochs, 0)};
  } else {
    keys[section + ".epochs"] = {"int", bind_int(&s->phase1_epochs, 0)};
  }
  keys[section + ".lr0"] = {"real", bind_real(&s->lr0, true)};
  keys[section + ".decay_every"] = {"int", bind_int(&s->decay_every, 1)};
  keys[section + ".decay_factor"] = {"real", bind_real(&s->decay_factor, true)};
  keys[section + ".checkpoint_every"] = {"int", bind_int(&s->checkpoint_every, 0)};
  keys[section + ".batch"] = {"int", bind_int(&s->batch, 1)};
  keys[section + ".crop"] = {"int", bind_int(&s->crop, 1)};
  keys[section + ".seed"] = {"int", bind_int(&s->seed, 0)};
}

const char* const kPathKeys[] = {"lookalike_manifest",   "sr_manifest",    "e2e_manifest",
                                 "lookalike_checkpoint", "sr_checkpoint",  "e2e_checkpoint",
                                 "output_dir",           "log_dir"};

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, bool desk_scale) {
  RunConfig c = default_config(desk_scale);
  std::map<std::string, Binder> keys;
  keys["lookalike.blocks"] = {"int", bind_int(&c.lookalike.n_res_blocks, 1)};
  keys["lookalike.channels"] = {"int", bind_int(&c.lookalike.channels, 1)};
  for (auto [name, sr] : {std::pair{"sr", &c.sr}, std::pair{"e2e", &c.e2e}}) {
    const std::string s = name;
    keys[s + ".blocks"] = {"int", bind_int(&sr->n_res_blocks, 1)};
    keys[s + ".channels"] = {"int", bind_int(&sr->channels, 1)};
    keys[s + ".scale"] = {"int", [sr](const std::string& v, int line) {
                            bind_int(&sr->scale, 1)(v, line);
                            if (sr->scale != 4)
                              throw ConfigError(ConfigError::Kind::TypeMismatch, line, "only scale 4 is supported");
                          }};
  }
  keys["discriminator.base_channels"] = {"int", bind_int(&c.discriminator.base_channels, 1)};
  keys["discriminator.stages"] = {"int", bind_int(&c.discriminator.n_stages, 1)};
  keys["discriminator.dense_width"] = {"int", bind_int(&c.discriminator.dense_width, 1)};

  TrainSchedule* all[] = {&c.lookalike_schedule, &c.sr_schedule, &c.e2e_schedule};
  keys["schedule.batch"] = {"int", [all](const std::string& v, int line) {
                              for (auto* s : all) bind_int(&s->batch, 1)(v, line);
                            }};
  keys["schedule.crop"] = {"int", [all](const std::string& v, int line) {
                             for (auto* s : all) bind_int(&s->crop, 1)(v, line);
                           }};
  keys["schedule.seed"] = {"int", [all](const std::string& v, int line) {
                             for (auto* s : all) bind_int(&s->seed, 0)(v, line);
                           }};
  bind_schedule(keys, "schedule.lookalike", &c.lookalike_schedule, true);
  bind_schedule(keys, "schedule.sr", &c.sr_schedule, false);
  bind_schedule(keys, "schedule.e2e", &c.e2e_schedule, false);

  for (const char* w : {"alpha", "beta", "gamma"}) {
    double* slot = w[0] == 'a' ? &c.lookalike_schedule.weights.alpha
                   : w[0] == 'b' ? &c.lookalike_schedule.weights.beta
                                 : &c.lookalike_schedule.weights.gamma;
    keys[std::string("loss.") + w] = {"real", bind_real(slot, false)};
  }
  keys["loss.tap_block"] = {"int", bind_int(&c.tap_block, 0)};
  keys["run.deterministic"] = {"bool", bind_bool(&c.deterministic)};
  keys["run.threads"] = {"int", bind_int(&c.threads, 0)};
  for (const char* k : kPathKeys)
    keys[std::string("paths.") + k] = {"path", [&c, k, base_dir](const std::string& v, int line) {
                                         std::string p = v;
                                         if (p.size() >= 2 && p.front() == '"' && p.back() == '"')
                                           p = p.substr(1, p.size() - 2);
                                         if (p.empty())
                                           throw ConfigError(ConfigError::Kind::TypeMismatch, line, "empty path");
                                         std::filesystem::path path(p);
                                         c.paths[k] = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
                                       }};

  const char* sections[] = {"lookalike", "sr",          "e2e",          "discriminator", "schedule", "schedule.lookalike",
                            "schedule.sr", "schedule.e2e", "loss", "paths",         "run"};

  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  c.paths_line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos)
      s = s.substr(0, hash);
    s = trim(s);
    if (s.empty())
      continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(ConfigError::Kind::Syntax, line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      bool known = false;
      for (const char* k : sections) known = known || section == k;
      if (!known)
        throw ConfigError(ConfigError::Kind::UnknownKey, line, "unknown section [" + section + "]");
      if (section == "paths")
        c.paths_line = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ConfigError::Kind::Syntax, line, "expected key = value");
    if (section.empty())
      throw ConfigError(ConfigError::Kind::Syntax, line, "key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto it = keys.find(section + "." + key);
    if (it == keys.end())
      throw ConfigError(ConfigError::Kind::UnknownKey, line, "unknown key '" + key + "' in [" + section + "]");
    it->second.set(value, line);
  }
  if (c.paths_line == 0)
    c.paths_line = line;
  c.discriminator.input_size = c.lookalike_schedule.crop;
  c.hash = fnv1a_hex(describe_config(c));
  return c;
}

RunConfig load_config(const std::filesystem::path& path, bool desk_scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path(), desk_scale);
}

std::string describe_config(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "lookalike.blocks=" << c.lookalike.n_res_blocks << "\nlookalike.channels=" << c.lookalike.channels << "\n";
  for (auto [name, sr] : {std::pair{"sr", &c.sr}, std::pair{"e2e", &c.e2e}})
    o << name << ".blocks=" << sr->n_res_blocks << "\n"
      << name << ".channels=" << sr->channels << "\n"
      << name << ".scale=" << sr->scale << "\n";
  o << "discriminator=" << c.discriminator.base_channels << "," << c.discriminator.n_stages << ","
    << c.discriminator.dense_width << "," << c.discriminator.input_size << "\n";
  for (auto [name, s] : {std::pair{"lookalike", &c.lookalike_schedule}, std::pair{"sr", &c.sr_schedule},
                         std::pair{"e2e", &c.e2e_schedule}})
    o << "schedule." << name << "=" << s->phase1_epochs << "," << s->phase2_epochs << "," << s->lr0 << ","
      << s->decay_every << "," << s->decay_factor << "," << s->batch << "," << s->crop << "," << s->seed << ","
      << s->checkpoint_every << "," << s->weights.alpha << "," << s->weights.beta << "," << s->weights.gamma
      << "\n";
  o << "loss.tap_block=" << c.tap_block << "\nrun.deterministic=" << c.deterministic << "\n";
  for (const auto& [k, v] : c.paths) o << "paths." << k << "=" << v.string() << "\n";
  return o.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rbsr

// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slim/error.hpp"

namespace slim::pipeline {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename N>
N parse_num(const std::string& key, const std::string& v) {
  N out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

using Section = std::map<std::string, std::string>;

struct Reader {
  std::string section;
  Section& kv;
  std::set<std::string> used;

  bool get(const std::string& key, std::string& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return false;
    used.insert(key);
    out = it->second;
    return true;
  }
  template <typename N>
  void num(const std::string& key, N& out) {
    std::string v;
    if (get(key, v)) out = parse_num<N>(section + "." + key, v);
  }
  void finish() const {
    for (const auto& [k, v] : kv) {
      if (!used.count(k)) throw ConfigError("unknown key '" + k + "' in [" + section + "]");
    }
  }
};

void apply_task_section(Reader& r, TaskEntry& entry) {
  auto& spec = entry.spec;
  r.num("noise_sigma", spec.noise_sigma);
  if (auto* n = std::get_if<degrade::NoiseSpec>(&spec.kind)) {
    r.num("sigma", n->sigma);
  } else if (auto* rain = std::get_if<degrade::RainSpec>(&spec.kind)) {
    r.num("streaks", rain->streaks);
    r.num("length", rain->length);
    r.num("angle", rain->angle);
    r.num("intensity", rain->intensity);
    r.num("thickness", rain->thickness);
  } else if (auto* haze = std::get_if<degrade::HazeSpec>(&spec.kind)) {
    r.num("beta", haze->beta);
    r.num("airlight", haze->airlight);
    std::string mode;
    if (r.get("mode", mode)) {
      if (mode == "paper") {
        haze->mode = degrade::HazeMode::kPaper;
      } else if (mode == "scattering") {
        haze->mode = degrade::HazeMode::kScattering;
      } else {
        throw ConfigError("haze mode must be paper or scattering, got '" + mode + "'");
      }
    }
  }
}

}  // namespace

std::string_view profile_name(Profile p) { return p == Profile::kDesk ? "desk" : "full"; }

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or full)");
}

std::vector<TaskEntry> parse_task_list(const std::string& list, int size) {
  std::vector<TaskEntry> out;
  for (const auto& name : split(list, ',')) {
    const auto task = degrade::parse_task(name);
    for (const auto& e : out) {
      if (e.task == task) throw ConfigError("task '" + name + "' listed twice");
    }
    out.push_back({task, degrade::default_spec(task, size, size)});
  }
  if (out.empty()) throw ConfigError("task list is empty");
  return out;
}

RunConfig default_config(Profile profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == Profile::kDesk) {
    c.arch.omega = 30;
    c.arch.c_de = 8;
    c.data.size = 32;
    c.data.train_per_task = 100;
    c.data.eval_per_task = 20;
    c.wab.epochs = 300;
  } else {
    c.arch.omega = 64;
    c.arch.c_de = 16;
    c.data.size = 64;
    c.data.train_per_task = 400;
    c.data.eval_per_task = 50;
    c.wab.epochs = 2000;
  }
  c.data.tasks = parse_task_list("noise15,noise25,noise50,rain,haze", c.data.size);
  c.wab.seed = c.ws.seed = c.seed;
  return c;
}

void RunConfig::validate() const {
  arch.validate();
  if (arch.num_tasks != arch.num_widths()) {
    throw ConfigError("number of tasks (" + std::to_string(arch.num_tasks) + ") must equal number of widths (" +
                      std::to_string(arch.num_widths()) + ")");
  }
  if (data.size < 11) throw ConfigError("data.size must be >= 11 (SSIM window)");
  if (data.train_per_task < 1 || data.eval_per_task < 1) throw ConfigError("per-task sample counts must be >= 1");
  if (data.tasks.empty()) throw ConfigError("no tasks configured");
  for (const auto& t : data.tasks) t.spec.validate();
  if (wab.epochs < 0 || wab.batch < 1 || !(wab.lr > 0) || !(wab.lr_final > 0)) throw ConfigError("invalid [wab] settings");
  if (ws.epochs < 0 || ws.batch < 1 || !(ws.lr > 0)) throw ConfigError("invalid [ws] settings");
  if (ws.target < 0.0 || ws.target > 1.0) throw ConfigError("ws.target must lie in [0,1]");
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::vector<std::string> order;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      current = trim(std::string_view(t).substr(1, t.size() - 2));
      if (sections.count(current)) throw ConfigError("section [" + current + "] appears twice");
      sections[current];
      order.push_back(current);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || current.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value inside a section");
    }
    const auto key = trim(std::string_view(t).substr(0, eq));
    if (!sections[current].emplace(key, trim(std::string_view(t).substr(eq + 1))).second) {
      throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
    }
  }

  Profile profile = Profile::kDesk;
  if (auto it = sections.find("run"); it != sections.end()) {
    if (auto p = it->second.find("profile"); p != it->second.end()) profile = parse_profile(p->second);
  }
  RunConfig c = default_config(profile);

  // [data] first: the task list and patch size seed the per-task specs.
  if (auto it = sections.find("data"); it != sections.end()) {
    Reader r{"data", it->second, {}};
    r.num("size", c.data.size);
    r.num("train_per_task", c.data.train_per_task);
    r.num("eval_per_task", c.data.eval_per_task);
    std::string tasks;
    if (r.get("tasks", tasks)) {
      c.data.tasks = parse_task_list(tasks, c.data.size);
    } else {
      std::string names;
      for (const auto& e : c.data.tasks) names += (names.empty() ? "" : ",") + std::string(degrade::task_name(e.task));
      c.data.tasks = parse_task_list(names, c.data.size);
    }
    r.finish();
  }

  for (const auto& name : order) {
    auto& kv = sections[name];
    Reader r{name, kv, {}};
    if (name == "run") {
      std::string ignored;
      r.get("profile", ignored);
      r.num("seed", c.seed);
    } else if (name == "arch") {
      r.num("omega", c.arch.omega);
      std::string ratios;
      if (r.get("ratios", ratios)) {
        c.arch.ratios.clear();
        for (const auto& v : split(ratios, ',')) c.arch.ratios.push_back(parse_num<double>("arch.ratios", v));
      }
      r.num("blocks", c.arch.blocks);
      r.num("c_de", c.arch.c_de);
      r.num("kernel", c.arch.kernel);
      r.num("num_tasks", c.arch.num_tasks);
    } else if (name == "wab") {
      r.num("epochs", c.wab.epochs);
      r.num("batch", c.wab.batch);
      r.num("lr", c.wab.lr);
      r.num("lr_final", c.wab.lr_final);
    } else if (name == "ws") {
      r.num("epochs", c.ws.epochs);
      r.num("batch", c.ws.batch);
      r.num("lr", c.ws.lr);
      r.num("target", c.ws.target);
    } else if (name == "data") {
      continue;
    } else if (name.rfind("task.", 0) == 0) {
      const auto task = degrade::parse_task(name.substr(5));
      TaskEntry* entry = nullptr;
      for (auto& e : c.data.tasks) {
        if (e.task == task) entry = &e;
      }
      if (!entry) throw ConfigError("[" + name + "] configures a task not in data.tasks");
      apply_task_section(r, *entry);
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    r.finish();
  }
  c.wab.seed = c.ws.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[run]\nprofile = " << profile_name(c.profile) << "\nseed = " << c.seed << "\n\n";
  o << "[arch]\nomega = " << c.arch.omega << "\nratios = ";
  for (std::size_t i = 0; i < c.arch.ratios.size(); ++i) o << (i ? "," : "") << fmt(c.arch.ratios[i]);
  o << "\nblocks = " << c.arch.blocks << "\nc_de = " << c.arch.c_de << "\nkernel = " << c.arch.kernel
    << "\nnum_tasks = " << c.arch.num_tasks << "\n\n";
  o << "[wab]\nepochs = " << c.wab.epochs << "\nbatch = " << c.wab.batch << "\nlr = " << fmt(c.wab.lr)
    << "\nlr_final = " << fmt(c.wab.lr_final) << "\n\n";
  o << "[ws]\nepochs = " << c.ws.epochs << "\nbatch = " << c.ws.batch << "\nlr = " << fmt(c.ws.lr)
    << "\ntarget = " << fmt(c.ws.target) << "\n\n";
  o << "[data]\nsize = " << c.data.size << "\ntrain_per_task = " << c.data.train_per_task
    << "\neval_per_task = " << c.data.eval_per_task << "\ntasks = ";
  for (std::size_t i = 0; i < c.data.tasks.size(); ++i) o << (i ? "," : "") << degrade::task_name(c.data.tasks[i].task);
  o << "\n";
  for (const auto& e : c.data.tasks) {
    o << "\n[task." << degrade::task_name(e.task) << "]\nnoise_sigma = " << fmt(e.spec.noise_sigma) << "\n";
    if (const auto* n = std::get_if<degrade::NoiseSpec>(&e.spec.kind)) {
      o << "sigma = " << fmt(n->sigma) << "\n";
    } else if (const auto* r = std::get_if<degrade::RainSpec>(&e.spec.kind)) {
      o << "streaks = " << r->streaks << "\nlength = " << fmt(r->length) << "\nangle = " << fmt(r->angle)
        << "\nintensity = " << fmt(r->intensity) << "\nthickness = " << fmt(r->thickness) << "\n";
    } else if (const auto* h = std::get_if<degrade::HazeSpec>(&e.spec.kind)) {
      o << "beta = " << fmt(h->beta) << "\nairlight = " << fmt(h->airlight)
        << "\nmode = " << (h->mode == degrade::HazeMode::kPaper ? "paper" : "scattering") << "\n";
    }
  }
  return o.str();
}

}  // namespace slim::pipeline

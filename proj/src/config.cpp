#include "fbrd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fbrd/errors.hpp"

namespace fbrd::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw DomainError("config: " + field + ": " + why);
}

void check_keys(const json& block, const std::string& name,
                const std::set<std::string>& allowed) {
  for (const auto& item : block.items())
    if (!allowed.count(item.key()))
      fail(name + "." + item.key(), "unknown key");
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  return v.get<double>();
}

std::uint64_t as_uint(const json& v, const std::string& field) {
  if (!v.is_number_unsigned()) fail(field, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

const std::set<std::string> kSubcommands = {
    "spectrum",      "waterfill", "rate", "limit", "approx",
    "converse",      "achievability",    "simulate-codec",
    "aep",           "sweep"};

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("(root)", "must be a JSON object");
  check_keys(root, "(root)", {"source", "task", "output"});

  RunConfig cfg;

  if (!root.contains("source")) fail("source", "block is required");
  {
    const json& s = root["source"];
    if (!s.is_object()) fail("source", "must be an object");
    check_keys(s, "source", {"kind", "a", "sigma2", "variances", "model"});
    const std::string kind =
        s.contains("kind") ? as_string(s["kind"], "source.kind") : "";
    if (kind == "gauss_markov") {
      const double a = s.contains("a") ? as_double(s["a"], "source.a") : 0.0;
      const double sigma2 =
          s.contains("sigma2") ? as_double(s["sigma2"], "source.sigma2") : 1.0;
      cfg.source = spectrum::SourceSpec::gauss_markov(a, sigma2);
    } else if (kind == "explicit") {
      if (!s.contains("variances") || !s["variances"].is_array())
        fail("source.variances", "required array for kind 'explicit'");
      std::vector<double> vars;
      for (const auto& v : s["variances"])
        vars.push_back(as_double(v, "source.variances[]"));
      cfg.source = spectrum::SourceSpec::explicit_list(vars);
    } else {
      fail("source.kind", "must be 'gauss_markov' or 'explicit'");
    }
    if (s.contains("model")) {
      const std::string m = as_string(s["model"], "source.model");
      if (m == "zero_init")
        cfg.options.model = spectrum::CovarianceModel::zero_init;
      else if (m == "stationary")
        cfg.options.model = spectrum::CovarianceModel::stationary;
      else
        fail("source.model", "must be 'zero_init' or 'stationary'");
    }
  }

  if (!root.contains("task")) fail("task", "block is required");
  {
    const json& t = root["task"];
    if (!t.is_object()) fail("task", "must be an object");
    check_keys(t, "task",
               {"subcommand", "n", "n_list", "d", "d_grid", "epsilon",
                "samples", "trials", "M", "seed", "threads", "thresholds",
                "fitted"});
    TaskConfig& task = cfg.task;
    if (t.contains("subcommand"))
      task.subcommand = as_string(t["subcommand"], "task.subcommand");
    if (t.contains("n"))
      task.n = static_cast<std::size_t>(as_uint(t["n"], "task.n"));
    if (t.contains("n_list")) {
      if (!t["n_list"].is_array()) fail("task.n_list", "must be an array");
      for (const auto& v : t["n_list"])
        task.n_list.push_back(
            static_cast<std::size_t>(as_uint(v, "task.n_list[]")));
    }
    if (t.contains("d")) task.d = as_double(t["d"], "task.d");
    if (t.contains("d_grid")) {
      if (!t["d_grid"].is_array()) fail("task.d_grid", "must be an array");
      for (const auto& v : t["d_grid"])
        task.d_grid.push_back(as_double(v, "task.d_grid[]"));
    }
    if (t.contains("epsilon"))
      task.epsilon = as_double(t["epsilon"], "task.epsilon");
    if (t.contains("samples"))
      task.samples = static_cast<std::size_t>(as_uint(t["samples"], "task.samples"));
    if (t.contains("trials"))
      task.trials = static_cast<std::size_t>(as_uint(t["trials"], "task.trials"));
    if (t.contains("M")) task.M = as_uint(t["M"], "task.M");
    if (t.contains("seed")) task.seed = as_uint(t["seed"], "task.seed");
    if (t.contains("threads")) {
      if (!t["threads"].is_number_integer())
        fail("task.threads", "must be an integer");
      const auto th = t["threads"].get<std::int64_t>();
      if (th < 0) fail("task.threads", "must be >= 0");
      task.threads = static_cast<int>(th);
    }
    if (t.contains("thresholds")) {
      const json& h = t["thresholds"];
      if (!h.is_object()) fail("task.thresholds", "must be an object");
      check_keys(h, "task.thresholds", {"kappa0", "kappa1", "k_prime"});
      tilted::Thresholds th;
      if (h.contains("kappa0"))
        th.kappa0 = as_double(h["kappa0"], "task.thresholds.kappa0");
      if (h.contains("kappa1"))
        th.kappa1 = as_double(h["kappa1"], "task.thresholds.kappa1");
      if (h.contains("k_prime"))
        th.k_prime = as_double(h["k_prime"], "task.thresholds.k_prime");
      task.thresholds = th;
    }
    if (t.contains("fitted")) {
      const json& f = t["fitted"];
      if (!f.is_object()) fail("task.fitted", "must be an object");
      check_keys(f, "task.fitted", {"C0", "c", "K"});
      bounds::FittedConstants fc;
      if (f.contains("C0")) fc.C0 = as_double(f["C0"], "task.fitted.C0");
      if (f.contains("c")) fc.c_log2 = as_double(f["c"], "task.fitted.c");
      if (f.contains("K")) fc.k = as_double(f["K"], "task.fitted.K");
      task.fitted = fc;
    }
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    if (!o.is_object()) fail("output", "must be an object");
    check_keys(o, "output", {"path", "format", "units", "timing"});
    if (o.contains("path")) cfg.output.path = as_string(o["path"], "output.path");
    if (o.contains("format"))
      cfg.output.format = as_string(o["format"], "output.format");
    if (o.contains("units"))
      cfg.output.units = as_string(o["units"], "output.units");
    if (o.contains("timing"))
      cfg.output.timing = as_bool(o["timing"], "output.timing");
  }

  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("config: cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::vector<std::size_t> RunConfig::blocklengths() const {
  if (!task.n_list.empty()) return task.n_list;
  if (task.n) return {*task.n};
  return {};
}

std::vector<double> RunConfig::distortions() const {
  if (!task.d_grid.empty()) return task.d_grid;
  if (task.d) return {*task.d};
  return {};
}

void RunConfig::validate() const {
  source.validate();

  const std::string& sub = task.subcommand;
  if (sub.empty()) fail("task.subcommand", "required (or pass it on the command line)");
  if (!kSubcommands.count(sub)) fail("task.subcommand", "unknown subcommand '" + sub + "'");

  if (task.n && task.n_list.size())
    fail("task.n", "give either n or n_list, not both");
  if (task.d && task.d_grid.size())
    fail("task.d", "give either d or d_grid, not both");

  const auto ns = blocklengths();
  for (std::size_t n : ns) {
    if (n < 1) fail("task.n", "blocklengths must be >= 1");
    if (n > options.max_n)
      fail("task.n", "blocklength " + std::to_string(n) + " exceeds the cap " +
                         std::to_string(options.max_n));
  }
  const auto ds = distortions();
  const bool codec = sub == "simulate-codec";
  for (double d : ds) {
    if (!std::isfinite(d)) fail("task.d", "must be finite");
    if (codec ? d < 0.0 : d <= 0.0)
      fail("task.d", codec ? "must be >= 0" : "must be > 0");
  }
  if (task.epsilon && !(*task.epsilon > 0.0 && *task.epsilon < 1.0))
    fail("task.epsilon", "must lie in (0,1)");

  auto need_n = [&] { if (ns.empty()) fail("task.n", "required for '" + sub + "'"); };
  auto need_d = [&] { if (ds.empty()) fail("task.d", "required for '" + sub + "'"); };
  auto need_eps = [&] {
    if (!task.epsilon) fail("task.epsilon", "required for '" + sub + "'");
  };
  auto need_samples = [&] {
    if (task.samples < 10000)
      fail("task.samples", "must be >= 10000 for '" + sub + "'");
  };
  auto need_nlist = [&] {
    if (task.n_list.empty()) fail("task.n_list", "required for '" + sub + "'");
  };

  if (sub == "spectrum") {
    need_n();
  } else if (sub == "waterfill" || sub == "rate") {
    need_n();
    need_d();
  } else if (sub == "limit") {
    need_d();
  } else if (sub == "approx" || sub == "converse") {
    need_n();
    need_d();
    need_eps();
  } else if (sub == "achievability") {
    need_n();
    need_d();
    need_eps();
    need_samples();
  } else if (codec) {
    need_n();
    need_d();
    if (ns.size() != 1) fail("task.n", "simulate-codec takes a single n");
    if (ds.size() != 1) fail("task.d", "simulate-codec takes a single d");
    if (task.M < 1) fail("task.M", "required, must be >= 1");
    if (task.trials < 1000) fail("task.trials", "must be >= 1000");
    if (static_cast<double>(ns[0]) * static_cast<double>(task.M) >
        static_cast<double>(std::uint64_t{1} << 26))
      fail("task.M", "n * M exceeds the 2^26 work cap");
  } else if (sub == "aep") {
    need_nlist();
    need_d();
    need_samples();
  } else if (sub == "sweep") {
    need_nlist();
    need_d();
    need_eps();
    need_samples();
    if (task.n_list.size() < 3)
      fail("task.n_list", "sweep needs at least 3 blocklengths");
    for (std::size_t i = 1; i < task.n_list.size(); ++i)
      if (task.n_list[i] <= task.n_list[i - 1])
        fail("task.n_list", "sweep blocklengths must be strictly ascending");
  }

  if (output.format != "csv" && output.format != "json")
    fail("output.format", "must be 'csv' or 'json'");
  if (output.units != "nats" && output.units != "bits")
    fail("output.units", "must be 'nats' or 'bits'");
  if (output.path.empty()) fail("output.path", "must not be empty");
}

std::string RunConfig::resolved_json() const {
  json s;
  if (source.kind == spectrum::SourceSpec::Kind::gauss_markov) {
    s["kind"] = "gauss_markov";
    s["a"] = source.a;
    s["sigma2"] = source.sigma2;
  } else {
    s["kind"] = "explicit";
    s["variances"] = source.variances;
  }
  s["model"] = options.model == spectrum::CovarianceModel::zero_init
                   ? "zero_init"
                   : "stationary";

  json t;
  t["subcommand"] = task.subcommand;
  if (task.n) t["n"] = *task.n;
  if (!task.n_list.empty()) t["n_list"] = task.n_list;
  if (task.d) t["d"] = *task.d;
  if (!task.d_grid.empty()) t["d_grid"] = task.d_grid;
  if (task.epsilon) t["epsilon"] = *task.epsilon;
  t["samples"] = task.samples;
  t["trials"] = task.trials;
  t["M"] = task.M;
  t["seed"] = task.seed;
  t["threads"] = task.threads;
  if (task.thresholds) {
    t["thresholds"] = {{"kappa0", task.thresholds->kappa0},
                       {"kappa1", task.thresholds->kappa1},
                       {"k_prime", task.thresholds->k_prime}};
  }
  if (task.fitted) {
    t["fitted"] = {{"C0", task.fitted->C0},
                   {"c", task.fitted->c_log2},
                   {"K", task.fitted->k}};
  }

  json o;
  o["path"] = output.path;
  o["format"] = output.format;
  o["units"] = output.units;
  o["timing"] = output.timing;

  json root;
  root["source"] = s;
  root["task"] = t;
  root["output"] = o;
  return root.dump();
}

}  // namespace fbrd::io

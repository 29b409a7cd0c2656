// metagrad: bound sweeps, estimator-error experiments, meta-training runs and cost tables.
//
// Exit codes: 0 success, 1 constraint or usage error, 2 numerical divergence, 3 anything else.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "metagrad/bounds.hpp"
#include "metagrad/errors.hpp"
#include "metagrad/estimators.hpp"
#include "metagrad/experiments.hpp"
#include "metagrad/harness.hpp"
#include "metagrad/meta_train.hpp"

namespace fs = std::filesystem;
using namespace metagrad;

namespace {

const KeyValues kCommon{{"out", "results"}, {"seed", "0"}};

KeyValues with_common(KeyValues specific) {
  KeyValues all = kCommon;
  all.insert(all.end(), specific.begin(), specific.end());
  return all;
}

fs::path prepare_output(const Settings& s) {
  const fs::path out = s.text("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConstraintError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConstraintError("cannot write " + path.string());
  return os;
}

void write_resolved(const Settings& s, const fs::path& out) {
  auto os = open_output(out / "resolved_config.txt");
  s.write(os);
}

void write_chart(const fs::path& path, const LineChart& chart) {
  auto os = open_output(path);
  write_svg(os, chart);
}

FamilyConfig family_from(const Settings& s) {
  FamilyConfig f;
  f.family = parse_task_family(s.text("family"));
  f.quadratic.dim = s.count("dim");
  f.quadratic.smoothness = s.number("H");
  f.logistic.dim = s.count("dim");
  f.shots = s.count("shots");
  return f;
}

/// "auto" picks a step size that keeps αH ≤ 1 on the convex families and the usual small
/// inner step for the MLP.
void resolve_alpha(Settings& s) {
  if (s.text("alpha") != "auto") return;
  const TaskFamily family = parse_task_family(s.text("family"));
  s.set("alpha", family == TaskFamily::Sinusoid ? "0.01" : fmt::format("{}", 0.25 / s.number("H")));
}

// ---------------------------------------------------------------------------------------------

void cmd_bounds(Settings& s) {
  const fs::path out = prepare_output(s);
  BoundInputs base;
  base.k_steps = s.count("K");
  base.alpha = s.number("alpha");
  base.smoothness = s.number("H");
  base.strong_convexity = s.number("h");
  base.window = s.count("M");

  std::vector<int> theorems;
  if (s.text("theorem") == "all") {
    theorems = {2, 3, 4};
  } else {
    const std::size_t t = s.count("theorem");
    require(t >= 2 && t <= 4, "theorem must be 2, 3, 4 or all");
    theorems = {static_cast<int>(t)};
  }
  write_resolved(s, out);

  for (const int t : theorems) {
    const auto rows = bound_sweep(t, base);
    {
      auto os = open_output(out / fmt::format("bounds_t{}.csv", t));
      write_bound_csv(os, rows);
    }
    LineChart chart{fmt::format("Theorem {} error bounds, normalized to FO", t), "L",
                    "bound / FO bound", true, {}};
    Series fo{"FO", {}, {}}, tr{"Trunc", {}, {}}, bin{"Binom", {}, {}};
    for (const auto& r : rows) {
      const auto l = static_cast<double>(r.inputs.truncation);
      fo.x.push_back(l);
      fo.y.push_back(1.0);
      tr.x.push_back(l);
      tr.y.push_back(r.ratio_tr);
      bin.x.push_back(l);
      bin.y.push_back(r.ratio_bin);
    }
    chart.series = {fo, tr, bin};
    write_chart(out / fmt::format("bounds_t{}.svg", t), chart);
  }
}

void cmd_error_sweep(Settings& s) {
  const fs::path out = prepare_output(s);
  resolve_alpha(s);
  ErrorExperimentConfig cfg;
  cfg.tasks = family_from(s);
  cfg.alpha = s.number("alpha");
  cfg.k_steps = s.count("K");
  cfg.batches = s.count("batches");
  cfg.batch_size = s.count("batch");
  cfg.seed = s.seed("seed");
  cfg.rescale_alpha = s.flag("rescale-alpha");
  const std::size_t shown_l = s.count("L");
  require(shown_l <= cfg.k_steps, "error-sweep: need 0 <= L <= K");
  write_resolved(s, out);

  const ErrorTable table = run_error_experiment(cfg);
  {
    auto os = open_output(out / "errors_batches.csv");
    write_error_batches_csv(os, table.per_batch);
  }
  {
    auto os = open_output(out / "errors_mean.csv");
    write_error_average_csv(os, table.averaged);
  }

  LineChart per_batch{fmt::format("Meta-gradient error per batch (L={})", shown_l), "batch",
                      "error", true, {}};
  Series fo{"FO", {}, {}}, tr{"Trunc", {}, {}}, bin{"Binom", {}, {}};
  for (const auto& r : table.per_batch) {
    if (r.truncation != shown_l) continue;
    const auto b = static_cast<double>(r.batch);
    fo.x.push_back(b);
    fo.y.push_back(r.err_fo);
    tr.x.push_back(b);
    tr.y.push_back(r.err_tr);
    bin.x.push_back(b);
    bin.y.push_back(r.err_bin);
  }
  per_batch.series = {fo, tr, bin};
  write_chart(out / "errors_batches.svg", per_batch);

  LineChart by_l{"Mean meta-gradient error against L", "L", "error", true, {}};
  Series mfo{"FO", {}, {}}, mtr{"Trunc", {}, {}}, mbin{"Binom", {}, {}};
  for (const auto& r : table.averaged) {
    const auto l = static_cast<double>(r.truncation);
    mfo.x.push_back(l);
    mfo.y.push_back(r.err_fo);
    mtr.x.push_back(l);
    mtr.y.push_back(r.err_tr);
    mbin.x.push_back(l);
    mbin.y.push_back(r.err_bin);
  }
  by_l.series = {mfo, mtr, mbin};
  write_chart(out / "errors_mean.svg", by_l);
}

void cmd_metatrain(Settings& s) {
  const fs::path out = prepare_output(s);
  resolve_alpha(s);
  MetaTrainConfig base;
  base.tasks = family_from(s);
  base.alpha = s.number("alpha");
  base.beta = s.number("beta");
  base.k_steps = s.count("K");
  base.meta_batch = s.count("batch");
  base.iterations = s.count("iters");
  base.seed = s.seed("seed");
  base.error_every = s.count("error-every");
  base.estimator.truncation = s.count("L");
  base.estimator.rescale_alpha = s.flag("rescale-alpha");
  base.estimator.lambda = s.number("lambda");
  base.estimator.reptile_eps = s.number("reptile-eps");
  if (!s.text("C").empty()) base.estimator.window = s.count("C");

  std::vector<EstimatorKind> kinds;
  for (const auto& name : s.list("estimator")) {
    const EstimatorKind kind = parse_estimator_kind(name);
    for (const auto k : kinds)
      require(k != kind, "metatrain: estimator listed twice: " + name);
    kinds.push_back(kind);
  }
  require(!kinds.empty(), "metatrain: no estimator given");
  for (const auto kind : kinds) {
    MetaTrainConfig cfg = base;
    cfg.estimator.kind = kind;
    validate(cfg);
  }
  write_resolved(s, out);

  LineChart combined{"Meta-training loss", "iteration", "meta-loss", false, {}};
  for (const auto kind : kinds) {
    MetaTrainConfig cfg = base;
    cfg.estimator.kind = kind;
    const TrainResult result = meta_train(cfg);
    const std::string name(to_string(kind));
    {
      auto os = open_output(out / fmt::format("metatrain_{}.csv", name));
      write_train_csv(os, result.rows);
    }
    Series curve{name, {}, {}};
    for (const auto& r : result.rows) {
      curve.x.push_back(static_cast<double>(r.iter));
      curve.y.push_back(r.meta_loss);
    }
    write_chart(out / fmt::format("metatrain_{}.svg", name),
                LineChart{fmt::format("Meta-training loss ({})", name), "iteration", "meta-loss",
                          false, {curve}});
    combined.series.push_back(std::move(curve));
  }
  write_chart(out / "metatrain_loss.svg", combined);
}

void cmd_cost(Settings& s) {
  const fs::path out = prepare_output(s);
  EstimatorConfig base;
  base.lambda = s.number("lambda");
  if (!s.text("C").empty()) base.window = s.count("C");
  std::vector<EstimatorKind> kinds;
  for (const auto& name : s.list("estimator")) kinds.push_back(parse_estimator_kind(name));
  const std::size_t k_steps = s.count("K");
  write_resolved(s, out);

  const auto rows = cost_table(kinds, k_steps, base);
  auto os = open_output(out / "cost.csv");
  write_cost_csv(os, rows);
}

struct Command {
  std::string name;
  std::string description;
  KeyValues defaults;
  std::function<void(Settings&)> run;
};

std::vector<Command> commands() {
  return {
      {"bounds", "Sweep the closed-form error bounds over L and plot them normalized to FO",
       with_common({{"theorem", "all"}, {"K", "5"}, {"alpha", "0.25"}, {"H", "1"},
                    {"h", "0.1"}, {"M", "1"}}),
       cmd_bounds},
      {"error-sweep", "Measure FO/Trunc/Binom errors against the exact meta-gradient at fixed theta",
       with_common({{"family", "quadratic"}, {"K", "5"}, {"L", "1"}, {"alpha", "auto"},
                    {"H", "1"}, {"dim", "4"}, {"batches", "100"}, {"batch", "10"},
                    {"shots", "10"}, {"rescale-alpha", "false"}}),
       cmd_error_sweep},
      {"metatrain", "Meta-train with one or more estimators and record loss curves",
       with_common({{"family", "quadratic"}, {"estimator", "full"}, {"K", "5"}, {"L", "1"},
                    {"alpha", "auto"}, {"beta", "0.001"}, {"H", "1"}, {"dim", "4"},
                    {"iters", "10000"}, {"batch", "10"}, {"shots", "10"}, {"C", ""},
                    {"lambda", "1"}, {"reptile-eps", "1"}, {"rescale-alpha", "false"},
                    {"error-every", "0"}}),
       cmd_metatrain},
      {"cost", "Tabulate HVP count, sequential depth and live vectors per estimator",
       with_common({{"estimator", "full,fo,trunc,binom,binom-batched,binomtrunc"}, {"K", "5"},
                    {"C", ""}, {"lambda", "1"}}),
       cmd_cost},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-gradient estimators: bounds, error sweeps, meta-training and cost tables"};
  app.require_subcommand(1);
  // -h would clash with the --h (strong convexity) option.
  app.set_help_flag("--help", "Print this help message and exit");

  const std::vector<Command> cmds = commands();
  struct Bound {
    CLI::App* app = nullptr;
    std::string config;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
    bool rescale = false;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : cmds) {
    auto b = std::make_unique<Bound>();
    b->app = app.add_subcommand(cmd.name, cmd.description);
    b->app->add_option("--config", b->config, "key=value file; flags take precedence over it");
    for (const auto& [key, value] : cmd.defaults) {
      const std::string help = value.empty() ? "" : "default: " + value;
      if (key == "rescale-alpha") {
        b->options[key] = b->app->add_flag("--" + key, b->rescale, "use alpha' = L*alpha/K");
      } else {
        b->options[key] = b->app->add_option("--" + key, b->flags[key], help);
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      Bound& b = *bound[i];
      if (!b.app->parsed()) continue;
      Settings settings(cmds[i].defaults);
      if (!b.config.empty()) settings.merge_file(b.config);
      for (const auto& [key, option] : b.options) {
        if (option->count() == 0) continue;
        settings.set(key, key == "rescale-alpha" ? "true" : b.flags[key]);
      }
      cmds[i].run(settings);
    }
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

// voteml: run | compare | tune | generate

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "voteml/experiment.hpp"

namespace {

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = voteml::csv::parse_number(voteml::trim(item));
    if (!v) voteml::fail(voteml::ErrorCode::Config, "--weights expects comma-separated numbers, got '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) voteml::fail(voteml::ErrorCode::Config, "--weights is empty");
  return out;
}

struct Flags {
  std::string config, data, out, ensemble, averaging, weights;
  std::uint64_t seed = 0;
};

void add_flags(CLI::App* cmd, Flags& f, bool model_flags) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--out", f.out, "output directory (generate: CSV path or directory)");
  cmd->add_option("--seed", f.seed, "master seed");
  if (!model_flags) return;
  cmd->add_option("--data", f.data, "dataset CSV (overrides the config's data or synthetic entry)");
  cmd->add_option("--ensemble", f.ensemble, "ensemble preset")->check(CLI::IsMember({"ensemble3", "ensemble6"}));
  cmd->add_option("--averaging", f.averaging, "precision/recall/F1 averaging")
      ->check(CLI::IsMember({"macro", "weighted"}));
  cmd->add_option("--weights", f.weights, "comma-separated ensemble member weights");
}

bool given(CLI::App* cmd, const std::string& name) {
  const auto* opt = cmd->get_option_no_throw(name);
  return opt && opt->count() > 0;
}

voteml::ExperimentConfig build_config(CLI::App* cmd, const Flags& f) {
  voteml::ExperimentConfig c = f.config.empty() ? voteml::ExperimentConfig{} : voteml::load_config(f.config);
  voteml::CliOverrides o;
  if (given(cmd, "--data")) o.data = f.data;
  if (given(cmd, "--out")) o.out = f.out;
  if (given(cmd, "--seed")) o.seed = f.seed;
  if (given(cmd, "--ensemble")) o.ensemble = f.ensemble;
  if (given(cmd, "--averaging")) o.averaging = f.averaging;
  if (given(cmd, "--weights")) o.weights = parse_weights(f.weights);
  voteml::apply_overrides(c, o);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-voting tabular classification experiments"};
  app.require_subcommand(1);
  Flags run_f, cmp_f, tune_f, gen_f;
  auto* run = app.add_subcommand("run", "fit the ensemble and evaluate it on the held-out split");
  auto* cmp = app.add_subcommand("compare", "fit each listed model on the same split and tabulate metrics");
  auto* tune = app.add_subcommand("tune", "random search over MLP hyperparameters");
  auto* gen = app.add_subcommand("generate", "write the synthetic benchmark CSV and its rule sidecar");
  add_flags(run, run_f, true);
  add_flags(cmp, cmp_f, true);
  add_flags(tune, tune_f, true);
  add_flags(gen, gen_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return voteml::kExitConfig;
  }

  try {
    if (*run) {
      const auto r = voteml::run_experiment(build_config(run, run_f));
      std::cout << "accuracy " << voteml::percent(r.report.accuracy) << "%\n";
    } else if (*cmp) {
      const auto r = voteml::compare_models(build_config(cmp, cmp_f));
      std::cout << r.table.text;
    } else if (*tune) {
      const auto r = voteml::tune_mlp(build_config(tune, tune_f));
      std::cout << "best trial " << r.best_trial << " val_score " << r.best_score << "\n";
    } else if (*gen) {
      const auto files = voteml::generate_files(build_config(gen, gen_f));
      std::cout << files.csv.string() << "\n";
    }
  } catch (const voteml::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return voteml::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return voteml::kExitInternal;
  }
  return voteml::kExitOk;
}

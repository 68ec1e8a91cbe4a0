#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "dpc/bench.hpp"
#include "dpc/csv.hpp"
#include "dpc/eig.hpp"
#include "dpc/errors.hpp"
#include "dpc/joint.hpp"
#include "dpc/model.hpp"
#include "dpc/mpc.hpp"
#include "dpc/plant.hpp"
#include "dpc/policy.hpp"
#include "dpc/report.hpp"
#include "dpc/riccati.hpp"
#include "dpc/simulate.hpp"
#include "dpc/sysid.hpp"

namespace fs = std::filesystem;

namespace dpc {
namespace {

const std::vector<std::string> kUncModes = {"none", "w", "v", "wv"};
const std::vector<std::string> kControllers = {"dlmpc", "joint", "joint-adapt", "lqr",
                                               "lqi",   "mpc",   "zero"};

int unc_code(const std::string& mode) {
  for (size_t i = 0; i < kUncModes.size(); ++i) {
    if (kUncModes[i] == mode) {
      return static_cast<int>(i);
    }
  }
  throw ConfigError(msg("unknown uncertainty mode '", mode, "'"));
}

int controller_code(const std::string& name) {
  for (size_t i = 0; i < kControllers.size(); ++i) {
    if (kControllers[i] == name) {
      return static_cast<int>(i);
    }
  }
  throw ConfigError(msg("unknown controller '", name, "'"));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Out {
  fs::path dir;

  std::string at(const std::string& name) const { return (dir / name).string(); }
  std::string plant() const { return at("plant.json"); }
  std::string dataset() const { return at("dataset.csv"); }
  std::string sysid_model(ModelKind kind, int horizon) const {
    return at(msg("sysid_", lower(kind_name(kind)), "_N", horizon, ".json"));
  }
  std::string policy() const { return at("policy.json"); }
  std::string joint_model() const { return at("joint_model.json"); }
  std::string joint_policy() const { return at("joint_policy.json"); }
};

Out resolve_out(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("DPC_OUT_DIR");
    dir = env != nullptr && *env != '\0' ? env : "out";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError(msg("cannot create output directory '", dir, "': ", ec.message()));
  }
  return Out{fs::path(dir)};
}

// Replaces the rows whose key columns match any incoming row, keeping
// everything else, so repeated commands refresh their own results.
void upsert_csv(const std::string& path, const std::vector<std::string>& header,
                const std::vector<size_t>& key_cols,
                const std::vector<std::vector<double>>& incoming) {
  std::vector<std::vector<double>> rows;
  if (fs::exists(path)) {
    Csv existing = read_csv(path);
    if (existing.header != header) {
      throw ConfigError(msg("existing ", path, " has a different schema; delete it first"));
    }
    auto matches_incoming = [&](const std::vector<double>& row) {
      for (const auto& in : incoming) {
        bool same = true;
        for (size_t c : key_cols) {
          if (row[c] != in[c]) {
            same = false;
            break;
          }
        }
        if (same) {
          return true;
        }
      }
      return false;
    };
    for (const auto& row : existing.rows) {
      if (!matches_incoming(row)) {
        rows.push_back(row);
      }
    }
  }
  rows.insert(rows.end(), incoming.begin(), incoming.end());
  write_csv(path, header, rows);
}

const std::vector<std::string> kSysIdHeader = {"model", "N", "split", "nstep_mse",
                                               "openloop_mse"};
const std::vector<std::string> kEigHeader = {"model", "re", "im"};
const std::vector<std::string> kSimHeader = {"controller", "uncertainty", "run",
                                             "mse_ref",    "ma_ene",      "ma_con",
                                             "mse_mod",    "ma_gap"};
const std::vector<std::string> kBenchHeader = {"controller",    "horizon",
                                               "samples",       "mean_ms",
                                               "median_ms",     "max_ms",
                                               "qp_iterations", "qp_primal_residual",
                                               "qp_dual_residual"};

struct GenDataArgs {
  std::string out;
  int days = 28;
  uint64_t seed = 1;
  std::string uncertainty = "none";
};

int cmd_gen_data(const GenDataArgs& a) {
  Out out = resolve_out(a.out);
  Plant plant = build_default_plant();
  DataConfig cfg;
  cfg.days = a.days;
  cfg.uncertainty = a.uncertainty;
  Dataset ds = generate_dataset(plant, cfg, a.seed);
  save_plant(plant, out.plant());
  save_dataset(ds, out.dataset());
  std::cout << "wrote " << out.plant() << "\n";
  std::cout << "wrote " << out.dataset() << " (" << ds.size() << " rows, splits "
            << ds.train.size << "/" << ds.val.size << "/" << ds.test.size << ")\n";
  return 0;
}

struct LoadedData {
  Plant plant;
  Dataset ds;
};

LoadedData load_data(const Out& out) {
  LoadedData d{load_plant(out.plant()), load_dataset(out.dataset(), DataConfig{})};
  return d;
}

struct TrainSysIdArgs {
  std::string out;
  std::string model = "ssm";
  int horizon = 8;
  int epochs = 30000;
  int patience = 3000;
  int observed = 3;
  double eps = 0.05;
  uint64_t seed = 1;
  double lr = 1e-3;
};

int cmd_train_sysid(const TrainSysIdArgs& a) {
  Out out = resolve_out(a.out);
  LoadedData d = load_data(out);
  ModelKind kind = kind_from_name(a.model);

  SysIdConfig cfg;
  cfg.horizon = a.horizon;
  cfg.epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.observed = a.observed;
  cfg.seed = a.seed;
  cfg.optim.lr = a.lr;

  Rng init_rng = substream(a.seed, "init", static_cast<uint64_t>(kind));
  Model init = make_model(kind, d.plant.nx, d.plant.nu, d.plant.nd, init_rng, a.eps);
  SysIdResult res = train_sysid(init, d.ds, cfg);

  std::string model_path = out.sysid_model(kind, a.horizon);
  save_model(res.model, model_path);

  double code = static_cast<double>(kind);
  double horizon = static_cast<double>(a.horizon);
  std::vector<std::vector<double>> rows;
  const Dataset::Split* splits[3] = {&d.ds.train, &d.ds.val, &d.ds.test};
  for (int s = 0; s < 3; ++s) {
    rows.push_back({code, horizon, static_cast<double>(s),
                    nstep_mse(res.model, d.ds, *splits[s], a.horizon, a.observed),
                    open_loop_mse(res.model, d.ds, *splits[s], a.observed)});
  }
  upsert_csv(out.at("sysid_results.csv"), kSysIdHeader, {0, 1, 2}, rows);

  if (res.model.kind != ModelKind::kGru) {
    std::vector<std::vector<double>> eig_rows;
    for (const Complex& e : eig_all(effective_A(res.model))) {
      eig_rows.push_back({code, e.real(), e.imag()});
    }
    upsert_csv(out.at("sysid_eigs.csv"), kEigHeader, {0}, eig_rows);
  }

  std::cout << "wrote " << model_path << " (best val " << res.best_val << " at epoch "
            << res.best_epoch << ", stopped at " << res.stopped_epoch << ")\n";
  std::cout << "test " << a.horizon << "-step MSE " << rows[2][3] << ", open-loop MSE "
            << rows[2][4] << "\n";
  return 0;
}

struct TrainPolicyArgs {
  std::string out;
  std::string model_path;
  int epochs = 30000;
  Eigen::Index batch = 2016;
  int horizon = 1;
  Eigen::Index hidden_per_step = 10;
  int observed = 3;
  uint64_t seed = 1;
  double lr = 1e-3;
};

int cmd_train_policy(const TrainPolicyArgs& a) {
  Out out = resolve_out(a.out);
  LoadedData d = load_data(out);
  Model model;
  std::string model_desc;
  if (a.model_path.empty()) {
    model.kind = ModelKind::kLin;
    model.nx = d.plant.nx;
    model.nu = d.plant.nu;
    model.nd = d.plant.nd;
    model.params = LinParams{d.plant.A, d.plant.B, d.plant.E};
    model_desc = "ground-truth plant";
  } else {
    model = load_model(a.model_path);
    model_desc = a.model_path;
  }

  PolicyTrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.horizon = a.horizon;
  cfg.hidden_per_step = a.hidden_per_step;
  cfg.seed = a.seed;
  cfg.optim.lr = a.lr;

  Rng init_rng = substream(a.seed, "init", static_cast<uint64_t>(a.horizon));
  Policy init = make_policy(model.nx, model.nd, model.nu, a.hidden_per_step * a.horizon,
                            init_rng, default_in_scale(d.ds, model.nx, model.nd, model.nu));
  PolicyTrainResult res = train_policy(init, model, d.ds, cfg, a.observed);

  save_policy(res.policy, out.policy());
  std::cout << "wrote " << out.policy() << " (model " << model_desc << ", "
            << res.curve.size() << " epochs";
  if (!res.curve.empty()) {
    std::cout << ", final loss " << res.curve.back().loss;
  }
  std::cout << ")\n";
  return 0;
}

struct TrainJointArgs {
  std::string out;
  std::string model = "ssm";
  double eps = 0.05;
  int epochs = 40000;
  Eigen::Index batch = 2016;
  int horizon = 1;
  Eigen::Index hidden_per_step = 10;
  int observed = 3;
  int val_every = 10;
  uint64_t seed = 1;
  double lr = 1e-3;
};

int cmd_train_joint(const TrainJointArgs& a) {
  Out out = resolve_out(a.out);
  LoadedData d = load_data(out);
  ModelKind kind = kind_from_name(a.model);

  JointConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.horizon = a.horizon;
  cfg.observed = a.observed;
  cfg.seed = a.seed;
  cfg.val_every = a.val_every;
  cfg.optim.lr = a.lr;

  Rng model_rng = substream(a.seed, "init", 0);
  Model init_model = make_model(kind, d.plant.nx, d.plant.nu, d.plant.nd, model_rng, a.eps);
  Rng policy_rng = substream(a.seed, "init", 1);
  Policy init_policy =
      make_policy(d.plant.nx, d.plant.nd, d.plant.nu, a.hidden_per_step * a.horizon,
                  policy_rng, default_in_scale(d.ds, d.plant.nx, d.plant.nd, d.plant.nu));

  JointResult res = train_joint(init_model, init_policy, d.ds, cfg);
  save_model(res.model, out.joint_model());
  save_policy(res.policy, out.joint_policy());
  std::cout << "wrote " << out.joint_model() << " and " << out.joint_policy()
            << " (best val " << res.best_val << " at epoch " << res.best_epoch << ")\n";
  return 0;
}

struct SimulateArgs {
  std::string out;
  std::string controller = "dlmpc";
  std::string uncertainty = "all";
  std::string adapt = "off";
  std::string model_path;
  int runs = 20;
  int horizon = 8;
  int adapt_steps = 10;
  double adapt_lr = AdaptConfig{}.optim.lr;
  uint64_t seed = 1;
  double q_ref = LossWeights{}.q_ref;
  double q_input = LossWeights{}.q_input;
  double q_integral = 0.1;
};

RunFactory build_runner(const SimulateArgs& a, const Out& out, const LoadedData& d,
                        int code, std::vector<std::unique_ptr<Model>>& keep_alive) {
  Eigen::Index obs = d.plant.obs;
  switch (code) {
    case 0: {
      Policy policy = load_policy(out.policy());
      const Model* predict_with = nullptr;
      if (!a.model_path.empty()) {
        keep_alive.push_back(std::make_unique<Model>(load_model(a.model_path)));
        predict_with = keep_alive.back().get();
      }
      return policy_runner(policy, obs, predict_with);
    }
    case 1: {
      Policy policy = load_policy(out.joint_policy());
      keep_alive.push_back(std::make_unique<Model>(load_model(out.joint_model())));
      return policy_runner(policy, obs, keep_alive.back().get());
    }
    case 2: {
      Policy policy = load_policy(out.joint_policy());
      keep_alive.push_back(std::make_unique<Model>(load_model(out.joint_model())));
      AdaptConfig cfg;
      cfg.steps = a.adapt_steps;
      cfg.optim.lr = a.adapt_lr;
      cfg.observed = static_cast<int>(obs);
      return adaptive_policy_runner(policy, *keep_alive.back(), cfg);
    }
    case 3: {
      Matrix Q = Matrix::Zero(d.plant.nx, d.plant.nx);
      Q(obs, obs) = a.q_ref;
      Matrix R = Matrix::Constant(1, 1, a.q_input);
      return lqr_runner(d.plant, lqr_design(d.plant.A, d.plant.B, Q, R));
    }
    case 4: {
      Matrix Q = Matrix::Zero(d.plant.nx, d.plant.nx);
      Q(obs, obs) = a.q_ref;
      Matrix R = Matrix::Constant(1, 1, a.q_input);
      return lqi_runner(d.plant,
                        lqi_design(d.plant.A, d.plant.B, obs, Q, a.q_integral, R));
    }
    case 5: {
      MpcConfig cfg;
      cfg.horizon = a.horizon;
      return mpc_runner(d.plant, d.ds, cfg);
    }
    case 6:
      return zero_runner(d.plant.nu);
    default:
      throw ConfigError(msg("unhandled controller code ", code));
  }
}

int cmd_simulate(const SimulateArgs& a) {
  Out out = resolve_out(a.out);
  LoadedData d = load_data(out);
  int code = controller_code(a.controller == "joint" && a.adapt == "on" ? "joint-adapt"
                                                                        : a.controller);

  std::vector<std::string> modes;
  if (a.uncertainty == "all") {
    modes = kUncModes;
  } else {
    modes = {kUncModes[static_cast<size_t>(unc_code(a.uncertainty))]};
  }

  std::vector<std::unique_ptr<Model>> keep_alive;
  RunFactory make_run = build_runner(a, out, d, code, keep_alive);

  std::vector<std::vector<double>> rows;
  for (const std::string& mode : modes) {
    SimConfig cfg;
    cfg.uncertainty = mode;
    cfg.runs = a.runs;
    cfg.seed = a.seed;
    SimResult res = simulate(d.plant, d.ds, make_run, cfg);
    double ctrl = static_cast<double>(code);
    double unc = static_cast<double>(unc_code(mode));
    for (size_t r = 0; r < res.runs.size(); ++r) {
      const RunMetrics& m = res.runs[r];
      rows.push_back({ctrl, unc, static_cast<double>(r), m.mse_ref, m.ma_ene, m.ma_con,
                      m.mse_mod, m.ma_gap});
    }
    const RunMetrics& m = res.mean;
    rows.push_back({ctrl, unc, -1.0, m.mse_ref, m.ma_ene, m.ma_con, m.mse_mod, m.ma_gap});
    std::cout << kControllers[static_cast<size_t>(code)] << " " << mode << ": MSE ref "
              << m.mse_ref << ", MA ene " << m.ma_ene << ", MA con " << m.ma_con
              << ", MSE mod " << m.mse_mod << ", MA gap " << m.ma_gap << "\n";
  }
  upsert_csv(out.at("sim_results.csv"), kSimHeader, {0, 1, 2}, rows);
  std::cout << "updated " << out.at("sim_results.csv") << "\n";
  return 0;
}

struct BenchArgs {
  std::string out;
  std::vector<int> horizons = {1, 2, 4, 6, 8};
  Eigen::Index evals = 2016;
  uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a) {
  Out out = resolve_out(a.out);
  LoadedData d = load_data(out);
  BenchConfig cfg;
  cfg.horizons = a.horizons;
  cfg.evals = a.evals;
  cfg.seed = a.seed;
  std::vector<TimingRecord> records = run_bench(d.plant, d.ds, cfg);
  std::vector<std::vector<double>> rows;
  for (const TimingRecord& r : records) {
    rows.push_back({r.controller == "dlmpc" ? 0.0 : 1.0, static_cast<double>(r.horizon),
                    static_cast<double>(r.samples), r.mean_ms, r.median_ms, r.max_ms,
                    r.qp_iterations, r.qp_primal_residual, r.qp_dual_residual});
  }
  write_csv(out.at("bench_results.csv"), kBenchHeader, rows);
  std::cout << "wrote " << out.at("bench_results.csv") << " (" << rows.size()
            << " records)\n";
  for (const std::string& ctrl : {std::string("dlmpc"), std::string("impc")}) {
    if (a.horizons.size() >= 2) {
      std::cout << ctrl << " growth exponent " << growth_exponent(records, ctrl) << "\n";
    }
  }
  return 0;
}

struct ReportArgs {
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  Out out = resolve_out(a.out);
  bool any = false;

  std::string sysid_path = out.at("sysid_results.csv");
  if (fs::exists(sysid_path)) {
    any = true;
    Csv results = read_csv(sysid_path);
    Plant plant = load_plant(out.plant());
    std::vector<std::pair<std::string, Model>> models;
    std::regex pat("sysid_([a-z]+)_N([0-9]+)\\.json");
    for (const auto& entry : fs::directory_iterator(out.dir)) {
      std::smatch m;
      std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, pat)) {
        models.emplace_back(msg(m[1].str(), " N", m[2].str()),
                            load_model(entry.path().string()));
      }
    }
    std::sort(models.begin(), models.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    if (fs::exists(out.joint_model())) {
      models.emplace_back("joint", load_model(out.joint_model()));
    }
    std::cout << report_sysid(results, plant, models) << "\n";

    std::map<std::pair<int, int>, std::array<double, 4>> cells;
    for (const auto& row : results.rows) {
      int kind = static_cast<int>(row[results.col("model")]);
      int horizon = static_cast<int>(row[results.col("N")]);
      int split = static_cast<int>(row[results.col("split")]);
      auto [it, fresh] = cells.try_emplace({kind, horizon},
                                           std::array<double, 4>{std::nan(""), std::nan(""),
                                                                 std::nan(""), std::nan("")});
      it->second[static_cast<size_t>(split)] = row[results.col("nstep_mse")];
      if (split == 2) {
        it->second[3] = row[results.col("openloop_mse")];
      }
    }
    std::vector<std::vector<double>> flat;
    for (const auto& [key, vals] : cells) {
      flat.push_back({static_cast<double>(key.first), static_cast<double>(key.second),
                      vals[0], vals[1], vals[2], vals[3]});
    }
    write_csv(out.at("report_sysid.csv"),
              {"model", "N", "train_mse", "val_mse", "test_mse", "openloop_mse"}, flat);
  }

  std::string sim_path = out.at("sim_results.csv");
  if (fs::exists(sim_path)) {
    any = true;
    Csv results = read_csv(sim_path);
    std::cout << report_simulate(results);
    std::vector<std::vector<double>> means;
    for (const auto& row : results.rows) {
      if (row[results.col("run")] < 0) {
        std::vector<double> keep = row;
        keep.erase(keep.begin() + static_cast<long>(results.col("run")));
        means.push_back(keep);
      }
    }
    write_csv(out.at("report_sim.csv"),
              {"controller", "uncertainty", "mse_ref", "ma_ene", "ma_con", "mse_mod",
               "ma_gap"},
              means);
  }

  std::string bench_path = out.at("bench_results.csv");
  if (fs::exists(bench_path)) {
    any = true;
    Csv results = read_csv(bench_path);
    std::cout << report_bench(results);
    write_csv(out.at("report_bench.csv"), results.header, results.rows);
  }

  if (!any) {
    std::cout << "no result CSVs under " << out.dir.string()
              << "; run train-sysid, simulate, or bench first\n";
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"differentiable predictive control toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen-data", "synthesize plant and excitation data");
  c_gen->add_option("--out", gen.out, "output directory (default $DPC_OUT_DIR or ./out)");
  c_gen->add_option("--days", gen.days, "days of data");
  c_gen->add_option("--seed", gen.seed, "root seed");
  c_gen->add_option("--uncertainty", gen.uncertainty, "plant noise during excitation")
      ->check(CLI::IsMember(kUncModes));

  TrainSysIdArgs sysid;
  CLI::App* c_sysid = app.add_subcommand("train-sysid", "fit a dynamics model");
  c_sysid->add_option("--out", sysid.out, "output directory");
  c_sysid->add_option("--model", sysid.model, "cell kind: lin rnn gru ssm");
  c_sysid->add_option("--horizon", sysid.horizon, "prediction steps per window");
  c_sysid->add_option("--epochs", sysid.epochs, "training epochs");
  c_sysid->add_option("--patience", sysid.patience, "early-stop patience");
  c_sysid->add_option("--observed", sysid.observed, "observed state index, -1 for all");
  c_sysid->add_option("--eps", sysid.eps, "spectral margin for the structured cell");
  c_sysid->add_option("--seed", sysid.seed, "root seed");
  c_sysid->add_option("--lr", sysid.lr, "learning rate");

  TrainPolicyArgs pol;
  CLI::App* c_pol = app.add_subcommand("train-policy", "learn a control policy");
  c_pol->add_option("--out", pol.out, "output directory");
  c_pol->add_option("--model-path", pol.model_path,
                    "dynamics artifact (default: exact plant dynamics)");
  c_pol->add_option("--epochs", pol.epochs, "training epochs");
  c_pol->add_option("--batch", pol.batch, "sampled scenarios per epoch");
  c_pol->add_option("--horizon", pol.horizon, "rollout steps per scenario");
  c_pol->add_option("--hidden-per-step", pol.hidden_per_step, "hidden units per step");
  c_pol->add_option("--observed", pol.observed, "observed state index");
  c_pol->add_option("--seed", pol.seed, "root seed");
  c_pol->add_option("--lr", pol.lr, "learning rate");

  TrainJointArgs joint;
  CLI::App* c_joint = app.add_subcommand("train-joint", "learn model and policy together");
  c_joint->add_option("--out", joint.out, "output directory");
  c_joint->add_option("--model", joint.model, "cell kind: lin rnn gru ssm");
  c_joint->add_option("--eps", joint.eps, "spectral margin for the structured cell");
  c_joint->add_option("--epochs", joint.epochs, "training epochs");
  c_joint->add_option("--batch", joint.batch, "sampled scenarios per epoch");
  c_joint->add_option("--horizon", joint.horizon, "rollout steps per scenario");
  c_joint->add_option("--hidden-per-step", joint.hidden_per_step, "hidden units per step");
  c_joint->add_option("--observed", joint.observed, "observed state index");
  c_joint->add_option("--val-every", joint.val_every, "epochs between validations");
  c_joint->add_option("--seed", joint.seed, "root seed");
  c_joint->add_option("--lr", joint.lr, "learning rate");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop evaluation on the test week");
  c_sim->add_option("--out", sim.out, "output directory");
  c_sim->add_option("--controller", sim.controller, "dlmpc joint lqr lqi mpc zero")
      ->check(CLI::IsMember(
          std::vector<std::string>{"dlmpc", "joint", "lqr", "lqi", "mpc", "zero"}));
  c_sim->add_option("--uncertainty", sim.uncertainty, "none w v wv or all")
      ->check(CLI::IsMember(std::vector<std::string>{"none", "w", "v", "wv", "all"}));
  c_sim->add_option("--adapt", sim.adapt, "online adaptation for the joint policy")
      ->check(CLI::IsMember(std::vector<std::string>{"on", "off"}));
  c_sim->add_option("--model-path", sim.model_path,
                    "predict alongside with this dynamics artifact");
  c_sim->add_option("--runs", sim.runs, "seeded runs per uncertainty mode");
  c_sim->add_option("--horizon", sim.horizon, "receding-horizon length for mpc");
  c_sim->add_option("--adapt-steps", sim.adapt_steps, "gradient updates per step");
  c_sim->add_option("--adapt-lr", sim.adapt_lr, "learning rate of the online updates");
  c_sim->add_option("--seed", sim.seed, "root seed");
  c_sim->add_option("--q-ref", sim.q_ref, "tracking weight for lqr/lqi");
  c_sim->add_option("--q-input", sim.q_input, "input weight for lqr/lqi");
  c_sim->add_option("--q-integral", sim.q_integral, "integral weight for lqi");

  BenchArgs bench;
  CLI::App* c_bench = app.add_subcommand("bench", "per-step timing across horizons");
  c_bench->add_option("--out", bench.out, "output directory");
  c_bench->add_option("--horizons", bench.horizons, "horizon grid");
  c_bench->add_option("--evals", bench.evals, "timed evaluations per controller");
  c_bench->add_option("--seed", bench.seed, "root seed");

  ReportArgs rep;
  CLI::App* c_rep = app.add_subcommand("report", "render result tables");
  c_rep->add_option("--out", rep.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (c_gen->parsed()) {
    return cmd_gen_data(gen);
  }
  if (c_sysid->parsed()) {
    return cmd_train_sysid(sysid);
  }
  if (c_pol->parsed()) {
    return cmd_train_policy(pol);
  }
  if (c_joint->parsed()) {
    return cmd_train_joint(joint);
  }
  if (c_sim->parsed()) {
    return cmd_simulate(sim);
  }
  if (c_bench->parsed()) {
    return cmd_bench(bench);
  }
  if (c_rep->parsed()) {
    return cmd_report(rep);
  }
  return 2;
}

}  // namespace
}  // namespace dpc

int main(int argc, char** argv) {
  try {
    return dpc::dispatch(argc, argv);
  } catch (const dpc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const dpc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const dpc::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#pragma once

// Command-line front end. Every data-producing command writes its artifacts
// plus a run manifest into --out; numeric CSV cells use fixed 6-decimal
// formatting so identical runs emit identical bytes.
//
// Exit codes: 0 ok, 2 parse error, 3 invariant violation, 4 domain
// precondition, 5 non-convergence.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "midc/errors.hpp"
#include "midc/io.hpp"
#include "midc/mechanism.hpp"
#include "midc/model.hpp"
#include "midc/platform.hpp"
#include "midc/solver.hpp"

namespace midc::cli {

namespace detail {

inline double resolve_omega(const std::optional<double>& flag,
                            const SystemModel& model) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MIDC_OMEGA_AM")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("MIDC_OMEGA_AM is not a number: " + std::string(env));
    }
  }
  return model.main.omega_am_default;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ParseError("not a number in list: '" + cell + "'");
    }
  }
  return out;
}

inline std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

inline void write_manifest(const std::string& dir, const std::string& command,
                           const std::vector<std::string>& inputs,
                           const nlohmann::json& overrides,
                           const std::vector<std::string>& outputs,
                           int exit_status) {
  const nlohmann::json j{{"schema", 1},
                         {"command", command},
                         {"inputs", inputs},
                         {"overrides", overrides},
                         {"outputs", outputs},
                         {"exit_status", exit_status}};
  write_file(out_path(dir, "run_manifest.json"), j.dump(2) + "\n");
}

inline nlohmann::json equilibrium_json(const EquilibriumResult& res,
                                       const std::string& fault_id,
                                       double delta_p, double omega_am) {
  return nlohmann::json{{"schema", 1},
                        {"fault_id", fault_id},
                        {"delta_p_mw", delta_p},
                        {"omega_am", omega_am},
                        {"status", status_name(res.status)},
                        {"gamma", res.gamma_star},
                        {"ad_ids", res.ad_ids},
                        {"k", res.k_star},
                        {"droop_sum", res.droop_sum()},
                        {"reward", res.reward_star},
                        {"omega_hat", res.omega_hat},
                        {"iterations", res.iterations}};
}

inline void print_result(std::ostream& out, const EquilibriumResult& res) {
  out << "status: " << status_name(res.status) << "\n";
  out << "gamma: " << fmt_fixed(res.gamma_star) << "\n";
  for (std::size_t i = 0; i < res.k_star.size(); ++i)
    out << "k[" << res.ad_ids[i] << "]: " << fmt_fixed(res.k_star[i]) << "\n";
  out << "droop_sum: " << fmt_fixed(res.droop_sum()) << "\n";
  out << "reward: " << fmt_fixed(res.reward_star) << "\n";
  out << "omega_hat: " << fmt_fixed(res.omega_hat) << "\n";
  out << "iterations: " << res.iterations << "\n";
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"equilibrium engine and incentive mechanism simulator for "
               "LCC-HVDC emergency frequency support"};
  app.require_subcommand(1);

  std::string config_path, fault_id, out_dir = ".", k0_text;
  std::string schedule_path, curves_path;
  std::optional<double> omega_flag, gamma0;
  double realized = 0.0, sweep_from = 0.0, sweep_to = 0.0;
  int sweep_steps = 0;
  bool analytic = false;

  auto add_omega = [&](CLI::App* c) {
    c->add_option("--omega", omega_flag,
                  "expected AM frequency deviation (Hz); default from config "
                  "or MIDC_OMEGA_AM");
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "output directory (default .)");
  };

  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", config_path, "config file")->required();

  CLI::App* equilibrium =
      app.add_subcommand("equilibrium", "solve one fault's equilibrium");
  equilibrium->add_option("config", config_path, "config file")->required();
  equilibrium->add_option("--fault", fault_id, "fault id")->required();
  equilibrium->add_option("--gamma0", gamma0, "initial price");
  equilibrium->add_option("--k0", k0_text,
                          "initial droop vector, comma separated");
  equilibrium->add_flag("--analytic", analytic,
                        "closed-form interior solution instead of iteration");
  add_omega(equilibrium);
  add_out(equilibrium);

  CLI::App* mechanism = app.add_subcommand(
      "mechanism", "build curve table and pre-payment schedule");
  mechanism->add_option("config", config_path, "config file")->required();
  add_omega(mechanism);
  add_out(mechanism);

  CLI::App* adjust =
      app.add_subcommand("adjust", "real-time adjustment decision");
  adjust->add_option("config", config_path, "config file")->required();
  adjust->add_option("schedule", schedule_path, "schedule.json")->required();
  adjust->add_option("curves", curves_path, "curves.csv")->required();
  adjust->add_option("--realized", realized, "realized imbalance (MW)")
      ->required();
  add_omega(adjust);
  add_out(adjust);

  CLI::App* sweep =
      app.add_subcommand("sweep-omega", "equilibria across a deviation range");
  sweep->add_option("config", config_path, "config file")->required();
  sweep->add_option("--fault", fault_id, "fault id")->required();
  sweep->add_option("--from", sweep_from, "first deviation (Hz)")->required();
  sweep->add_option("--to", sweep_to, "last deviation (Hz)")->required();
  sweep->add_option("--steps", sweep_steps, "number of rows")->required();
  add_out(sweep);

  CLI::App* decentralized = app.add_subcommand(
      "decentralized", "message-protocol session for one fault");
  decentralized->add_option("config", config_path, "config file")->required();
  decentralized->add_option("--fault", fault_id, "fault id")->required();
  add_omega(decentralized);
  add_out(decentralized);

  std::vector<const char*> argv;
  argv.push_back("midc");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*validate) {
      const SystemModel model = load_system(read_file(config_path));
      out << "ok\n";
      out << "main generators: " << model.main.generators.size() << "\n";
      out << "adjacent systems: " << model.adjacents.size() << "\n";
      out << "faults: " << model.faults.faults.size() << "\n";
      return 0;
    }

    if (*equilibrium) {
      const SystemModel model = load_system(read_file(config_path));
      const FaultScenario& fault = model.fault_by_id(fault_id);
      const double omega = detail::resolve_omega(omega_flag, model);
      const FaultedView view = apply_fault(model, fault);
      SolverConfig cfg;
      cfg.gamma0 = gamma0;
      if (!k0_text.empty()) cfg.k0 = detail::parse_double_list(k0_text);
      const EquilibriumResult res =
          analytic ? analytic_equilibrium(view, omega)
                   : seek_equilibrium(view, omega, cfg);
      const int status =
          res.status == EquilibriumStatus::MaxIterations ? 5 : 0;
      write_file(detail::out_path(out_dir, "equilibrium.json"),
                 detail::equilibrium_json(res, fault.id, fault.delta_p, omega)
                         .dump(2) +
                     "\n");
      write_file(detail::out_path(out_dir, "trace.csv"), trace_csv(res));
      nlohmann::json overrides = nlohmann::json::object();
      overrides["fault"] = fault_id;
      if (omega_flag) overrides["omega"] = *omega_flag;
      if (gamma0) overrides["gamma0"] = *gamma0;
      if (!k0_text.empty()) overrides["k0"] = k0_text;
      if (analytic) overrides["analytic"] = true;
      detail::write_manifest(out_dir, "equilibrium", {config_path}, overrides,
                             {"equilibrium.json", "trace.csv"}, status);
      detail::print_result(out, res);
      return status;
    }

    if (*mechanism) {
      const SystemModel model = load_system(read_file(config_path));
      if (model.faults.empty())
        throw DomainError("mechanism: config declares no faults");
      const double omega = detail::resolve_omega(omega_flag, model);
      const CurveTable curves =
          build_curves(model, model.faults, omega, SolverConfig{});
      const MechanismSchedule schedule =
          prepare_schedule(curves, model.faults);
      write_file(detail::out_path(out_dir, "curves.csv"), curves.to_csv());
      write_file(detail::out_path(out_dir, "schedule.json"),
                 schedule.to_json().dump(2) + "\n");
      nlohmann::json overrides = nlohmann::json::object();
      if (omega_flag) overrides["omega"] = *omega_flag;
      detail::write_manifest(out_dir, "mechanism", {config_path}, overrides,
                             {"curves.csv", "schedule.json"}, 0);
      out << "curve rows: " << curves.rows.size() << "\n";
      out << "nearest fault: " << schedule.nearest_fault_id << " ("
          << fmt_fixed(schedule.nearest_delta_p) << " MW)\n";
      out << "expected imbalance: "
          << fmt_fixed(schedule.expected_imbalance_mw) << " MW\n";
      out << "prepaid reward: " << fmt_fixed(schedule.prepaid_reward) << "\n";
      return 0;
    }

    if (*adjust) {
      const SystemModel model = load_system(read_file(config_path));
      nlohmann::json schedule_doc;
      try {
        schedule_doc = nlohmann::json::parse(read_file(schedule_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("schedule is not valid JSON: " +
                         std::string(e.what()));
      }
      const MechanismSchedule schedule =
          MechanismSchedule::from_json(schedule_doc);
      const CurveTable curves = CurveTable::from_csv(read_file(curves_path));
      const double omega = detail::resolve_omega(omega_flag, model);
      const AdjustmentDecision decision = realtime_adjust(
          schedule, curves, realized, model, omega, SolverConfig{});
      write_file(detail::out_path(out_dir, "decision.json"),
                 decision.to_json().dump(2) + "\n");
      nlohmann::json overrides = nlohmann::json::object();
      overrides["realized"] = realized;
      if (omega_flag) overrides["omega"] = *omega_flag;
      detail::write_manifest(out_dir, "adjust",
                             {config_path, schedule_path, curves_path},
                             overrides, {"decision.json"}, 0);
      out << "action: " << action_name(decision.action) << "\n";
      if (decision.action == AdjustmentAction::AdjustTo)
        out << "row: " << decision.row_fault_id << "\n";
      out << "predicted frequency: "
          << fmt_fixed(decision.predicted_frequency) << " Hz\n";
      if (decision.shed_mw != 0.0)
        out << "shed: " << fmt_fixed(decision.shed_mw) << " MW\n";
      out << "prepaid reward: " << fmt_fixed(decision.prepaid_reward) << "\n";
      out << "adjusted reward: " << fmt_fixed(decision.adjusted_reward)
          << "\n";
      return 0;
    }

    if (*sweep) {
      const SystemModel model = load_system(read_file(config_path));
      const FaultScenario& fault = model.fault_by_id(fault_id);
      if (sweep_steps < 1)
        throw DomainError("sweep-omega: steps must be at least 1");
      const FaultedView view = apply_fault(model, fault);
      std::string csv = "omega_am,gamma";
      for (std::size_t i = 1; i <= model.adjacents.size(); ++i)
        csv += ",k_" + std::to_string(i);
      csv += ",reward,status\n";
      int status = 0;
      for (int j = 0; j < sweep_steps; ++j) {
        const double omega =
            sweep_steps == 1
                ? sweep_from
                : sweep_from +
                      (sweep_to - sweep_from) * j / (sweep_steps - 1);
        const EquilibriumResult res =
            seek_equilibrium(view, omega, SolverConfig{});
        if (res.status == EquilibriumStatus::MaxIterations) status = 5;
        csv += fmt_fixed(omega) + "," + fmt_fixed(res.gamma_star);
        for (double k : res.k_star) csv += "," + fmt_fixed(k);
        csv += "," + fmt_fixed(res.reward_star) + ",";
        csv += status_name(res.status);
        csv += "\n";
      }
      write_file(detail::out_path(out_dir, "sweep.csv"), csv);
      nlohmann::json overrides{{"fault", fault_id},
                               {"from", sweep_from},
                               {"to", sweep_to},
                               {"steps", sweep_steps}};
      detail::write_manifest(out_dir, "sweep-omega", {config_path}, overrides,
                             {"sweep.csv"}, status);
      out << "rows: " << sweep_steps << "\n";
      return status;
    }

    if (*decentralized) {
      const SystemModel model = load_system(read_file(config_path));
      const FaultScenario& fault = model.fault_by_id(fault_id);
      const double omega = detail::resolve_omega(omega_flag, model);
      const SessionLog log =
          run_decentralized(model, fault, omega, SolverConfig{});
      const int status =
          log.result.status == EquilibriumStatus::MaxIterations ? 5 : 0;
      write_file(
          detail::out_path(out_dir, "equilibrium.json"),
          detail::equilibrium_json(log.result, fault.id, fault.delta_p, omega)
                  .dump(2) +
              "\n");
      write_file(detail::out_path(out_dir, "transcript.jsonl"),
                 log.to_jsonl());
      nlohmann::json overrides = nlohmann::json::object();
      overrides["fault"] = fault_id;
      if (omega_flag) overrides["omega"] = *omega_flag;
      detail::write_manifest(out_dir, "decentralized", {config_path},
                             overrides, {"equilibrium.json",
                                         "transcript.jsonl"},
                             status);
      detail::print_result(out, log.result);
      out << "transcript messages: " << log.transcript.size() << "\n";
      return status;
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "non-convergence: " << e.what() << "\n";
    return 5;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace midc::cli

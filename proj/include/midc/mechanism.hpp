#pragma once

// The incentive mechanism pipeline around the equilibrium solver: fault-set
// statistics, the per-fault equilibrium curve table, the pre-payment
// schedule for the nearest-to-expected fault, and the real-time adjustment
// decision once the actual imbalance is known.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "midc/errors.hpp"
#include "midc/game.hpp"
#include "midc/io.hpp"
#include "midc/model.hpp"
#include "midc/solver.hpp"
#include "midc/welfare.hpp"

namespace midc {

inline double expected_imbalance(const FaultSet& faults) {
  double e = 0.0;
  for (const auto& f : faults.faults) e += f.ratio * f.delta_p;
  return e;
}

// Fault whose imbalance is closest to the expectation; distance ties go to
// the larger imbalance (the frequency-safe choice).
inline const FaultScenario& nearest_to_expected(const FaultSet& faults) {
  if (faults.empty())
    throw DomainError("nearest_to_expected: fault set is empty");
  const double expect = expected_imbalance(faults);
  const FaultScenario* best = &faults.faults.front();
  double best_d = std::abs(best->delta_p - expect);
  for (const auto& f : faults.faults) {
    const double d = std::abs(f.delta_p - expect);
    if (d < best_d || (d == best_d && f.delta_p > best->delta_p)) {
      best = &f;
      best_d = d;
    }
  }
  return *best;
}

struct CurveRow {
  std::string fault_id;
  double delta_p = 0.0;
  double gamma = 0.0;
  std::vector<double> k;
  double reward = 0.0;
  EquilibriumStatus status = EquilibriumStatus::Converged;
  bool verified = false;  // build-time certificate, not serialized
};

struct CurveTable {
  std::vector<std::string> ad_ids;
  std::vector<CurveRow> rows;

  const CurveRow* find_fault(const std::string& fault_id) const {
    for (const auto& r : rows)
      if (r.fault_id == fault_id) return &r;
    return nullptr;
  }

  std::string to_csv() const {
    std::string s = "fault_id,delta_p_mw,gamma";
    for (std::size_t i = 1; i <= ad_ids.size(); ++i)
      s += ",k_" + std::to_string(i);
    s += ",reward,status\n";
    for (const auto& r : rows) {
      s += r.fault_id + "," + fmt_fixed(r.delta_p) + "," + fmt_fixed(r.gamma);
      for (double k : r.k) s += "," + fmt_fixed(k);
      s += "," + fmt_fixed(r.reward) + ",";
      s += status_name(r.status);
      s += "\n";
    }
    return s;
  }

  static CurveTable from_csv(const std::string& text);
};

inline EquilibriumStatus status_from_name(const std::string& name) {
  if (name == "converged") return EquilibriumStatus::Converged;
  if (name == "saturated") return EquilibriumStatus::Saturated;
  if (name == "max_iterations") return EquilibriumStatus::MaxIterations;
  if (name == "no_support_needed") return EquilibriumStatus::NoSupportNeeded;
  throw ParseError("unknown equilibrium status '" + name + "'");
}

inline CurveTable CurveTable::from_csv(const std::string& text) {
  CurveTable t;
  std::istringstream ss(text);
  std::string line;
  if (!std::getline(ss, line))
    throw ParseError("curve table: empty document");
  auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "fault_id" ||
      header[1] != "delta_p_mw" || header[2] != "gamma" ||
      header[header.size() - 2] != "reward" || header.back() != "status")
    throw ParseError("curve table: unexpected header layout");
  const std::size_t n_ads = header.size() - 5;
  for (std::size_t i = 0; i < n_ads; ++i) t.ad_ids.push_back(header[3 + i]);
  int line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("curve table: line " + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) +
                       " cells");
    CurveRow r;
    r.fault_id = cells[0];
    try {
      r.delta_p = std::stod(cells[1]);
      r.gamma = std::stod(cells[2]);
      for (std::size_t i = 0; i < n_ads; ++i)
        r.k.push_back(std::stod(cells[3 + i]));
      r.reward = std::stod(cells[3 + n_ads]);
    } catch (const std::exception&) {
      throw ParseError("curve table: line " + std::to_string(line_no) +
                       ": bad numeric cell");
    }
    r.status = status_from_name(cells.back());
    r.verified = r.status == EquilibriumStatus::Converged;
    t.rows.push_back(std::move(r));
  }
  return t;
}

// One equilibrium row per fault, rows sorted by imbalance. Solve failures
// stay in the table with their status; duplicate imbalances keep the row
// with the larger droop requirement (conservative for lookups). Redundancy
// faults are solved against the mirrored frequency target.
inline CurveTable build_curves(const SystemModel& model, const FaultSet& faults,
                               double omega_am, const SolverConfig& cfg = {}) {
  CurveTable t;
  t.ad_ids = detail::adjacent_ids(model);
  for (const auto& f : faults.faults) {
    const double omega_f = f.delta_p < 0.0 ? -omega_am : omega_am;
    const FaultedView view = apply_fault(model, f);
    const EquilibriumResult res = seek_equilibrium(view, omega_f, cfg);
    CurveRow r;
    r.fault_id = f.id;
    r.delta_p = f.delta_p;
    r.gamma = res.gamma_star;
    r.k = res.k_star;
    r.reward = res.reward_star;
    r.status = res.status;
    if (res.status == EquilibriumStatus::Converged) {
      const auto kkt = kkt_residual(res.k_star, res.gamma_star, view, omega_f);
      const double W = required_total_droop(view, omega_f).value;
      r.verified =
          kkt.max_stationarity < 1e-6 * std::max(1.0, res.gamma_star) &&
          kkt.equality_residual < 1e-3 * std::max(1.0, std::abs(W));
    }
    t.rows.push_back(std::move(r));
  }
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const CurveRow& a, const CurveRow& b) {
                     if (a.delta_p != b.delta_p) return a.delta_p < b.delta_p;
                     return a.reward < b.reward;
                   });
  std::vector<CurveRow> dedup;
  for (auto& r : t.rows) {
    if (!dedup.empty() && dedup.back().delta_p == r.delta_p)
      dedup.back() = std::move(r);
    else
      dedup.push_back(std::move(r));
  }
  t.rows = std::move(dedup);
  return t;
}

struct MechanismSchedule {
  std::string nearest_fault_id;
  double nearest_delta_p = 0.0;      // MW
  double expected_imbalance_mw = 0.0;
  double prepaid_reward = 0.0;       // p.u.
  std::vector<std::string> ad_ids;
  std::vector<double> preset_droop;  // MW/Hz
  std::vector<double> allocations;   // p.u., proportional to droop

  nlohmann::json to_json() const {
    return nlohmann::json{{"schema", 1},
                          {"nearest_fault_id", nearest_fault_id},
                          {"nearest_delta_p_mw", nearest_delta_p},
                          {"expected_imbalance_mw", expected_imbalance_mw},
                          {"prepaid_reward", prepaid_reward},
                          {"ad_ids", ad_ids},
                          {"preset_droop", preset_droop},
                          {"allocations", allocations}};
  }

  static MechanismSchedule from_json(const nlohmann::json& j) {
    MechanismSchedule s;
    try {
      if (j.at("schema").get<int>() != 1)
        throw ParseError("schedule: unsupported schema version");
      s.nearest_fault_id = j.at("nearest_fault_id").get<std::string>();
      s.nearest_delta_p = j.at("nearest_delta_p_mw").get<double>();
      s.expected_imbalance_mw = j.at("expected_imbalance_mw").get<double>();
      s.prepaid_reward = j.at("prepaid_reward").get<double>();
      s.ad_ids = j.at("ad_ids").get<std::vector<std::string>>();
      s.preset_droop = j.at("preset_droop").get<std::vector<double>>();
      s.allocations = j.at("allocations").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("schedule: ") + e.what());
    }
    if (s.preset_droop.size() != s.ad_ids.size() ||
        s.allocations.size() != s.ad_ids.size())
      throw ParseError("schedule: array lengths disagree");
    return s;
  }
};

// Pre-payment keyed to the nearest-to-expected fault: pay that equilibrium's
// reward up front, split in proportion to the preset droop coefficients.
inline MechanismSchedule prepare_schedule(const CurveTable& curves,
                                          const FaultSet& faults) {
  const FaultScenario& nearest = nearest_to_expected(faults);
  const CurveRow* row = curves.find_fault(nearest.id);
  if (!row)
    throw DomainError("prepare_schedule: curve table has no row for fault '" +
                      nearest.id + "'");
  if (row->status != EquilibriumStatus::Converged)
    throw DomainError("prepare_schedule: nearest fault row status is " +
                      std::string(status_name(row->status)));
  MechanismSchedule s;
  s.nearest_fault_id = nearest.id;
  s.nearest_delta_p = nearest.delta_p;
  s.expected_imbalance_mw = expected_imbalance(faults);
  s.prepaid_reward = row->reward;
  s.ad_ids = curves.ad_ids;
  s.preset_droop = row->k;
  double k_sum = 0.0;
  for (double k : row->k) k_sum += k;
  if (k_sum <= 0.0)
    throw DomainError("prepare_schedule: preset droop sum is not positive");
  for (double k : row->k) s.allocations.push_back(row->reward * k / k_sum);
  return s;
}

enum class AdjustmentAction { KeepPreset, AdjustTo, SolveFresh,
                              SaturateAndShed };

inline const char* action_name(AdjustmentAction a) {
  switch (a) {
    case AdjustmentAction::KeepPreset: return "keep_preset";
    case AdjustmentAction::AdjustTo: return "adjust_to";
    case AdjustmentAction::SolveFresh: return "solve_fresh";
    case AdjustmentAction::SaturateAndShed: return "saturate_and_shed";
  }
  return "unknown";
}

struct AdjustmentDecision {
  AdjustmentAction action = AdjustmentAction::KeepPreset;
  std::string row_fault_id;  // set for AdjustTo
  std::vector<std::string> ad_ids;
  std::vector<double> k;
  double realized_mw = 0.0;
  double predicted_frequency = 0.0;  // Hz, steady state under chosen droop
  double shed_mw = 0.0;              // nonzero only for SaturateAndShed
  double prepaid_reward = 0.0;
  double adjusted_reward = 0.0;
  double reward_delta = 0.0;
  std::string rationale;

  nlohmann::json to_json() const {
    nlohmann::json j{{"schema", 1},
                     {"action", action_name(action)},
                     {"ad_ids", ad_ids},
                     {"k", k},
                     {"realized_mw", realized_mw},
                     {"predicted_frequency_hz", predicted_frequency},
                     {"shed_mw", shed_mw},
                     {"prepaid_reward", prepaid_reward},
                     {"adjusted_reward", adjusted_reward},
                     {"reward_delta", reward_delta},
                     {"rationale", rationale}};
    if (action == AdjustmentAction::AdjustTo) j["row_fault_id"] = row_fault_id;
    return j;
  }
};

// Real-time rule: a realized imbalance at or below the preset one keeps the
// (over-provisioned) preset when the resulting frequency stays secure; an
// exact curve-row match adopts that row; anything else is solved fresh at
// the realized value, degrading to saturation plus load shedding when the
// pooled droop cannot cover it. Settlement is not decided here: both the
// prepaid and the adjusted reward are reported.
inline AdjustmentDecision realtime_adjust(const MechanismSchedule& schedule,
                                          const CurveTable& curves,
                                          double realized_mw,
                                          const SystemModel& model,
                                          double omega_am,
                                          const SolverConfig& cfg = {}) {
  if (schedule.ad_ids.size() != model.adjacents.size())
    throw DomainError("realtime_adjust: schedule AD count does not match "
                      "the model");
  AdjustmentDecision d;
  d.ad_ids = schedule.ad_ids;
  d.realized_mw = realized_mw;
  d.prepaid_reward = schedule.prepaid_reward;
  const double omega_r = realized_mw < 0.0 ? -omega_am : omega_am;
  const bool same_sign =
      (realized_mw >= 0.0) == (schedule.nearest_delta_p >= 0.0);

  if (same_sign &&
      std::abs(realized_mw) <= std::abs(schedule.nearest_delta_p)) {
    const FaultedView preset_view =
        apply_fault(model, model.fault_by_id(schedule.nearest_fault_id));
    double k_sum = 0.0;
    for (double k : schedule.preset_droop) k_sum += k;
    const double predicted =
        -realized_mw / (preset_view.effective_am_droop() + k_sum);
    if (predicted >= model.main.omega_min &&
        predicted <= model.main.omega_max) {
      d.action = AdjustmentAction::KeepPreset;
      d.k = schedule.preset_droop;
      d.predicted_frequency = predicted;
      d.adjusted_reward = schedule.prepaid_reward;
      d.rationale = "realized imbalance does not exceed the preset one and "
                    "the preset droop keeps the frequency secure";
      return d;
    }
  }

  for (const auto& row : curves.rows) {
    if (row.status != EquilibriumStatus::Converged) continue;
    if ((row.delta_p >= 0.0) != (realized_mw >= 0.0)) continue;
    if (std::abs(row.delta_p - realized_mw) >
        1e-6 * std::max(1.0, std::abs(realized_mw)))
      continue;
    d.action = AdjustmentAction::AdjustTo;
    d.row_fault_id = row.fault_id;
    d.k = row.k;
    d.adjusted_reward = row.reward;
    d.reward_delta = row.reward - schedule.prepaid_reward;
    double k_sum = 0.0;
    for (double k : row.k) k_sum += k;
    const FaultScenario* row_fault = nullptr;
    for (const auto& f : model.faults.faults)
      if (f.id == row.fault_id) row_fault = &f;
    const double eff = row_fault
                           ? apply_fault(model, *row_fault).effective_am_droop()
                           : model.main.droop_sum();
    d.predicted_frequency = -realized_mw / (eff + k_sum);
    d.rationale = "realized imbalance matches curve row '" + row.fault_id +
                  "'; droop preset adjusted by table lookup";
    return d;
  }

  FaultScenario fresh;
  fresh.id = "realized";
  fresh.delta_p = realized_mw;
  fresh.ratio = 1.0;
  const FaultedView view = apply_fault(model, fresh);
  const EquilibriumResult res = seek_equilibrium(view, omega_r, cfg);
  if (res.status == EquilibriumStatus::MaxIterations)
    throw ConvergenceError(
        "realtime_adjust: fresh equilibrium did not converge");
  d.k = res.k_star;
  d.predicted_frequency = res.omega_hat;
  d.adjusted_reward = res.reward_star;
  d.reward_delta = res.reward_star - schedule.prepaid_reward;
  if (res.status == EquilibriumStatus::Saturated) {
    d.action = AdjustmentAction::SaturateAndShed;
    d.shed_mw = saturate_price(view, omega_r).uncovered_imbalance;
    d.rationale = "realized imbalance exceeds pooled droop capability; "
                  "droop saturated and residual imbalance left to load "
                  "shedding";
  } else {
    d.action = AdjustmentAction::SolveFresh;
    d.rationale = "realized imbalance off the curve grid; fresh equilibrium "
                  "solved at the realized value";
  }
  return d;
}

}  // namespace midc

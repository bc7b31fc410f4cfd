#pragma once

// Domain model of a multi-infeed hybrid AC-DC system: one AC main grid (AM)
// tied to several asynchronous AC grids (AD systems) through LCC-HVDC links.
// Covers config ingestion/validation, fault application, and the droop
// feasible-set derivation used by the incentive game.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "midc/errors.hpp"

namespace midc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
  double clamp(double x) const { return std::min(std::max(x, lo), hi); }
  double midpoint() const { return 0.5 * (lo + hi); }

  bool operator==(const Interval&) const = default;
};

struct GeneratorParams {
  std::string id;
  double p_nom = 0.0;   // MW
  double p_max = 0.0;   // MW
  double p_min = 0.0;   // MW
  double alpha = 0.0;   // cost curvature, p.u./MW^2
  double k_g = 0.0;     // primary droop, MW/Hz

  bool operator==(const GeneratorParams&) const = default;
};

enum class LccKind { SendingEnd, ReceivingEnd };

// Powers are stored as tabulated magnitudes; the kind flag carries the sign
// convention (receiving-end links draw power, so their signed values are
// negative).
struct LccParams {
  std::string id;
  LccKind kind = LccKind::SendingEnd;
  double p_nom = 0.0;  // MW, magnitude
  double p_max = 0.0;  // MW, magnitude
  double p_min = 0.0;  // MW, magnitude

  double signed_nominal() const {
    return kind == LccKind::SendingEnd ? p_nom : -p_nom;
  }
  Interval signed_bounds() const {
    return kind == LccKind::SendingEnd ? Interval{p_min, p_max}
                                       : Interval{-p_max, -p_min};
  }
  // Margin available for supporting the AM system given the direction of the
  // AM frequency excursion: a shortage (omega_am < 0) is covered by pushing
  // more power toward the AM grid, a redundancy by pulling it back.
  double support_headroom(double omega_am) const {
    const bool shortage = omega_am < 0.0;
    if (kind == LccKind::SendingEnd)
      return shortage ? p_max - p_nom : p_nom - p_min;
    return shortage ? p_nom - p_min : p_max - p_nom;
  }

  bool operator==(const LccParams&) const = default;
};

struct AdjacentSystem {
  std::string id;
  LccParams lcc;
  std::vector<GeneratorParams> generators;
  double omega_min = 0.0;  // Hz
  double omega_max = 0.0;  // Hz

  double generator_droop_sum() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.k_g;
    return s;
  }

  bool operator==(const AdjacentSystem&) const = default;
};

struct MainSystem {
  std::vector<GeneratorParams> generators;
  double omega_min = 0.0;      // Hz
  double omega_max = 0.0;      // Hz
  double reward_min = 0.0;     // p.u.
  double reward_max = 0.0;     // p.u.
  double a_min = 0.0;          // marginal response coefficient
  double a_max = 0.0;
  Interval gamma_set;          // admissible virtual price range
  double omega_am_default = -0.2;  // Hz

  double droop_sum() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.k_g;
    return s;
  }

  bool operator==(const MainSystem&) const = default;
};

struct FaultScenario {
  std::string id;
  double delta_p = 0.0;  // MW; >0 shortage, <0 redundancy
  std::optional<std::string> tripped_generator;  // AM generator id
  double ratio = 0.0;    // occurrence weight

  bool operator==(const FaultScenario&) const = default;
};

struct FaultSet {
  std::vector<FaultScenario> faults;
  double cycle = 0.0;  // execution period, informational

  bool empty() const { return faults.empty(); }

  bool operator==(const FaultSet&) const = default;
};

struct SystemModel {
  MainSystem main;
  std::vector<AdjacentSystem> adjacents;
  FaultSet faults;

  const AdjacentSystem& adjacent_by_id(const std::string& id) const {
    for (const auto& ad : adjacents)
      if (ad.id == id) return ad;
    throw DomainError("unknown adjacent system id '" + id + "'");
  }
  const FaultScenario& fault_by_id(const std::string& id) const {
    for (const auto& f : faults.faults)
      if (f.id == id) return f;
    throw DomainError("unknown fault id '" + id + "'");
  }

  bool operator==(const SystemModel&) const = default;
};

// Read-only slice of a model with one fault active. The underlying model is
// never mutated; the tripped generator is excluded from the effective AM
// droop sum.
class FaultedView {
 public:
  FaultedView(const SystemModel& model, FaultScenario fault,
              double effective_am_droop)
      : model_(&model),
        fault_(std::move(fault)),
        effective_am_droop_(effective_am_droop) {}

  const SystemModel& model() const { return *model_; }
  const FaultScenario& fault() const { return fault_; }
  double delta_p() const { return fault_.delta_p; }
  double effective_am_droop() const { return effective_am_droop_; }
  bool is_tripped(const GeneratorParams& g) const {
    return fault_.tripped_generator && *fault_.tripped_generator == g.id;
  }

 private:
  const SystemModel* model_;
  FaultScenario fault_;
  double effective_am_droop_;
};

namespace detail {

inline void check(bool ok, const std::string& rule) {
  if (!ok) throw InvariantError(rule);
}

inline void validate_generator(const GeneratorParams& g,
                               const std::string& where) {
  check(g.p_min <= g.p_nom && g.p_nom <= g.p_max,
        where + " generator '" + g.id +
            "': requires p_min <= p_nom <= p_max");
  check(g.alpha > 0.0,
        where + " generator '" + g.id + "': requires alpha > 0");
  check(g.k_g >= 0.0, where + " generator '" + g.id + "': requires k_g >= 0");
}

}  // namespace detail

// Enforces every structural invariant; throws InvariantError naming the
// violated rule. Fault ratios are normalized in place when their sum is
// within 1e-6 of one.
inline void validate_model(SystemModel& model) {
  using detail::check;
  for (const auto& g : model.main.generators)
    detail::validate_generator(g, "main");
  {
    std::set<std::string> ids;
    for (const auto& g : model.main.generators)
      check(ids.insert(g.id).second,
            "main generator id '" + g.id + "' is not unique");
  }
  check(model.main.omega_min < 0.0 && 0.0 < model.main.omega_max,
        "main: requires omega_min < 0 < omega_max");
  check(0.0 < model.main.a_min && model.main.a_min <= model.main.a_max,
        "incentive: requires 0 < a_min <= a_max");
  check(model.main.reward_min <= model.main.reward_max,
        "incentive: requires reward_min <= reward_max");
  check(model.main.gamma_set.lo <= model.main.gamma_set.hi,
        "incentive: gamma set must be nonempty (gamma_min <= gamma_max)");

  check(!model.adjacents.empty(), "at least one adjacent system is required");
  std::set<std::string> ad_ids;
  for (const auto& ad : model.adjacents) {
    check(ad_ids.insert(ad.id).second,
          "adjacent system id '" + ad.id + "' is not unique");
    const auto& l = ad.lcc;
    check(l.p_min <= l.p_nom && l.p_nom <= l.p_max,
          "lcc '" + l.id + "': requires p_min <= p_nom <= p_max");
    check(!ad.generators.empty(),
          "adjacent system '" + ad.id + "': at least one generator required");
    for (const auto& g : ad.generators)
      detail::validate_generator(g, "adjacent '" + ad.id + "'");
    check(ad.generator_droop_sum() > 0.0,
          "adjacent system '" + ad.id +
              "': generator droop sum must be positive");
    check(ad.omega_min < 0.0 && 0.0 < ad.omega_max,
          "adjacent system '" + ad.id + "': requires omega_min < 0 < omega_max");
  }

  std::set<std::string> fault_ids;
  double ratio_sum = 0.0;
  for (const auto& f : model.faults.faults) {
    check(fault_ids.insert(f.id).second,
          "fault id '" + f.id + "' is not unique");
    check(f.ratio >= 0.0, "fault '" + f.id + "': requires ratio >= 0");
    if (f.tripped_generator) {
      bool found = false;
      for (const auto& g : model.main.generators)
        if (g.id == *f.tripped_generator) found = true;
      check(found, "fault '" + f.id + "': tripped generator '" +
                       *f.tripped_generator + "' not in main system");
    }
    ratio_sum += f.ratio;
  }
  if (!model.faults.faults.empty()) {
    check(std::abs(ratio_sum - 1.0) <= 1e-6,
          "fault ratios must sum to 1 (got " + std::to_string(ratio_sum) +
              ")");
    for (auto& f : model.faults.faults) f.ratio /= ratio_sum;
  }
}

// --- config ingestion -------------------------------------------------------
//
// JSON document, schema 1. Top-level keys: schema, main, incentive,
// adjacents, faults (optional). Field names mirror the types above; see
// README for the full schema.

namespace detail {

inline const nlohmann::json& member(const nlohmann::json& j,
                                    const std::string& key,
                                    const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

inline double num(const nlohmann::json& j, const std::string& key,
                  const std::string& path) {
  const auto& v = member(j, key, path);
  if (!v.is_number())
    throw ParseError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double num_or(const nlohmann::json& j, const std::string& key,
                     double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ParseError(key + ": expected a number");
  return it->get<double>();
}

inline std::string str(const nlohmann::json& j, const std::string& key,
                       const std::string& path) {
  const auto& v = member(j, key, path);
  if (!v.is_string())
    throw ParseError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline GeneratorParams parse_generator(const nlohmann::json& j,
                                       const std::string& path) {
  GeneratorParams g;
  g.id = str(j, "id", path);
  g.p_nom = num(j, "p_nom", path);
  g.p_max = num(j, "p_max", path);
  g.p_min = num(j, "p_min", path);
  g.alpha = num(j, "alpha", path);
  g.k_g = num(j, "k_g", path);
  return g;
}

inline std::vector<GeneratorParams> parse_generators(
    const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  std::vector<GeneratorParams> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_generator(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline SystemModel load_system(const std::string& document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  using detail::member;
  using detail::num;
  using detail::str;

  if (detail::num(j, "schema", "$") != 1)
    throw ParseError("$.schema: unsupported schema version (expected 1)");

  SystemModel model;

  const auto& jmain = member(j, "main", "$");
  model.main.generators =
      detail::parse_generators(member(jmain, "generators", "$.main"),
                               "$.main.generators");
  model.main.omega_min = num(jmain, "omega_min", "$.main");
  model.main.omega_max = num(jmain, "omega_max", "$.main");

  const auto& jinc = member(j, "incentive", "$");
  model.main.gamma_set = {num(jinc, "gamma_min", "$.incentive"),
                          num(jinc, "gamma_max", "$.incentive")};
  model.main.a_min = num(jinc, "a_min", "$.incentive");
  model.main.a_max = num(jinc, "a_max", "$.incentive");
  model.main.reward_min = num(jinc, "reward_min", "$.incentive");
  model.main.reward_max = num(jinc, "reward_max", "$.incentive");
  model.main.omega_am_default = detail::num_or(jinc, "omega_am_default", -0.2);

  const auto& jads = member(j, "adjacents", "$");
  if (!jads.is_array()) throw ParseError("$.adjacents: expected an array");
  for (std::size_t i = 0; i < jads.size(); ++i) {
    const std::string path = "$.adjacents[" + std::to_string(i) + "]";
    const auto& ja = jads[i];
    AdjacentSystem ad;
    ad.id = str(ja, "id", path);
    ad.omega_min = num(ja, "omega_min", path);
    ad.omega_max = num(ja, "omega_max", path);
    const auto& jl = member(ja, "lcc", path);
    ad.lcc.id = str(jl, "id", path + ".lcc");
    const std::string kind = str(jl, "kind", path + ".lcc");
    if (kind == "sending_end")
      ad.lcc.kind = LccKind::SendingEnd;
    else if (kind == "receiving_end")
      ad.lcc.kind = LccKind::ReceivingEnd;
    else
      throw ParseError(path +
                       ".lcc.kind: expected 'sending_end' or 'receiving_end'");
    ad.lcc.p_nom = num(jl, "p_nom", path + ".lcc");
    ad.lcc.p_max = num(jl, "p_max", path + ".lcc");
    ad.lcc.p_min = num(jl, "p_min", path + ".lcc");
    ad.generators = detail::parse_generators(member(ja, "generators", path),
                                             path + ".generators");
    model.adjacents.push_back(std::move(ad));
  }

  if (auto it = j.find("faults"); it != j.end()) {
    const auto& jf = *it;
    model.faults.cycle = detail::num_or(jf, "cycle", 0.0);
    const auto& jlist = member(jf, "faults", "$.faults");
    if (!jlist.is_array())
      throw ParseError("$.faults.faults: expected an array");
    for (std::size_t i = 0; i < jlist.size(); ++i) {
      const std::string path = "$.faults.faults[" + std::to_string(i) + "]";
      const auto& je = jlist[i];
      FaultScenario f;
      f.id = str(je, "id", path);
      f.delta_p = num(je, "delta_p", path);
      f.ratio = num(je, "ratio", path);
      if (auto t = je.find("tripped_generator"); t != je.end() && !t->is_null()) {
        if (!t->is_string())
          throw ParseError(path + ".tripped_generator: expected a string");
        f.tripped_generator = t->get<std::string>();
      }
      model.faults.faults.push_back(std::move(f));
    }
  }

  validate_model(model);
  return model;
}

inline std::string emit_system(const SystemModel& model) {
  nlohmann::json j;
  j["schema"] = 1;
  auto gen_json = [](const GeneratorParams& g) {
    return nlohmann::json{{"id", g.id},       {"p_nom", g.p_nom},
                          {"p_max", g.p_max}, {"p_min", g.p_min},
                          {"alpha", g.alpha}, {"k_g", g.k_g}};
  };
  auto& jmain = j["main"];
  jmain["generators"] = nlohmann::json::array();
  for (const auto& g : model.main.generators)
    jmain["generators"].push_back(gen_json(g));
  jmain["omega_min"] = model.main.omega_min;
  jmain["omega_max"] = model.main.omega_max;

  j["incentive"] = {{"gamma_min", model.main.gamma_set.lo},
                    {"gamma_max", model.main.gamma_set.hi},
                    {"a_min", model.main.a_min},
                    {"a_max", model.main.a_max},
                    {"reward_min", model.main.reward_min},
                    {"reward_max", model.main.reward_max},
                    {"omega_am_default", model.main.omega_am_default}};

  j["adjacents"] = nlohmann::json::array();
  for (const auto& ad : model.adjacents) {
    nlohmann::json ja;
    ja["id"] = ad.id;
    ja["omega_min"] = ad.omega_min;
    ja["omega_max"] = ad.omega_max;
    ja["lcc"] = {{"id", ad.lcc.id},
                 {"kind", ad.lcc.kind == LccKind::SendingEnd
                              ? "sending_end"
                              : "receiving_end"},
                 {"p_nom", ad.lcc.p_nom},
                 {"p_max", ad.lcc.p_max},
                 {"p_min", ad.lcc.p_min}};
    ja["generators"] = nlohmann::json::array();
    for (const auto& g : ad.generators) ja["generators"].push_back(gen_json(g));
    j["adjacents"].push_back(std::move(ja));
  }

  if (!model.faults.faults.empty() || model.faults.cycle != 0.0) {
    auto& jf = j["faults"];
    jf["cycle"] = model.faults.cycle;
    jf["faults"] = nlohmann::json::array();
    for (const auto& f : model.faults.faults) {
      nlohmann::json je{{"id", f.id}, {"delta_p", f.delta_p},
                        {"ratio", f.ratio}};
      if (f.tripped_generator) je["tripped_generator"] = *f.tripped_generator;
      jf["faults"].push_back(std::move(je));
    }
  }
  return j.dump(2) + "\n";
}

// --- fault application ------------------------------------------------------

inline FaultedView apply_fault(const SystemModel& model,
                               const FaultScenario& fault) {
  double effective = 0.0;
  bool trip_found = !fault.tripped_generator.has_value();
  for (const auto& g : model.main.generators) {
    if (fault.tripped_generator && g.id == *fault.tripped_generator) {
      trip_found = true;
      continue;
    }
    effective += g.k_g;
  }
  if (!trip_found)
    throw DomainError("fault '" + fault.id + "': unknown tripped generator '" +
                      *fault.tripped_generator + "'");
  return FaultedView(model, fault, effective);
}

inline FaultedView apply_fault(const SystemModel& model,
                               const std::string& fault_id) {
  return apply_fault(model, model.fault_by_id(fault_id));
}

// --- droop feasible set -----------------------------------------------------

// Feasible droop interval [0, hi] for one adjacent system under the expected
// AM frequency deviation. hi intersects three limits, each mapped through
// the AD-side frequency relation omega_ad = k * omega_am / sum(k_h^G):
//   - LCC power regulation margin,
//   - AD frequency security bound (the bound on the same side as omega_am),
//   - each AD generator's power headroom.
inline Interval derive_droop_bounds(const AdjacentSystem& ad, double omega_am) {
  if (omega_am == 0.0)
    throw DomainError("derive_droop_bounds: omega_am must be nonzero");
  const double kg_sum = ad.generator_droop_sum();
  if (kg_sum <= 0.0)
    throw DomainError("adjacent system '" + ad.id +
                      "': generator droop sum must be positive");
  const double abs_w = std::abs(omega_am);
  const bool shortage = omega_am < 0.0;

  double hi = ad.lcc.support_headroom(omega_am) / abs_w;
  const double omega_ad_mag = shortage ? -ad.omega_min : ad.omega_max;
  hi = std::min(hi, kg_sum * omega_ad_mag / abs_w);
  for (const auto& g : ad.generators) {
    if (g.k_g <= 0.0) continue;  // no regulation, no binding headroom
    const double headroom = shortage ? g.p_max - g.p_nom : g.p_nom - g.p_min;
    hi = std::min(hi, headroom * kg_sum / (abs_w * g.k_g));
  }
  if (hi < 0.0)
    throw DomainError("adjacent system '" + ad.id +
                      "': infeasible droop interval (negative headroom)");
  return Interval{0.0, hi};
}

inline std::vector<Interval> derive_all_droop_bounds(const SystemModel& model,
                                                     double omega_am) {
  std::vector<Interval> out;
  out.reserve(model.adjacents.size());
  for (const auto& ad : model.adjacents)
    out.push_back(derive_droop_bounds(ad, omega_am));
  return out;
}

}  // namespace midc

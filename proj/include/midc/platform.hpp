#pragma once

// Decentralized enactment of the equilibrium iteration: an AM-side session
// posts prices, AD agents answer with droop replies over a transport, and
// the transcript carries nothing beyond the posted price, the expected
// deviation, and the replies. AD cost parameters never leave their agent.

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "midc/errors.hpp"
#include "midc/game.hpp"
#include "midc/model.hpp"
#include "midc/solver.hpp"

namespace midc {

struct PricePost {
  int round = 0;
  double gamma = 0.0;
  double omega_am = 0.0;
};

struct DroopReply {
  int round = 0;
  std::string ad_id;
  double k = 0.0;
};

using TranscriptMessage = std::variant<PricePost, DroopReply>;

class TransportTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SessionLog {
  std::vector<TranscriptMessage> transcript;
  EquilibriumResult result;

  // One message per line; key order is stable (serializer sorts keys).
  std::string to_jsonl() const {
    std::string out;
    for (const auto& m : transcript) {
      nlohmann::json j;
      if (const auto* p = std::get_if<PricePost>(&m)) {
        j = {{"round", p->round}, {"gamma", p->gamma},
             {"omega_am", p->omega_am}};
      } else {
        const auto& r = std::get<DroopReply>(m);
        j = {{"round", r.round}, {"ad_id", r.ad_id}, {"k", r.k}};
      }
      out += j.dump() + "\n";
    }
    return out;
  }
};

class AdAgent {
 public:
  virtual ~AdAgent() = default;
  virtual const std::string& id() const = 0;
  virtual DroopReply respond(const PricePost& post) = 0;
};

// Honest agent: holds its own system data privately and answers with the
// best response derived from the posted price and expected deviation.
class LocalAdAgent : public AdAgent {
 public:
  explicit LocalAdAgent(AdjacentSystem ad) : ad_(std::move(ad)) {}
  const std::string& id() const override { return ad_.id; }
  DroopReply respond(const PricePost& post) override {
    const AdCurvature c = ad_curvature(ad_, post.omega_am);
    const Interval b = derive_droop_bounds(ad_, post.omega_am);
    return {post.round, ad_.id, best_response_droop(post.gamma, c, b)};
  }

 private:
  AdjacentSystem ad_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<DroopReply> exchange(const PricePost& post) = 0;
};

// Reference transport: agents answer sequentially in registration order
// within the round barrier, so sessions are deterministic.
class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(std::vector<AdAgent*> agents)
      : agents_(std::move(agents)) {}
  std::vector<DroopReply> exchange(const PricePost& post) override {
    std::vector<DroopReply> replies;
    replies.reserve(agents_.size());
    for (AdAgent* a : agents_) replies.push_back(a->respond(post));
    return replies;
  }

 private:
  std::vector<AdAgent*> agents_;
};

inline SessionLog run_decentralized(const SystemModel& model,
                                    const FaultScenario& fault,
                                    double omega_am, const SolverConfig& cfg,
                                    Transport& transport) {
  detail::check_solver_config(cfg, model.adjacents.size());
  const FaultedView view = apply_fault(model, fault);
  SessionLog log;
  if (auto shortcut = presolve_regime(view, omega_am)) {
    log.result = *shortcut;
    return log;
  }
  const auto bounds = derive_all_droop_bounds(model, omega_am);
  const auto ids = detail::adjacent_ids(model);

  auto respond = [&](int round, double gamma) {
    const PricePost post{round, gamma, omega_am};
    log.transcript.emplace_back(post);
    const std::vector<DroopReply> replies = transport.exchange(post);
    std::vector<double> k(ids.size());
    std::vector<bool> seen(ids.size(), false);
    for (const auto& r : replies) {
      if (r.round != round)
        throw InvariantError("decentralized session: reply from '" + r.ad_id +
                             "' carries round " + std::to_string(r.round) +
                             ", expected " + std::to_string(round));
      std::size_t idx = ids.size();
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == r.ad_id) idx = i;
      if (idx == ids.size())
        throw InvariantError("decentralized session: reply from unknown "
                             "adjacent system '" + r.ad_id + "'");
      if (seen[idx])
        throw InvariantError("decentralized session: duplicate reply from '" +
                             r.ad_id + "'");
      const double tol = 1e-9 * std::max(1.0, std::abs(bounds[idx].hi));
      if (!bounds[idx].contains(r.k, tol))
        throw InvariantError("decentralized session: reply from '" + r.ad_id +
                             "' is outside its feasible droop interval");
      seen[idx] = true;
      k[idx] = r.k;
    }
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (!seen[i])
        throw InvariantError("decentralized session: missing reply from '" +
                             ids[i] + "'");
    for (std::size_t i = 0; i < ids.size(); ++i)
      log.transcript.emplace_back(DroopReply{round, ids[i], k[i]});
    return k;
  };
  log.result = detail::iterate_sefp(view, omega_am, cfg, respond);
  return log;
}

inline SessionLog run_decentralized(const SystemModel& model,
                                    const FaultScenario& fault,
                                    double omega_am,
                                    const SolverConfig& cfg = {}) {
  std::vector<std::unique_ptr<LocalAdAgent>> owned;
  std::vector<AdAgent*> agents;
  for (const auto& ad : model.adjacents) {
    owned.push_back(std::make_unique<LocalAdAgent>(ad));
    agents.push_back(owned.back().get());
  }
  InProcessTransport transport(std::move(agents));
  return run_decentralized(model, fault, omega_am, cfg, transport);
}

}  // namespace midc

#pragma once

// Shared test fixture: the four-link MIDC study system, plus reference
// equilibria for its eight single-trip faults. Reference values were frozen
// from independent calculations (exact-rational arithmetic for curvatures and
// bounds, grid/bisection checks for the equilibria) before the library code
// was written.

#include <string>
#include <vector>

#include "midc/model.hpp"

namespace fixtures {

inline midc::SystemModel study_system() {
  using midc::AdjacentSystem;
  using midc::FaultScenario;
  using midc::GeneratorParams;
  using midc::LccKind;
  using midc::SystemModel;

  SystemModel m;
  struct AmRow {
    const char* id;
    double p_nom, p_max, p_min, alpha, k_g;
  };
  const AmRow am_rows[] = {
      {"G1", 320, 500, 220, 1.0, 100}, {"G2", 350, 500, 250, 1.0, 105},
      {"G3", 370, 500, 270, 0.8, 120}, {"G4", 380, 500, 280, 1.0, 120},
      {"G5", 400, 600, 300, 0.8, 125}, {"G6", 425, 600, 325, 1.0, 145},
      {"G7", 450, 600, 350, 0.8, 130}, {"G8", 470, 600, 370, 0.8, 150}};
  for (const auto& r : am_rows)
    m.main.generators.push_back(
        GeneratorParams{r.id, r.p_nom, r.p_max, r.p_min, r.alpha, r.k_g});
  m.main.omega_min = -0.5;
  m.main.omega_max = 0.5;
  m.main.reward_min = 0.0;
  m.main.reward_max = 20000.0;
  m.main.a_min = 10.0;
  m.main.a_max = 20.0;
  m.main.gamma_set = {0.0, 10.0};
  m.main.omega_am_default = -0.2;

  struct AdRow {
    const char* id;
    LccKind kind;
    double pd, pd_max, pd_min;
    double p[3], alpha[3], kg[3];
  };
  const AdRow ad_rows[] = {
      {"AD1", LccKind::SendingEnd, 645, 750, 550,
       {610, 540, 650}, {0.9, 1.0, 1.1}, {130, 100, 150}},
      {"AD2", LccKind::SendingEnd, 630, 750, 550,
       {600, 550, 620}, {1.0, 1.0, 0.8}, {155, 120, 140}},
      {"AD3", LccKind::SendingEnd, 660, 750, 550,
       {580, 530, 630}, {0.9, 1.0, 0.8}, {150, 115, 150}},
      {"AD4", LccKind::ReceivingEnd, 500, 600, 400,
       {590, 560, 640}, {1.1, 1.0, 0.8}, {140, 110, 145}}};
  const double gen_p_max[3] = {700, 650, 750};
  const double gen_p_min[3] = {500, 450, 550};
  int lcc_no = 1;
  for (const auto& r : ad_rows) {
    AdjacentSystem ad;
    ad.id = r.id;
    ad.omega_min = -0.2;
    ad.omega_max = 0.2;
    ad.lcc.id = "LCC" + std::to_string(lcc_no++);
    ad.lcc.kind = r.kind;
    ad.lcc.p_nom = r.pd;
    ad.lcc.p_max = r.pd_max;
    ad.lcc.p_min = r.pd_min;
    for (int h = 0; h < 3; ++h) {
      std::string gid = ad.id;
      gid += "-G" + std::to_string(h + 1);
      ad.generators.push_back(GeneratorParams{
          gid, r.p[h], gen_p_max[h], gen_p_min[h], r.alpha[h], r.kg[h]});
    }
    m.adjacents.push_back(std::move(ad));
  }

  // One fault per AM generator trip; imbalance equals the unit's nominal
  // output, ratios uniform.
  m.faults.cycle = 24.0;
  for (int i = 1; i <= 8; ++i) {
    FaultScenario f;
    f.id = "F" + std::to_string(i);
    f.delta_p = m.main.generators[i - 1].p_nom;
    f.tripped_generator = m.main.generators[i - 1].id;
    f.ratio = 0.125;
    m.faults.faults.push_back(std::move(f));
  }
  return m;
}

// Disutility curvatures u_i of the four AD systems at omega_am = -0.2 Hz,
// frozen from exact-rational evaluation.
inline std::vector<double> study_curvatures() {
  return {6.919667590027701e-3, 6.2830599506459575e-3,
          5.977645521846422e-3, 6.470757891363563e-3};
}

// Feasible droop upper bounds at omega_am = -0.2 Hz.
inline std::vector<double> study_droop_hi() { return {380, 415, 415, 395}; }

// Published equilibrium table (rounded to the shown precision).
struct PublishedRow {
  const char* fault;
  double delta_p;
  double gamma;
  double k[4];
  double reward;
};

inline std::vector<PublishedRow> published_equilibria() {
  return {
      {"F1", 320, 2.25, {162.88, 179.38, 188.55, 174.18}, 1589.17},
      {"F2", 350, 2.75, {198.69, 218.82, 230.00, 212.48}, 2364.77},
      {"F3", 370, 3.12, {225.26, 248.08, 260.76, 240.89}, 3039.51},
      {"F4", 380, 3.28, {236.81, 260.81, 274.13, 253.24}, 3359.24},
      {"F5", 400, 3.61, {261.07, 287.52, 302.21, 279.18}, 4082.72},
      {"F6", 425, 4.08, {294.57, 324.42, 340.99, 315.01}, 5197.74},
      {"F7", 450, 4.43, {319.99, 352.41, 370.41, 342.18}, 6133.28},
      {"F8", 470, 4.81, {347.71, 382.94, 402.51, 371.83}, 7242.13}};
}

// High-precision interior equilibria recomputed independently of the solver
// (closed-form interior solution evaluated with frozen curvatures).
struct ExactRow {
  const char* fault;
  double required;  // total droop requirement W
  double gamma;
  double k[4];
  double reward;
};

inline std::vector<ExactRow> exact_equilibria() {
  return {
      {"F1", 705, 2.2541783350999243,
       {162.88198137931798, 179.38539125893377, 188.55068662583022,
        174.18194073591803},
       1589.1957262454466},
      {"F2", 860, 2.749777827214092,
       {198.69291345562195, 218.8247325995504, 230.00509290526807,
        212.47726103955958},
       2364.808931404119},
      {"F3", 975, 3.117480676202023,
       {225.26231467352486, 248.08617940065307, 260.7615878867865,
        240.88991803903556},
       3039.5436592969722},
      {"F4", 1025, 3.277351480109819,
       {236.81422824652614, 260.80854757504557, 274.1339770091858,
        253.24324716924252},
       3359.2852671125643},
      {"F5", 1130, 3.6130801683161904,
       {261.0732467498288, 287.5255207412697, 302.21599416622433,
        279.1852383426771},
       4082.780590197295},
      {"F6", 1275, 4.076705499648799,
       {294.57379611153254, 324.4203884470079, 340.99592262118233,
        315.0098928202773},
       5197.799512052219},
      {"F7", 1385, 4.42842126824595,
       {319.98800597213534, 352.4095984306713, 370.41517869046083,
        342.18721690673254},
       6133.363456520641},
      {"F8", 1505, 4.812111197624661,
       {347.71259854733836, 382.9432820492132, 402.50891258421916,
        371.83520681922926},
       7242.227352425115}};
}

// Price floor (per AD) at which the full interval saturates, omega = -0.2.
inline std::vector<double> study_gamma_minimal_each() {
  return {5.258947368421053, 5.214939759036144, 4.96144578313253,
          5.111898734177215};
}

inline std::string data_path(const std::string& name) {
  return std::string(MIDC_DATA_DIR) + "/" + name;
}

}  // namespace fixtures

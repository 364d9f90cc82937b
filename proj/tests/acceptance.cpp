// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "satsensor/satsensor.hpp"

namespace {

using satsensor::Collision;
using satsensor::DetectionScheme;
using satsensor::DetectorModel;
using satsensor::ResonanceParams;
using satsensor::TrapGeometry;
using satsensor::numerics::Interval;

const TrapGeometry kTrap{20.0, 2.0};
const DetectorModel kIdeal{1.0, DetectionScheme::BothPorts};

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict confinement_constant() {
  Verdict v;
  const double c0 = satsensor::confinement_factor(0.0, kTrap);
  const double direct = -oracle::hurwitz_zeta_half_direct(1.0);
  v.detail << "C(0) = " << fmt(c0) << ", |C - direct sum| = " << fmt(std::abs(c0 - direct));
  // the quoted 1.4603 keeps the first four decimals of 1.46035...
  v.require(std::floor(c0 * 1e4) == 14603.0, "first four decimals 1.4603");
  v.require(std::abs(c0 - direct) < 1e-10, "direct-sum agreement 1e-10");
  return v;
}

/// Width of the region around `center` where T stays on the far side of
/// `level`; the crossings are bracketed between the feature and points
/// found by stepping outward.
double feature_width(const std::function<double(double)>& t, double center, double level, double toward,
                     double scale) {
  auto f = [&](double b) { return t(b) - level; };
  const double s0 = f(center);
  // inner crossing lies between the feature and the other feature
  const double inner = satsensor::numerics::bracketed_root(f, std::min(center, toward), std::max(center, toward));
  // outer crossing: step away from the other feature
  const double dir = toward > center ? -1.0 : 1.0;
  double step = scale;
  double far = center + dir * step;
  while (std::signbit(f(far)) == std::signbit(s0)) {
    step *= 2.0;
    far = center + dir * step;
    if (step > 1e6 * scale) return INFINITY;
  }
  const double outer = satsensor::numerics::bracketed_root(f, std::min(center, far), std::max(center, far));
  return std::abs(outer - inner);
}

Verdict transmission_landmarks() {
  Verdict v;
  for (double a_bg : {9.7, 0.2}) {
    const ResonanceParams params{a_bg, 0.15, 10.0, std::nullopt};
    const double g = kTrap.mass_factor * a_bg;
    const std::array<double, 2> momenta{0.001, 0.01};
    std::array<double, 2> t_bg{}, cir{};
    const double peak = satsensor::find_zero_crossing(params);
    for (int k = 0; k < 2; ++k) {
      const Collision c(momenta[k], kTrap);
      const double u_cir = oracle::cir_offset(kTrap.d, g, params.delta, c.confinement());
      cir[k] = satsensor::find_cir(c, params, kTrap, {params.b_res + u_cir - 1.0, params.b_res + u_cir + 1.0});
      const double t_peak = satsensor::transmission(peak, c, params, kTrap);
      const double t_cir = satsensor::transmission(cir[k], c, params, kTrap);
      v.require(t_peak == 1.0, "T(B_res + Delta) == 1 for a_bg=" + fmt(a_bg) + " p=" + fmt(momenta[k]));
      v.require(t_cir < 1e-20, "T < 1e-20 at CIR for a_bg=" + fmt(a_bg) + " p=" + fmt(momenta[k]));
      t_bg[k] = satsensor::phase_ratio_from_length(g, c, kTrap).transmission();
    }
    // Widths at one absolute level per feature, shared by both momenta. T = 0.5
    // is used when both curves cross it on both sides of the feature.
    const double lo_bg = std::min(t_bg[0], t_bg[1]), hi_bg = std::max(t_bg[0], t_bg[1]);
    const double dip_level = lo_bg > 0.5 ? 0.5 : 0.5 * lo_bg;
    const double peak_level = hi_bg < 0.5 ? 0.5 : 0.5 * (1.0 + hi_bg);
    std::array<double, 2> dip_width{}, peak_width{};
    for (int k = 0; k < 2; ++k) {
      const Collision c(momenta[k], kTrap);
      auto t = [&](double b) { return satsensor::transmission(b, c, params, kTrap); };
      dip_width[k] = feature_width(t, cir[k], dip_level, peak, 1e-3 * params.delta);
      peak_width[k] = feature_width(t, peak, peak_level, cir[k], 1e-3 * params.delta);
    }
    v.detail << "a_bg=" << fmt(a_bg) << ": dip width at T=" << fmt(dip_level) << " " << fmt(dip_width[0]) << " -> "
             << fmt(dip_width[1]) << " G, peak width at T=" << fmt(peak_level) << " " << fmt(peak_width[0]) << " -> "
             << fmt(peak_width[1]) << " G (p 0.001 -> 0.01); ";
    v.require(dip_width[1] < dip_width[0], "CIR dip narrows as p grows, a_bg=" + fmt(a_bg));
    v.require(peak_width[0] < peak_width[1], "peak narrows as p falls, a_bg=" + fmt(a_bg));
  }
  return v;
}

Verdict asymptotic_cross_check() {
  Verdict v;
  const ResonanceParams params{0.2, 0.15, 10.0, std::nullopt};
  // refinement sequence p d = 0.2 / 2^k
  std::vector<double> ratios;
  double worst = 0.0;
  for (int k = 0; k < 12; ++k) {
    const double pd = 0.2 / std::pow(2.0, k);
    const double p = pd / kTrap.d;
    const Collision c(p, kTrap);
    const double cir = satsensor::find_cir(c, params, kTrap, {9.0, 11.0});
    const double full = satsensor::single_shot_precision(cir, c, params, kTrap, kIdeal);
    const double ratio = full / satsensor::deltaB_cir_asymptotic(p, params, kTrap);
    ratios.push_back(ratio);
    if (pd >= 0.02) worst = std::max(worst, std::abs(ratio - 1.0));
    const double peak_full = satsensor::single_shot_precision(satsensor::find_zero_crossing(params), c, params, kTrap, kIdeal);
    const double peak_asym = satsensor::deltaB_peak_asymptotic(p, params, kTrap);
    v.require(std::abs(peak_full / peak_asym - 1.0) < 1e-9, "peak agreement at p d=" + fmt(pd));
  }
  bool monotone = true, contracting = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    monotone = monotone && ratios[i] > ratios[i - 1];
    if (i >= 2) contracting = contracting && std::abs(ratios[i] - ratios[i - 1]) < std::abs(ratios[i - 1] - ratios[i - 2]);
  }
  const double g = kTrap.mass_factor * params.a_bg;
  const double c0 = satsensor::confinement_factor(0.0, kTrap);
  const double limit = std::pow(kTrap.d / (kTrap.d - c0 * g), 2);
  v.detail << "CIR full/asymptotic ratio " << fmt(ratios.front()) << " (p d=0.2) -> " << fmt(ratios.back())
           << " (p d=" << fmt(0.2 / std::pow(2.0, 11)) << "), limit d^2/(d-Cg)^2 = " << fmt(limit)
           << "; max deviation on [0.02, 0.2] = " << fmt(worst) << "; peak form exact to 1e-9";
  v.require(worst <= 0.2, "20% agreement for p d in [0.02, 0.2]");
  v.require(monotone && contracting, "monotone convergent ratio sequence");
  v.require(std::abs(ratios.back() - limit) < 1e-3 * limit, "ratio approaches its p d -> 0 limit");
  return v;
}

Verdict optimal_momentum_identity() {
  Verdict v;
  const ResonanceParams params{0.2, 0.15, 10.0, std::nullopt};
  auto f = [&](double log_p) { return satsensor::deltaB_cir_asymptotic(std::exp(log_p), params, kTrap); };
  const auto [x, fmin] = satsensor::numerics::bracketed_minimum(f, std::log(1e-4), std::log(0.0999));
  const double p_num = std::exp(x);
  const double c0 = satsensor::confinement_factor(0.0, kTrap);
  const double p_star = 2.0 / (c0 * kTrap.d);
  const double db_star = kTrap.mass_factor * params.a_bg * params.delta * c0 / kTrap.d;
  v.detail << "numeric p* = " << fmt(p_num) << " vs 2/(C d) = " << fmt(p_star) << "; min " << fmt(fmin)
           << " vs g Delta C/d = " << fmt(db_star);
  v.require(std::abs(p_num / p_star - 1.0) < 1e-6, "p* to 1e-6");
  v.require(std::abs(fmin / db_star - 1.0) < 1e-6, "min Delta B to 1e-6");
  v.require(std::abs(satsensor::cir_optimal_momentum(kTrap) / p_star - 1.0) < 1e-15, "library p*");
  return v;
}

Verdict crlb_saturation() {
  Verdict v;
  const ResonanceParams params{9.7, 0.15, 10.0, std::nullopt};
  const Collision c(0.01, kTrap);
  const Interval prior{10.15 + 1e-9, 10.5};
  const double b_true = satsensor::numerics::bracketed_root(
      [&](double b) { return satsensor::transmission(b, c, params, kTrap) - 0.5; }, prior.lo, prior.hi);
  struct Case {
    const char* name;
    DetectorModel det;
  };
  const std::array<Case, 3> cases{{{"eta=1", {1.0, DetectionScheme::BothPorts}},
                                   {"eta=0.5 both ports", {0.5, DetectionScheme::BothPorts}},
                                   {"eta=0.5 transmitted only", {0.5, DetectionScheme::TransmittedOnly}}}};
  // The single run uses the default seed 0. A 1e3-trial sample variance has a
  // relative spread near sqrt(2/1e3), so the mean over 20 further seeds is also
  // required to sit within 3 % of 1.
  constexpr int kReplicates = 20;
  v.detail << "T(b_true)=0.5, M=1e4, 1e3 trials:";
  for (const auto& cs : cases) {
    const auto rep = satsensor::crlb_saturation_experiment(b_true, c, params, kTrap, cs.det, 10000, 1000, 0, prior, 4);
    double sum = 0.0;
    for (int r = 1; r <= kReplicates; ++r)
      sum += satsensor::crlb_saturation_experiment(b_true, c, params, kTrap, cs.det, 10000, 1000, r, prior, 4).ratio;
    const double mean = sum / kReplicates;
    v.detail << " " << cs.name << " ratio " << fmt(rep.ratio) << " (mean of " << kReplicates << " seeds " << fmt(mean)
             << ");";
    v.require(rep.valid, std::string(cs.name) + " clamp rate");
    v.require(rep.ratio >= 0.9 && rep.ratio <= 1.1, std::string(cs.name) + " ratio in [0.9, 1.1]");
    v.require(std::abs(mean - 1.0) < 0.03, std::string(cs.name) + " replicate mean");
  }
  return v;
}

Verdict detector_algebra() {
  Verdict v;
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_ratio = 0.0, worst_unit = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ResonanceParams params{u01(gen) < 0.5 ? 0.2 : 9.7, 0.15, 10.0, std::nullopt};
    const Collision c((0.001 + 0.95 * u01(gen)) * kTrap.max_momentum(), kTrap);
    const double b = 10.0 + 2.0 * (u01(gen) - 0.5);
    const double eta = u01(gen);
    const double f = satsensor::fisher_information(b, c, params, kTrap, kIdeal);
    const double f1 = satsensor::fisher_information(b, c, params, kTrap, {eta, DetectionScheme::BothPorts});
    const double f2 = satsensor::fisher_information(b, c, params, kTrap, {1.0, DetectionScheme::TransmittedOnly});
    worst_ratio = std::max(worst_ratio, std::abs(f1 / f - eta));
    worst_unit = std::max(worst_unit, std::abs(f2 / f - 1.0));
  }
  v.detail << "max |F_I/F - eta| = " << fmt(worst_ratio) << ", max |F_II(eta=1)/F - 1| = " << fmt(worst_unit)
           << " over 1e3 random points";
  v.require(worst_ratio <= 1e-14, "F_I = eta F to 1e-14");
  v.require(worst_unit <= 1e-14, "F_II = F at eta = 1");
  return v;
}

Verdict nanotesla_claim() {
  Verdict v;
  const ResonanceParams params{0.1, 0.01, 10.0, std::nullopt};
  const Interval bw{params.b_res - 5.0 * params.delta, params.b_res + 5.0 * params.delta};
  const Interval pw{0.01 / kTrap.d, 1.9 / kTrap.d};
  const auto opt = satsensor::minimize_deltaB(params, kTrap, kIdeal, bw, pw);
  const satsensor::Species fixture{"fixture", 86.909180527, 81.5108426676};
  const double t_star = satsensor::momentum_to_temperature(opt.p, fixture);
  v.detail << "min Delta B = " << fmt(opt.delta_b) << " G at B=" << fmt(opt.b) << " G, p*=" << fmt(opt.p)
           << " (" << fmt(t_star) << " nK), branch " << satsensor::to_string(opt.branch)
           << (opt.on_boundary ? ", on momentum-window edge" : "");
  // for reference: best field at the 10 nK collision energy
  const double p10 = satsensor::temperature_to_momentum(10.0, fixture);
  std::vector<double> b_grid(2049);
  for (std::size_t i = 0; i < b_grid.size(); ++i) b_grid[i] = bw.lo + (bw.hi - bw.lo) * i / (b_grid.size() - 1.0);
  const auto at10 = satsensor::detail::best_field(p10, b_grid, params, kTrap, kIdeal);
  v.detail << "; at 10 nK (p=" << fmt(p10) << ") best Delta B = " << fmt(at10.delta_b) << " G";
  v.require(opt.delta_b >= 1e-5 && opt.delta_b <= 1e-4, "Delta B in [1e-5, 1e-4] G");
  return v;
}

Verdict sensitivity_band() {
  Verdict v;
  satsensor::SensorBudget budget;
  budget.n_tubes = 100;
  budget.tau = 0.03;
  const double s_pt = satsensor::sensitivity_per_root_hz(1e-5, budget) * 1e12;
  v.detail << "sensitivity = " << fmt(s_pt) << " pT/sqrt(Hz)";
  v.require(s_pt >= 10.0 && s_pt <= 100.0, "within 10-100 pT/sqrt(Hz)");
  return v;
}

Verdict jitter_budget() {
  Verdict v;
  const double sigma_b = satsensor::resonance_jitter(1.0, 2e6);
  v.detail << "sigma_B = " << fmt(sigma_b) << " G for 1 nK at 2 MHz/G";
  v.require(sigma_b >= 1e-5 / 3.0 && sigma_b <= 3e-5, "within a factor 3 of 1e-5 G");
  return v;
}

Verdict property_suites() {
  Verdict v;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  int zeta_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = std::max(u01(gen), 1e-9);
    const double lhs = satsensor::hurwitz_zeta_half(a);
    const double rhs = satsensor::hurwitz_zeta_half(a + 1.0) + 1.0 / std::sqrt(a);
    if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(lhs))) ++zeta_fail;
  }

  auto random_point = [&] {
    const ResonanceParams params{(u01(gen) < 0.5 ? 0.2 : 9.7) * (0.5 + u01(gen)),
                                 (u01(gen) < 0.5 ? -1.0 : 1.0) * (0.01 + 0.3 * u01(gen)), 10.0, std::nullopt};
    const double p = (0.001 + 0.95 * u01(gen)) * kTrap.max_momentum();
    const double b = 10.0 + 6.0 * (u01(gen) - 0.5) * std::abs(params.delta);
    return std::tuple{params, p, b};
  };

  int range_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [params, p, b] = random_point();
    const double t = satsensor::transmission(b, Collision(p, kTrap), params, kTrap);
    if (!(t >= 0.0 && t <= 1.0)) ++range_fail;
  }

  int deriv_fail = 0, fisher_fail = 0, deriv_checked = 0, fisher_checked = 0;
  while (deriv_checked < 1000 || fisher_checked < 1000) {
    const auto [params, p, b] = random_point();
    const Collision c(p, kTrap);
    const double t = satsensor::transmission(b, c, params, kTrap);
    if (t < 1e-3 || t > 1.0 - 1e-3) continue;
    const double dt = satsensor::transmission_derivative(b, c, params, kTrap);
    if (deriv_checked < 1000 && std::abs(dt * params.delta) >= 1e-3) {
      auto tf = [&](double x) { return satsensor::transmission(x, c, params, kTrap); };
      const double fd = oracle::central_difference(tf, b, 1e-6 * std::abs(params.delta));
      if (std::abs(fd - dt) > 1e-6 * std::abs(dt)) ++deriv_fail;
      ++deriv_checked;
    }
    if (fisher_checked < 1000) {
      const std::array<double, 2> probs{t, 1.0 - t};
      const std::array<double, 2> dprobs{dt, -dt};
      const double f_sum = oracle::outcome_fisher(probs, dprobs);
      const double f = satsensor::fisher_information(b, c, params, kTrap, kIdeal);
      if (std::abs(f - f_sum) > 1e-12 * f_sum) ++fisher_fail;
      ++fisher_checked;
    }
  }

  const ResonanceParams params{9.7, 0.15, 10.0, std::nullopt};
  const Collision c(0.01, kTrap);
  const DetectorModel det{0.7, DetectionScheme::BothPorts};
  const auto r1 = satsensor::crlb_saturation_experiment(10.2, c, params, kTrap, det, 5000, 200, 77, {10.16, 10.5}, 1);
  const auto r2 = satsensor::crlb_saturation_experiment(10.2, c, params, kTrap, det, 5000, 200, 77, {10.16, 10.5}, 4);
  bool identical = r1.variance == r2.variance && r1.mean == r2.mean;
  for (std::size_t i = 0; i < r1.trials.size(); ++i)
    identical = identical && r1.trials[i].record == r2.trials[i].record &&
                r1.trials[i].estimate.b_hat == r2.trials[i].estimate.b_hat;

  v.detail << "zeta recurrence failures " << zeta_fail << "/1000, T range failures " << range_fail
           << "/1000, derivative failures " << deriv_fail << "/1000, two-outcome vs binary form failures "
           << fisher_fail << "/1000, seeded reruns " << (identical ? "bit-identical" : "differ");
  v.require(zeta_fail == 0, "zeta recurrence");
  v.require(range_fail == 0, "T in [0, 1]");
  v.require(deriv_fail == 0, "analytic vs finite difference");
  v.require(fisher_fail == 0, "Fisher forms agree");
  v.require(identical, "bit-identical reruns");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const std::array<Criterion, 10> criteria{{
      {"CIR constant C(0)", confinement_constant},
      {"transmission landmarks and feature widths", transmission_landmarks},
      {"asymptotic cross-check at CIR and peak", asymptotic_cross_check},
      {"optimal-momentum identity of the CIR formula", optimal_momentum_identity},
      {"CRLB saturation by the ML estimator", crlb_saturation},
      {"detector-efficiency algebra", detector_algebra},
      {"narrow-resonance precision decade", nanotesla_claim},
      {"sensitivity band", sensitivity_band},
      {"energy-jitter budget", jitter_budget},
      {"property suites", property_suites},
  }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                v.detail.str().c_str(), secs);
    if (!v.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fcoc/chaos.hpp"
#include "fcoc/synthetic.hpp"

using namespace fcoc;
using namespace fcoc::chaos;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected fcoc::Error";
  return ErrorCode::InvalidSpec;
}

const MetaActivationLUT& shared_lut() {
  static const MetaActivationLUT lut = build_lut(builtin_library());
  return lut;
}

}  // namespace

TEST(BuiltinParams, TableRows) {
  const auto t1 = builtin_params(1);
  EXPECT_EQ((std::array{t1.a1, t1.a2, t1.a3, t1.a4}), (std::array{0.0, 5.0, 5.0, 1.0}));
  EXPECT_EQ((std::array{t1.b1, t1.b2, t1.b3, t1.b4}), (std::array{0.0, -1.0, 1.0, 0.0}));
  EXPECT_EQ(t1.mu, 5.0);
  EXPECT_EQ(t1.k_decay, 500.0);
  EXPECT_EQ(t1.e_ratio, 0.001);

  const auto t9 = builtin_params(9);
  EXPECT_EQ((std::array{t9.a1, t9.a2, t9.a3, t9.a4}), (std::array{1.0, -1.0, -1.0, -1.0}));
  EXPECT_EQ((std::array{t9.b1, t9.b2, t9.b3, t9.b4}), (std::array{-1.0, 2.0, 2.0, -1.0}));
  EXPECT_EQ(t9.mu, 1.0);
  EXPECT_EQ(t9.k_decay, 50.0);

  const auto t10 = builtin_params(10);
  EXPECT_EQ((std::array{t10.a1, t10.a2, t10.a3, t10.a4}), (std::array{3.0, 3.0, 3.0, 2.0}));
  EXPECT_EQ((std::array{t10.b1, t10.b2, t10.b3, t10.b4}), (std::array{0.45, -0.45, -0.45, 1.0}));
  EXPECT_EQ(t10.e_ratio, 0.001);

  for (const auto& p : builtin_library()) {
    EXPECT_EQ(p.xi_e, 0.0);
    EXPECT_EQ(p.xi_i, 0.0);
    EXPECT_TRUE(p.valid());
  }
  EXPECT_EQ(code_of([] { builtin_params(0); }), ErrorCode::UnknownType);
  EXPECT_EQ(code_of([] { builtin_params(11); }), ErrorCode::UnknownType);
}

TEST(Step, OriginIsFixedPoint) {
  for (const auto& p : builtin_library()) EXPECT_EQ(step({}, p, 0.0), OscillatorState{});
}

TEST(Step, HandEvaluation) {
  const auto p = builtin_params(2);
  const OscillatorState s{0.1, 0.0, 0.0, 0.0};
  const auto next = step(s, p, 0.5);
  EXPECT_NEAR(next.E, std::tanh(-0.195), 1e-15);
  EXPECT_NEAR(next.I, std::tanh(0.55 * 0.1 - 0.5 * 0.5), 1e-15);
  EXPECT_NEAR(next.Omega, std::tanh(0.5), 1e-15);
  EXPECT_NEAR(next.LORS, (next.E - next.I) * std::exp(-50.0 * 0.25) + next.Omega, 1e-15);
}

TEST(Step, UsesPreviousStateOnly) {
  const auto p = builtin_params(10);
  const OscillatorState s{0.3, -0.2, 0.7, 0.1};
  const auto next = step(s, p, 0.2);
  EXPECT_NEAR(next.E, std::tanh(3 * 0.7 + 3 * 0.3 - 3 * -0.2 + 2 * 0.2), 1e-15);
  EXPECT_NEAR(next.I, std::tanh(0.45 * 0.7 + 0.45 * 0.3 + 0.45 * -0.2 + 0.2), 1e-15);
}

TEST(Step, DecayBound) {
  synthetic::Rng rng(1);
  const auto p = builtin_params(2);
  for (int i = 0; i < 1000; ++i) {
    const OscillatorState s{2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 6 * rng.uniform() - 3, 0};
    const double stim = (rng.uniform() < 0.5 ? -1 : 1) * (1.0 + 3.0 * rng.uniform());
    const auto next = step(s, p, stim);
    EXPECT_LE(std::abs(next.LORS - next.Omega), 2 * std::exp(-50.0));
  }
}

TEST(RunOscillator, ZeroInputGivesZeroTrajectory) {
  for (const auto& p : builtin_library()) {
    const auto traj = run_oscillator(0.0, p, 100);
    ASSERT_EQ(traj.states.size(), 101u);
    for (const auto& s : traj.states) EXPECT_EQ(s, OscillatorState{});
  }
}

TEST(RunOscillator, T2SaturatesAtOmega) {
  const auto p = builtin_params(2);
  const auto traj = run_oscillator(1.0, p, 100);
  const double omega = std::tanh(1.0 + 0.001 * std::tanh(1.0));
  for (std::size_t t = 1; t < traj.states.size(); ++t) EXPECT_NEAR(traj.states[t].LORS, omega, 1e-15);
  EXPECT_NEAR(traj.states[1].LORS, 0.7622, 1e-3);
}

TEST(RunOscillator, OddSymmetryAndBoundsProperty) {
  synthetic::Rng rng(5);
  const auto lib = builtin_library();
  for (int i = 0; i < 1000; ++i) {
    const double x = 8.0 * rng.uniform() - 4.0;
    for (const auto& p : lib) {
      const auto a = run_oscillator(x, p, 100);
      const auto b = run_oscillator(-x, p, 100);
      for (std::size_t t = 0; t < a.states.size(); ++t) {
        ASSERT_EQ(a.states[t].LORS, -b.states[t].LORS) << p.label << " x=" << x << " t=" << t;
        ASSERT_LE(std::abs(a.states[t].LORS), 2 * std::exp(-p.k_decay * a.stimulus * a.stimulus) + 1.0);
        ASSERT_LE(std::abs(a.states[t].LORS), 3.0);
      }
    }
  }
}

TEST(RunOscillator, Deterministic) {
  const auto p = builtin_params(7);
  EXPECT_EQ(run_oscillator(0.37, p, 200).states, run_oscillator(0.37, p, 200).states);
}

TEST(MetaActivation, Examples) {
  const auto lib = builtin_library();
  for (double v : generate_meta_activations(0.0, lib)) EXPECT_EQ(v, 0.0);
  const auto at_one = generate_meta_activations(1.0, lib);
  ASSERT_EQ(at_one.size(), 10u);
  EXPECT_NEAR(at_one[1], 0.7622, 1e-3);
  EXPECT_NEAR(at_one[0], std::tanh(5.0 * (1.0 + 0.001 * std::tanh(1.0))), 1e-12);
  EXPECT_NEAR(at_one[0], 0.9999, 1e-4);
}

TEST(MetaActivation, MaxOverStepsOneToN) {
  const auto p = builtin_params(9);
  for (double x : {-0.8, -0.1, 0.05, 0.3, 0.9}) {
    const auto traj = run_oscillator(x, p, 100);
    double best = -1e300, worst = 1e300;
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
      best = std::max(best, traj.states[t].LORS);
      worst = std::min(worst, traj.states[t].LORS);
    }
    EXPECT_EQ(meta_activation(x, p), best);
    EXPECT_EQ(meta_activation(-x, p), -worst);
  }
}

TEST(MetaActivation, SaturationProperty) {
  synthetic::Rng rng(8);
  for (const auto& p : builtin_library()) {
    for (int i = 0; i < 200; ++i) {
      const double x = (rng.uniform() < 0.5 ? -1 : 1) * (1.0 + 3.0 * rng.uniform());
      const double s = std::abs(stimulus(x, p));
      const double tail = 2 * std::exp(-p.k_decay * s * s);
      const double f = std::abs(meta_activation(x, p));
      EXPECT_GE(f, std::tanh(p.mu * s) - tail - 1e-15);
      EXPECT_LE(f, 1.0 + tail);
    }
  }
}

TEST(MaxSelect, Examples) {
  EXPECT_EQ(max_select(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_EQ(max_select(std::vector<double>{-0.4, -0.2, 0.3, -0.9}), 0.3);
  EXPECT_EQ(code_of([] { max_select(std::vector<double>{}); }), ErrorCode::EmptyLibrary);
  const auto lib = builtin_library();
  for (double x : linspace(-2.0, 2.0, 81)) {
    const double lee = lee_activation(x, lib);
    for (const auto& p : lib) EXPECT_GE(lee, meta_activation(x, p));
  }
}

TEST(Lut, TwoKnotTable) {
  const auto lib = builtin_library();
  const auto lut = build_lut(lib, -1.0, 1.0, 2);
  EXPECT_EQ(lut.envelope()[0], lee_activation(-1.0, lib));
  EXPECT_EQ(lut.envelope()[1], lee_activation(1.0, lib));
  const auto [v, s] = lut.evaluate(0.25);
  EXPECT_NEAR(v, lut.envelope()[0] + 1.25 * (lut.envelope()[1] - lut.envelope()[0]) / 2.0, 1e-15);
  EXPECT_EQ(s, lut.slopes()[0]);
}

TEST(Lut, KnotsMatchDirectEvaluation) {
  const auto& lut = shared_lut();
  const auto lib = builtin_library();
  ASSERT_EQ(lut.size(), kLutKnots);
  EXPECT_EQ(lut.knots().front(), -2.0);
  EXPECT_EQ(lut.knots().back(), 2.0);
  for (std::size_t j = 0; j < lut.size(); j += 37) {
    const double x = lut.knots()[j];
    EXPECT_EQ(lut.envelope()[j], max_select(generate_meta_activations(x, lib)));
    EXPECT_EQ(lut.evaluate(x).first, lut.envelope()[j]);
  }
}

TEST(Lut, EnvelopeDominatesRows) {
  const auto& lut = shared_lut();
  for (std::size_t j = 0; j < lut.size(); ++j) {
    double best = lut.rows()[0][j];
    for (const auto& row : lut.rows()) best = std::max(best, row[j]);
    ASSERT_EQ(lut.envelope()[j], best);
  }
}

TEST(Lut, MidpointIsMeanOfNeighbours) {
  const auto& lut = shared_lut();
  for (std::size_t j = 0; j + 1 < lut.size(); j += 13) {
    const double mid = 0.5 * (lut.knots()[j] + lut.knots()[j + 1]);
    EXPECT_NEAR(lut.evaluate(mid).first, 0.5 * (lut.envelope()[j] + lut.envelope()[j + 1]), 1e-12);
  }
}

TEST(Lut, KnotTakesRightSlopeAndClampIsFlat) {
  const auto& lut = shared_lut();
  EXPECT_EQ(lut.evaluate(lut.knots()[100]).second, lut.slopes()[100]);
  EXPECT_EQ(lut.evaluate(-5.0), std::make_pair(lut.envelope().front(), 0.0));
  EXPECT_EQ(lut.evaluate(7.0), std::make_pair(lut.envelope().back(), 0.0));
  EXPECT_EQ(lut.evaluate(2.0).second, 0.0);
}

TEST(Lut, ApproximatesExactMaxSelectAwayFromOrigin) {
  const auto& lut = shared_lut();
  const auto lib = builtin_library();
  synthetic::Rng rng(123);
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = -2.0 + 4.0 * rng.uniform();
    if (std::abs(x) < 0.05) continue;
    worst = std::max(worst, std::abs(lut.evaluate(x).first - lee_activation(x, lib)));
  }
  EXPECT_LE(worst, 0.02);
}

TEST(Lut, T10JumpsAtOrigin) {
  // unstable origin: any positive input reaches saturation within 100 steps
  const auto p = builtin_params(10);
  EXPECT_EQ(meta_activation(0.0, p), 0.0);
  EXPECT_GT(meta_activation(1e-6, p), 1.0);
  const auto& lut = shared_lut();
  EXPECT_EQ(lut.evaluate(0.0).first, lee_activation(0.0, builtin_library()));
  EXPECT_GT(std::abs(lut.evaluate(2.5e-4).first - lee_activation(2.5e-4, builtin_library())), 0.5);
}

TEST(Lut, SlopeMatchesFiniteDifference) {
  const auto& lut = shared_lut();
  synthetic::Rng rng(9);
  const double h = 1e-6;
  int checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = -2.0 + 4.0 * rng.uniform();
    const std::size_t j = lut.interval(x);
    if (x - h <= lut.knots()[j] || x + h >= lut.knots()[j + 1]) continue;
    const double fd = (lut.evaluate(x + h).first - lut.evaluate(x - h).first) / (2 * h);
    const double s = lut.evaluate(x).second;
    ASSERT_LE(std::abs(fd - s) / std::max(std::abs(s), 1.0), 1e-4) << "x=" << x;
    ++checked;
  }
  EXPECT_GT(checked, 19000);
}

TEST(Lut, IdentityTableIsBitwiseIdentity) {
  const auto lut = MetaActivationLUT::from_rows(-1024.0, 1024.0, {linspace(-1024.0, 1024.0, 2049)});
  synthetic::Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double x = 2000.0 * rng.uniform() - 1000.0;
    const auto [v, s] = lut.evaluate(x);
    ASSERT_EQ(v, x);
    ASSERT_EQ(s, 1.0);
  }
}

TEST(Lut, Errors) {
  const auto lib = builtin_library();
  EXPECT_EQ(code_of([&] { build_lut(lib, 1.0, -1.0, 10); }), ErrorCode::InvalidDomain);
  EXPECT_EQ(code_of([&] { build_lut(lib, -1.0, 1.0, 1); }), ErrorCode::InvalidDomain);
  EXPECT_EQ(code_of([] { build_lut(std::vector<OscillatorParams>{}); }), ErrorCode::EmptyLibrary);
}

TEST(Bifurcation, BoundsAndCounts) {
  const auto grid = linspace(-1.5, 1.5, 61);
  for (const auto& p : builtin_library()) {
    const auto pts = bifurcation_diagram(p, grid, 200, 100);
    ASSERT_EQ(pts.size(), grid.size() * 100);
    for (const auto& pt : pts) ASSERT_LE(std::abs(pt.value), 3.0);
  }
  EXPECT_EQ(code_of([] { bifurcation_diagram(builtin_params(1), std::vector<double>{0.0}, 10, 10); }),
            ErrorCode::InvalidDomain);
}

TEST(Bifurcation, SaturationWingsCollapse) {
  const auto p = builtin_params(2);
  for (double x : {-2.0, -1.0, 1.0, 1.7}) {
    const auto pts = bifurcation_diagram(p, std::vector<double>{x}, 200, 100);
    const double expected = std::tanh(stimulus(x, p));
    for (const auto& pt : pts) EXPECT_NEAR(pt.value, expected, 1e-15);
  }
}

TEST(Bifurcation, NegatedInputNegatesCloud) {
  for (const auto& p : builtin_library()) {
    std::vector<double> a, b;
    for (const auto& pt : bifurcation_diagram(p, std::vector<double>{0.21}, 150, 50)) a.push_back(pt.value);
    for (const auto& pt : bifurcation_diagram(p, std::vector<double>{-0.21}, 150, 50)) b.push_back(-pt.value);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b) << p.label;
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mint/chen.hpp"
#include "mint/membranes.hpp"
#include "oracles.hpp"

using namespace mint;

namespace {

QuadratureConfig coarse() {
  QuadratureConfig cfg;
  cfg.points_per_axis = 32;
  cfg.rel_tol = 1e-4;
  return cfg;
}

DifferentialForm vol12(int d) {
  return DifferentialForm::parse(d, 2, {{MultiIndex{1, 2}, "1"}});
}

DifferentialForm w13x3() {
  return DifferentialForm::parse(3, 2, {{MultiIndex{1, 3}, "x3"}});
}

Membrane sheet() { return Membrane::symbolic(2, 3, {"t1", "t2", "t1*t2"}); }

TEST(Membranes, ValidationAcceptsWellFormed) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, vol12(3), {1, 2});
  ValidationResult v = validate_integrand(I);
  EXPECT_TRUE(v.ok) << v.message;
}

TEST(Membranes, ValidationRejectsMissingConsumption) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, DifferentialForm::parse(3, 1, {{MultiIndex{1}, "1"}}),
             {1});
  ValidationResult v = validate_integrand(I);
  EXPECT_FALSE(v.ok);  // (2, 1) never consumed
}

TEST(Membranes, ValidationRejectsDoubleConsumption) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 0}, DifferentialForm::parse(3, 1, {{MultiIndex{1}, "1"}}),
             {1});
  I.set_slot({1, 2}, DifferentialForm::parse(3, 2, {{MultiIndex{1, 2}, "1"}}),
             {1, 2});
  ValidationResult v = validate_integrand(I);
  EXPECT_FALSE(v.ok);  // direction-1 pair consumed twice, (2,1) never
}

TEST(Membranes, ValidationRejectsDegreeMismatch) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, DifferentialForm::parse(3, 1, {{MultiIndex{1}, "1"}}),
             {1, 2});
  EXPECT_FALSE(validate_integrand(I).ok);
}

TEST(Membranes, ValidationRejectsBoundaryConsumption) {
  LabeledIntegrand I(1, {1});
  // slot at boundary position 0 cannot consume its direction
  I.set_slot({0}, DifferentialForm::parse(2, 1, {{MultiIndex{1}, "1"}}), {1});
  I.set_slot({1}, DifferentialForm::parse(2, 1, {{MultiIndex{2}, "1"}}), {1});
  EXPECT_FALSE(validate_integrand(I).ok);
}

TEST(Membranes, ValidationRejectsUnsortedDirections) {
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, vol12(3), {2, 1});
  EXPECT_FALSE(validate_integrand(I).ok);
}

TEST(Membranes, ValidationHandlesDesignatedSlots) {
  // designated slice slot carries degree |J| + 1
  LabeledIntegrand W(1, {1});
  W.set_slot({1}, vol12(3), {1});
  EXPECT_FALSE(validate_integrand(W).ok);
  std::vector<int> designated{1};
  EXPECT_TRUE(validate_integrand(W, &designated).ok);
  EXPECT_NO_THROW(require_valid(W, &designated));
  EXPECT_THROW(require_valid(W), std::invalid_argument);
}

TEST(Membranes, SlotIndexBounds) {
  LabeledIntegrand I(2, {1, 1});
  EXPECT_THROW(I.set_slot({3, 1}, vol12(3), {1, 2}), std::invalid_argument);
  EXPECT_THROW(I.set_slot({1}, vol12(3), {1, 2}), std::invalid_argument);
  EXPECT_THROW(LabeledIntegrand(2, {1}), std::invalid_argument);
  EXPECT_THROW(LabeledIntegrand(0, {}), std::invalid_argument);
}

TEST(Membranes, UnitIntegrandIntegratesToOne) {
  QuadratureConfig cfg = coarse();
  IntegrationResult r =
      integrate_membrane(sheet(), LabeledIntegrand::unit(2), cfg);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Membranes, KnownSheetIntegrals) {
  QuadratureConfig cfg = coarse();
  LabeledIntegrand IA(2, {1, 1});
  IA.set_slot({1, 1}, vol12(3), {1, 2});
  EXPECT_NEAR(integrate_membrane(sheet(), IA, cfg).value, 1.0, 1e-12);

  LabeledIntegrand IB(2, {1, 1});
  IB.set_slot({1, 1}, w13x3(), {1, 2});
  // pullback x3 dx1^dx3 on (t1,t2,t1 t2): x3 det = t1 t2 * t1 -> 1/6
  EXPECT_NEAR(integrate_membrane(sheet(), IB, cfg).value, 1.0 / 6.0, 1e-12);
}

TEST(Membranes, CornerDecorationScales) {
  QuadratureConfig cfg = coarse();
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, vol12(3), {1, 2});
  I.set_slot({2, 2},
             DifferentialForm::parse(3, 0, {{MultiIndex{}, "x1 + 1"}}), {});
  // corner (2,2) evaluates at g(1,1) = (1,1,1): factor 2
  EXPECT_NEAR(integrate_membrane(sheet(), I, cfg).value, 2.0, 1e-12);
}

TEST(Membranes, MultiCutMatchesMidpointOracle) {
  QuadratureConfig cfg = coarse();
  Membrane g = sheet();
  LabeledIntegrand I(2, {2, 1});
  DifferentialForm a =
      DifferentialForm::parse(3, 1, {{MultiIndex{1}, "1 + x1"}});
  DifferentialForm b = vol12(3);
  DifferentialForm h =
      DifferentialForm::parse(3, 0, {{MultiIndex{}, "1 + x2*x3"}});
  I.set_slot({1, 0}, a, {1});
  I.set_slot({2, 1}, b, {1, 2});
  I.set_slot({0, 1}, h, {});  // face decoration at interior height
  ASSERT_TRUE(validate_integrand(I).ok) << validate_integrand(I).message;
  double lib = integrate_membrane(g, I, cfg).value;

  PullbackEvaluator pa(g, a);
  auto f = [&](const std::vector<std::vector<double>>& t) {
    // slot (1,0): a, J={1}, at (t1_1, 0); slot (2,1): b at (t1_2, t2_1);
    // slot (0,1): h evaluated on the t1 = 0 face at height t2_1.
    std::vector<double> p1{t[0][0], 0.0};
    std::vector<double> p2{t[0][1], t[1][0]};
    std::vector<double> p3{0.0, t[1][0]};
    double va = pa.coefficient(MultiIndex{1}, p1);
    double vb = oracle::fd_pullback_2form(g, b, p2, 1, 2);
    std::vector<double> x3 = g.evaluate(p3);
    double vh = 1.0 + x3[1] * x3[2];
    return va * vb * vh;
  };
  double ref = oracle::product_simplex_midpoint({2, 1}, f, 48);
  EXPECT_NEAR(lib, ref, 5e-4 * (1.0 + std::abs(lib)));
}

TEST(Membranes, ListingSignFlips) {
  LabeledIntegrand I(1, {2});
  DifferentialForm a = DifferentialForm::parse(2, 1, {{MultiIndex{1}, "x2"}});
  DifferentialForm b = DifferentialForm::parse(2, 1, {{MultiIndex{2}, "1"}});
  I.set_slot({1}, a, {1});
  I.set_slot({2}, b, {1});
  std::vector<std::vector<int>> lex{{1}, {2}};
  std::vector<std::vector<int>> swapped{{2}, {1}};
  EXPECT_EQ(listing_sign(I, lex), 1);
  EXPECT_EQ(listing_sign(I, swapped), -1);

  QuadratureConfig cfg = coarse();
  Membrane g = Membrane::symbolic(1, 2, {"t1", "t1^2"});
  double plain = integrate_membrane(g, I, cfg).value;
  double listed = integrate_membrane_listed(g, I, swapped, cfg).value;
  EXPECT_NEAR(listed, -plain, 1e-12);

  std::vector<std::vector<int>> bad{{1}, {1}};
  EXPECT_THROW(listing_sign(I, bad), std::invalid_argument);
  std::vector<std::vector<int>> missing{{1}};
  EXPECT_THROW(listing_sign(I, missing), std::invalid_argument);
}

TEST(Membranes, ListingSignEvenPermutation) {
  LabeledIntegrand I(1, {3});
  DifferentialForm dx1 = DifferentialForm::dx(1, 1);
  I.set_slot({1}, dx1, {1});
  I.set_slot({2}, dx1, {1});
  I.set_slot({3}, dx1, {1});
  // 3-cycle: even
  std::vector<std::vector<int>> rotated{{2}, {3}, {1}};
  EXPECT_EQ(listing_sign(I, rotated), 1);
}

TEST(Membranes, ShuffleCheckExactInstance) {
  QuadratureConfig cfg = coarse();
  LabeledIntegrand IA(2, {1, 1});
  IA.set_slot({1, 1}, vol12(3), {1, 2});
  LabeledIntegrand IB(2, {1, 1});
  IB.set_slot({1, 1}, w13x3(), {1, 2});
  CheckReport r = check_membrane_shuffle(sheet(), IA, IB, false, cfg, 1e-6);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 1.0 / 6.0, 1e-10);
  EXPECT_LE(r.abs_diff, 1e-12);
}

TEST(Membranes, BarredShuffleWithDecorations) {
  QuadratureConfig cfg = coarse();
  DifferentialForm f0 =
      DifferentialForm::parse(3, 0, {{MultiIndex{}, "x1 + 1"}});
  LabeledIntegrand IA(2, {1, 1});
  IA.set_slot({1, 1}, vol12(3), {1, 2});
  IA.set_slot({0, 0}, f0, {});
  LabeledIntegrand IB(2, {1, 1});
  IB.set_slot({1, 1}, w13x3(), {1, 2});
  IB.set_slot({2, 2}, f0, {});
  CheckReport r = check_membrane_shuffle(sheet(), IA, IB, true, cfg, 1e-6);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 1.0 / 3.0, 1e-10);
}

TEST(Membranes, ShuffleCheckRandomInstances) {
  std::mt19937 rng(41);
  QuadratureConfig cfg = coarse();
  for (int trial = 0; trial < 3; ++trial) {
    Membrane g = oracle::random_sheet(3, rng);
    LabeledIntegrand IA(2, {1, 1});
    IA.set_slot({1, 1}, oracle::random_2form(3, 1, rng), {1, 2});
    LabeledIntegrand IB(2, {1, 1});
    IB.set_slot({1, 1}, oracle::random_2form(3, 1, rng), {1, 2});
    CheckReport r = check_membrane_shuffle(g, IA, IB, trial % 2 == 0, cfg,
                                           1e-5);
    EXPECT_TRUE(r.pass) << "trial " << trial << " diff " << r.abs_diff;
  }
}

TEST(Membranes, GluedProductOneDimensionalProbe) {
  QuadratureConfig cfg = coarse();
  Membrane lo = Membrane::symbolic(1, 1, {"t1/2"});
  Membrane hi = Membrane::symbolic(1, 1, {"(1+t1)/2"});
  DifferentialForm dx1 = DifferentialForm::dx(1, 1);
  LabeledIntegrand A(1, {1});
  A.set_slot({1}, dx1, {1});
  LabeledIntegrand B(1, {1});
  B.set_slot({1}, dx1, {1});
  CheckReport r = check_glued_product(lo, hi, A, B, cfg, 1e-9);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 0.25, 1e-12);
  EXPECT_NEAR(r.rhs, 0.25, 1e-12);
}

TEST(Membranes, GluedProductCurvedHalves) {
  QuadratureConfig cfg = coarse();
  Membrane lo = Membrane::symbolic(2, 3, {"t1/2", "t2", "t1*t2/2"});
  Membrane hi = Membrane::symbolic(2, 3, {"(1+t1)/2", "t2", "(1+t1)*t2/2"});
  LabeledIntegrand A(2, {1, 1});
  A.set_slot({1, 1}, vol12(3), {1, 2});
  LabeledIntegrand B(2, {1, 1});
  B.set_slot({1, 1}, w13x3(), {1, 2});
  CheckReport r = check_glued_product(lo, hi, A, B, cfg, 1e-6);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs, 7.0 / 96.0, 1e-10);
}

TEST(Membranes, GluedProductRejectsMismatchedFaces) {
  QuadratureConfig cfg = coarse();
  Membrane lo = Membrane::symbolic(2, 3, {"t1/2", "t2", "0"});
  Membrane far = Membrane::symbolic(2, 3, {"1 + t1", "t2", "0"});
  LabeledIntegrand A(2, {1, 1});
  A.set_slot({1, 1}, vol12(3), {1, 2});
  EXPECT_THROW(check_glued_product(lo, far, A, A, cfg, 1e-6), GeometryError);
}

TEST(Membranes, GluedDegenerationMatchesPathPipeline) {
  // n = 1: the single gluing term equals the product of the two restricted
  // path integrals, each computable by the path pipeline.
  QuadratureConfig cfg;
  cfg.points_per_axis = 128;
  cfg.rel_tol = 1e-4;
  Membrane g1 = Membrane::symbolic(1, 2, {"t1/2", "t1^2/4"});
  Membrane g2 = Membrane::symbolic(1, 2, {"(1+t1)/2", "(1+t1)^2/4"});
  DifferentialForm a = DifferentialForm::parse(2, 1, {{MultiIndex{1}, "x2"}});
  DifferentialForm b = DifferentialForm::dx(2, 2);
  DifferentialForm c = DifferentialForm::dx(2, 1);
  LabeledIntegrand A(1, {2});
  A.set_slot({1}, a, {1});
  A.set_slot({2}, b, {1});
  LabeledIntegrand B(1, {1});
  B.set_slot({1}, c, {1});
  CheckReport r = check_glued_product(g1, g2, A, B, cfg, 1e-9);
  EXPECT_TRUE(r.pass) << r.abs_diff;
  double lhs_paths = iterated_path_integral(g1, {a, b}, cfg).value *
                     iterated_path_integral(g2, {c}, cfg).value;
  EXPECT_NEAR(r.lhs, lhs_paths, 1e-9);
  EXPECT_NEAR(r.rhs, lhs_paths, 1e-9);
}

TEST(Membranes, ComponentFunctionKnownValues) {
  QuadratureConfig cfg = coarse();
  Membrane g = sheet();
  LabeledIntegrand W(1, {1});
  W.set_slot({1}, vol12(3), {1});
  ComponentFunction aW = extract_component(g, W, {1}, cfg);
  EXPECT_NEAR(aW(0.37), 1.0, 1e-12);

  LabeledIntegrand T(1, {1});
  T.set_slot({1}, w13x3(), {1});
  ComponentFunction aT = extract_component(g, T, {1}, cfg);
  EXPECT_NEAR(aT(0.5), 0.5 / 3.0, 1e-12);
  EXPECT_NEAR(aT(0.9), 0.3, 1e-12);
}

TEST(Membranes, ComponentFunctionValidation) {
  QuadratureConfig cfg = coarse();
  Membrane g = sheet();
  LabeledIntegrand W(2, {1, 1});
  W.set_slot({1, 1}, vol12(3), {1, 2});
  EXPECT_THROW(extract_component(g, W, {1, 1}, cfg), std::invalid_argument);

  LabeledIntegrand bad(1, {1});
  bad.set_slot({1}, vol12(4), {1});
  EXPECT_THROW(extract_component(g, bad, {1}, cfg), std::invalid_argument);

  LabeledIntegrand noslot(1, {1});
  EXPECT_THROW(extract_component(g, noslot, {1}, cfg), std::invalid_argument);
}

TEST(Membranes, HigherTransportKnownValues) {
  QuadratureConfig cfg = coarse();
  Membrane g = sheet();
  LabeledIntegrand W(1, {1});
  W.set_slot({1}, vol12(3), {1});
  LabeledIntegrand T(1, {1});
  T.set_slot({1}, w13x3(), {1});

  HigherTransportResult one = higher_transport(g, W, {1}, T, {1}, 1, cfg,
                                               1e-4);
  EXPECT_TRUE(one.report.pass);
  EXPECT_NEAR(one.lhs, 1.0 / 9.0, 1e-9);
  EXPECT_NEAR(one.rhs, 1.0 / 9.0, 1e-9);

  HigherTransportResult two = higher_transport(g, W, {1}, T, {1}, 2, cfg,
                                               1e-4);
  EXPECT_TRUE(two.report.pass);
  EXPECT_NEAR(two.lhs, 1.0 / 135.0, 1e-8);
  EXPECT_NEAR(two.rhs, 1.0 / 135.0, 1e-8);
  EXPECT_THROW(higher_transport(g, W, {1}, T, {1}, 0, cfg, 1e-4),
               std::invalid_argument);
}

TEST(Membranes, ConstantFaceExtensionLeavesIntegralsInvariant) {
  // extending a membrane by a constant face and shifting the slot into the
  // second half reproduces the original integral
  QuadratureConfig cfg = coarse();
  Membrane g = sheet();
  Membrane ext = constant_face_extension(g, 0);  // constant in t1 at face 0
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1},
             DifferentialForm::parse(3, 2, {{MultiIndex{2, 3}, "x2"}}),
             {1, 2});
  double plain = integrate_membrane(g, I, cfg).value;
  Membrane glued = glue_membranes(ext, g, 1e-9);
  double extended = integrate_membrane(glued, I, cfg).value;
  // dx2^dx3 pullback vanishes on the constant-in-t1 half only for the
  // dt1-consuming part; the full integral redistributes but the interior
  // slot consumes dt1, so the constant half contributes zero:
  // the glued value halves the dt1 density on [0, 1/2].
  EXPECT_NEAR(extended, plain, 1e-10);
}

TEST(Membranes, EngineAgreesAcrossRules) {
  QuadratureConfig simpson = coarse();
  QuadratureConfig trap;
  trap.points_per_axis = 256;
  trap.rule = QuadratureRule::trapezoid;
  trap.rel_tol = 1e-2;
  std::mt19937 rng(42);
  Membrane g = oracle::random_sheet(3, rng);
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, oracle::random_2form(3, 1, rng), {1, 2});
  double a = integrate_membrane(g, I, simpson).value;
  double b = integrate_membrane(g, I, trap).value;
  EXPECT_NEAR(a, b, 1e-3 * (1.0 + std::abs(a)));
  QuadratureConfig gauss;
  gauss.rule = QuadratureRule::gauss;
  EXPECT_THROW(integrate_membrane(g, I, gauss), std::invalid_argument);
}

TEST(Membranes, TotalCutsGuard) {
  QuadratureConfig cfg = coarse();
  cfg.max_total_cuts = 1;
  LabeledIntegrand I(2, {1, 1});
  I.set_slot({1, 1}, vol12(3), {1, 2});
  EXPECT_THROW(integrate_membrane(sheet(), I, cfg), std::invalid_argument);
}

}  // namespace

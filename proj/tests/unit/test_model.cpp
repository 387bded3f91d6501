#include "blindid/error.hpp"
#include "blindid/model.hpp"
#include "blindid/sensing.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace blindid;

namespace {

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

LtvModel random_model(const Dims& d, std::mt19937_64& gen) {
  LtvModel model{d, {}};
  const Index blocks = d.mode == Mode::lti ? 1 : d.k_f;
  for (Index k = 0; k < blocks; ++k) model.a_mats.push_back(random_matrix(d.n, d.n, gen));
  return model;
}

InputPlan random_inputs(const Dims& d, int count, std::mt19937_64& gen) {
  InputPlan plan{d, {}};
  std::uniform_int_distribution<Index> pick(0, d.measurements() - 1);
  std::normal_distribution<double> nd;
  while (plan.sparsity() < count) {
    const Index flat = pick(gen);
    const Index j = flat / (d.n * d.k_f), k = (flat / d.n) % d.k_f, i = flat % d.n;
    plan.entries[{j, k, i}] = nd(gen);
  }
  return plan;
}

}  // namespace

TEST(Dims, RejectsNonPositiveSizes) {
  EXPECT_THROW((Dims{0, 1, 1, Mode::ltv}.validate()), ShapeError);
  EXPECT_THROW((Dims{1, 0, 1, Mode::ltv}.validate()), ShapeError);
  EXPECT_THROW((Dims{1, 1, 0, Mode::ltv}.validate()), ShapeError);
  EXPECT_NO_THROW((Dims{1, 1, 1, Mode::ltv}.validate()));
}

TEST(Dims, Lengths) {
  const Dims ltv{3, 4, 5, Mode::ltv};
  EXPECT_EQ(ltv.measurements(), 60);
  EXPECT_EQ(ltv.dynamics(), 36);
  const Dims lti{3, 4, 5, Mode::lti};
  EXPECT_EQ(lti.dynamics(), 9);
}

TEST(Mode, ParseRoundTrip) {
  EXPECT_EQ(parse_mode("ltv"), Mode::ltv);
  EXPECT_EQ(parse_mode(to_string(Mode::lti)), Mode::lti);
  EXPECT_THROW(parse_mode("lpv"), ConfigError);
}

TEST(SimulateStep, IdentityDynamics) {
  const Eigen::Vector2d z(1, 2);
  EXPECT_EQ(simulate_step(Eigen::Matrix2d::Identity(), z, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), z);
}

TEST(SimulateStep, ZeroDynamics) {
  const Eigen::Vector2d u(3, -1);
  EXPECT_EQ(simulate_step(Eigen::Matrix2d::Zero(), Eigen::Vector2d(5, 5), u, Eigen::Vector2d::Zero()), u);
}

TEST(SimulateStep, SwapMatrix) {
  Eigen::Matrix2d a;
  a << 0, 1, 1, 0;
  const Eigen::VectorXd out = simulate_step(a, Eigen::Vector2d(1, 2), Eigen::Vector2d(0.5, 0), Eigen::Vector2d::Zero());
  EXPECT_EQ(out, Eigen::Vector2d(2.5, 1));
}

TEST(SimulateStep, ShapeMismatch) {
  EXPECT_THROW(simulate_step(Eigen::Matrix2d::Identity(), Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero(),
                             Eigen::Vector2d::Zero()),
               ShapeError);
  EXPECT_THROW(simulate_step(Eigen::MatrixXd::Identity(2, 3), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(),
                             Eigen::Vector2d::Zero()),
               ShapeError);
}

TEST(SimulateStep, LinearInInput) {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd a = random_matrix(3, 3, gen);
  const Eigen::VectorXd z = random_matrix(3, 1, gen), u1 = random_matrix(3, 1, gen), u2 = random_matrix(3, 1, gen);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd lhs = simulate_step(a, z, u1 + u2, w);
  const Eigen::VectorXd rhs = simulate_step(a, z, u1, w) + u2;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SimulateDataset, IdentityKeepsInitialStates) {
  const Dims d{3, 3, 2, Mode::ltv};
  LtvModel model{d, std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Identity(3, 3))};
  Eigen::MatrixXd z0(3, 2);
  z0 << 1, 2, 3, 4, 5, 6;
  const Dataset ds = simulate_dataset(model, InputPlan{d, {}}, {}, z0);
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k <= 3; ++k) EXPECT_EQ(Eigen::VectorXd(ds.snapshot(j, k)), Eigen::VectorXd(z0.col(j)));
  EXPECT_EQ(ds.eta, 0.0);
}

TEST(SimulateDataset, ScalarHandIteration) {
  const Dims d{1, 2, 1, Mode::ltv};
  LtvModel model{d, {Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 3.0)}};
  const Dataset ds = simulate_dataset(model, InputPlan{d, {}}, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Ones(1, 1));
  EXPECT_EQ(ds.states(0, 0), 1.0);
  EXPECT_EQ(ds.states(0, 1), 2.0);
  EXPECT_EQ(ds.states(0, 2), 6.0);
  EXPECT_EQ(ds.eta, 0.0);
}

TEST(SimulateDataset, EtaIsNoiseNorm) {
  const Dims d{2, 2, 1, Mode::ltv};
  LtvModel model{d, std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Identity(2, 2))};
  Eigen::VectorXd w(4);
  w << 3, 0, 0, 4;
  const Dataset ds = simulate_dataset(model, InputPlan{d, {}}, w, Eigen::MatrixXd::Zero(2, 1));
  EXPECT_DOUBLE_EQ(ds.eta, 5.0);
  EXPECT_EQ(ds.states(0, 1), 3.0);
  EXPECT_EQ(ds.states(1, 2), 4.0);
}

TEST(SimulateDataset, Overflow) {
  const Dims d{1, 3, 1, Mode::ltv};
  LtvModel model{d, std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Constant(1, 1, 1e300))};
  EXPECT_THROW(simulate_dataset(model, InputPlan{d, {}}, {}, Eigen::MatrixXd::Constant(1, 1, 1e300)), OverflowError);
}

TEST(SimulateDataset, RejectsBadShapes) {
  const Dims d{2, 1, 2, Mode::ltv};
  LtvModel model{d, {Eigen::MatrixXd::Identity(2, 2)}};
  EXPECT_THROW(simulate_dataset(model, InputPlan{d, {}}, {}, Eigen::MatrixXd::Zero(2, 3)), ShapeError);
  EXPECT_THROW(simulate_dataset(model, InputPlan{d, {}}, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(2, 2)),
               ShapeError);
}

TEST(SimulateDataset, ResimulationIsBitIdentical) {
  std::mt19937_64 gen(2);
  const Dims d{3, 4, 5, Mode::ltv};
  const LtvModel model = random_model(d, gen);
  const InputPlan inputs = random_inputs(d, 7, gen);
  const Dataset ds = simulate_dataset(model, inputs, {}, random_matrix(3, 5, gen));
  const Dataset again = simulate_dataset(model, inputs, {}, ds.initial_states());
  EXPECT_EQ(ds.states, again.states);
}

TEST(SimulateDataset, LtiRepeatsTheMatrix) {
  std::mt19937_64 gen(3);
  const Dims d{2, 3, 1, Mode::lti};
  const LtvModel model = random_model(d, gen);
  const Dataset ds = simulate_dataset(model, InputPlan{d, {}}, {}, random_matrix(2, 1, gen));
  const Eigen::MatrixXd& a = model.a_mats[0];
  EXPECT_LE((Eigen::VectorXd(ds.snapshot(0, 3)) - a * a * a * ds.snapshot(0, 0)).norm(), 1e-12);
}

TEST(StackMeasurements, Singleton) {
  const Dims d{1, 1, 1, Mode::ltv};
  Dataset ds{d, Eigen::MatrixXd(1, 2), 0.0};
  ds.states << 4, 7;
  EXPECT_EQ(stack_measurements(ds), Eigen::VectorXd::Constant(1, 7.0));
}

TEST(StackMeasurements, ColumnMajorOrder) {
  // z^(1)[1]=a, z^(2)[1]=b, z^(1)[2]=c, z^(2)[2]=d must stack as (a, c, b, d).
  const Dims d{1, 2, 2, Mode::ltv};
  Dataset ds{d, Eigen::MatrixXd(1, 6), 0.0};
  const double a = 1, b = 2, c = 3, dd = 4;
  ds.states << 0, a, c, 0, b, dd;
  const Eigen::VectorXd z = stack_measurements(ds);
  EXPECT_EQ(z, Eigen::Vector4d(a, c, b, dd));
}

TEST(StackMeasurements, LengthAndInitialStatesExcluded) {
  const Dims d{3, 4, 5, Mode::ltv};
  Dataset ds{d, Eigen::MatrixXd::Zero(3, 25), 0.0};
  for (Index j = 0; j < 5; ++j) ds.states.col(ds.column(j, 0)).setConstant(99.0);
  const Eigen::VectorXd z = stack_measurements(ds);
  EXPECT_EQ(z.size(), 60);
  EXPECT_EQ((z.array() == 99.0).count(), 0);
}

TEST(StackMeasurements, MatchesStackedIndex) {
  std::mt19937_64 gen(4);
  const Dims d{2, 3, 4, Mode::ltv};
  const Dataset ds{d, random_matrix(2, 16, gen), 0.0};
  const Eigen::VectorXd z = stack_measurements(ds);
  for (Index j = 0; j < d.q; ++j)
    for (Index k = 0; k < d.k_f; ++k)
      for (Index i = 0; i < d.n; ++i) EXPECT_EQ(z(stacked_index(d, j, k, i)), ds.snapshot(j, k + 1)(i));
}

TEST(LtvModel, VectorRoundTrip) {
  std::mt19937_64 gen(5);
  for (Mode mode : {Mode::ltv, Mode::lti}) {
    const Dims d{3, 2, 1, mode};
    const LtvModel model = random_model(d, gen);
    const Eigen::VectorXd a = model.vectorize();
    EXPECT_EQ(a.size(), d.dynamics());
    const LtvModel back = LtvModel::from_vector(d, a);
    ASSERT_EQ(back.a_mats.size(), model.a_mats.size());
    for (std::size_t k = 0; k < model.a_mats.size(); ++k) EXPECT_EQ(back.a_mats[k], model.a_mats[k]);
    EXPECT_EQ(a(dynamics_index(d, 1, 2, 0)), model.at(1)(2, 0));
  }
}

TEST(LtvModel, ValidateRejectsNonFiniteAndShape) {
  const Dims d{2, 1, 1, Mode::ltv};
  LtvModel bad{d, {Eigen::MatrixXd::Identity(3, 3)}};
  EXPECT_THROW(bad.validate(), ShapeError);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Identity(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  LtvModel bad2{d, {nan}};
  EXPECT_THROW(bad2.validate(), Error);
}

TEST(InputPlan, VectorRoundTripAndRange) {
  const Dims d{2, 2, 3, Mode::ltv};
  InputPlan plan{d, {{{1, 0, 1}, 2.5}, {{2, 1, 0}, -1.0}}};
  const Eigen::VectorXd u = plan.to_vector();
  EXPECT_EQ(u(stacked_index(d, 1, 0, 1)), 2.5);
  EXPECT_EQ(u(stacked_index(d, 2, 1, 0)), -1.0);
  EXPECT_EQ(InputPlan::from_vector(d, u).entries, plan.entries);
  InputPlan bad{d, {{{3, 0, 0}, 1.0}}};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Model, NoiselessDataSatisfiesSensingEquation) {
  std::mt19937_64 gen(6);
  for (Mode mode : {Mode::ltv, Mode::lti}) {
    const Dims d{3, 3, 4, mode};
    const LtvModel model = random_model(d, gen);
    const InputPlan inputs = random_inputs(d, 6, gen);
    const Dataset ds = simulate_dataset(model, inputs, {}, random_matrix(3, 4, gen));
    const SensingSystem sys = assemble(ds, mode);
    const Eigen::VectorXd r = stack_measurements(ds) - inputs.to_vector() - sys.psi_a * model.vectorize();
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-12 * (1 + stack_measurements(ds).cwiseAbs().maxCoeff()));
  }
}

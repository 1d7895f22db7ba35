#include <gtest/gtest.h>

#include "qcgain/errors.hpp"
#include "qcgain/lmi.hpp"
#include "test_support.hpp"

namespace qcgain {
namespace {

using testing::example_plant;
using testing::zero_system;

const Sector kUnit(0.0, 1.0);

AnalysisResult run(const StateSpace& sys, MultiplierTag tag, const Sector& sector) {
  return analyze(AnalysisProblem(sys, MultiplierClass(tag, sector, sys.m())));
}

TEST(AssembleL, ZeroSystemKeepsOnlyDiagonalTerms) {
  const SymMatrix L = assemble_L(zero_system(1, 1, 1, 1), SymMatrix::identity(1), SymMatrix(2), 1.0);
  EXPECT_TRUE(L.dense().isApprox(Eigen::Vector3d(-1, 0, -1).asDiagonal().toDenseMatrix()));
}

TEST(AssembleL, MultiplierTermIsCongruence) {
  StateSpaceData d = zero_system(1, 1, 1, 1).data();
  d.C1(0, 0) = 1.0;
  const StateSpace sys(d, Dims{1, 1, 1, 1});
  const SymMatrix M = md_matrix(Eigen::VectorXd::Ones(1), kUnit);
  Eigen::Matrix3d expected;
  expected << 0, 1, 0, 1, -2, 0, 0, 0, -2.5;
  EXPECT_TRUE(assemble_L(sys, SymMatrix(1), M, 2.5).dense().isApprox(expected));
}

TEST(AssembleL, LinearInGammaSquared) {
  const StateSpace sys = example_plant();
  const SymMatrix P = SymMatrix::identity(3);
  const SymMatrix M = md_matrix(Eigen::Vector3d(1, 2, 3), kUnit);
  const Eigen::MatrixXd diff = (assemble_L(sys, P, M, 4.5) - assemble_L(sys, P, M, 2.0)).dense();
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(7, 7);
  expected(6, 6) = -2.5;
  EXPECT_LE((diff - expected).norm(), 1e-12);
}

TEST(AssembleL, DimensionMismatch) {
  EXPECT_THROW(assemble_L(example_plant(), SymMatrix::identity(2), SymMatrix(6), 1.0), DimensionMismatch);
}

TEST(BuildProgram, IncrementalCompleteCounts) {
  const sdp::ConeProgram p = build_program(
      AnalysisProblem(example_plant(), MultiplierClass(MultiplierTag::kIncrementalComplete, kUnit, 3)));
  int s_blocks = 0, n_blocks = 0;
  for (const auto& b : p.blocks()) {
    if (b.name.rfind(block_names::kS, 0) == 0) {
      ++s_blocks;
      EXPECT_EQ(b.kind, sdp::BlockKind::kPsd);
      EXPECT_EQ(b.order, 6);
    }
    if (b.name.rfind(block_names::kN, 0) == 0) {
      ++n_blocks;
      EXPECT_EQ(b.kind, sdp::BlockKind::kNonneg);
      EXPECT_EQ(b.length, 15);  // strict upper triangle of a 6x6 matrix
    }
  }
  EXPECT_EQ(s_blocks, 64);
  EXPECT_EQ(n_blocks, 64);
  EXPECT_EQ(p.block(*p.find_block(block_names::kP)).order, 3);
  EXPECT_EQ(p.block(*p.find_block(block_names::kLSlack)).order, 7);
  EXPECT_EQ(p.block(*p.find_block(block_names::kM)).length, 21);
}

TEST(BuildProgram, DiagonalCounts) {
  const sdp::ConeProgram p =
      build_program(AnalysisProblem(example_plant(), MultiplierClass(MultiplierTag::kDiagonal, kUnit, 3)));
  EXPECT_EQ(p.block(*p.find_block(block_names::kLambda)).length, 3);
  EXPECT_EQ(p.count_blocks(sdp::BlockKind::kPsd), 2);
  EXPECT_FALSE(p.find_block(block_names::kM).has_value());
}

TEST(BuildProgram, VertexConvexCounts) {
  const sdp::ConeProgram p =
      build_program(AnalysisProblem(example_plant(), MultiplierClass(MultiplierTag::kVertexConvex, kUnit, 3)));
  int vertices = 0;
  for (const auto& b : p.blocks())
    if (b.name.rfind(block_names::kVertex, 0) == 0) {
      ++vertices;
      EXPECT_EQ(b.order, 3);
    }
  EXPECT_EQ(vertices, 8);
  EXPECT_EQ(p.block(*p.find_block(block_names::kRSlack)).order, 3);
  EXPECT_EQ(p.count_blocks(sdp::BlockKind::kPsd), 2 + 8 + 1);
}

TEST(Analyze, MatchesExternalSolverAtUnitSector) {
  const StateSpace sys = example_plant();
  const std::pair<MultiplierTag, double> cases[] = {{MultiplierTag::kDiagonal, testing::kFrozenGammaMd},
                                                    {MultiplierTag::kVertexConvex, testing::kFrozenGammaMc},
                                                    {MultiplierTag::kIncrementalComplete, testing::kFrozenGammaMinc}};
  for (const auto& [tag, ref] : cases) {
    const AnalysisResult r = run(sys, tag, kUnit);
    ASSERT_TRUE(r.certified()) << short_name(tag) << ": " << r.message;
    EXPECT_NEAR(r.gamma, ref, testing::kFrozenRelTol * ref) << short_name(tag);
    EXPECT_TRUE(r.well_posedness_warning);
  }
}

TEST(Analyze, CertificateChecksOutIndependently) {
  const StateSpace sys = example_plant();
  for (MultiplierTag tag :
       {MultiplierTag::kDiagonal, MultiplierTag::kVertexConvex, MultiplierTag::kIncrementalComplete}) {
    const AnalysisResult r = run(sys, tag, Sector(0.0, 0.8));
    ASSERT_TRUE(r.certified()) << r.message;
    const Eigen::MatrixXd L = assemble_L(sys, r.P, r.M, r.gamma_sq).dense();
    EXPECT_LE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues().maxCoeff(), -r.eps / 2);
    EXPECT_GE(r.P.min_eigenvalue(), -1e-8);
    EXPECT_NEAR(r.gamma * r.gamma, r.gamma_sq, 1e-12 * r.gamma_sq);
    if (tag == MultiplierTag::kDiagonal) EXPECT_TRUE(membership_md(r.M, Sector(0.0, 0.8)));
    if (tag == MultiplierTag::kVertexConvex) EXPECT_TRUE(membership_mc(r.M, Sector(0.0, 0.8)));
    if (tag == MultiplierTag::kIncrementalComplete) EXPECT_TRUE(membership_minc(r.M, Sector(0.0, 0.8)));
  }
}

TEST(Analyze, OrderingAndMonotonicity) {
  const StateSpace sys = example_plant();
  double prev[3] = {0, 0, 0};
  for (double beta : {0.2, 0.6, 1.0}) {
    double g[3];
    int k = 0;
    for (MultiplierTag tag :
         {MultiplierTag::kDiagonal, MultiplierTag::kVertexConvex, MultiplierTag::kIncrementalComplete}) {
      const AnalysisResult r = run(sys, tag, Sector(0.0, beta));
      ASSERT_TRUE(r.certified()) << r.message;
      g[k] = r.gamma;
      EXPECT_GE(g[k], prev[k] - 1e-6) << "beta=" << beta;
      prev[k] = g[k];
      ++k;
    }
    EXPECT_LE(g[2], g[1] + 1e-6);
    EXPECT_LE(g[1], g[0] + 1e-6);
  }
}

TEST(Analyze, SmallSectorApproachesNominalNorm) {
  const StateSpace sys = example_plant();
  const double nominal = nominal_hinf_norm(sys);
  const AnalysisResult r = run(sys, MultiplierTag::kDiagonal, Sector(0.0, 1e-3));
  ASSERT_TRUE(r.certified());
  EXPECT_NEAR(r.gamma, nominal, 0.02 * nominal);
}

TEST(Analyze, InfeasibleBeyondMargin) {
  const AnalysisResult r = run(example_plant(), MultiplierTag::kDiagonal, Sector(0.0, 1.5));
  EXPECT_EQ(r.status, AnalysisStatus::kNoCertificate);
  EXPECT_FALSE(r.certified());
}

TEST(Analyze, ZeroSystemHasZeroGain) {
  const AnalysisResult r = run(zero_system(1, 1, 1, 1), MultiplierTag::kDiagonal, kUnit);
  ASSERT_TRUE(r.certified()) << r.message;
  EXPECT_LT(r.gamma, 1e-3);
}

TEST(MarginSearch, DiagonalMargin) {
  const double beta = margin_search(example_plant(), MultiplierTag::kDiagonal, 2.0, 0.01);
  EXPECT_NEAR(beta, 1.17, 0.02);
  EXPECT_TRUE(run(example_plant(), MultiplierTag::kDiagonal, Sector(0.0, beta)).certified());
}

TEST(ExtremalMultiplier, LandsInClass) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
  c(0, 3) = c(3, 0) = 0.4;
  const SymMatrix C = SymMatrix::from_dense(c);
  const SymMatrix md = extremal_multiplier(MultiplierClass(MultiplierTag::kDiagonal, kUnit, 2), C);
  EXPECT_TRUE(membership_md(md, kUnit, 1e-7));
  const SymMatrix mc = extremal_multiplier(MultiplierClass(MultiplierTag::kVertexConvex, kUnit, 2), C);
  EXPECT_TRUE(membership_mc(mc, kUnit, 1e-7));
}

}  // namespace
}  // namespace qcgain

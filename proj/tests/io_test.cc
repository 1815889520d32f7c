#include "sensched/io.h"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sensched/errors.h"
#include "test_support.h"

namespace sensched {
namespace {

using Eigen::MatrixXd;

TEST(LoadProblem, ShippedFig1File) {
  const auto p = LoadProblem(testing::DataPath("fig1.json"));
  ASSERT_EQ(p.num_systems(), 2);
  ASSERT_EQ(p.num_sensors(), 1);
  EXPECT_EQ(p.system(0).A(0, 0), 0.1);
  EXPECT_EQ(p.system(1).A(0, 0), 2.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(p.system(i).W(0, 0), 1.0);
    EXPECT_EQ(p.system(i).T(0, 0), 1.0);
    EXPECT_EQ(p.link(i, 0).C(0, 0), 1.0);
    EXPECT_EQ(p.link(i, 0).V(0, 0), 1.0);
    EXPECT_EQ(p.link(i, 0).kappa, 0.0);
    EXPECT_EQ(p.system_mode(i), ConstraintMode::kAtMostOne);
  }
  EXPECT_TRUE(ValidateProblem(p).ok());
}

TEST(SerializeProblem, RoundTripIsBitExact) {
  std::mt19937 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = testing::RandomProblem(rng, 1 + trial % 3, 1 + trial % 2, 4);
    const auto q = ParseProblem(SerializeProblem(p));
    ASSERT_EQ(q.num_systems(), p.num_systems());
    for (int i = 0; i < p.num_systems(); ++i) {
      EXPECT_EQ(q.system(i).A, p.system(i).A);
      EXPECT_EQ(q.system(i).W, p.system(i).W);
      EXPECT_EQ(q.system(i).Sigma0, p.system(i).Sigma0);
      EXPECT_EQ(q.system(i).T, p.system(i).T);
      for (int j = 0; j < p.num_sensors(); ++j) {
        EXPECT_EQ(q.link(i, j).C, p.link(i, j).C);
        EXPECT_EQ(q.link(i, j).V, p.link(i, j).V);
        EXPECT_EQ(q.link(i, j).kappa, p.link(i, j).kappa);
      }
    }
    EXPECT_EQ(SerializeProblem(q), SerializeProblem(p));
  }
}

TEST(ParseProblem, ScalarsRowsAndModeShorthand) {
  const auto p = ParseProblem(R"({
    "systems": [{"A": [[0, 1], [-1, 0]], "W": [[1, 0], [0, 1]], "Sigma0": [[1, 0], [0, 1]],
                 "T": [[1, 0], [0, 1]]}],
    "links": [[{"C": [1, 0], "V": 2}]],
    "sensor_mode": "exactly-one"
  })");
  EXPECT_EQ(p.link(0, 0).C.rows(), 1);
  EXPECT_EQ(p.link(0, 0).C.cols(), 2);
  EXPECT_EQ(p.link(0, 0).V(0, 0), 2.0);
  EXPECT_EQ(p.link(0, 0).kappa, 0.0);
  EXPECT_EQ(p.sensor_mode(0), ConstraintMode::kExactlyOne);
  EXPECT_EQ(p.system_mode(0), ConstraintMode::kAtMostOne);
}

TEST(ParseProblem, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      ParseProblem(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("{\"systems\": [").find("malformed"), std::string::npos);
  EXPECT_NE(message(R"({"systems": [{"A": 1, "W": 1, "Sigma0": 1}], "links": [[{"C": 1, "V": 1}]]})")
                .find("systems[0]"),
            std::string::npos);
  EXPECT_NE(message(R"({"systems": [{"A": 1, "W": 1, "Sigma0": 1, "T": 1}],
                        "links": [[{"C": "x", "V": 1}]]})")
                .find("links[0][0].C"),
            std::string::npos);
  EXPECT_NE(message(R"({"systems": [{"A": 1, "W": 1, "Sigma0": 1, "T": 1}],
                        "links": [[{"C": 1, "V": 1}]], "system_mode": ["maybe"]})")
                .find("system_mode[0]"),
            std::string::npos);
}

TEST(ParseProblem, NegativeCostIsStructural) {
  EXPECT_THROW(ParseProblem(R"({"systems": [{"A": 1, "W": 1, "Sigma0": 1, "T": 1}],
                                "links": [[{"C": 1, "V": 1, "kappa": -1}]]})"),
               StructuralError);
}

TEST(WriteTrajectoriesCsv, HeaderAndRows) {
  CovarianceTrajectory traj;
  traj.system_index = 1;
  traj.times = {0.0, 0.5};
  traj.covariances = {MatrixXd::Identity(2, 2), 2 * MatrixXd::Identity(2, 2)};
  traj.active_sensor = {-1, 0};
  std::ostringstream out;
  WriteTrajectoriesCsv(out, {traj});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,system,s_0_0,s_0_1,s_1_0,s_1_1,active_sensor");
  std::getline(in, line);
  EXPECT_EQ(line, "0,1,1,0,0,1,-1");
  std::getline(in, line);
  EXPECT_EQ(line, "0.5,1,2,0,0,2,0");
}

}  // namespace
}  // namespace sensched

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcgain/cli/app.hpp"
#include "qcgain/cli/io.hpp"
#include "qcgain/cli/sweep.hpp"
#include "qcgain/errors.hpp"
#include "test_support.hpp"

namespace qcgain::cli {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qcgain");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qcgain_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::string kSystem = testing::data_path("example_plant.json");

TEST(ParseSystem, ExamplePlantFile) {
  const StateSpace sys = parse_system_file(kSystem);
  EXPECT_EQ(sys.dims(), (Dims{3, 3, 1, 1}));
  EXPECT_DOUBLE_EQ(sys.D11()(0, 1), -1.27);
}

TEST(ParseSystem, MissingFieldIsNamed) {
  nlohmann::json doc = nlohmann::json::parse(testing::read_file(kSystem));
  doc.erase("D21");
  try {
    parse_system_json(doc.dump(), "sys.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("\"D21\""), std::string::npos) << e.what();
  }
}

TEST(ParseSystem, MalformedJsonReportsLine) {
  try {
    parse_system_json("{\n\"A\": [[1]],\n\"B1\": [[1]] oops\n}", "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos) << e.what();
  }
}

TEST(ParseSystem, RaggedRowsRejected) {
  EXPECT_THROW(parse_system_json(R"({"A": [[1, 2], [3]]})"), ParseError);
}

TEST(ParseSweepGrid, Points) {
  const SweepGrid g = parse_sweep_grid("0:1.3:15");
  EXPECT_EQ(g.count, 15);
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 15u);
  EXPECT_EQ(pts.front(), 0.0);
  EXPECT_EQ(pts.back(), 1.3);
  EXPECT_THROW(parse_sweep_grid("1:0:3"), ParseError);
  EXPECT_THROW(parse_sweep_grid("0:1:1"), ParseError);
  EXPECT_THROW(parse_sweep_grid("0:1"), ParseError);
  EXPECT_THROW(parse_sweep_grid("a:1:3"), ParseError);
}

TEST(ParseClasses, Lists) {
  EXPECT_EQ(parse_classes("all").size(), 3u);
  EXPECT_EQ(parse_classes("minc,md"),
            (std::vector<MultiplierTag>{MultiplierTag::kDiagonal, MultiplierTag::kIncrementalComplete}));
  EXPECT_THROW(parse_classes("mx"), ParseError);
}

TEST(FormatNumber, SixSignificantDigits) {
  EXPECT_EQ(format_number(1.1856780754), "1.18568");
  EXPECT_EQ(format_number(0.0), "0");
}

TEST(ExitCodes, HelpAndUsage) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(invoke({}).code, kExitInput);
  EXPECT_EQ(invoke({"analyze"}).code, kExitInput);
  EXPECT_EQ(invoke({"analyze", kSystem, "--class", "bogus"}).code, kExitInput);
  EXPECT_EQ(invoke({"verify", "--mode", "exact"}).code, kExitInput);
}

TEST(ExitCodes, MissingFileIsInputError) {
  const Invocation r = invoke({"norm", "/nonexistent/system.json"});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST_F(CliFiles, UnstableNominalIsInputError) {
  const std::string sys = write("unstable.json", R"({"A": [[2]], "B1": [[0]], "B2": [[1]], "C1": [[0]],
    "C2": [[1]], "D11": [[0]], "D12": [[0]], "D21": [[0]], "D22": [[0]]})");
  const Invocation r = invoke({"norm", sys});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("spectral radius"), std::string::npos) << r.err;
}

TEST(Norm, PrintsNominalNorm) {
  const Invocation r = invoke({"norm", kSystem});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "1.18568\n");
}

TEST_F(CliFiles, AnalyzeWritesCertificates) {
  const std::string out = path("cert.json");
  const Invocation r = invoke({"analyze", kSystem, "--class", "md", "--beta", "0.5", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("md: OPTIMAL gamma="), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("warning: D11 != 0"), std::string::npos);
  const nlohmann::json doc = nlohmann::json::parse(testing::read_file(out));
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["class"], "md");
  EXPECT_EQ(doc[0]["P"].size(), 3u);
  EXPECT_EQ(doc[0]["M"].size(), 6u);
  EXPECT_GT(doc[0]["gamma"].get<double>(), 1.0);
}

TEST_F(CliFiles, AnalyzeDumpsConeProgram) {
  const Invocation r = invoke({"analyze", kSystem, "--class", "md", "--dump-program", path("prog_")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = lines(testing::read_file(path("prog_md.txt")));
  ASSERT_GE(l.size(), 6u);
  EXPECT_EQ(l[0], "# qcgain cone program v1");
  EXPECT_EQ(l[1], "rows 28 vars 38 blocks 4");
  EXPECT_EQ(l[2], "block 0 psd 3 0 6 P");
  EXPECT_EQ(l[3], "block 1 nonneg 1 6 1 gamma_sq");
  EXPECT_EQ(l[6], "c 6 1");
}

TEST(Sweep, HeaderAndNominalRows) {
  const Invocation r = invoke({"sweep", kSystem, "--sweep", "0:0:2", "--deterministic"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], kSweepHeader);
  EXPECT_EQ(l[1], l[2]);
  EXPECT_EQ(l[1], "0,1.18568,1.18568,1.18568,NOMINAL,NOMINAL,NOMINAL,0,0,0");
}

TEST(Sweep, SkippedClassesAndOrdering) {
  const Invocation r = invoke({"sweep", kSystem, "--sweep", "0.5:1:2", "--class", "md,minc", "--deterministic", "--jobs", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[1].rfind("0.5,", 0), 0u);
  EXPECT_EQ(l[2].rfind("1,", 0), 0u);
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_NE(l[k].find(",OPTIMAL,SKIPPED,OPTIMAL,"), std::string::npos) << l[k];
  }
}

TEST_F(CliFiles, SweepToFileMatchesStdout) {
  const std::string out = path("sweep.csv");
  const Invocation a = invoke({"sweep", kSystem, "--sweep", "0.1:0.2:2", "--class", "md", "--deterministic", "--out", out});
  const Invocation b = invoke({"sweep", kSystem, "--sweep", "0.1:0.2:2", "--class", "md", "--deterministic"});
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_TRUE(a.out.empty());
  EXPECT_EQ(testing::read_file(out), b.out);
}

TEST(Margin, DiagonalClass) {
  const Invocation r = invoke({"margin", kSystem, "--class", "md", "--resolution", "0.05"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_EQ(r.out.rfind("md ", 0), 0u);
  EXPECT_NEAR(std::stod(r.out.substr(3)), 1.17, 0.06);
}

TEST(Verify, DeterministicAndPassing) {
  const Invocation a = invoke({"verify", "--seed", "7"});
  const Invocation b = invoke({"verify", "--seed", "7"});
  ASSERT_EQ(a.code, kExitOk) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("result: 6 of 6 properties passed"), std::string::npos) << a.out;
}

TEST_F(CliFiles, MutantOutsideMincFailsWithWitness) {
  // -dw^2 is negative on every nonzero increment.
  const std::string mutant = write("mutant.json", R"({"M": [[0, 0], [0, -1]], "alpha": 0, "beta": 1})");
  const Invocation r = invoke({"verify", "--mutant", mutant});
  EXPECT_EQ(r.code, kExitVerification);
  EXPECT_NE(r.out.find("FAIL mutant_in_minc"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("witness increment"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("repeated nonlinearity"), std::string::npos) << r.out;
}

TEST_F(CliFiles, MutantInsideMincPasses) {
  const std::string mutant = write("member.json", R"({"M": [[0, 1], [1, -2]], "alpha": 0, "beta": 1})");
  const Invocation r = invoke({"verify", "--mutant", mutant, "--mode", "psdn"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_NE(r.out.find("PASS mutant_in_minc"), std::string::npos);
}

}  // namespace
}  // namespace qcgain::cli

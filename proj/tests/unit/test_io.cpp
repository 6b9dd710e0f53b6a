#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gsd/io/edge_list.hpp"
#include "gsd/io/matrix_file.hpp"

namespace fs = std::filesystem;
using gsd::Index;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gsd_io_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }

  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(gsd::io::format_double(0.1), "0.1");
  EXPECT_EQ(gsd::io::format_double(2.0), "2");
  EXPECT_EQ(gsd::io::format_double(-1.5e-300), "-1.5e-300");
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    double back = 0.0;
    ASSERT_TRUE(gsd::io::parse_double(gsd::io::format_double(v), back));
    EXPECT_EQ(back, v);
  }
}

TEST(ParseDouble, AcceptsAndRejects) {
  double v = 0.0;
  EXPECT_TRUE(gsd::io::parse_double(" +3.5 ", v));
  EXPECT_EQ(v, 3.5);
  EXPECT_FALSE(gsd::io::parse_double("3.5x", v));
  EXPECT_FALSE(gsd::io::parse_double("", v));
  EXPECT_FALSE(gsd::io::parse_double("abc", v));
}

TEST_F(TempDir, CsvWithHeaderRoundTrips) {
  const std::string text = "x,y\n1,2.5\n-3,0.125\n";
  const auto path = write("a.csv", text);
  const auto mf = gsd::io::read_matrix_file(path);
  EXPECT_EQ(mf.header, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(mf.data.rows(), 2);
  EXPECT_EQ(mf.data(1, 0), -3.0);
  const auto out = (dir_ / "b.csv").string();
  gsd::io::write_matrix_file(out, mf, mf.data);
  EXPECT_EQ(slurp(out), text);
}

TEST_F(TempDir, WhitespaceAndTabDelimiters) {
  const auto ws = gsd::io::read_matrix_file(write("w.txt", "# comment\n1 2 3\n4   5 6\n"));
  EXPECT_EQ(ws.delimiter, 0);
  EXPECT_EQ(ws.data(1, 1), 5.0);
  const auto tab = gsd::io::read_matrix_file(write("t.tsv", "1\t2\n3\t4\n"));
  EXPECT_EQ(tab.delimiter, '\t');
  EXPECT_EQ(tab.data(1, 0), 3.0);
}

TEST_F(TempDir, ParseErrorsNameTheLocation) {
  try {
    gsd::io::read_matrix_file(write("bad.csv", "1,2\n3,oops\n"));
    FAIL();
  } catch (const gsd::InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:2:2"), std::string::npos) << e.what();
  }
  try {
    gsd::io::read_matrix_file(write("ragged.csv", "1,2\n3\n"));
    FAIL();
  } catch (const gsd::InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("ragged.csv:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(gsd::io::read_matrix_file((dir_ / "missing.csv").string()), gsd::InvalidArgument);
}

TEST_F(TempDir, BinaryAndAsciiGraymaps) {
  std::string p5 = "P5\n# c\n3 2\n255\n";
  for (unsigned char c : {0, 10, 20, 30, 40, 255}) p5.push_back(static_cast<char>(c));
  const auto mf = gsd::io::read_matrix_file(write("img.pgm", p5));
  EXPECT_EQ(mf.format, gsd::io::MatrixFormat::pgm);
  EXPECT_EQ(mf.width, 3);
  EXPECT_EQ(mf.height, 2);
  EXPECT_EQ(mf.data(5, 0), 255.0);
  const auto out = (dir_ / "out.pgm").string();
  gsd::io::write_matrix_file(out, mf, mf.data);
  const auto back = gsd::io::read_matrix_file(out);
  EXPECT_EQ(back.data, mf.data);

  const auto p2 = gsd::io::read_matrix_file(write("a.pgm", "P2\n2 2\n1000\n0 500\n999 1000\n"));
  EXPECT_FALSE(p2.binary);
  EXPECT_EQ(p2.data(2, 0), 999.0);
  Eigen::MatrixXd clipped(4, 1);
  clipped << -5.0, 1.4, 1.6, 5000.0;
  std::ostringstream os;
  gsd::io::write_matrix(os, p2, clipped);
  EXPECT_EQ(os.str(), "P2\n2 2\n1000\n0 1\n2 1000\n");
}

TEST_F(TempDir, SixteenBitGraymap) {
  std::string p5 = "P5 2 1 65535\n";
  for (unsigned char c : {0x01, 0x02, 0xff, 0xfe}) p5.push_back(static_cast<char>(c));
  const auto mf = gsd::io::read_matrix_file(write("w.pgm", p5));
  EXPECT_EQ(mf.data(0, 0), 258.0);
  EXPECT_EQ(mf.data(1, 0), 65534.0);
}

TEST(ColumnRange, Parsing) {
  EXPECT_EQ(gsd::io::parse_column_range("all", 3), (std::vector<Index>{0, 1, 2}));
  EXPECT_EQ(gsd::io::parse_column_range("0,2-4", 6), (std::vector<Index>{0, 2, 3, 4}));
  EXPECT_EQ(gsd::io::parse_column_range("3,1,1", 6), (std::vector<Index>{1, 3}));
  EXPECT_THROW(gsd::io::parse_column_range("7", 6), gsd::InvalidArgument);
  EXPECT_THROW(gsd::io::parse_column_range("4-2", 6), gsd::InvalidArgument);
  EXPECT_THROW(gsd::io::parse_column_range("x", 6), gsd::InvalidArgument);
}

TEST_F(TempDir, EdgeListReading) {
  const auto g = gsd::io::read_edge_list(write("e.txt", "# path\n0 1\n1 2 2.5  # heavy\n\n"));
  EXPECT_EQ(g.num_vertices(), 3);
  EXPECT_EQ(g.num_edges(), 2);
  EXPECT_EQ(g.edges()[1].w, 2.5);
  EXPECT_THROW(gsd::io::read_edge_list(write("bad.txt", "0 1\n1\n")), gsd::InvalidArgument);
  EXPECT_THROW(gsd::io::read_edge_list(write("neg.txt", "0 -1\n")), gsd::InvalidArgument);
  EXPECT_THROW(gsd::io::read_edge_list(write("e2.txt", "0 1\n"), 1), gsd::InvalidArgument);
  EXPECT_THROW(gsd::io::read_edge_list(write("e3.txt", "0 1\n"), 3), gsd::GraphDisconnected);
}

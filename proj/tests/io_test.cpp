#include <gtest/gtest.h>

#include <random>
#include <string>

#include "pmdiff/io.hpp"
#include "test_support.hpp"

using namespace pmdiff;
using namespace std::string_literals;

TEST(ReadPgm, MinimalAscii) {
  const auto f = io::read_pgm("P2 1 1 255 0");
  EXPECT_EQ(f.extent(), (Extent{1, 1}));
  EXPECT_EQ(f[0], 0.0);
  const auto g = io::read_pgm("P2 2 1 255 0 255");
  EXPECT_EQ(g.extent(), (Extent{1, 2}));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
}

TEST(ReadPgm, CommentsAndLayout) {
  const auto f = io::read_pgm("P2\n# made by hand\n3 2 # w h\n255\n0 51 102\n153 204 255\n");
  EXPECT_EQ(f.extent(), (Extent{2, 3}));
  EXPECT_DOUBLE_EQ(f(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(f(1, 0), 0.6);
  EXPECT_EQ(f(1, 2), 1.0);
}

TEST(ReadPgm, BinaryEqualsAscii) {
  const std::string p5 = "P5\n# c\n3 2\n255\n"s + std::string("\x00\x33\x66\x99\xcc\xff", 6);
  const std::string p2 = "P2 3 2 255 0 51 102 153 204 255";
  EXPECT_EQ(io::read_pgm(p5), io::read_pgm(p2));
}

TEST(ReadPgm, Errors) {
  auto offset_of = [](const std::string& bytes) -> std::size_t {
    try {
      io::read_pgm(bytes);
    } catch (const ParseError& e) {
      return e.position();
    }
    ADD_FAILURE() << "no error for " << bytes;
    return 0;
  };
  EXPECT_EQ(offset_of("P6 1 1 255 0"), 0u);
  EXPECT_EQ(offset_of("P2 x 1 255 0"), 3u);
  EXPECT_EQ(offset_of("P2 1 1 65535 0"), 7u);
  EXPECT_THROW(io::read_pgm("P2 2 2 255 0 1 2"), ParseError);
  EXPECT_THROW(io::read_pgm("P5 2 2 255\n\x01\x02"s), ParseError);
  EXPECT_THROW(io::read_pgm("P2 1 1 255 256"), ParseError);
  EXPECT_THROW(io::read_pgm("P2 0 1 255"), ParseError);
  EXPECT_THROW(io::read_pgm(""), ParseError);
}

TEST(ReadPgm, TrailingBytesReportedNotConsumed) {
  const auto img = io::read_pgm_image("P5 2 1 255\n"s + "\x10\x20" + "extra");
  EXPECT_EQ(img.trailing_bytes, 5u);
  EXPECT_EQ(img.field.size(), 2u);
  EXPECT_EQ(io::read_pgm_image("P2 1 1 255 7 9 9\n").trailing_bytes, 2u);
  EXPECT_EQ(io::read_pgm_image("P2 1 1 255 7\n").trailing_bytes, 0u);
}

TEST(WritePgm, ClampAndRounding) {
  const auto f = ScalarField::signal({1.7, 0.5, -0.2, 0.0});
  const auto bytes = io::write_pgm(f, io::PgmFormat::Binary);
  EXPECT_EQ(bytes, "P5\n4 1\n255\n"s + std::string("\xff\x80\x00\x00", 4));
  EXPECT_EQ(io::write_pgm(f, io::PgmFormat::Ascii), "P2\n4 1\n255\n255 128 0 0\n");
  EXPECT_EQ(io::quantize(0.5), 128);
}

TEST(WritePgm, AsciiLinesStayShort) {
  const auto f = ScalarField::constant({2, 40}, 1.0);
  const auto text = io::write_pgm(f, io::PgmFormat::Ascii);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    EXPECT_LE(end - start, 70u);
    start = end + 1;
  }
  EXPECT_EQ(io::read_pgm(text), f);
}

TEST(WritePgm, QuantizedRoundTripIsExact) {
  std::mt19937 rng(5);
  std::vector<double> v(7 * 9);
  for (auto& x : v) x = static_cast<double>(rng() % 256) / 255.0;
  const ScalarField f({7, 9}, v);
  for (auto fmt : {io::PgmFormat::Ascii, io::PgmFormat::Binary}) {
    EXPECT_EQ(io::read_pgm(io::write_pgm(f, fmt)), f);
  }
}

TEST(CsvSignal, ReadExamples) {
  EXPECT_EQ(io::read_csv_signal("0\n1\n2\n"), ScalarField::signal({0, 1, 2}));
  EXPECT_EQ(io::read_csv_signal("0, 1,2"), ScalarField::signal({0, 1, 2}));
  EXPECT_EQ(io::read_csv_signal("\n-1.5e-3\r\n\n4\n"), ScalarField::signal({-1.5e-3, 4}));
}

TEST(CsvSignal, Errors) {
  EXPECT_THROW(io::read_csv_signal(""), ParseError);
  EXPECT_THROW(io::read_csv_signal("\n\n"), ParseError);
  try {
    io::read_csv_signal("1\n2\nabc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  EXPECT_THROW(io::read_csv_signal("1,,2"), ParseError);
  EXPECT_THROW(io::read_csv_signal("1\nnan\n"), ParseError);
}

TEST(CsvSignal, RoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  std::vector<double> v(1000);
  for (auto& x : v) x = d(rng);
  const auto f = ScalarField::signal(v);
  const auto back = io::read_csv_signal(io::write_csv_signal(f));
  EXPECT_LE(testutil::max_abs_diff(back.values(), f.values()), 1e-12);
}

TEST(MetricsCsv, HeaderAndRows) {
  MetricsLog log;
  log.push({1, 0.5, 0.25, 0.0, 1.0, std::nullopt});
  log.push({2, 0.5, 0.125, 0.1, 0.9, 3.5});
  const auto text = io::write_metrics_csv(log);
  EXPECT_EQ(text.substr(0, text.find('\n')), "iter,mean,variance,min,max,l1_ref");
  EXPECT_NE(text.find("\n1,0.5,0.25,0,1,\n"), std::string::npos);
  EXPECT_NE(text.find("\n2,0.5,0.125,0.10000000000000001,0.90000000000000002,3.5\n"), std::string::npos);
}

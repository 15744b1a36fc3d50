#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "satclass/io.hpp"
#include "satclass/rng.hpp"
#include "test_support.hpp"

using namespace satclass;

TEST_SUITE("rng") {
  TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("streams with different keys diverge") {
    Rng a = Rng::stream(7, 1), b = Rng::stream(7, 2);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
  }

  TEST_CASE("uniform stays in the open unit interval") {
    Rng rng(3);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double u = rng.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("normal and gamma moments") {
    Rng rng(11);
    const int n = 200000;
    double s = 0, s2 = 0, g = 0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
      g += rng.gamma(2.5);
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(g / n == doctest::Approx(2.5).epsilon(0.02));
  }

  TEST_CASE("gamma with shape below one") {
    Rng rng(5);
    double g = 0;
    for (int i = 0; i < 100000; ++i) g += rng.gamma(0.3);
    CHECK(g / 100000 == doctest::Approx(0.3).epsilon(0.03));
  }

  TEST_CASE("uniform_index covers its range evenly") {
    Rng rng(9);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) ++hits[static_cast<std::size_t>(rng.uniform_index(7))];
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
  }

  TEST_CASE("shuffle is a permutation") {
    Rng rng(1);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span<int>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  }
}

TEST_SUITE("io") {
  TEST_CASE("shortest round-trip formatting") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(2.0) == "2");
    const double x = 1.0 / 3.0;
    CHECK(io::parse_double(io::format_double(x), "x") == x);
  }

  TEST_CASE("six significant digits") {
    CHECK(io::format_significant(0.123456789) == "0.123457");
    CHECK(io::round_significant(83.1578947) == 83.1579);
  }

  TEST_CASE("strict number parsing") {
    CHECK(test::category_of([] { io::parse_double("1.5x", "cell"); }) == ErrorCategory::Parse);
    CHECK(test::category_of([] { io::parse_double("nan", "cell"); }) == ErrorCategory::Parse);
    CHECK(test::category_of([] { io::parse_integer("3.0", "cell"); }) == ErrorCategory::Parse);
    CHECK(io::parse_integer(" 12 ", "cell") == 12);
  }

  TEST_CASE("csv matrices round-trip") {
    const auto dir = test::scratch_dir("csv");
    Eigen::MatrixXd m(2, 3);
    m << 1, 2.5, -3, 1e-300, 0.1, 7;
    io::write_csv_matrix(dir / "m.csv", m);
    CHECK(io::read_csv_matrix(dir / "m.csv") == m);
  }

  TEST_CASE("csv errors name line and column") {
    const auto dir = test::scratch_dir("csv_bad");
    io::write_file_atomic(dir / "bad.csv", "1,2\n3,oops\n");
    try {
      io::read_csv_matrix(dir / "bad.csv");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::Parse);
      const std::string what = e.what();
      CHECK(what.find(":2:") != std::string::npos);
    }
    io::write_file_atomic(dir / "ragged.csv", "1,2\n3\n");
    CHECK(test::category_of([&] { io::read_csv_matrix(dir / "ragged.csv"); }) == ErrorCategory::Dimension);
    CHECK(test::category_of([&] { io::read_csv_matrix(dir / "missing.csv"); }) == ErrorCategory::Io);
  }

  TEST_CASE("pgm round-trip") {
    Eigen::MatrixXi v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    const auto text = io::pgm_text(v);
    CHECK(text.substr(0, 11) == "P5\n3 2\n255\n");
    const auto back = io::parse_pgm(text);
    CHECK(back.values == v);
    CHECK(back.maxval == 255);
  }

  TEST_CASE("ppm header and size") {
    const std::vector<io::Rgb> px(6, io::Rgb{1, 2, 3});
    const auto text = io::ppm_text(px, 2, 3);
    CHECK(text.substr(0, 11) == "P6\n3 2\n255\n");
    CHECK(text.size() == 11 + 18);
  }
}

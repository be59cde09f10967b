#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "doctest.h"
#include "formula.hpp"

namespace {

template <typename F>
cli::CliError capture(F&& f) {
  try {
    std::forward<F>(f)();
  } catch (const cli::CliError& e) {
    return e;
  }
  throw std::runtime_error("expected CliError, none thrown");
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("formula grammar accepts the documented forms") {
  cli::Formula f = cli::parse_formula("y ~ a + b", true, "--mean");
  CHECK(f.response == "y");
  REQUIRE(f.terms.size() == 2);
  CHECK(f.terms[0] == "a");
  CHECK(f.terms[1] == "b");

  f = cli::parse_formula("y ~ 1", true, "--mean");
  CHECK(f.response == "y");
  CHECK(f.terms.empty());

  f = cli::parse_formula("~ 1", false, "--disp");
  CHECK(f.response.empty());
  CHECK(f.terms.empty());

  f = cli::parse_formula("~ dose", false, "--disp");
  CHECK(f.response.empty());
  REQUIRE(f.terms.size() == 1);
  CHECK(f.terms[0] == "dose");

  f = cli::parse_formula("y~x", true, "--mean");
  CHECK(f.response == "y");
  REQUIRE(f.terms.size() == 1);
  CHECK(f.terms[0] == "x");

  f = cli::parse_formula("log.y ~ x_1 + a.b", true, "--mean");
  CHECK(f.response == "log.y");
  REQUIRE(f.terms.size() == 2);
  CHECK(f.terms[0] == "x_1");
  CHECK(f.terms[1] == "a.b");
}

TEST_CASE("formula errors carry the flag, position, and offending text") {
  cli::CliError e =
      capture([] { cli::parse_formula("y x", true, "--mean"); });
  CHECK(e.exit_code == 2);
  CHECK(e.message == "--mean: position 3: expected '~' in formula 'y x'");

  e = capture([] { cli::parse_formula("~ x", true, "--mean"); });
  CHECK(e.message ==
        "--mean: position 1: expected a response column name in formula "
        "'~ x'");

  e = capture([] { cli::parse_formula("y ~ 1 + x", true, "--mean"); });
  CHECK(e.message ==
        "--mean: position 5: 1 is only valid as the sole term; the intercept "
        "is implicit in formula 'y ~ 1 + x'");

  e = capture([] { cli::parse_formula("y ~ x + x", true, "--mean"); });
  CHECK(e.message ==
        "--mean: position 9: duplicate term 'x' in formula 'y ~ x + x'");

  e = capture([] { cli::parse_formula("y ~ x +", true, "--mean"); });
  CHECK(e.message ==
        "--mean: position 8: expected a column name or 1 in formula "
        "'y ~ x +'");

  e = capture([] { cli::parse_formula("y ~ x * z", true, "--mean"); });
  CHECK(e.message ==
        "--mean: position 7: unexpected character '*' in formula "
        "'y ~ x * z'");
}

TEST_CASE("valid dispersion parse does not throw") {
  CHECK_NOTHROW(cli::parse_formula("~ x + z", false, "--disp"));
  CHECK_THROWS_AS(cli::parse_formula("x + z", false, "--disp"),
                  cli::CliError);
}

TEST_CASE("dataset write and read round-trips doubles bit for bit") {
  cli::Dataset table;
  table.columns = {"x", "y"};
  table.data = {{1.0 / 3.0, 1e-300, -0.0},
                {1e17, 3.14159265358979312, 6.02e23}};

  std::ostringstream out;
  cli::write_dataset(out, table);
  std::istringstream in(out.str());
  cli::Dataset back = cli::read_dataset(in, "roundtrip");

  REQUIRE(back.columns == table.columns);
  REQUIRE(back.rows() == 3);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(same_bits(back.data[j][i], table.data[j][i]));
    }
  }
  CHECK(std::signbit(back.data[0][2]));
}

TEST_CASE("number formatting is shortest-exact") {
  CHECK(cli::format_number(-0.0) == "-0");
  CHECK(cli::format_number(0.5) == "0.5");
  CHECK(cli::format_number(1e17) == "1e+17");
}

TEST_CASE("dataset reader enforces the strict dialect") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return cli::read_dataset(in, "t.csv");
  };

  cli::CliError e = capture([&] { read(""); });
  CHECK(e.exit_code == 2);
  CHECK(e.message == "t.csv: empty input, a header row is required");

  e = capture([&] { read("a,a\n1,2\n"); });
  CHECK(e.message == "t.csv: duplicate header name 'a'");

  e = capture([&] { read("a,,c\n1,2,3\n"); });
  CHECK(e.message == "t.csv: header field 2 is empty");

  e = capture([&] { read("a,b\n1\n"); });
  CHECK(e.message == "t.csv line 2: 1 fields, expected 2");

  e = capture([&] { read("a\nfoo\n"); });
  CHECK(e.message ==
        "t.csv line 2: cannot parse 'foo' in column 'a' as a number");

  // Numbers must consume the whole field.
  e = capture([&] { read("a\n1.5x\n"); });
  CHECK(e.message ==
        "t.csv line 2: cannot parse '1.5x' in column 'a' as a number");

  // Interior blank lines are data errors, not separators.
  e = capture([&] { read("a\n\n1\n"); });
  CHECK(e.message ==
        "t.csv line 2: cannot parse '' in column 'a' as a number");
}

TEST_CASE("dataset reader tolerates CRLF and a final blank line") {
  std::istringstream in("a,b\r\n1,2\r\n3,4\r\n");
  cli::Dataset table = cli::read_dataset(in, "t.csv");
  REQUIRE(table.columns.size() == 2);
  CHECK(table.columns[1] == "b");
  REQUIRE(table.rows() == 2);
  CHECK(table.data[1][1] == 4.0);

  std::istringstream trailing("a\n1\n\n");
  cli::Dataset t2 = cli::read_dataset(trailing, "t.csv");
  CHECK(t2.rows() == 1);
}

TEST_CASE("column lookup failure lists what is available") {
  std::istringstream in("a,b\n1,2\n");
  cli::Dataset table = cli::read_dataset(in, "t.csv");
  CHECK(table.column("b", "--mean")[0] == 2.0);
  cli::CliError e = capture([&] { table.column("zzz", "--mean"); });
  CHECK(e.exit_code == 2);
  CHECK(e.message == "--mean: column 'zzz' not found; available: a b");
}

TEST_CASE("missing file is a clean error") {
  cli::CliError e =
      capture([] { cli::read_dataset_file("/nonexistent/x.csv"); });
  CHECK(e.exit_code == 2);
  CHECK(e.message == "cannot open '/nonexistent/x.csv' for reading");
}

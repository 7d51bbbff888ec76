#include "commute/text_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace commute;

TEST_CASE("number parsing")
{
  CHECK(text::parse_double(" 2.5 ") == 2.5);
  CHECK_FALSE(text::parse_double("abc").has_value());
  CHECK_FALSE(text::parse_double("").has_value());
  CHECK(text::parse_int("-12") == -12);
  CHECK_FALSE(text::parse_int("1.5").has_value());
  CHECK(text::parse_uint("18446744073709551615") == 18446744073709551615ULL);
  CHECK(text::parse_uint("0x10") == 16u);
  CHECK_FALSE(text::parse_uint("-1").has_value());
}

TEST_CASE("shortest formatting round-trips")
{
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    CHECK(text::parse_double(text::format_double(v)) == v);
  }
  CHECK(text::format_double(0.0) == "0");
  CHECK(text::format_fixed(2.345, 1) == "2.3");
}

TEST_CASE("csv reading and sha256")
{
  testing::TempDir dir("textio");
  text::write_file(dir / "a.csv", "x,y\r\n1,2\n\n3,4\n");
  const auto t = text::read_csv(dir / "a.csv");
  CHECK(t.header == std::vector<std::string>{"x", "y"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].fields[0] == "3");
  CHECK(t.rows[1].line == 4);
  CHECK(t.column("y") == 1);
  CHECK_THROWS(t.column("z"));

  CHECK(text::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  text::write_file(dir / "b.txt", "abc");
  CHECK(text::sha256_file(dir / "b.txt") == text::sha256_hex("abc"));
}

#include <doctest.h>

#include <sstream>

#include "msl/sample_io.hpp"

using namespace msl;

namespace {

SampleSet make_set(int n, std::size_t m, std::uint64_t seed) {
  CounterRng rng(seed);
  SampleSet s;
  s.n = n;
  s.seed = seed;
  s.chain = "glauber";
  s.provenance = "tool=msl test\nparams=none";
  std::vector<std::int8_t> row(static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < m; ++t) {
    for (auto& x : row) x = rng.bernoulli(0.5) ? 1 : -1;
    s.push_back(row);
  }
  return s;
}

}  // namespace

TEST_SUITE("sample_io") {

TEST_CASE("text round-trip keeps data and header fields") {
  const auto s = make_set(7, 50, 12);
  std::stringstream buf;
  write_samples_text(buf, s);
  const auto back = read_samples(buf);
  CHECK(back.n == 7);
  CHECK(back.size() == 50);
  CHECK(back.seed == 12);
  CHECK(back.chain == "glauber");
  CHECK(back.data == s.data);
  CHECK(back.provenance.find("tool=msl test") != std::string::npos);
}

TEST_CASE("binary round-trip for widths around byte boundaries") {
  for (int n : {1, 7, 8, 9, 16, 17, 200}) {
    const auto s = make_set(n, 33, static_cast<std::uint64_t>(n));
    std::stringstream buf;
    write_samples_binary(buf, s);
    const std::string bytes = buf.str();
    CHECK(bytes.size() == 32 + 33 * static_cast<std::size_t>((n + 7) / 8));
    CHECK(bytes.compare(0, 8, "MSLSAMP1") == 0);
    const auto back = read_samples(buf);
    CHECK(back.n == n);
    CHECK(back.data == s.data);
  }
}

TEST_CASE("binary header is little-endian") {
  SampleSet s;
  s.n = 3;
  s.push_back(std::vector<std::int8_t>{1, -1, 1});
  std::stringstream buf;
  write_samples_binary(buf, s);
  const std::string b = buf.str();
  CHECK(static_cast<unsigned char>(b[16]) == 3);
  CHECK(static_cast<unsigned char>(b[24]) == 1);
  CHECK(static_cast<unsigned char>(b[32]) == 0b101);
}

TEST_CASE("malformed text files are rejected") {
  auto parse = [](const std::string& text) {
    std::stringstream in(text);
    return read_samples_text(in);
  };
  CHECK_THROWS_AS(parse(""), InvalidArgument);
  CHECK_THROWS_AS(parse("1 -1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("n=2 M=1 seed=0 chain=x\n1 -1 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("n=2 M=2 seed=0 chain=x\n1 -1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("n=2 M=1 seed=0 chain=x\n1 0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("n=2 M=1 seed=-3 chain=x\n1 1\n"), InvalidArgument);
  const auto empty = parse("n=4 M=0 seed=1 chain=x\n");
  CHECK(empty.size() == 0);
}

TEST_CASE("truncated binary payload is rejected") {
  const auto s = make_set(9, 4, 1);
  std::stringstream buf;
  write_samples_binary(buf, s);
  std::string b = buf.str();
  b.pop_back();
  std::stringstream in(b);
  CHECK_THROWS_AS(read_samples(in), InvalidArgument);
}

}

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "pumpscan/util.hpp"

using namespace pumpscan;

TEST_CASE("fnv1a64 matches the reference vectors") {
  // Classic FNV-1a 64-bit test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("fnv1a64 chains across calls") {
  CHECK(fnv1a64("bar", fnv1a64("foo")) == fnv1a64("foobar"));
  CHECK(fnv1a64("", fnv1a64("x")) == fnv1a64("x"));
}

TEST_CASE("to_hex is fixed-width lowercase") {
  CHECK(to_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(to_hex(0) == "0000000000000000");
  CHECK(to_hex(255) == "00000000000000ff");
}

TEST_CASE("derive_seed separates streams") {
  const std::uint64_t base = 42;
  CHECK(derive_seed(base, 0) != derive_seed(base, 1));
  CHECK(derive_seed(base, 0) == derive_seed(base, 0));
  CHECK(derive_seed(base, 0) != derive_seed(base + 1, 0));
  // splitmix is deterministic across platforms.
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == splitmix64(0x9e3779b97f4a7c15ULL));
}

TEST_CASE("string helpers") {
  CHECK(trim("  a b\t\n") == "a b");
  CHECK(trim("") == "");
  CHECK(to_lower("AbC!") == "abc!");
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
}

TEST_CASE("format_double round-trips through parse_double") {
  for (double v : {0.0, 1.0, -2.5, 0.18, 2.0, 1e-12, 12345.6789, 5.568}) {
    CHECK(parse_double(format_double(v), 1, "v") == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK_THROWS_AS(parse_double("nope", 3, "v"), ParseError);
  CHECK_THROWS_AS(parse_int("1.5", 3, "v"), ParseError);
  CHECK(parse_int("-12", 1, "v") == -12);
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_double("bad", 17, "price");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.line() == 17);
    CHECK(std::string(e.what()).find("price") != std::string::npos);
  }
}

TEST_CASE("uniform helpers stay in range and reproduce") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform_double(a);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(x == uniform_double(b));
  }
  Rng c(9);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = uniform_index(c, 10);
    CHECK(k < 10);
  }
}

TEST_CASE("shuffle_inplace is a seeded permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(3), b(3);
  shuffle_inplace(v, a);
  shuffle_inplace(w, b);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (unsigned threads : {0u, 1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  // n == 0 must not call the body.
  parallel_for(0, 4, [&](std::size_t) { FAIL("body called for empty range"); });
}

TEST_CASE("parallel_for slot writes are race free") {
  std::vector<double> out(5000, -1.0);
  parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = static_cast<double>(i) * 0.5; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<double>(i) * 0.5);
}

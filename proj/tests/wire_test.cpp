#include <doctest.h>

#include <random>

#include "coalesce/wire.hpp"

using namespace coalesce::wire;

namespace {

Envelope random_envelope(std::mt19937_64& rng, std::size_t max_subs = 8,
                         std::size_t max_payload = 64) {
  Envelope env;
  env.step_index = rng();
  std::uniform_int_distribution<std::size_t> n_subs(0, max_subs);
  std::uniform_int_distribution<std::uint32_t> id_dist(0, 15);
  std::uniform_int_distribution<std::size_t> len_dist(0, max_payload);
  std::uniform_int_distribution<int> byte_dist(0, 255);
  const std::size_t n = n_subs(rng);
  for (std::size_t i = 0; i < n; ++i) {
    SubMessage sub;
    sub.client_id = id_dist(rng);
    sub.tag = id_dist(rng);
    sub.payload.resize(len_dist(rng));
    for (auto& b : sub.payload) b = static_cast<std::uint8_t>(byte_dist(rng));
    env.sub_messages.push_back(std::move(sub));
  }
  // Canonical order with duplicates dropped.
  std::sort(env.sub_messages.begin(), env.sub_messages.end(),
            [](const SubMessage& a, const SubMessage& b) {
              return std::pair{a.client_id, a.tag} < std::pair{b.client_id, b.tag};
            });
  env.sub_messages.erase(
      std::unique(env.sub_messages.begin(), env.sub_messages.end(),
                  [](const SubMessage& a, const SubMessage& b) {
                    return a.client_id == b.client_id && a.tag == b.tag;
                  }),
      env.sub_messages.end());
  return env;
}

}  // namespace

TEST_CASE("empty envelope encodes to the 17-byte header") {
  Envelope env;
  auto bytes = encode(env);
  REQUIRE(bytes.size() == 17);
  CHECK(bytes[0] == 0x43);
  CHECK(bytes[1] == 0x4F);
  CHECK(bytes[2] == 0x41);
  CHECK(bytes[3] == 0x4C);
  CHECK(bytes[4] == 0x01);
  for (std::size_t i = 5; i < 17; ++i) CHECK(bytes[i] == 0x00);
}

TEST_CASE("single sub-message layout is bit-exact") {
  Envelope env;
  env.step_index = 3;
  env.sub_messages.push_back({1, 2, {0xAB}});
  auto bytes = encode(env);
  const std::vector<std::uint8_t> expected = {
      0x43, 0x4F, 0x41, 0x4C, 0x01,
      0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // step
      0x01, 0x00, 0x00, 0x00,                          // count
      0x01, 0x00, 0x00, 0x00,                          // client
      0x02, 0x00, 0x00, 0x00,                          // tag
      0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // length
      0xAB};
  CHECK(bytes == expected);
  CHECK(bytes.size() == 34);
  CHECK(decode(bytes) == env);
}

TEST_CASE("size formula: 17 + sum(16 + len)") {
  Envelope env;
  env.sub_messages.push_back({0, 0, std::vector<std::uint8_t>(5)});
  env.sub_messages.push_back({0, 1, std::vector<std::uint8_t>(7)});
  CHECK(encoded_size(env) == 61);
  CHECK(encode(env).size() == 61);
}

TEST_CASE("encode refuses unsorted or duplicate sub-messages") {
  Envelope env;
  env.sub_messages.push_back({2, 0, {}});
  env.sub_messages.push_back({1, 0, {}});
  CHECK_THROWS_AS(encode(env), EncodeError);
  env.sub_messages = {{1, 5, {}}, {1, 5, {}}};
  CHECK_THROWS_AS(encode(env), EncodeError);
}

TEST_CASE("malformation classes yield distinct faults") {
  Envelope env;
  env.sub_messages.push_back({1, 2, {0xAB}});
  auto good = encode(env);

  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 0x44;
    try {
      decode(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.fault() == DecodeFault::BadMagic);
    }
  }
  SUBCASE("bad version") {
    auto bad = good;
    bad[4] = 0x02;
    try {
      decode(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.fault() == DecodeFault::BadVersion);
    }
  }
  SUBCASE("short read: declared length exceeds remaining bytes") {
    auto bad = good;
    bad[25] = 0x10;  // payload length low byte
    try {
      decode(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.fault() == DecodeFault::ShortRead);
    }
  }
  SUBCASE("truncated buffer") {
    auto bad = good;
    bad.resize(12);
    try {
      decode(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.fault() == DecodeFault::ShortRead);
    }
  }
  SUBCASE("trailing garbage") {
    auto bad = good;
    bad.push_back(0x00);
    try {
      decode(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.fault() == DecodeFault::TrailingGarbage);
    }
  }
}

TEST_CASE("round-trip identity and size formula hold for random envelopes") {
  std::mt19937_64 rng(20240901);
  for (int i = 0; i < 500; ++i) {
    Envelope env = random_envelope(rng);
    auto bytes = encode(env);
    std::size_t expected = 17;
    for (const auto& sub : env.sub_messages) expected += 16 + sub.payload.size();
    CHECK(bytes.size() == expected);
    CHECK(decode(bytes) == env);
  }
}

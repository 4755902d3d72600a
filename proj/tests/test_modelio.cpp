#include <doctest.h>

#include <filesystem>
#include <random>

#include "deepcam/error.hpp"
#include "deepcam/modelio.hpp"
#include "support.hpp"

using namespace deepcam;
using namespace deepcam::testing;

#ifndef DEEPCAM_FIXTURES
#define DEEPCAM_FIXTURES "tests/fixtures"
#endif

namespace {

const std::filesystem::path kFixtures{DEEPCAM_FIXTURES};

FormatError::Code model_error(std::span<const std::uint8_t> bytes) {
  try {
    parse_model(bytes);
  } catch (const FormatError& e) {
    return e.code();
  }
  FAIL("no error");
  return {};
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST_CASE("random models and datasets round-trip byte for byte") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const NetworkModel m = random_model(rng);
    const auto bytes = serialize_model(m);
    const NetworkModel back = parse_model(bytes);
    CHECK(back == m);
    CHECK(serialize_model(back) == bytes);

    const Dataset d = random_dataset(rng, rng() % 20);
    const auto dbytes = serialize_dataset(d);
    CHECK(parse_dataset(dbytes) == d);
    CHECK(serialize_dataset(parse_dataset(dbytes)) == dbytes);
  }
}

TEST_CASE("little-endian header layout") {
  NetworkModel m;
  m.input = {1, 2, 3};
  m.layers.emplace_back(Flatten{});
  const auto b = serialize_model(m);
  const std::vector<std::uint8_t> want{'D', 'C', 'A', 'M', 1, 0, 1, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 7, 0};
  CHECK(b == want);
}

TEST_CASE("structured model errors") {
  CHECK(model_error({}) == FormatError::Code::kBadMagic);
  std::mt19937_64 rng(2);
  NetworkModel m;
  m.input = {1, 4, 4};
  m.layers.emplace_back(make_linear(rng, 16, 3, true, false));
  const auto good = serialize_model(m);

  auto bad = good;
  bad[4] = 2;
  CHECK(model_error(bad) == FormatError::Code::kVersionMismatch);
  bad = good;
  bad[20] = 99;
  CHECK(model_error(bad) == FormatError::Code::kUnknownKind);
  bad = good;
  bad[21] = 0x80;
  CHECK(model_error(bad) == FormatError::Code::kBadFlags);
  bad = good;
  put_u32(bad, 22, 15);  // in_features no longer matches the input
  CHECK(model_error(bad) == FormatError::Code::kShapeMismatch);
  bad = good;
  bad.push_back(0);
  CHECK(model_error(bad) == FormatError::Code::kTrailingData);

  const std::vector<std::uint8_t> cut(good.begin(), good.begin() + 40);
  try {
    parse_model(cut);
    FAIL("expected truncation");
  } catch (const FormatError& e) {
    CHECK(e.code() == FormatError::Code::kTruncated);
    CHECK(e.offset() <= 40);
    CHECK(std::string(e.what()).find("at byte") != std::string::npos);
  }

  NetworkModel relu_flag;
  relu_flag.input = {1, 1, 1};
  relu_flag.layers.emplace_back(Relu{});
  auto rb = serialize_model(relu_flag);
  rb[21] = 1;
  CHECK(model_error(rb) == FormatError::Code::kBadFlags);
}

TEST_CASE("dataset limits and labels") {
  std::mt19937_64 rng(3);
  Dataset d = random_dataset(rng, 5);
  const auto bytes = serialize_dataset(d);
  CHECK(parse_dataset(bytes, 0).size() == 0);
  CHECK(parse_dataset(bytes, 2).size() == 2);
  CHECK(parse_dataset(bytes, 2).sample(1).values == d.sample(1).values);

  d.labels[3] = d.num_classes;
  try {
    parse_dataset(serialize_dataset(d));
    FAIL("expected label error");
  } catch (const FormatError& e) {
    CHECK(e.code() == FormatError::Code::kBadLabel);
  }
  CHECK_THROWS_AS(parse_dataset(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)), FormatError);
}

TEST_CASE("mutated files never escape as anything but library errors") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const bool model = t % 2 == 0;
    auto bytes = model ? serialize_model(random_model(rng)) : serialize_dataset(random_dataset(rng, 1 + rng() % 4));
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits && !bytes.empty(); ++e) {
      switch (rng() % 3) {
        case 0: bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
        case 1: bytes.resize(rng() % bytes.size()); break;
        default: bytes.insert(bytes.begin() + static_cast<long>(rng() % bytes.size()), static_cast<std::uint8_t>(rng()));
      }
    }
    try {
      if (model) parse_model(bytes);
      else parse_dataset(bytes);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("fixtures load") {
  const NetworkModel m = load_model(kFixtures / "lenet5.dcam");
  CHECK(m.layers.size() == 7);
  CHECK(m.dot_layers() == std::vector<std::size_t>{0, 2, 4, 5, 6});
  CHECK(std::holds_alternative<MaxPool>(m.layers[1]));
  CHECK(m.infer_dims().back() == Dims{10, 1, 1});
  const Dataset d = load_dataset(kFixtures / "mnist1k.dcds");
  CHECK(d.size() == 1000);
  CHECK(d.dims == Dims{1, 28, 28});
  CHECK(d.num_classes == 10);
  CHECK_THROWS_AS(load_model(kFixtures / "does-not-exist.dcam"), IoError);
}

TEST_CASE("key-value config") {
  const auto cfg = KeyValueConfig::parse("# comment\n a = 1.5 \n\nb=x y # trailing\n");
  CHECK(cfg.number("a") == 1.5);
  CHECK(cfg.at("b") == "x y");
  CHECK_THROWS_AS(cfg.at("c"), ConfigError);
  CHECK_THROWS_AS(cfg.number("b"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
  CHECK(KeyValueConfig::parse(cfg.to_string()).entries() == cfg.entries());
}

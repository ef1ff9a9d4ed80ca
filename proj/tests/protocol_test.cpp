#include <array>
#include <bit>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "taxelmap/protocol.hpp"

using namespace taxelmap;
using namespace taxelmap::protocol;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(rng() % (max_len + 1), ' ');
  for (auto& c : s) c = static_cast<char>(0x20 + rng() % 95);
  return s;
}

float unit_float(std::mt19937_64& rng) {
  // Endpoints included.
  switch (rng() % 8) {
    case 0: return 0.0F;
    case 1: return 1.0F;
    default: return std::uniform_real_distribution<float>(0.0F, 1.0F)(rng);
  }
}

Message random_message(std::mt19937_64& rng, bool codec_zero) {
  switch (rng() % 8) {
    case 0: return Hello{static_cast<std::uint8_t>(rng())};
    case 1: return ListTextures{};
    case 2: {
      TextureList l;
      const auto n = rng() % 5;
      for (std::size_t i = 0; i < n; ++i) {
        l.entries.push_back({static_cast<std::uint16_t>(rng()), random_text(rng, 40), static_cast<std::uint16_t>(rng()),
                             static_cast<std::uint16_t>(rng())});
      }
      return l;
    }
    case 3: return Select{static_cast<std::uint16_t>(rng())};
    case 4:
      return Contact{std::uniform_real_distribution<double>(-1e6, 1e6)(rng), unit_float(rng), unit_float(rng),
                     std::uniform_real_distribution<float>(0.0F, 20.0F)(rng)};
    case 5: {
      VibFrame f;
      f.codec = codec_zero ? kCodecUniform8 : static_cast<std::uint8_t>(rng());
      f.seq = static_cast<std::uint32_t>(rng());
      f.t0 = std::uniform_real_distribution<double>(0, 1e5)(rng);
      f.dt = std::uniform_real_distribution<float>(1e-5F, 1.0F)(rng);
      f.qmin = std::uniform_real_distribution<float>(-1, 0)(rng);
      f.qmax = std::uniform_real_distribution<float>(0, 1)(rng);
      f.q.resize(1 + rng() % 300);
      for (auto& b : f.q) b = static_cast<std::uint8_t>(rng());
      return f;
    }
    case 6: return ErrorMessage{static_cast<std::uint8_t>(rng()), random_text(rng, 80)};
    default: return Bye{};
  }
}

void expect_frame_error(ErrorCode code, std::size_t skip, std::span<const std::uint8_t> bytes) {
  try {
    read_message(bytes);
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const FrameError& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    EXPECT_EQ(e.skip_bytes(), skip);
  }
}

double codec_bound(const VibFrame& f) {
  return (static_cast<double>(f.qmax) - f.qmin) / 510.0 * (1.0 + 1e-12);
}

}  // namespace

TEST(Framing, HelloBytes) {
  const auto bytes = write_message(Hello{1});
  EXPECT_EQ(bytes, (std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0x01, 0x01, 0x01}));
  const auto r = read_message(bytes);
  EXPECT_EQ(r.consumed, 6u);
  EXPECT_EQ(r.message, Message(Hello{1}));
}

TEST(Framing, FixedLayouts) {
  EXPECT_EQ(write_message(Bye{}), (std::vector<std::uint8_t>{0, 0, 0, 0, 8}));
  EXPECT_EQ(write_message(ListTextures{}), (std::vector<std::uint8_t>{0, 0, 0, 0, 2}));
  EXPECT_EQ(write_message(Select{0x0102}), (std::vector<std::uint8_t>{0, 0, 0, 2, 4, 1, 2}));
  const auto contact = write_message(Contact{1.0, 0.5F, 0.25F, 2.0F});
  ASSERT_EQ(contact.size(), 5u + 20u);
  EXPECT_EQ(contact[4], 5);
  EXPECT_EQ(contact[5], 0x3F);  // 1.0 as big-endian double
  EXPECT_EQ(contact[6], 0xF0);
  const auto err = write_message(ErrorMessage{2, "no"});
  EXPECT_EQ(err, (std::vector<std::uint8_t>{0, 0, 0, 5, 7, 2, 0, 2, 'n', 'o'}));
  VibFrame f;
  f.q = {1, 2, 3};
  EXPECT_EQ(write_message(f).size(), 5u + 1 + 4 + 8 + 4 + 2 + 4 + 4 + 3);
}

TEST(Framing, RandomRoundTripsAllVariants) {
  std::mt19937_64 rng(21);
  std::array<int, 8> seen{};
  for (int i = 0; i < 5000; ++i) {
    const auto msg = random_message(rng, false);
    ++seen[msg.index()];
    const auto bytes = write_message(msg);
    const auto r = read_message(bytes);
    ASSERT_EQ(r.consumed, bytes.size());
    ASSERT_EQ(r.message, msg);
  }
  for (int n : seen) EXPECT_GT(n, 0);
}

TEST(Framing, ConcatenatedStreamDecodesInOrder) {
  std::mt19937_64 rng(22);
  std::vector<Message> sent;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 200; ++i) {
    sent.push_back(random_message(rng, false));
    const auto b = write_message(sent.back());
    stream.insert(stream.end(), b.begin(), b.end());
  }
  std::span<const std::uint8_t> rest(stream);
  for (const auto& m : sent) {
    const auto r = read_message(rest);
    EXPECT_EQ(r.message, m);
    rest = rest.subspan(r.consumed);
  }
  EXPECT_TRUE(rest.empty());
}

TEST(Framing, TruncationAtEveryLength) {
  const auto bytes = write_message(TextureList{{{1, "checker", 400, 400}, {2, "sand", 300, 200}}});
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    expect_frame_error(ErrorCode::TruncatedFrame, 0, std::span(bytes).first(n));
  }
  EXPECT_EQ(peek_frame_size(std::span(bytes).first(4)), std::nullopt);
  EXPECT_EQ(peek_frame_size(bytes), bytes.size());
}

TEST(Framing, UnknownTagSkipsWholeFrame) {
  std::vector<std::uint8_t> bytes{0, 0, 0, 3, 99, 1, 2, 3};
  const auto next = write_message(Bye{});
  bytes.insert(bytes.end(), next.begin(), next.end());
  expect_frame_error(ErrorCode::UnknownTag, 8, bytes);
  const auto r = read_message(std::span(bytes).subspan(8));
  EXPECT_EQ(r.message, Message(Bye{}));
  expect_frame_error(ErrorCode::UnknownTag, 5, std::vector<std::uint8_t>{0, 0, 0, 0, 0});
}

TEST(Framing, LengthMismatch) {
  // HELLO with an extra payload byte, and SELECT missing one.
  expect_frame_error(ErrorCode::LengthMismatch, 7, std::vector<std::uint8_t>{0, 0, 0, 2, 1, 1, 0});
  expect_frame_error(ErrorCode::LengthMismatch, 6, std::vector<std::uint8_t>{0, 0, 0, 1, 4, 7});
  // TEXTURE_LIST whose text length overruns the payload.
  expect_frame_error(ErrorCode::LengthMismatch, 10, std::vector<std::uint8_t>{0, 0, 0, 5, 3, 0, 1, 0, 9, 0x00});
  // Declared length beyond the limit.
  expect_frame_error(ErrorCode::LengthMismatch, 0, std::vector<std::uint8_t>{0xFF, 0, 0, 0, 1});
}

TEST(Framing, InvalidFields) {
  auto bytes = write_message(Contact{0.5, 0.5F, 0.5F, 1.0F});
  // Overwrite u with 1.5f.
  const std::uint32_t bad = std::bit_cast<std::uint32_t>(1.5F);
  for (int i = 0; i < 4; ++i) bytes[13 + i] = static_cast<std::uint8_t>(bad >> (24 - 8 * i));
  expect_frame_error(ErrorCode::InvalidField, bytes.size(), bytes);

  expect_error(ErrorCode::InvalidField, [] { write_message(Contact{0, 1.5F, 0, 0}); });
  expect_error(ErrorCode::InvalidField, [] { write_message(Contact{0, 0, -0.1F, 0}); });
  expect_error(ErrorCode::InvalidField, [] { write_message(Contact{0, 0, 0, -1.0F}); });
  expect_error(ErrorCode::InvalidField, [] { write_message(Contact{std::nan(""), 0, 0, 0}); });
  expect_error(ErrorCode::InvalidField, [] { write_message(VibFrame{}); });
  expect_error(ErrorCode::InvalidField, [] { write_message(ErrorMessage{1, std::string(70000, 'x')}); });

  // VIB_FRAME announcing zero samples.
  std::vector<std::uint8_t> empty{0, 0, 0, 27, 6};
  empty.resize(5 + 27, 0);
  expect_frame_error(ErrorCode::InvalidField, 32, empty);
}

TEST(JsonMirror, RandomRoundTripsThroughText) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 3000; ++i) {
    const auto msg = random_message(rng, true);
    const auto j = to_json_message(msg);
    EXPECT_EQ(j.at("type").get<std::string>(), type_name(tag_of(msg)));
    const auto back = from_json_message(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back, msg) << j.dump();
  }
}

TEST(JsonMirror, VibFrameShape) {
  VibFrame f;
  f.seq = 7;
  f.t0 = 0.064;
  f.dt = 0.001F;
  f.qmin = 0.0F;
  f.qmax = 0.5F;
  f.q = {0, 128, 255};
  const auto j = to_json_message(f);
  EXPECT_EQ(j.at("type"), "VIB_FRAME");
  EXPECT_EQ(j.at("seq"), 7);
  EXPECT_EQ(j.at("n"), 3);
  EXPECT_EQ(j.at("q"), "AID/");
  EXPECT_EQ(to_json_message(Bye{}).dump(), R"({"type":"BYE"})");
  EXPECT_EQ(to_json_message(Hello{1}).dump(), R"({"type":"HELLO","version":1})");
}

TEST(JsonMirror, Errors) {
  expect_error(ErrorCode::ParseError, [] { from_json_message(nlohmann::json::object()); });
  expect_error(ErrorCode::ParseError, [] { from_json_message(nlohmann::json{{"type", "SELECT"}}); });
  expect_error(ErrorCode::UnknownTag, [] { from_json_message(nlohmann::json{{"type", "PING"}}); });
  expect_error(ErrorCode::InvalidField, [] {
    from_json_message(nlohmann::json{{"type", "CONTACT"}, {"t", 0}, {"u", 2}, {"v", 0}, {"depth_mm", 0}});
  });
  expect_error(ErrorCode::InvalidField, [] {
    from_json_message(nlohmann::json{
        {"type", "VIB_FRAME"}, {"seq", 0}, {"t0", 0}, {"dt", 0.001}, {"n", 2}, {"qmin", 0}, {"qmax", 1}, {"q", "AA=="}});
  });
  expect_error(ErrorCode::InvalidField, [] { base64_decode("AAA"); });
  expect_error(ErrorCode::InvalidField, [] { base64_decode("A*A="); });
}

TEST(Base64, KnownVectorsAndRoundTrip) {
  auto enc = [](const std::string& s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  std::mt19937_64 rng(24);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> b(rng() % 100);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
}

TEST(Codec, ConstantAndExtremes) {
  const std::vector<double> c(10, 0.375);
  const auto f = encode_frame(c, 3, 1.5, 0.001F);
  EXPECT_EQ(f.seq, 3u);
  EXPECT_EQ(f.t0, 1.5);
  EXPECT_EQ(f.dt, 0.001F);
  for (auto q : f.q) EXPECT_EQ(q, 0);
  for (double v : decode_frame(f)) EXPECT_LE(std::abs(v - 0.375), codec_bound(f) + 1e-7);

  const auto exact = encode_frame(std::vector<double>{0.5, 0.5}, 0, 0, 0.001F);
  for (double v : decode_frame(exact)) EXPECT_EQ(v, 0.5);

  const auto two = encode_frame(std::vector<double>{0.0, 1.0}, 0, 0, 0.001F);
  EXPECT_EQ(two.q, (std::vector<std::uint8_t>{0, 255}));
  EXPECT_EQ(two.qmin, 0.0F);
  EXPECT_EQ(two.qmax, 1.0F);
  EXPECT_EQ(decode_frame(two), (std::vector<double>{0.0, 1.0}));
}

TEST(Codec, RandomFramesWithinBoundAndMonotone) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 1024; ++trial) {
    std::vector<double> s(1 + rng() % 512);
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-6, 3)(rng));
    const double shift = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (auto& v : s) v = shift + scale * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto f = encode_frame(s, 0, 0, 0.001F);
    EXPECT_LE(static_cast<double>(f.qmin), *std::min_element(s.begin(), s.end()));
    EXPECT_GE(static_cast<double>(f.qmax), *std::max_element(s.begin(), s.end()));
    const auto d = decode_frame(f);
    for (std::size_t i = 0; i < s.size(); ++i) {
      ASSERT_LE(std::abs(d[i] - s[i]), codec_bound(f)) << trial << "/" << i;
      for (std::size_t k = i + 1; k < std::min(s.size(), i + 8); ++k) {
        if (s[i] <= s[k]) {
          ASSERT_LE(f.q[i], f.q[k]);
        }
        if (s[i] >= s[k]) {
          ASSERT_GE(f.q[i], f.q[k]);
        }
      }
    }
  }
}

TEST(Codec, Errors) {
  expect_error(ErrorCode::EmptyFrame, [] { encode_frame({}, 0, 0, 0.001F); });
  expect_error(ErrorCode::EmptyFrame, [] { encode_frame(std::vector<double>(kMaxFrameSamples + 1, 0.0), 0, 0, 0.001F); });
  expect_error(ErrorCode::NonFiniteSample,
               [] { encode_frame(std::vector<double>{0.1, std::numeric_limits<double>::infinity()}, 0, 0, 0.001F); });
  expect_error(ErrorCode::NonFiniteSample, [] { encode_frame(std::vector<double>{std::nan("")}, 0, 0, 0.001F); });

  VibFrame f = encode_frame(std::vector<double>{0.1, 0.2}, 0, 0, 0.001F);
  auto bad = f;
  bad.codec = 9;
  expect_error(ErrorCode::MalformedFrame, [&] { decode_frame(bad); });
  bad = f;
  bad.qmin = 1.0F;
  expect_error(ErrorCode::MalformedFrame, [&] { decode_frame(bad); });
  bad = f;
  bad.q.clear();
  expect_error(ErrorCode::MalformedFrame, [&] { decode_frame(bad); });
  bad = f;
  bad.qmax = std::numeric_limits<float>::infinity();
  expect_error(ErrorCode::MalformedFrame, [&] { decode_frame(bad); });
}

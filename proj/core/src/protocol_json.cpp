#include <boost/beast/core/detail/base64.hpp>

#include "taxelmap/protocol.hpp"

namespace taxelmap::protocol {

namespace b64 = boost::beast::detail::base64;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::InvalidField, "base64 length not a multiple of 4");
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body) throw Error(ErrorCode::InvalidField, "invalid base64 text");
  out.resize(written);
  return out;
}

nlohmann::json to_json_message(const Message& msg) {
  nlohmann::json j;
  j["type"] = type_name(tag_of(msg));
  std::visit(
      [&j](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Hello>) {
          j["version"] = m.version;
        } else if constexpr (std::is_same_v<M, TextureList>) {
          j["entries"] = nlohmann::json::array();
          for (const auto& e : m.entries) {
            j["entries"].push_back({{"id", e.id}, {"name", e.name}, {"width_px", e.width_px}, {"height_px", e.height_px}});
          }
        } else if constexpr (std::is_same_v<M, Select>) {
          j["id"] = m.id;
        } else if constexpr (std::is_same_v<M, Contact>) {
          j["t"] = m.t;
          j["u"] = m.u;
          j["v"] = m.v;
          j["depth_mm"] = m.depth_mm;
        } else if constexpr (std::is_same_v<M, VibFrame>) {
          j["seq"] = m.seq;
          j["t0"] = m.t0;
          j["dt"] = m.dt;
          j["n"] = m.q.size();
          j["qmin"] = m.qmin;
          j["qmax"] = m.qmax;
          j["q"] = base64_encode(m.q);
        } else if constexpr (std::is_same_v<M, ErrorMessage>) {
          j["code"] = m.code;
          j["text"] = m.text;
        }
      },
      msg);
  return j;
}

Message from_json_message(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "HELLO") return Hello{j.at("version").get<std::uint8_t>()};
    if (type == "LIST_TEXTURES") return ListTextures{};
    if (type == "TEXTURE_LIST") {
      TextureList list;
      for (const auto& e : j.at("entries")) {
        list.entries.push_back({e.at("id").get<std::uint16_t>(), e.at("name").get<std::string>(),
                                e.at("width_px").get<std::uint16_t>(), e.at("height_px").get<std::uint16_t>()});
      }
      return list;
    }
    if (type == "SELECT") return Select{j.at("id").get<std::uint16_t>()};
    if (type == "CONTACT") {
      Contact c{j.at("t").get<double>(), j.at("u").get<float>(), j.at("v").get<float>(),
                j.at("depth_mm").get<float>()};
      // Reuse the wire validation rules.
      (void)write_message(c);
      return c;
    }
    if (type == "VIB_FRAME") {
      VibFrame f;
      f.codec = j.value("codec", kCodecUniform8);
      f.seq = j.at("seq").get<std::uint32_t>();
      f.t0 = j.at("t0").get<double>();
      f.dt = j.at("dt").get<float>();
      f.qmin = j.at("qmin").get<float>();
      f.qmax = j.at("qmax").get<float>();
      f.q = base64_decode(j.at("q").get<std::string>());
      if (f.q.size() != j.at("n").get<std::size_t>()) throw Error(ErrorCode::InvalidField, "n does not match q");
      return f;
    }
    if (type == "ERROR") return ErrorMessage{j.at("code").get<std::uint8_t>(), j.at("text").get<std::string>()};
    if (type == "BYE") return Bye{};
    throw Error(ErrorCode::UnknownTag, "unknown message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed JSON message: ") + e.what());
  }
}

}  // namespace taxelmap::protocol

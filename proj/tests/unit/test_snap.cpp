// Copyright 2026 The sigma-bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/socket.h>

#include <thread>

#include "sigma/snap/channel.hpp"
#include "sigma/snap/frame.hpp"
#include "sigma/snap/messages.hpp"
#include "test_support.hpp"

using namespace sigma;
using namespace sigma::snap;

namespace {

// Hand-built frame: 4-byte big-endian length + body.
std::vector<std::uint8_t> manual_frame(const std::string& body) {
  const auto n = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Json random_value(std::mt19937_64& g, int depth, std::size_t& budget);

std::string random_string(std::mt19937_64& g, std::size_t max_len) {
  static const std::string alphabet = "abcXYZ 019\"\\/\n\t{}[]:,\xc3\xa9\xe2\x82\xac";
  std::string s;
  const std::size_t n = g() % (max_len + 1);
  while (s.size() < n) {
    const auto c = alphabet[g() % alphabet.size()];
    // Multi-byte sequences are appended whole to keep the text valid UTF-8.
    if (static_cast<unsigned char>(c) == 0xc3) {
      s += "\xc3\xa9";
    } else if (static_cast<unsigned char>(c) == 0xe2) {
      s += "\xe2\x82\xac";
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      s.push_back(c);
    }
  }
  return s;
}

Json random_object(std::mt19937_64& g, int depth, std::size_t& budget) {
  Json obj = Json::object();
  const int n = static_cast<int>(g() % 6);
  for (int i = 0; i < n && budget > 0; ++i) {
    obj[random_string(g, 6) + std::to_string(i)] = random_value(g, depth + 1, budget);
  }
  return obj;
}

Json random_value(std::mt19937_64& g, int depth, std::size_t& budget) {
  budget = budget > 16 ? budget - 16 : 0;
  const int pick = static_cast<int>(g() % (depth > 4 ? 6 : 8));
  switch (pick) {
    case 0:
      return nullptr;
    case 1:
      return static_cast<bool>(g() % 2);
    case 2:
      return static_cast<std::int64_t>(g()) >> (g() % 63);
    case 3:
      return static_cast<std::uint64_t>(g());
    case 4: {
      const double d = std::ldexp(static_cast<double>(g() % 1000000) - 500000.0, static_cast<int>(g() % 80) - 40);
      return d;
    }
    case 5: {
      auto s = random_string(g, 40);
      budget = budget > s.size() ? budget - s.size() : 0;
      return s;
    }
    case 6: {
      Json arr = Json::array();
      const int n = static_cast<int>(g() % 6);
      for (int i = 0; i < n && budget > 0; ++i) arr.push_back(random_value(g, depth + 1, budget));
      return arr;
    }
    default:
      return random_object(g, depth, budget);
  }
}

std::pair<net::Socket, net::Socket> socket_pair() {
  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  return {net::Socket(fds[0]), net::Socket(fds[1])};
}

}  // namespace

TEST_CASE("frame golden bytes") {
  Request r;
  r.op = Op::Read;
  r.rid = 1;
  r.node = core::NodeId(0, 2255);
  const std::string body = R"({"op":"read","rid":1,"ns":0,"id":2255})";
  CHECK(body.size() == 38);
  const auto frame = encode_frame(encode_request(r));
  CHECK(frame == manual_frame(body));
  CHECK(testing::hex({frame.begin(), frame.begin() + 4}) == "00000026");

  CHECK(encode_frame(Json::object()) == std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0x02, 0x7B, 0x7D});
}

TEST_CASE("frame size limit") {
  Json big;
  big["blob"] = std::string(2 * 1024 * 1024, 'x');
  CHECK_THROWS_AS(encode_frame(big), ProtocolError);
  CHECK_THROWS_AS(encode_frame(Json::array()), ProtocolError);

  // Exactly at the limit still encodes.
  Json edge;
  edge["b"] = std::string(kMaxFrameBody - 8, 'y');  // {"b":"..."} adds 8 bytes
  CHECK(encode_frame(edge).size() == kMaxFrameBody + 4);

  std::vector<std::uint8_t> header{0x00, 0x10, 0x00, 0x01};  // 1 MiB + 1
  CHECK(decode_frame(header).status == DecodeResult::Status::Oversize);
}

TEST_CASE("decode handles partial, malformed and non-object frames") {
  const auto frame = encode_frame(Json{{"a", 1}});
  for (std::size_t cut = 0; cut < frame.size(); ++cut) {
    CAPTURE(cut);
    CHECK(decode_frame(std::span(frame).first(cut)).status == DecodeResult::Status::NeedMore);
  }
  const auto whole = decode_frame(frame);
  CHECK(whole.status == DecodeResult::Status::Complete);
  CHECK(whole.consumed == frame.size());

  for (const std::string bad : {"{\"a\":", "[1,2]", "\"text\"", "{\"a\":1}}", "\xff\xfe"}) {
    CAPTURE(bad);
    const auto f = manual_frame(bad);
    const auto r = decode_frame(f);
    CHECK(r.status == DecodeResult::Status::Malformed);
    CHECK(r.consumed == f.size());
  }
}

TEST_CASE("frame round-trip property over random objects") {
  auto g = testing::rng(21);
  for (int i = 0; i < 10000; ++i) {
    std::size_t budget = 64 * 1024;
    const Json x = random_object(g, 0, budget);
    const auto frame = encode_frame(x);
    REQUIRE(frame.size() <= 64 * 1024 + 4096);
    const auto r = decode_frame(frame);
    REQUIRE(r.status == DecodeResult::Status::Complete);
    CHECK(r.body == x);
    CHECK(r.consumed == frame.size());
  }
}

TEST_CASE("streaming decode is split-invariant") {
  auto g = testing::rng(22);
  std::vector<Json> messages;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 6; ++i) {
    std::size_t budget = 300;
    messages.push_back(random_object(g, 0, budget));
    const auto f = encode_frame(messages.back());
    stream.insert(stream.end(), f.begin(), f.end());
  }
  const auto drain = [](FrameReader& reader, std::vector<Json>& out) {
    for (;;) {
      auto r = reader.next();
      if (r.status != DecodeResult::Status::Complete) break;
      out.push_back(std::move(r.body));
    }
  };
  for (std::size_t cut = 0; cut <= stream.size(); ++cut) {
    FrameReader reader;
    std::vector<Json> out;
    reader.append(std::span(stream).first(cut));
    drain(reader, out);
    reader.append(std::span(stream).subspan(cut));
    drain(reader, out);
    CHECK(out == messages);
    CHECK(reader.buffered() == 0);
  }
  // Byte-at-a-time feeding.
  FrameReader reader;
  std::vector<Json> out;
  for (const auto b : stream) {
    reader.append(std::span(&b, 1));
    drain(reader, out);
  }
  CHECK(out == messages);
}

TEST_CASE("request encoding and parsing") {
  Request hello{Op::Hello, 3, {}, "operator", "secret", 0};
  CHECK(encode_request(hello).dump() == R"({"op":"hello","rid":3,"user":"operator","pass":"secret"})");
  Request sub{Op::Subscribe, 4, {}, "", "", 250};
  CHECK(encode_request(sub).dump() == R"({"op":"subscribe","rid":4,"interval_ms":250})");
  Request browse{Op::Browse, 5, core::NodeId(2, "folder:Objects/A"), "", "", 0};
  CHECK(encode_request(browse).dump() == R"({"op":"browse","rid":5,"ns":2,"id":"folder:Objects/A"})");

  for (const auto& r : {hello, sub, browse}) {
    const auto back = parse_request(encode_request(r));
    CHECK(back.op == r.op);
    CHECK(back.rid == r.rid);
    CHECK(back.node == r.node);
    CHECK(back.user == r.user);
    CHECK(back.interval_ms == r.interval_ms);
  }

  try {
    parse_request(Json::parse(R"({"op":"write","rid":9,"ns":1,"id":1})"));
    FAIL("unknown op accepted");
  } catch (const MalformedRequest& e) {
    CHECK(e.rid() == 9u);
  }
  CHECK_THROWS_AS(parse_request(Json::parse(R"({"op":"read"})")), MalformedRequest);
  CHECK_THROWS_AS(parse_request(Json::parse(R"({"op":"read","rid":1,"ns":1})")), MalformedRequest);
  CHECK_THROWS_AS(parse_request(Json::parse(R"({"op":"read","rid":1,"ns":70000,"id":1})")), MalformedRequest);
}

TEST_CASE("responses carry typed values") {
  CHECK(read_response(7, {23.5, 42}).dump() == R"({"rid":7,"ok":true,"type":"Double","value":23.5,"ts":42})");
  CHECK(error_response(8, ErrorCode::BadAuth).dump() == R"({"rid":8,"ok":false,"err":"BAD_AUTH"})");
  CHECK(namespace_array_response(1, {"urn:a"}).dump() ==
        R"({"rid":1,"ok":true,"type":"StringArray","value":["urn:a"]})");

  const core::DataVariant samples[] = {true, std::int16_t{-7}, std::int32_t{1200}, std::int64_t{1} << 40, 1.5f,
                                       23.5, std::string("X20CP1686X"), core::DateTime{1700000000000000000}};
  for (const auto& v : samples) {
    Json j;
    put_variant(j, v);
    CHECK(get_variant(j) == v);
  }
  CHECK_THROWS_AS(get_variant(Json::parse(R"({"type":"Int16","value":40000})")), ProtocolError);
  CHECK_THROWS_AS(get_variant(Json::parse(R"({"type":"Boolean","value":1})")), ProtocolError);
  CHECK_THROWS_AS(get_variant(Json::parse(R"({"type":"Blob","value":1})")), ProtocolError);

  for (auto code : {ErrorCode::BadNodeUnknown, ErrorCode::BadNotReady, ErrorCode::BadAuth, ErrorCode::BadMalformed}) {
    CHECK(parse_error_name(error_name(code)) == code);
    try {
      expect_ok(error_response(1, code));
      FAIL("expected status error");
    } catch (const StatusError& e) {
      CHECK(e.code() == code);
    }
  }
}

TEST_CASE("attrs, browse and notify round-trip") {
  NodeAttributes a{NodeClass::Variable, "Temp", "Barrel temperature", "Temp", core::DataKind::Double, ""};
  const auto back = parse_attrs(attrs_response(1, a));
  CHECK(back.display_name == "Temp");
  CHECK(back.data_kind == core::DataKind::Double);

  NodeAttributes weird = a;
  weird.data_kind.reset();
  weird.data_type_name = "Decimal128";
  const auto kept = parse_attrs(attrs_response(2, weird));
  CHECK_FALSE(kept.data_kind.has_value());
  CHECK(kept.data_type_name == "Decimal128");

  BrowseResult b{NodeRef{core::NodeId(0, 85), "Objects"}, {NodeRef{core::NodeId(2, 1001), "Temp"}}};
  const auto j = browse_response(3, b);
  CHECK(j.dump() ==
        R"({"rid":3,"ok":true,"parent":{"ns":0,"id":85,"browseName":"Objects"},"children":[{"ns":2,"id":1001,"browseName":"Temp"}]})");
  const auto pb = parse_browse(j);
  CHECK(pb.parent == b.parent);
  CHECK(pb.children == b.children);
  CHECK_FALSE(parse_browse(browse_response(4, {std::nullopt, {}})).parent.has_value());

  const std::vector<NotifyItem> items{{"A:1:temp", {23.5, 10}}, {"A:1:rpm", {std::int32_t{1200}, 11}}};
  const auto n = notify_message(items);
  CHECK(is_notify(n));
  CHECK_FALSE(is_notify(ok_response(1)));
  const auto parsed = parse_notify(n);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].key == "A:1:rpm");
  CHECK(parsed[1].value == items[1].value);
}

TEST_CASE("channel over a socket pair") {
  auto [a, b] = socket_pair();
  Channel left(std::make_unique<net::PlainStream>(std::move(a)));
  Channel right(std::make_unique<net::PlainStream>(std::move(b)));

  CHECK(std::holds_alternative<Channel::Timeout>(right.receive(net::Millis(20))));
  left.send(Json{{"x", 1}});
  left.send(Json{{"x", 2}});
  auto first = right.receive(net::Millis(1000));
  REQUIRE(std::holds_alternative<Json>(first));
  CHECK(std::get<Json>(first)["x"] == 1);
  auto second = right.receive(net::Millis(1000));
  REQUIRE(std::holds_alternative<Json>(second));
  CHECK(std::get<Json>(second)["x"] == 2);

  const auto junk = manual_frame("not json");
  left.stream().write_all(junk);
  CHECK(std::holds_alternative<Channel::Malformed>(right.receive(net::Millis(1000))));

  const std::vector<std::uint8_t> oversize{0x7f, 0xff, 0xff, 0xff};
  left.stream().write_all(oversize);
  CHECK_THROWS_AS(right.receive(net::Millis(1000)), ProtocolError);

  left.shutdown();
  auto [c, d] = socket_pair();
  Channel closing(std::make_unique<net::PlainStream>(std::move(c)));
  d.close();
  CHECK_THROWS_AS(closing.receive(net::Millis(1000)), IoError);
}

TEST_CASE("client matches responses by rid and queues notifications") {
  auto [a, b] = socket_pair();
  SnapClient client(std::make_unique<net::PlainStream>(std::move(a)), net::Millis(2000));
  Channel server(std::make_unique<net::PlainStream>(std::move(b)));

  std::jthread peer([&] {
    auto in = server.receive(net::Millis(2000));
    const auto req = parse_request(std::get<Json>(in));
    server.send(notify_message({{"A:1:1", {1.0, 1}}}));
    server.send(read_response(req.rid, {2.5, 5}));
    in = server.receive(net::Millis(2000));
    server.send(error_response(parse_request(std::get<Json>(in)).rid, ErrorCode::BadNotReady));
  });
  CHECK(client.read(core::NodeId(1, 1)).value == core::DataValue{2.5, 5});
  try {
    client.read(core::NodeId(1, 2));
    FAIL("expected BAD_NOT_READY");
  } catch (const StatusError& e) {
    CHECK(e.code() == ErrorCode::BadNotReady);
  }
  const auto queued = client.next_notification(net::Millis(10));
  REQUIRE(queued);
  CHECK(queued->front().key == "A:1:1");
}

#include "gf/oracle_wire.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "gf/camera_io.hpp"
#include "gf/image_io.hpp"

namespace gf {

namespace {

FrameRGBD frame_from_codecs(const Image& rgb, const Image& depth) {
  FrameRGBD f(rgb.width, rgb.height);
  f.rgb = rgb;
  f.depth = depth;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const bool valid = f.depth.at(x, y) > 0.0;
      f.valid.set(x, y, valid);
      f.transmittance.at(x, y) = valid ? 0.0 : 1.0;
    }
  return f;
}

Image depth_for_wire(const FrameRGBD& f) {
  Image d = f.depth;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (!f.valid.at(x, y)) d.at(x, y) = 0.0;
  return d;
}

}  // namespace

std::string multipart_encode(const std::vector<MultipartPart>& parts, const std::string& boundary) {
  std::string out;
  for (const auto& p : parts) {
    out += "--" + boundary + "\r\n";
    out += "Content-Disposition: form-data; name=\"" + p.name + "\"\r\n\r\n";
    out += p.payload;
    out += "\r\n";
  }
  out += "--" + boundary + "--\r\n";
  return out;
}

std::vector<MultipartPart> multipart_decode(const std::string& body, const std::string& boundary) {
  std::vector<MultipartPart> parts;
  const std::string delim = "--" + boundary;
  size_t pos = body.find(delim);
  require(pos != std::string::npos, ErrCode::BadResponse, "multipart boundary not found");
  while (true) {
    pos += delim.size();
    if (body.compare(pos, 2, "--") == 0) break;  // closing delimiter
    if (body.compare(pos, 2, "\r\n") == 0) pos += 2;
    const size_t header_end = body.find("\r\n\r\n", pos);
    require(header_end != std::string::npos, ErrCode::BadResponse, "multipart part without header");
    const std::string headers = body.substr(pos, header_end - pos);
    MultipartPart part;
    const size_t name_at = headers.find("name=\"");
    require(name_at != std::string::npos, ErrCode::BadResponse, "multipart part without name");
    const size_t name_end = headers.find('"', name_at + 6);
    require(name_end != std::string::npos, ErrCode::BadResponse, "unterminated part name");
    part.name = headers.substr(name_at + 6, name_end - (name_at + 6));
    const size_t payload_start = header_end + 4;
    const size_t next = body.find("\r\n" + delim, payload_start);
    require(next != std::string::npos, ErrCode::BadResponse, "unterminated multipart part");
    part.payload = body.substr(payload_start, next - payload_start);
    parts.push_back(std::move(part));
    pos = next + 2;
  }
  return parts;
}

std::string multipart_boundary_from_content_type(const std::string& content_type) {
  const std::string key = "boundary=";
  const size_t at = content_type.find(key);
  require(at != std::string::npos, ErrCode::BadResponse, "content type lacks a boundary");
  return content_type.substr(at + key.size());
}

std::string encode_restore_request(const OracleRequest& request, const std::string& boundary) {
  request.validate();
  Json meta;
  meta["protocol"] = kOracleProtocolVersion;
  meta["frame_count"] = request.frames.size();
  meta["width"] = request.reference.width();
  meta["height"] = request.reference.height();
  Json cams = Json::array();
  for (const auto& c : request.cameras) cams.push_back(camera_to_json(c));
  meta["cameras"] = cams;
  meta["reference_camera"] = camera_to_json(request.reference_camera);

  std::vector<MultipartPart> parts;
  parts.push_back({"meta", meta.dump()});
  for (size_t i = 0; i < request.frames.size(); ++i) {
    parts.push_back({"rgb_" + std::to_string(i), encode_png(request.frames[i].rgb, false)});
    parts.push_back({"depth_" + std::to_string(i), encode_pfm(depth_for_wire(request.frames[i]))});
  }
  parts.push_back({"ref_rgb", encode_png(request.reference.rgb, false)});
  parts.push_back({"ref_depth", encode_pfm(depth_for_wire(request.reference))});
  return multipart_encode(parts, boundary);
}

namespace {

const MultipartPart* find_part(const std::vector<MultipartPart>& parts, const std::string& name) {
  for (const auto& p : parts)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace

OracleRequest decode_restore_request(const std::string& body, const std::string& boundary) {
  return decode_restore_request(multipart_decode(body, boundary));
}

OracleRequest decode_restore_request(const std::vector<MultipartPart>& parts) {
  const MultipartPart* meta_part = find_part(parts, "meta");
  require(meta_part != nullptr, ErrCode::BadResponse, "missing 'meta' part");
  Json meta = Json::parse(meta_part->payload, nullptr, false);
  require(!meta.is_discarded(), ErrCode::BadResponse, "meta part is not valid JSON");
  require(meta.value("protocol", "") == kOracleProtocolVersion, ErrCode::BadResponse,
          "unsupported protocol version");
  const size_t n = meta.value("frame_count", size_t{0});
  require(n > 0, ErrCode::BadResponse, "frame_count missing or zero");
  require(meta.contains("cameras") && meta["cameras"].is_array() && meta["cameras"].size() == n,
          ErrCode::BadResponse, "cameras missing or count mismatch");

  OracleRequest req;
  for (size_t i = 0; i < n; ++i) {
    req.cameras.push_back(camera_from_json(meta["cameras"][i]));
    const MultipartPart* rgb = find_part(parts, "rgb_" + std::to_string(i));
    const MultipartPart* depth = find_part(parts, "depth_" + std::to_string(i));
    require(rgb && depth, ErrCode::BadResponse, "missing frame part " + std::to_string(i));
    req.frames.push_back(frame_from_codecs(decode_png(rgb->payload, false), decode_pfm(depth->payload)));
  }
  const MultipartPart* ref_rgb = find_part(parts, "ref_rgb");
  const MultipartPart* ref_depth = find_part(parts, "ref_depth");
  require(ref_rgb && ref_depth, ErrCode::BadResponse, "missing reference parts");
  req.reference = frame_from_codecs(decode_png(ref_rgb->payload, false), decode_pfm(ref_depth->payload));
  if (meta.contains("reference_camera"))
    req.reference_camera = camera_from_json(meta["reference_camera"]);
  req.validate();
  return req;
}

std::string encode_restore_response(const OracleResponse& response, int width, int height,
                                    const std::string& boundary) {
  Json meta;
  meta["protocol"] = kOracleProtocolVersion;
  meta["frame_count"] = response.frames.size();
  meta["width"] = width;
  meta["height"] = height;
  std::vector<MultipartPart> parts;
  parts.push_back({"meta", meta.dump()});
  for (size_t i = 0; i < response.frames.size(); ++i) {
    parts.push_back({"rgb_" + std::to_string(i), encode_png(response.frames[i].rgb, false)});
    parts.push_back({"depth_" + std::to_string(i), encode_pfm(depth_for_wire(response.frames[i]))});
  }
  return multipart_encode(parts, boundary);
}

OracleResponse decode_restore_response(const std::string& body, const std::string& boundary,
                                       size_t expected_frames) {
  const auto parts = multipart_decode(body, boundary);
  const MultipartPart* meta_part = find_part(parts, "meta");
  require(meta_part != nullptr, ErrCode::BadResponse, "missing 'meta' part in response");
  Json meta = Json::parse(meta_part->payload, nullptr, false);
  require(!meta.is_discarded(), ErrCode::BadResponse, "response meta is not valid JSON");
  require(meta.value("protocol", "") == kOracleProtocolVersion, ErrCode::BadResponse,
          "unsupported protocol version in response");
  const size_t n = meta.value("frame_count", size_t{0});
  require(n == expected_frames, ErrCode::BadResponse, "response frame count mismatch");
  OracleResponse resp;
  for (size_t i = 0; i < n; ++i) {
    const MultipartPart* rgb = find_part(parts, "rgb_" + std::to_string(i));
    const MultipartPart* depth = find_part(parts, "depth_" + std::to_string(i));
    require(rgb && depth, ErrCode::BadResponse, "missing response frame part " + std::to_string(i));
    resp.frames.push_back(
        frame_from_codecs(decode_png(rgb->payload, false), decode_pfm(depth->payload)));
  }
  return resp;
}

RemoteOracle::RemoteOracle(const std::string& url) : url_(url) {
  std::string rest = url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  const size_t colon = rest.find(':');
  const size_t slash = rest.find('/');
  if (colon != std::string::npos && (slash == std::string::npos || colon < slash)) {
    host_ = rest.substr(0, colon);
    port_ = std::stoi(rest.substr(colon + 1, slash == std::string::npos ? std::string::npos : slash - colon - 1));
  } else {
    host_ = rest.substr(0, slash);
    port_ = 80;
  }
}

OracleResponse RemoteOracle::restore(const OracleRequest& request) {
  httplib::Client client(host_, port_);
  client.set_read_timeout(120, 0);
  client.set_connection_timeout(5, 0);
  const std::string boundary = "genfusion-oracle-boundary";
  const std::string body = encode_restore_request(request, boundary);
  auto res = client.Post("/v1/restore", body, "multipart/form-data; boundary=" + boundary);
  if (!res) fail(ErrCode::OracleUnavailable, "no response from " + url_);
  if (res->status != 200)
    fail(res->status >= 500 ? ErrCode::OracleUnavailable : ErrCode::BadResponse,
         "restore returned status " + std::to_string(res->status) + ": " + res->body);
  const std::string resp_boundary =
      multipart_boundary_from_content_type(res->get_header_value("Content-Type"));
  OracleResponse resp = decode_restore_response(res->body, resp_boundary, request.frames.size());
  for (const auto& f : resp.frames)
    require(f.width() == request.reference.width() && f.height() == request.reference.height(),
            ErrCode::BadResponse, "response frame size mismatch");
  return resp;
}

struct MockOracleServer::Impl {
  httplib::Server server;
};

MockOracleServer::MockOracleServer(std::shared_ptr<RestorationOracle> backing)
    : impl_(std::make_unique<Impl>()), backing_(std::move(backing)) {}

MockOracleServer::~MockOracleServer() { stop(); }

void MockOracleServer::start(const std::string& host, int port) {
  host_ = host;
  auto& server = impl_->server;

  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    Json j;
    j["protocol"] = kOracleProtocolVersion;
    j["status"] = "ok";
    res.set_content(j.dump(), "application/json");
  });

  server.Post("/v1/restore", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      // httplib parses multipart/form-data bodies itself; rebuild the parts.
      std::vector<MultipartPart> parts;
      if (req.is_multipart_form_data()) {
        for (const auto& [name, item] : req.files) parts.push_back({name, item.content});
      } else {
        const std::string boundary =
            multipart_boundary_from_content_type(req.get_header_value("Content-Type"));
        parts = multipart_decode(req.body, boundary);
      }
      const OracleRequest request = decode_restore_request(parts);
      const OracleResponse response = backing_->restore(request);
      const std::string out_boundary = "genfusion-oracle-boundary";
      res.set_content(encode_restore_response(response, request.reference.width(),
                                              request.reference.height(), out_boundary),
                      "multipart/form-data; boundary=" + out_boundary);
    } catch (const std::exception& e) {
      res.status = 400;
      Json j;
      j["error"] = e.what();
      res.set_content(j.dump(), "application/json");
    }
  });

  if (port == 0) {
    port_ = server.bind_to_any_port(host.c_str());
    require(port_ > 0, ErrCode::BindFailed, "could not bind to any port on " + host);
  } else {
    require(server.bind_to_port(host.c_str(), port), ErrCode::BindFailed,
            "could not bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
}

void MockOracleServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockOracleServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace gf

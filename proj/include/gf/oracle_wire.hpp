#pragma once

#include <atomic>
#include <thread>

#include "gf/oracle.hpp"

namespace gf {

inline constexpr const char* kOracleProtocolVersion = "genfusion-oracle/1";

/// MIME multipart/form-data codec used on both sides of the wire so the
/// protocol stays bit-exact regardless of the HTTP library.
struct MultipartPart {
  std::string name;
  std::string payload;
};
std::string multipart_encode(const std::vector<MultipartPart>& parts, const std::string& boundary);
std::vector<MultipartPart> multipart_decode(const std::string& body, const std::string& boundary);
std::string multipart_boundary_from_content_type(const std::string& content_type);

/// Wire mapping: part "meta" (JSON with protocol version, frame count, image
/// size, cameras), parts "rgb_i" (8-bit linear PNG) and "depth_i" (PFM,
/// invalid pixels as 0), plus "ref_rgb"/"ref_depth". Responses carry the same
/// frame parts.
std::string encode_restore_request(const OracleRequest& request, const std::string& boundary);
OracleRequest decode_restore_request(const std::string& body, const std::string& boundary);
OracleRequest decode_restore_request(const std::vector<MultipartPart>& parts);
std::string encode_restore_response(const OracleResponse& response, int width, int height,
                                    const std::string& boundary);
OracleResponse decode_restore_response(const std::string& body, const std::string& boundary,
                                       size_t expected_frames);

/// HTTP client for a restoration service implementing POST /v1/restore.
class RemoteOracle : public RestorationOracle {
 public:
  explicit RemoteOracle(const std::string& url);
  OracleResponse restore(const OracleRequest& request) override;
  std::string name() const override { return "remote:" + url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
};

/// Mock HTTP server wrapping a local oracle behind the wire protocol.
/// GET /v1/health reports the protocol version; POST /v1/restore answers with
/// the backing oracle's output; malformed requests get a 400 with a
/// diagnostic body.
class MockOracleServer {
 public:
  MockOracleServer(std::shared_ptr<RestorationOracle> backing);
  ~MockOracleServer();

  /// Binds and serves on a background thread. port 0 picks a free port.
  /// Throws BIND_FAILED when the address is unavailable.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  int port() const { return port_; }
  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<RestorationOracle> backing_;
  std::thread thread_;
  int port_ = 0;
  std::string host_;
};

}  // namespace gf

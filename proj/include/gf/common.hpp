#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gf {

enum class ErrCode {
  ShapeMismatch,
  EmptyMask,
  NoSupervision,
  LengthMismatch,
  StaleForward,
  InvalidDepth,
  RatioUnsupported,
  IncompatibleIntrinsics,
  OracleUnavailable,
  BadResponse,
  BindFailed,
  MalformedFile,
  SchemaViolation,
  BadRotation,
  EmptyPoints,
};

inline const char* err_name(ErrCode c) {
  switch (c) {
    case ErrCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrCode::EmptyMask: return "EMPTY_MASK";
    case ErrCode::NoSupervision: return "NO_SUPERVISION";
    case ErrCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrCode::StaleForward: return "STALE_FORWARD";
    case ErrCode::InvalidDepth: return "INVALID_DEPTH";
    case ErrCode::RatioUnsupported: return "RATIO_UNSUPPORTED";
    case ErrCode::IncompatibleIntrinsics: return "INCOMPATIBLE_INTRINSICS";
    case ErrCode::OracleUnavailable: return "ORACLE_UNAVAILABLE";
    case ErrCode::BadResponse: return "BAD_RESPONSE";
    case ErrCode::BindFailed: return "BIND_FAILED";
    case ErrCode::MalformedFile: return "MALFORMED_FILE";
    case ErrCode::SchemaViolation: return "SCHEMA_VIOLATION";
    case ErrCode::BadRotation: return "BAD_ROTATION";
    case ErrCode::EmptyPoints: return "EMPTY_POINTS";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrCode code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  ErrCode code() const { return code_; }

 private:
  ErrCode code_;
};

[[noreturn]] inline void fail(ErrCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

/// splitmix64 scramble, used to derive independent RNG streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives an independent RNG stream from a master seed and a stream tag,
/// so that consumers of one stream do not perturb the others.
inline std::mt19937_64 seeded_rng(uint64_t seed, uint64_t stream) {
  return std::mt19937_64(mix64(mix64(seed) ^ stream));
}

}  // namespace gf

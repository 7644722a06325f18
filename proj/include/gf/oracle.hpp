#pragma once

#include <memory>

#include "gf/camera.hpp"
#include "gf/image.hpp"

namespace gf {

/// A restoration request: artifact-prone RGB-D renderings along a fragment
/// trajectory plus the input view closest to it as reference.
struct OracleRequest {
  std::vector<FrameRGBD> frames;
  std::vector<Camera> cameras;
  FrameRGBD reference;
  Camera reference_camera;

  void validate() const {
    require(!frames.empty() && frames.size() == cameras.size(), ErrCode::BadResponse,
            "request frame/camera counts disagree");
    for (const auto& f : frames)
      require(f.width() == reference.width() && f.height() == reference.height(),
              ErrCode::BadResponse, "request frame sizes disagree");
  }
};

struct OracleResponse {
  std::vector<FrameRGBD> frames;
};

/// The restoration contract standing in for the generative model: maps
/// artifact-prone RGB-D fragments to clean RGB-D fragments of the same count,
/// size and camera association.
class RestorationOracle {
 public:
  virtual ~RestorationOracle() = default;
  virtual OracleResponse restore(const OracleRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Returns the request frames unchanged.
class IdentityOracle : public RestorationOracle {
 public:
  OracleResponse restore(const OracleRequest& request) override;
  std::string name() const override { return "identity"; }
};

/// Clean-frame source used by the ground-truth oracle.
class GtRenderer {
 public:
  virtual ~GtRenderer() = default;
  virtual FrameRGBD render_gt(const Camera& camera) const = 0;
};

/// Restores by re-rendering the requested cameras from a synthetic scene
/// definition. A testing upper bound for the fusion loop, not a generative
/// model.
class GroundTruthOracle : public RestorationOracle {
 public:
  explicit GroundTruthOracle(std::shared_ptr<const GtRenderer> renderer)
      : renderer_(std::move(renderer)) {}
  OracleResponse restore(const OracleRequest& request) override;
  std::string name() const override { return "gt"; }

 private:
  std::shared_ptr<const GtRenderer> renderer_;
};

/// Wraps another oracle, counting restore calls. Used by tests and cadence
/// checks.
class CountingOracle : public RestorationOracle {
 public:
  explicit CountingOracle(std::shared_ptr<RestorationOracle> inner) : inner_(std::move(inner)) {}
  OracleResponse restore(const OracleRequest& request) override {
    ++calls_;
    return inner_->restore(request);
  }
  std::string name() const override { return inner_->name(); }
  int calls() const { return calls_; }

 private:
  std::shared_ptr<RestorationOracle> inner_;
  int calls_ = 0;
};

/// Least-squares scale+shift fit of `generated` onto `rendered` over the valid
/// mask, applied to every generated pixel. A constant generated depth falls
/// back to scaling by the ratio of means.
Image align_depth(const Image& generated, const Image& rendered, const Mask& valid);

}  // namespace gf

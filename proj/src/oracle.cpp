#include "gf/oracle.hpp"

#include <cmath>

namespace gf {

OracleResponse IdentityOracle::restore(const OracleRequest& request) {
  request.validate();
  return OracleResponse{request.frames};
}

OracleResponse GroundTruthOracle::restore(const OracleRequest& request) {
  request.validate();
  OracleResponse resp;
  resp.frames.reserve(request.cameras.size());
  for (const auto& cam : request.cameras) resp.frames.push_back(renderer_->render_gt(cam));
  return resp;
}

Image align_depth(const Image& generated, const Image& rendered, const Mask& valid) {
  require(generated.same_shape(rendered) && generated.channels == 1 &&
              generated.width == valid.width && generated.height == valid.height,
          ErrCode::ShapeMismatch, "align_depth operands");
  double sgg = 0, sg = 0, sgr = 0, sr = 0;
  size_t n = 0;
  for (int y = 0; y < generated.height; ++y)
    for (int x = 0; x < generated.width; ++x) {
      if (!valid.at(x, y)) continue;
      const double g = generated.at(x, y), r = rendered.at(x, y);
      sgg += g * g;
      sg += g;
      sgr += g * r;
      sr += r;
      ++n;
    }
  require(n >= 2, ErrCode::EmptyMask, "align_depth needs >= 2 valid pixels");

  Image out(generated.width, generated.height, 1);
  const double nf = static_cast<double>(n);
  const double det = sgg * nf - sg * sg;
  if (det <= 1e-12 * std::max(sgg * nf, 1e-300)) {
    // Degenerate fit (constant generated depth): scale to the rendered mean.
    const double mean_g = sg / nf;
    const double factor = std::abs(mean_g) > 1e-300 ? (sr / nf) / mean_g : 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = generated.data[i] * factor;
    return out;
  }
  const double s = (nf * sgr - sg * sr) / det;
  const double t = (-sg * sgr + sgg * sr) / det;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = s * generated.data[i] + t;
  return out;
}

}  // namespace gf

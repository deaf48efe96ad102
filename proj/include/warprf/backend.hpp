#pragma once

// Rendering backends behind one interface. The uncertainty and active-loop
// code only sees RenderingBackend / TrainableBackend, so any radiance-field
// implementation that can render (image, depth) plugs in.

#include "warprf/camera.hpp"
#include "warprf/core.hpp"
#include "warprf/degrade.hpp"
#include "warprf/scene.hpp"
#include "warprf/voxel.hpp"

#include <memory>
#include <vector>

namespace warprf {

class RenderingBackend {
 public:
  virtual ~RenderingBackend() = default;
  virtual bool can_render_image() const = 0;
  virtual bool can_render_depth() const = 0;
  /// Deterministic given backend state.
  virtual RenderOutput render(const View& view) const = 0;
};

/// Backend that can additionally be fit to posed images. Backends with no
/// trainable state (the oracles) keep the default no-op.
class TrainableBackend : public RenderingBackend {
 public:
  virtual std::vector<double> fit(const std::vector<TrainView>& /*views*/, int /*steps*/,
                                  std::uint64_t /*seed*/) {
    return {};
  }
};

class OracleBackend final : public TrainableBackend {
 public:
  explicit OracleBackend(AnalyticScene scene, int threads = 1)
      : scene_(std::move(scene)), threads_(threads) {
    scene_.validate();
  }
  bool can_render_image() const override { return true; }
  bool can_render_depth() const override { return true; }
  RenderOutput render(const View& view) const override {
    return oracle_render(scene_, view, threads_);
  }
  const AnalyticScene& scene() const { return scene_; }

 private:
  AnalyticScene scene_;
  int threads_ = 1;
};

class DegradedOracleBackend final : public TrainableBackend {
 public:
  DegradedOracleBackend(AnalyticScene scene, DegradationSpec spec, int threads = 1)
      : scene_(std::move(scene)), spec_(std::move(spec)), threads_(threads) {
    scene_.validate();
    spec_.validate();
  }
  bool can_render_image() const override { return true; }
  bool can_render_depth() const override { return true; }
  RenderOutput render(const View& view) const override {
    DegradedRender r = degraded_render(scene_, spec_, view, threads_);
    return RenderOutput{std::move(r.image), std::move(r.depth)};
  }
  /// Full degraded render including the constructed error map.
  DegradedRender render_with_error(const View& view) const {
    return degraded_render(scene_, spec_, view, threads_);
  }
  const AnalyticScene& scene() const { return scene_; }
  const DegradationSpec& spec() const { return spec_; }

 private:
  AnalyticScene scene_;
  DegradationSpec spec_;
  int threads_ = 1;
};

class VoxelBackend final : public TrainableBackend {
 public:
  VoxelBackend(VoxelField field, TrainOptions opt, int threads = 1)
      : field_(std::move(field)), opt_(opt), threads_(threads) {
    field_.validate();
  }
  bool can_render_image() const override { return true; }
  bool can_render_depth() const override { return true; }
  RenderOutput render(const View& view) const override {
    return voxel_render(field_, view, threads_);
  }
  std::vector<double> fit(const std::vector<TrainView>& views, int steps,
                          std::uint64_t seed) override {
    return voxel_train(field_, views, steps, opt_, seed);
  }
  const VoxelField& field() const { return field_; }
  VoxelField& field() { return field_; }

 private:
  VoxelField field_;
  TrainOptions opt_;
  int threads_ = 1;
};

}  // namespace warprf

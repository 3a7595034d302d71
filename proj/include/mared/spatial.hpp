#pragma once

#include <string>
#include <vector>

#include "mared/model.hpp"

namespace mared {

/// x -> scale * R x + translation.
struct SimilarityTransform {
  Quat rotation;
  Vec3 translation;
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const;
  Pose apply(const Pose& p) const;
};

struct SpatialAdaptation {
  KeyframedDocument kdoc;
  SimilarityTransform transform;
  bool degraded = false;        // translation-only fallback was used
  double max_residual = 0.0;    // largest anchor misfit after alignment, m
  std::vector<std::string> warnings;
};

/// Least-squares alignment of the capture anchors onto `target` anchors
/// with matching ids, applied to every pose in the document.
///
/// Three or more non-collinear correspondences give a rigid fit (similarity
/// when `allow_scale`). One or two, or collinear anchors, fall back to
/// translation-only alignment flagged as degraded. No correspondence at all
/// throws Error(insufficient_anchors).
SpatialAdaptation adapt_spatial(const KeyframedDocument& kdoc,
                                const SpaceAnchors& target,
                                bool allow_scale = false);

/// Applies a transform to every pose of a document (entities, anchors,
/// state-change poses and trajectories, keyframe anchors).
KeyframedDocument transform_document(const KeyframedDocument& kdoc,
                                     const SimilarityTransform& transform);

}  // namespace mared

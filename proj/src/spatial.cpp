#include "mared/spatial.hpp"

#include <Eigen/Dense>
#include <algorithm>

#include "mared/error.hpp"

namespace mared {

namespace {

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Quat normalized(const Quat& q) {
  const double n = norm(q);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Relative spread below which anchors count as collinear.
constexpr double kCollinearTolerance = 1e-9;

}  // namespace

Vec3 SimilarityTransform::apply(const Vec3& p) const {
  return scale * rotate(rotation, p) + translation;
}

Pose SimilarityTransform::apply(const Pose& p) const {
  return {apply(p.position), normalized(rotation * p.orientation)};
}

KeyframedDocument transform_document(const KeyframedDocument& kdoc,
                                     const SimilarityTransform& transform) {
  KeyframedDocument out = kdoc;
  MaredDocument& doc = out.document;
  for (auto& a : doc.header.anchors) a.pose = transform.apply(a.pose);
  for (auto& e : doc.entities) e.pose = transform.apply(e.pose);
  for (auto& s : doc.state_change_events) {
    if (s.kind != ChangeKind::pose) continue;
    if (auto* p = std::get_if<Pose>(&s.before)) *p = transform.apply(*p);
    if (auto* p = std::get_if<Pose>(&s.after)) *p = transform.apply(*p);
    for (auto& sample : s.trajectory) sample.pose = transform.apply(sample.pose);
  }
  for (auto& k : out.keyframes) {
    for (auto& a : k.anchors) a.pose = transform.apply(a.pose);
  }
  return out;
}

SpatialAdaptation adapt_spatial(const KeyframedDocument& kdoc,
                                const SpaceAnchors& target, bool allow_scale) {
  std::vector<Eigen::Vector3d> src;
  std::vector<Eigen::Vector3d> dst;
  for (const auto& a : kdoc.document.header.anchors) {
    auto it = std::find_if(target.begin(), target.end(),
                           [&](const SpaceAnchor& t) { return t.id == a.id; });
    if (it == target.end()) continue;
    src.push_back(to_eigen(a.pose.position));
    dst.push_back(to_eigen(it->pose.position));
  }
  if (src.empty()) {
    throw Error(ErrorCode::insufficient_anchors,
                "no anchor ids shared between capture and target space");
  }

  const auto n = static_cast<double>(src.size());
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += src[i];
    dst_mean += dst[i];
  }
  src_mean /= n;
  dst_mean /= n;

  Eigen::Matrix3d cov_src = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d a = src[i] - src_mean;
    const Eigen::Vector3d b = dst[i] - dst_mean;
    cov_src += a * a.transpose();
    cross += b * a.transpose();
    var_src += a.squaredNorm();
  }

  SpatialAdaptation result;
  const Eigen::Vector3d spread =
      Eigen::JacobiSVD<Eigen::Matrix3d>(cov_src).singularValues();
  const bool collinear = spread(0) <= 0.0 || spread(1) <= kCollinearTolerance * spread(0);

  if (src.size() < 3 || collinear) {
    result.degraded = true;
    result.warnings.push_back(
        src.size() < 3 ? "insufficientAnchors: " + std::to_string(src.size()) +
                             " correspondence(s), translation-only alignment"
                       : "insufficientAnchors: collinear anchors, "
                         "translation-only alignment");
    result.transform.translation = from_eigen(dst_mean - src_mean);
  } else {
    // Umeyama: R = U diag(1, 1, det(U V^T)) V^T for cross = U S V^T.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d rotation = svd.matrixU() * d * svd.matrixV().transpose();
    double scale = 1.0;
    if (allow_scale && var_src > 0.0) {
      scale = (svd.singularValues().asDiagonal() * d).trace() / var_src;
    }
    const Eigen::Quaterniond q(rotation);
    result.transform.rotation = normalized({q.w(), q.x(), q.y(), q.z()});
    result.transform.scale = scale;
    result.transform.translation =
        from_eigen(dst_mean - scale * rotation * src_mean);
  }

  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 mapped = result.transform.apply(from_eigen(src[i]));
    result.max_residual =
        std::max(result.max_residual, distance(mapped, from_eigen(dst[i])));
  }
  result.kdoc = transform_document(kdoc, result.transform);
  return result;
}

}  // namespace mared

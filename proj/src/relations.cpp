#include "mared/relations.hpp"

#include <algorithm>
#include <cmath>

#include "mared/error.hpp"

namespace mared {

namespace {

void require_finite(const EntityState& s) {
  if (!is_finite(s.pose) || !is_finite(s.bbox) ||
      (s.hand && !is_finite(*s.hand))) {
    throw Error(ErrorCode::rejected_input,
                "non-finite pose for entity '" + s.id + "'");
  }
}

double overlap_1d(double c1, double h1, double c2, double h2) {
  const double lo = std::max(c1 - h1, c2 - h2);
  const double hi = std::min(c1 + h1, c2 + h2);
  return std::max(0.0, hi - lo);
}

bool holds_on(const EntityState& a, const EntityState& b,
              const RelationThresholds& th) {
  const Vec3& pa = a.pose.position;
  const Vec3& pb = b.pose.position;
  if (!(pa.z > pb.z)) return false;
  const double gap = (pa.z - a.bbox.z / 2.0) - (pb.z + b.bbox.z / 2.0);
  if (gap < th.on_gap_min || gap > th.on_gap_max) return false;
  const double footprint = a.bbox.x * a.bbox.y;
  if (footprint <= 0.0) return false;
  const double overlap =
      overlap_1d(pa.x, a.bbox.x / 2.0, pb.x, b.bbox.x / 2.0) *
      overlap_1d(pa.y, a.bbox.y / 2.0, pb.y, b.bbox.y / 2.0);
  return overlap >= th.on_min_overlap * footprint;
}

bool holds_in(const EntityState& a, const EntityState& b) {
  const Vec3 d = a.pose.position - b.pose.position;
  const bool inside = std::abs(d.x) <= b.bbox.x / 2.0 &&
                      std::abs(d.y) <= b.bbox.y / 2.0 &&
                      std::abs(d.z) <= b.bbox.z / 2.0;
  const double va = a.bbox.x * a.bbox.y * a.bbox.z;
  const double vb = b.bbox.x * b.bbox.y * b.bbox.z;
  return inside && va < vb;
}

bool holds_held_by(const EntityState& a, const EntityState& u,
                   const RelationContext& ctx) {
  if (a.kind != EntityKind::object || u.kind != EntityKind::user) return false;
  if (!ctx.active_grasps.contains({u.id, a.id})) return false;
  const Vec3 hand = u.hand.value_or(u.pose.position);
  return distance(hand, a.pose.position) < ctx.thresholds.held_distance;
}

// Every predicate except near, for the ordered pair (a, b).
RelationSet strong_relations(const EntityState& a, const EntityState& b,
                             const RelationContext& ctx) {
  RelationSet out;
  if (holds_on(a, b, ctx.thresholds)) out.insert({Predicate::on, a.id, b.id});
  if (holds_in(a, b)) out.insert({Predicate::in, a.id, b.id});
  if (holds_held_by(a, b, ctx)) out.insert({Predicate::held_by, a.id, b.id});
  if (ctx.attachments.contains({a.id, b.id})) {
    out.insert({Predicate::attached_to, a.id, b.id});
  }
  return out;
}

}  // namespace

RelationSet relate(const EntityState& subject, const EntityState& object,
                   const RelationContext& context) {
  require_finite(subject);
  require_finite(object);
  if (subject.id == object.id) return {};

  RelationSet out = strong_relations(subject, object, context);
  if (out.empty() && strong_relations(object, subject, context).empty() &&
      distance(subject.pose.position, object.pose.position) <
          context.thresholds.near_distance) {
    out.insert({Predicate::near, subject.id, object.id});
  }
  return out;
}

RelationSet relate_scene(const std::vector<EntityState>& states,
                         const RelationContext& context) {
  RelationSet out;
  for (const auto& a : states) {
    for (const auto& b : states) {
      if (a.id == b.id) continue;
      for (const auto& r : relate(a, b, context)) {
        if (r.predicate == Predicate::near && !(r.subject < r.object)) continue;
        out.insert(r);
      }
    }
  }
  return out;
}

RelationSet relations_involving(const RelationSet& relations,
                                const std::string& id) {
  RelationSet out;
  for (const auto& r : relations) {
    if (r.subject == id || r.object == id) out.insert(r);
  }
  return out;
}

}  // namespace mared

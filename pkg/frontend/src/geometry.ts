/** Small vector helpers and medial-axis snapping. */

import type { MedialAxis, Vec3 } from "./types.js";

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function distance(a: Vec3, b: Vec3): number {
  return norm(sub(a, b));
}

export function closestOnSegment(a: Vec3, b: Vec3, p: Vec3): Vec3 {
  const u = sub(b, a);
  const uu = dot(u, u);
  if (uu === 0) return a;
  const t = Math.min(1, Math.max(0, dot(sub(p, a), u) / uu));
  return add(a, scale(u, t));
}

export function closestOnTriangle(a: Vec3, b: Vec3, c: Vec3, p: Vec3): Vec3 {
  // project onto the plane, then clamp to the nearest edge if outside
  const ab = sub(b, a);
  const ac = sub(c, a);
  const n = cross(ab, ac);
  const nn = dot(n, n);
  if (nn === 0) return closestOnSegment(a, b, p);
  const ap = sub(p, a);
  const proj = sub(p, scale(n, dot(ap, n) / nn));
  // barycentric test of the projection
  const v0 = ab;
  const v1 = ac;
  const v2 = sub(proj, a);
  const d00 = dot(v0, v0);
  const d01 = dot(v0, v1);
  const d11 = dot(v1, v1);
  const d20 = dot(v2, v0);
  const d21 = dot(v2, v1);
  const denom = d00 * d11 - d01 * d01;
  const v = (d11 * d20 - d01 * d21) / denom;
  const w = (d00 * d21 - d01 * d20) / denom;
  if (v >= 0 && w >= 0 && v + w <= 1) return proj;
  const candidates = [
    closestOnSegment(a, b, p),
    closestOnSegment(a, c, p),
    closestOnSegment(b, c, p),
  ];
  let best = candidates[0];
  for (const q of candidates.slice(1)) {
    if (distance(q, p) < distance(best, p)) best = q;
  }
  return best;
}

export interface SnapResult {
  point: Vec3;
  distance: number;
}

/**
 * Nearest point on the medial axis (vertices, edges, and triangles).
 * Deterministic: scans elements in order and keeps the first minimum.
 */
export function snapToMedial(axis: MedialAxis, p: Vec3): SnapResult {
  let best: Vec3 = axis.vertices[0];
  let bestD = distance(best, p);
  const consider = (q: Vec3) => {
    const d = distance(q, p);
    if (d < bestD) {
      best = q;
      bestD = d;
    }
  };
  for (const v of axis.vertices) consider(v);
  for (const [i, j] of axis.edges) {
    consider(closestOnSegment(axis.vertices[i], axis.vertices[j], p));
  }
  for (const [i, j, k] of axis.triangles) {
    consider(
      closestOnTriangle(
        axis.vertices[i],
        axis.vertices[j],
        axis.vertices[k],
        p,
      ),
    );
  }
  return { point: best, distance: bestD };
}

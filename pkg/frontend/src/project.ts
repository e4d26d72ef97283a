// Meters -> pixels projection and footprint geometry for the top-down view.
// Pure functions: the renderer and hit-testing both build on these, and the
// tests drive them directly.

import type { SceneDoc, SceneObjectDoc } from "./types.js";

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface Projection {
  scale: number; // pixels per meter
  offsetX: number;
  offsetY: number;
}

/** Uniform fit-to-viewport map from room x/z coordinates to canvas pixels. */
export function fitProjection(scene: SceneDoc, viewport: Viewport): Projection {
  const [minX, , minZ] = scene.room_bounds.min;
  const [maxX, , maxZ] = scene.room_bounds.max;
  const spanX = maxX - minX;
  const spanZ = maxZ - minZ;
  const usableW = viewport.width - 2 * viewport.margin;
  const usableH = viewport.height - 2 * viewport.margin;
  const scale = Math.min(usableW / spanX, usableH / spanZ);
  // Center the room; canvas y grows downward while world z grows "front",
  // so z is flipped.
  const offsetX = viewport.width / 2 - scale * (minX + maxX) / 2;
  const offsetY = viewport.height / 2 + scale * (minZ + maxZ) / 2;
  return { scale, offsetX, offsetY };
}

export function toPixels(p: Projection, x: number, z: number): [number, number] {
  return [p.offsetX + p.scale * x, p.offsetY - p.scale * z];
}

export function toWorld(p: Projection, px: number, py: number): [number, number] {
  return [(px - p.offsetX) / p.scale, (p.offsetY - py) / p.scale];
}

/** Counter-clockwise footprint corners of a yaw-rotated object, in meters. */
export function footprintCorners(obj: SceneObjectDoc): [number, number][] {
  const [cx, , cz] = obj.position;
  const hx = obj.half_extents[0];
  const hz = obj.half_extents[2];
  const c = Math.cos(obj.yaw_radians);
  const s = Math.sin(obj.yaw_radians);
  const local: [number, number][] = [
    [hx, hz],
    [-hx, hz],
    [-hx, -hz],
    [hx, -hz],
  ];
  return local.map(([x, z]) => [cx + x * c + z * s, cz - x * s + z * c]);
}

/** Direction the object faces (local +z rotated by yaw), unit vector in x/z. */
export function frontDirection(obj: SceneObjectDoc): [number, number] {
  return [Math.sin(obj.yaw_radians), Math.cos(obj.yaw_radians)];
}

/** Point-in-oriented-box test on the floor plane (world meters). */
export function containsPoint(obj: SceneObjectDoc, x: number, z: number): boolean {
  const dx = x - obj.position[0];
  const dz = z - obj.position[2];
  const c = Math.cos(obj.yaw_radians);
  const s = Math.sin(obj.yaw_radians);
  // Inverse of the footprint rotation.
  const localX = dx * c - dz * s;
  const localZ = dx * s + dz * c;
  return (
    Math.abs(localX) <= obj.half_extents[0] && Math.abs(localZ) <= obj.half_extents[2]
  );
}

/**
 * Topmost object under a canvas point (draw order = list order, so the last
 * hit wins), or null.
 */
export function hitTest(
  scene: SceneDoc,
  projection: Projection,
  px: number,
  py: number,
): SceneObjectDoc | null {
  const [x, z] = toWorld(projection, px, py);
  for (let i = scene.objects.length - 1; i >= 0; i--) {
    if (containsPoint(scene.objects[i], x, z)) {
      return scene.objects[i];
    }
  }
  return null;
}

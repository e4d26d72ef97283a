import { describe, expect, it } from "vitest";

import { demoScene } from "./fake_server.js";
import {
  containsPoint,
  fitProjection,
  footprintCorners,
  frontDirection,
  hitTest,
  toPixels,
  toWorld,
} from "./project.js";

const VIEWPORT = { width: 640, height: 640, margin: 24 };

describe("fitProjection", () => {
  it("maps the room center to the viewport center", () => {
    const scene = demoScene();
    const projection = fitProjection(scene, VIEWPORT);
    const [px, py] = toPixels(projection, 0, 0);
    expect(px).toBeCloseTo(320, 6);
    expect(py).toBeCloseTo(320, 6);
  });

  it("uses a uniform scale that fits the room", () => {
    const scene = demoScene();
    const projection = fitProjection(scene, VIEWPORT);
    expect(projection.scale).toBeCloseTo((640 - 48) / 5, 6);
    const [left] = toPixels(projection, -2.5, 0);
    const [right] = toPixels(projection, 2.5, 0);
    expect(left).toBeGreaterThanOrEqual(VIEWPORT.margin - 1e-9);
    expect(right).toBeLessThanOrEqual(640 - VIEWPORT.margin + 1e-9);
  });

  it("object centers land within 0.5 px of the affine map", () => {
    const scene = demoScene();
    const projection = fitProjection(scene, VIEWPORT);
    for (const obj of scene.objects) {
      const [px, py] = toPixels(projection, obj.position[0], obj.position[2]);
      const expectedX = projection.offsetX + projection.scale * obj.position[0];
      const expectedY = projection.offsetY - projection.scale * obj.position[2];
      expect(Math.abs(px - expectedX)).toBeLessThan(0.5);
      expect(Math.abs(py - expectedY)).toBeLessThan(0.5);
    }
  });

  it("round-trips pixels back to world coordinates", () => {
    const projection = fitProjection(demoScene(), VIEWPORT);
    const [x, z] = toWorld(projection, ...toPixels(projection, 1.25, -0.75));
    expect(x).toBeCloseTo(1.25, 9);
    expect(z).toBeCloseTo(-0.75, 9);
  });
});

describe("footprintCorners", () => {
  it("axis-aligned corners", () => {
    const obj = demoScene().objects[0];
    const corners = footprintCorners(obj);
    expect(corners).toHaveLength(4);
    const xs = corners.map(([x]) => x).sort((a, b) => a - b);
    expect(xs[0]).toBeCloseTo(-0.95, 9);
    expect(xs[3]).toBeCloseTo(0.95, 9);
  });

  it("rotated corners stay at the same center distance", () => {
    const obj = { ...demoScene().objects[0], yaw_radians: Math.PI / 4 };
    const radius = Math.hypot(obj.half_extents[0], obj.half_extents[2]);
    for (const [x, z] of footprintCorners(obj)) {
      expect(Math.hypot(x - obj.position[0], z - obj.position[2])).toBeCloseTo(radius, 9);
    }
  });

  it("front direction at yaw 0 is +z", () => {
    const [fx, fz] = frontDirection(demoScene().objects[0]);
    expect(fx).toBeCloseTo(0, 9);
    expect(fz).toBeCloseTo(1, 9);
  });
});

describe("hit testing", () => {
  it("detects points inside a rotated box", () => {
    const obj = { ...demoScene().objects[1], yaw_radians: Math.PI / 4 };
    expect(containsPoint(obj, obj.position[0], obj.position[2])).toBe(true);
    // A point just beyond the rotated corner radius is outside.
    const r = Math.hypot(obj.half_extents[0], obj.half_extents[2]) + 0.01;
    expect(containsPoint(obj, obj.position[0] + r, obj.position[2])).toBe(false);
  });

  it("click inside an object selects it; void clears", () => {
    const scene = demoScene();
    const projection = fitProjection(scene, VIEWPORT);
    const bed = scene.objects[0];
    const [px, py] = toPixels(projection, bed.position[0], bed.position[2]);
    expect(hitTest(scene, projection, px, py)?.id).toBe("bed_0");
    const [vx, vy] = toPixels(projection, -2.2, 2.2);
    expect(hitTest(scene, projection, vx, vy)).toBeNull();
  });

  it("overlapping objects resolve to the topmost (last drawn)", () => {
    const scene = demoScene();
    scene.objects.push({
      ...scene.objects[0],
      id: "bed_1",
      position: [0.1, 0.45, -1.0],
    });
    const projection = fitProjection(scene, VIEWPORT);
    const [px, py] = toPixels(projection, 0.05, -1.0);
    expect(hitTest(scene, projection, px, py)?.id).toBe("bed_1");
  });
});

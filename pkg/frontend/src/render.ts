// Canvas painter for the top-down view. All geometry comes from project.ts;
// this file only draws.

import {
  fitProjection,
  footprintCorners,
  frontDirection,
  toPixels,
  type Projection,
  type Viewport,
} from "./project.js";
import type { SceneDiff, SceneDoc, SceneObjectDoc } from "./types.js";

const CATEGORY_COLORS = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
  "#edc948", "#b07aa1", "#9c755f", "#bab0ac", "#17becf",
];

function colorFor(obj: SceneObjectDoc, categories: string[]): string {
  const index = Math.max(0, categories.indexOf(obj.category));
  return CATEGORY_COLORS[index % CATEGORY_COLORS.length];
}

function drawPolygon(
  ctx: CanvasRenderingContext2D,
  projection: Projection,
  corners: [number, number][],
): void {
  ctx.beginPath();
  corners.forEach(([x, z], k) => {
    const [px, py] = toPixels(projection, x, z);
    if (k === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
}

export interface RenderOptions {
  categories: string[];
  selectedId?: string | null;
  diff?: SceneDiff | null;
}

export function renderTopdown(
  ctx: CanvasRenderingContext2D,
  scene: SceneDoc,
  viewport: Viewport,
  options: RenderOptions,
): Projection {
  const projection = fitProjection(scene, viewport);
  ctx.clearRect(0, 0, viewport.width, viewport.height);

  // Room bounds.
  const [minX, , minZ] = scene.room_bounds.min;
  const [maxX, , maxZ] = scene.room_bounds.max;
  const bounds: [number, number][] = [
    [minX, minZ], [maxX, minZ], [maxX, maxZ], [minX, maxZ],
  ];
  drawPolygon(ctx, projection, bounds);
  ctx.strokeStyle = "#333";
  ctx.lineWidth = 2;
  ctx.stroke();

  const changed = new Set((options.diff?.changed ?? []).map((c) => c.id));
  const added = new Set((options.diff?.added ?? []).map((a) => a.id));

  // Removed objects: ghost outlines at their old pose.
  for (const entry of options.diff?.removed ?? []) {
    const ghost: SceneObjectDoc = {
      id: entry.id,
      category: "",
      caption: entry.before.caption,
      feature_indices: [],
      position: entry.before.position as [number, number, number],
      half_extents: entry.before.half_extents as [number, number, number],
      yaw_radians: entry.before.yaw_radians,
    };
    drawPolygon(ctx, projection, footprintCorners(ghost));
    ctx.setLineDash([4, 4]);
    ctx.strokeStyle = "#999";
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const obj of scene.objects) {
    const corners = footprintCorners(obj);
    drawPolygon(ctx, projection, corners);
    ctx.globalAlpha = 0.65;
    ctx.fillStyle = colorFor(obj, options.categories);
    ctx.fill();
    ctx.globalAlpha = 1.0;
    ctx.lineWidth = obj.id === options.selectedId ? 3 : added.has(obj.id) ? 2.5 : 1;
    ctx.strokeStyle =
      obj.id === options.selectedId ? "#000" : added.has(obj.id) ? "#2a9d2a" : "#444";
    ctx.stroke();

    // Front tick.
    const [fx, fz] = frontDirection(obj);
    const [cx, cy] = toPixels(projection, obj.position[0], obj.position[2]);
    const [tx, ty] = toPixels(
      projection,
      obj.position[0] + 0.3 * fx,
      obj.position[2] + 0.3 * fz,
    );
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(tx, ty);
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 1;
    ctx.stroke();

    ctx.fillStyle = "#111";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(obj.category, cx, cy - 4);
  }

  // Motion arrows for moved objects.
  for (const entry of options.diff?.changed ?? []) {
    const [x0, y0] = toPixels(projection, entry.before.position[0], entry.before.position[2]);
    const [x1, y1] = toPixels(projection, entry.after.position[0], entry.after.position[2]);
    if (Math.hypot(x1 - x0, y1 - y0) < 1) continue;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.strokeStyle = "#d62728";
    ctx.lineWidth = 1.5;
    ctx.stroke();
    const angle = Math.atan2(y1 - y0, x1 - x0);
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x1 - 7 * Math.cos(angle - 0.4), y1 - 7 * Math.sin(angle - 0.4));
    ctx.moveTo(x1, y1);
    ctx.lineTo(x1 - 7 * Math.cos(angle + 0.4), y1 - 7 * Math.sin(angle + 0.4));
    ctx.stroke();
  }
  void changed;
  return projection;
}

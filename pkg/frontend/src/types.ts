// Wire types mirroring the editing service API.

export interface SceneObjectDoc {
  id: string;
  category: string;
  caption: string;
  feature_indices: number[];
  position: [number, number, number];
  half_extents: [number, number, number];
  yaw_radians: number;
}

export interface SceneDoc {
  room_type: string;
  room_bounds: { min: [number, number, number]; max: [number, number, number] };
  objects: SceneObjectDoc[];
}

export interface Pose {
  position: number[];
  half_extents: number[];
  yaw_radians: number;
  caption: string;
}

export interface SceneDiff {
  added: { id: string; after: Pose }[];
  removed: { id: string; before: Pose }[];
  changed: { id: string; before: Pose; after: Pose }[];
}

export interface CommandResponse {
  scene: SceneDoc;
  applied: string[];
  diff: SceneDiff;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  step?: number;
}

export type Mode = "deterministic" | "diffusion";
export type Backend = "rules" | "llm";

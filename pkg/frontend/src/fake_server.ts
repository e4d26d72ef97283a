// In-memory fake of the editing service for tests: same endpoints, same
// shapes, remove-command semantics only.

import type { SceneDoc, SceneDiff } from "./types.js";

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

interface FakeSession {
  history: SceneDoc[];
}

export class FakeServer {
  sessions = new Map<string, FakeSession>();
  private counter = 0;

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : null;
    const respond = (status: number, payload: unknown): Response =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    let match = url.match(/^\/api\/sessions$/);
    if (match && method === "POST") {
      const id = `s${this.counter++}`;
      this.sessions.set(id, { history: [clone(body.scene as SceneDoc)] });
      return respond(200, { id });
    }
    match = url.match(/^\/api\/sessions\/([^/]+)\/scene$/);
    if (match) {
      const session = this.sessions.get(match[1]);
      if (!session) return respond(404, { code: "unknown_session", message: "nope" });
      return respond(200, { scene: clone(session.history[session.history.length - 1]) });
    }
    match = url.match(/^\/api\/sessions\/([^/]+)\/command$/);
    if (match && method === "POST") {
      const session = this.sessions.get(match[1]);
      if (!session) return respond(404, { code: "unknown_session", message: "nope" });
      const text = (body.text as string).toLowerCase();
      const removeMatch = text.match(/^remove the (.+)$/);
      if (!removeMatch) {
        return respond(422, { code: "unparseable", message: `no rule matches: ${text}` });
      }
      const current = session.history[session.history.length - 1];
      const needle = removeMatch[1];
      const victim = current.objects.find(
        (o) => o.caption.includes(needle) || o.category === needle || o.id === needle,
      );
      if (!victim) {
        return respond(422, { code: "no_match", message: `nothing matches ${needle}`, step: 0 });
      }
      const next: SceneDoc = clone(current);
      next.objects = next.objects.filter((o) => o.id !== victim.id);
      session.history.push(next);
      const diff: SceneDiff = {
        added: [],
        removed: [
          {
            id: victim.id,
            before: {
              position: victim.position,
              half_extents: victim.half_extents,
              yaw_radians: victim.yaw_radians,
              caption: victim.caption,
            },
          },
        ],
        changed: [],
      };
      return respond(200, {
        scene: clone(next),
        applied: [`Remove ${victim.caption}`],
        diff,
      });
    }
    match = url.match(/^\/api\/sessions\/([^/]+)\/undo$/);
    if (match && method === "POST") {
      const session = this.sessions.get(match[1]);
      if (!session) return respond(404, { code: "unknown_session", message: "nope" });
      if (session.history.length <= 1) {
        return respond(409, { code: "history_root", message: "nothing to undo" });
      }
      session.history.pop();
      return respond(200, { scene: clone(session.history[session.history.length - 1]) });
    }
    if (url === "/api/catalog") {
      return respond(200, { categories: ["bed", "lamp", "chair"], n_f: 4 });
    }
    return respond(404, { code: "not_found", message: url });
  };
}

export function demoScene(): SceneDoc {
  return {
    room_type: "toy",
    room_bounds: { min: [-2.5, 0, -2.5], max: [2.5, 3, 2.5] },
    objects: [
      {
        id: "bed_0",
        category: "bed",
        caption: "a wooden double bed",
        feature_indices: [1, 2, 3, 4],
        position: [0.0, 0.45, -1.0],
        half_extents: [0.95, 0.45, 1.05],
        yaw_radians: 0.0,
      },
      {
        id: "lamp_0",
        category: "lamp",
        caption: "a brass floor lamp",
        feature_indices: [5, 6, 7, 8],
        position: [1.8, 0.8, 1.2],
        half_extents: [0.18, 0.8, 0.18],
        yaw_radians: 0.7,
      },
    ],
  };
}

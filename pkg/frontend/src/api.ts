// Thin client for the editing-session HTTP API. The fetch implementation is
// injectable so tests can run against an in-memory fake server.

import type { Backend, CommandResponse, Mode, SceneDoc } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public step?: number,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status}`;
  let step: number | undefined;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? JSON.stringify(body);
    step = body.step;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message, step);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createSession(scene: SceneDoc): Promise<string> {
    const body = await this.post<{ id: string }>("/api/sessions", { scene });
    return body.id;
  }

  async getScene(sessionId: string): Promise<SceneDoc> {
    const body = await this.request<{ scene: SceneDoc }>(
      `/api/sessions/${sessionId}/scene`,
    );
    return body.scene;
  }

  async sendCommand(
    sessionId: string,
    text: string,
    mode: Mode,
    backend: Backend,
  ): Promise<CommandResponse> {
    return this.post<CommandResponse>(`/api/sessions/${sessionId}/command`, {
      text,
      mode,
      backend,
    });
  }

  async undo(sessionId: string): Promise<SceneDoc> {
    const body = await this.post<{ scene: SceneDoc }>(
      `/api/sessions/${sessionId}/undo`,
      {},
    );
    return body.scene;
  }

  async getCatalog(): Promise<unknown> {
    return this.request("/api/catalog");
  }
}

// View-state controller: the rendered scene is always the last server
// response, one mutation may be in flight at a time, and failures leave the
// view untouched (with the error surfaced).

import { ApiClient, ApiError } from "./api.js";
import type { Backend, Mode, SceneDiff, SceneDoc } from "./types.js";

export interface ViewState {
  sessionId: string | null;
  scene: SceneDoc | null;
  selectedId: string | null;
  historyDepth: number;
  pending: boolean;
  lastDiff: SceneDiff | null;
  lastApplied: string[];
  error: string | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    scene: null,
    selectedId: null,
    historyDepth: 0,
    pending: false,
    lastDiff: null,
    lastApplied: [],
    error: null,
  };
}

export class SessionController {
  state: ViewState = initialState();
  mode: Mode = "deterministic";
  backend: Backend = "rules";

  constructor(
    private api: ApiClient,
    private onChange: (state: ViewState) => void = () => {},
  ) {}

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async start(scene: SceneDoc): Promise<void> {
    const sessionId = await this.api.createSession(scene);
    const current = await this.api.getScene(sessionId);
    this.update({
      sessionId,
      scene: current,
      historyDepth: 1,
      lastDiff: null,
      lastApplied: [],
      selectedId: null,
      error: null,
    });
  }

  /** True when a mutation may be submitted right now. */
  canSubmit(): boolean {
    return this.state.sessionId !== null && !this.state.pending;
  }

  canUndo(): boolean {
    return this.state.historyDepth > 1 && !this.state.pending;
  }

  async submitCommand(text: string): Promise<boolean> {
    if (!this.canSubmit()) {
      return false;
    }
    const sessionId = this.state.sessionId!;
    this.update({ pending: true, error: null });
    try {
      const response = await this.api.sendCommand(sessionId, text, this.mode, this.backend);
      this.update({
        pending: false,
        scene: response.scene,
        lastDiff: response.diff,
        lastApplied: response.applied,
        historyDepth: this.state.historyDepth + 1,
      });
      return true;
    } catch (error) {
      const message =
        error instanceof ApiError
          ? error.step !== undefined
            ? `step ${error.step + 1} failed: ${error.message}`
            : error.message
          : String(error);
      this.update({ pending: false, error: message });
      return false;
    }
  }

  async undo(): Promise<boolean> {
    if (!this.canUndo()) {
      return false;
    }
    const sessionId = this.state.sessionId!;
    this.update({ pending: true, error: null });
    try {
      const scene = await this.api.undo(sessionId);
      this.update({
        pending: false,
        scene,
        lastDiff: null,
        lastApplied: [],
        historyDepth: this.state.historyDepth - 1,
      });
      return true;
    } catch (error) {
      this.update({
        pending: false,
        error: error instanceof ApiError ? error.message : String(error),
      });
      return false;
    }
  }

  select(objectId: string | null): void {
    this.update({ selectedId: objectId });
  }
}

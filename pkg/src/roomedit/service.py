"""HTTP editing-session service.

Sessions hold a bounded history of scenes; commands run through the
parameterizer and then the deterministic executor (or the diffusion editor
when checkpoints are configured). A command either fully applies (all
breakdown steps) and pushes exactly one history entry, or leaves the session
untouched and reports the failing step.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .catalog import ObjectCatalog, catalog_to_doc, default_catalog
from .commands import format_template_command
from .editor import EditError, NoMatch, apply_edit
from .parameterizer import NoValidCommands, Unparseable, parameterize
from .relations import RELATION_PHRASES
from .scene import Scene, extract_scene_graph
from .sceneio import SceneFormatError, scene_from_doc, scene_to_doc

HISTORY_LIMIT = 50


@dataclass
class Session:
    id: str
    history: list[Scene]
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current(self) -> Scene:
        return self.history[-1]


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, step: int | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.step = step

    def response(self) -> JSONResponse:
        body = {"code": self.code, "message": self.message}
        if self.step is not None:
            body["step"] = self.step
        return JSONResponse(status_code=self.status, content=body)


def scene_diff(before: Scene, after: Scene) -> dict:
    """Added/removed/changed object ids with before/after poses."""

    def pose(obj):
        return {
            "position": list(obj.position),
            "half_extents": list(obj.half_extents),
            "yaw_radians": obj.yaw,
            "caption": obj.caption,
        }

    old = {o.id: o for o in before.objects}
    new = {o.id: o for o in after.objects}
    added = [oid for oid in new if oid not in old]
    removed = [oid for oid in old if oid not in new]
    changed = []
    for oid in new:
        if oid in old and new[oid] != old[oid]:
            changed.append({"id": oid, "before": pose(old[oid]), "after": pose(new[oid])})
    return {
        "added": [{"id": oid, "after": pose(new[oid])} for oid in added],
        "removed": [{"id": oid, "before": pose(old[oid])} for oid in removed],
        "changed": changed,
    }


@dataclass
class DiffusionBundle:
    graph_params: dict
    graph_config: object
    layout_params: dict
    layout_config: object


class SessionService:
    """Session store plus command execution; thread-safe per session."""

    def __init__(
        self,
        catalog: ObjectCatalog | None = None,
        diffusion: DiffusionBundle | None = None,
        snapshot_dir: str | None = None,
        llm_client=None,
    ):
        self.catalog = catalog or default_catalog()
        self.diffusion = diffusion
        self.snapshot_dir = snapshot_dir
        self.llm_client = llm_client
        self._sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()

    def _get(self, session_id: str) -> Session:
        with self._store_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def _snapshot(self, session: Session) -> None:
        if not self.snapshot_dir:
            return
        from .sceneio import serialize_scene

        directory = os.path.join(self.snapshot_dir, session.id)
        os.makedirs(directory, exist_ok=True)
        index = len(session.history) - 1
        path = os.path.join(directory, f"{index:04d}.json")
        with open(path, "wb") as fh:
            fh.write(serialize_scene(session.current, self.catalog))

    def create_session(self, scene_doc) -> str:
        try:
            scene = scene_from_doc(scene_doc, self.catalog)
        except SceneFormatError as exc:
            raise ApiError(400, "invalid_scene", str(exc)) from None
        session = Session(id=uuid.uuid4().hex, history=[scene])
        with self._store_lock:
            self._sessions[session.id] = session
        self._snapshot(session)
        return session.id

    def get_scene(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return scene_to_doc(session.current, self.catalog)

    def get_graph(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            scene = session.current
        graph = extract_scene_graph(scene, self.catalog)
        nodes = []
        for i in range(graph.m):
            if not graph.node_mask[i]:
                continue
            nodes.append(
                {
                    "index": i,
                    "id": scene.objects[i].id,
                    "category": self.catalog.categories[graph.node_categories[i]],
                    "caption": scene.objects[i].caption,
                    "feature_indices": list(graph.node_feature_indices[i]),
                }
            )
        edges = []
        from .relations import SpatialRelation
        from .scene import edge_pairs

        for (i, j), rel in zip(edge_pairs(graph.m), graph.edges):
            if rel != SpatialRelation.NONE:
                edges.append(
                    {"subject": i, "object": j, "relation": RELATION_PHRASES[rel]}
                )
        return {"max_nodes": graph.m, "nodes": nodes, "edges": edges}

    def _run_deterministic(self, scene: Scene, commands) -> Scene:
        for step, cmd in enumerate(commands):
            try:
                scene = apply_edit(scene, cmd, self.catalog)
            except NoMatch as exc:
                raise ApiError(422, "no_match", str(exc), step=step) from None
            except (EditError, ValueError) as exc:
                raise ApiError(422, "edit_failed", str(exc), step=step) from None
        return scene

    def _run_diffusion(self, scene: Scene, commands) -> Scene:
        if self.diffusion is None:
            raise ApiError(501, "diffusion_unavailable", "no diffusion checkpoints loaded")
        import numpy as np

        from .diffusion.sampling import edit_with_diffusion

        rng = np.random.default_rng()
        for step, cmd in enumerate(commands):
            try:
                scene, _ = edit_with_diffusion(
                    scene,
                    format_template_command(cmd),
                    self.diffusion.graph_params,
                    self.diffusion.graph_config,
                    self.diffusion.layout_params,
                    self.diffusion.layout_config,
                    self.catalog,
                    rng,
                )
            except Exception as exc:
                raise ApiError(422, "diffusion_failed", str(exc), step=step) from None
        return scene

    def apply_command(
        self, session_id: str, text: str, mode: str = "deterministic", backend: str = "rules"
    ) -> dict:
        session = self._get(session_id)
        if mode not in ("deterministic", "diffusion"):
            raise ApiError(400, "bad_mode", f"unknown mode {mode!r}")
        with session.lock:
            before = session.current
            try:
                plan = parameterize(
                    before, text, self.catalog, backend=backend, llm_client=self.llm_client
                )
            except (Unparseable, NoValidCommands) as exc:
                raise ApiError(422, "unparseable", str(exc)) from None
            except ValueError as exc:
                raise ApiError(400, "bad_backend", str(exc)) from None
            except Exception as exc:
                raise ApiError(502, "llm_transport", str(exc)) from None
            if mode == "deterministic":
                after = self._run_deterministic(before, plan.commands)
            else:
                after = self._run_diffusion(before, plan.commands)
            session.history.append(after)
            if len(session.history) > HISTORY_LIMIT:
                session.history.pop(0)
            self._snapshot(session)
            return {
                "scene": scene_to_doc(after, self.catalog),
                "applied": plan.template_lines(),
                "diff": scene_diff(before, after),
            }

    def undo(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if len(session.history) <= 1:
                raise ApiError(409, "history_root", "nothing to undo")
            session.history.pop()
            return scene_to_doc(session.current, self.catalog)


def create_app(service: SessionService | None = None) -> FastAPI:
    service = service or SessionService()
    app = FastAPI(title="roomedit", version="0.1.0")
    app.state.service = service

    try:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )
    except Exception:  # CORS is a convenience, not a requirement
        pass

    @app.exception_handler(ApiError)
    async def handle_api_error(_, exc: ApiError):
        return exc.response()

    @app.post("/api/sessions")
    def create_session(body: dict):
        if "scene" not in body:
            raise ApiError(400, "invalid_scene", "body needs a 'scene' field")
        return {"id": service.create_session(body["scene"])}

    @app.get("/api/sessions/{session_id}/scene")
    def get_scene(session_id: str):
        return {"scene": service.get_scene(session_id)}

    @app.get("/api/sessions/{session_id}/graph")
    def get_graph(session_id: str):
        return service.get_graph(session_id)

    @app.post("/api/sessions/{session_id}/command")
    def post_command(session_id: str, body: dict):
        text = body.get("text", "")
        mode = body.get("mode", "deterministic")
        backend = body.get("backend", "rules")
        return service.apply_command(session_id, text, mode=mode, backend=backend)

    @app.post("/api/sessions/{session_id}/undo")
    def post_undo(session_id: str):
        return {"scene": service.undo(session_id)}

    @app.get("/api/catalog")
    def get_catalog():
        return catalog_to_doc(service.catalog)

    return app

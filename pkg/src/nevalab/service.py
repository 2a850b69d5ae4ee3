"""Click-contingent caption collection over HTTP.

Participants see only blurred images; a click reveals the clean content
inside a disk of one degree of visual angle around the click (two degrees
across), with a soft Gaussian edge.  The clean image is never shipped to
the client: each click returns a rectangular cutout whose RGB is the
server-side composite of the clean image against the blur under the
cumulative reveal mask of all clicks so far, so unrevealed regions stay
blurred even if the client inspects the payload.  Captions (or skips)
append Observation records to a JSONL log that the dataset loader ingests
unchanged.

Endpoints (JSON; images as base64 PNG):
    POST /session                    -> {session_id, total_images}
    GET  /session/{id}/image         -> {image_id, blurred_png, width, height, clicks_used}
    POST /session/{id}/click {x, y}  -> {patch_png, patch_origin, clicks_remaining}
    POST /session/{id}/caption {text}-> {next}
    POST /session/{id}/skip          -> {next}
"""

from __future__ import annotations

import base64
import io
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .dataset import DEFAULT_PIXELS_PER_DEGREE
from .experiment import load_image_pool
from .foveation import coarse
from .models import stable_seed
from .types import Fixation, Observation, Scanpath, Stimulus, observation_to_dict

MAX_CLICKS = 10
MAX_SESSION_IMAGES = 50


@dataclass
class ServiceConfig:
    images_dir: Path
    output_path: Path
    pixels_per_degree: float = DEFAULT_PIXELS_PER_DEGREE
    blur_sigma: float = 16.0
    edge_sigma: float | None = None  # defaults to one degree, like the engine fovea
    session_ttl_hours: float = 24.0
    seed: int = 0
    ui_dir: Path | None = None  # built frontend to serve at /

    @property
    def reveal_radius(self) -> float:
        """Disk radius: two degrees of visual angle across."""
        return self.pixels_per_degree

    @property
    def soft_edge_sigma(self) -> float:
        return self.edge_sigma if self.edge_sigma is not None else self.pixels_per_degree


@dataclass
class SessionState:
    session_id: str
    image_queue: list[str]
    current_index: int = 0
    clicks: list[Fixation] = field(default_factory=list)
    reveal_mask: np.ndarray | None = None
    fetched: bool = False
    last_click_ms: float = 0.0
    last_active: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def exhausted(self) -> bool:
        return self.current_index >= len(self.image_queue)

    @property
    def current_image(self) -> str:
        return self.image_queue[self.current_index]


class ClickBody(BaseModel):
    x: float
    y: float


class CaptionBody(BaseModel):
    text: str


def _png_b64(array: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class CollectionService:
    """Owns the image pool, per-session state, and the observation log."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.pool = load_image_pool(config.images_dir)
        self.sessions: dict[str, SessionState] = {}
        self._stimuli: dict[str, Stimulus] = {}
        self._blurred: dict[str, np.ndarray] = {}
        self._log_lock = threading.Lock()
        self._sessions_lock = threading.Lock()
        Path(config.output_path).parent.mkdir(parents=True, exist_ok=True)

    # -- image cache ------------------------------------------------------

    def stimulus(self, image_id: str) -> Stimulus:
        if image_id not in self._stimuli:
            self._stimuli[image_id] = Stimulus.from_file(self.pool[image_id], image_id=image_id)
        return self._stimuli[image_id]

    def blurred(self, image_id: str) -> np.ndarray:
        if image_id not in self._blurred:
            stim = self.stimulus(image_id)
            self._blurred[image_id] = coarse(stim, self.config.blur_sigma).pixels
        return self._blurred[image_id]

    # -- session helpers --------------------------------------------------

    def create_session(self) -> SessionState:
        if not self.pool:
            raise HTTPException(status_code=503, detail="no images configured")
        session_id = secrets.token_urlsafe(16)
        order = sorted(self.pool)
        rng = np.random.default_rng(stable_seed(self.config.seed, "session", session_id))
        rng.shuffle(order)
        state = SessionState(session_id=session_id,
                             image_queue=order[:MAX_SESSION_IMAGES])
        with self._sessions_lock:
            self.sessions[session_id] = state
        return state

    def session(self, session_id: str) -> SessionState:
        state = self.sessions.get(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        if time.time() - state.last_active > self.config.session_ttl_hours * 3600:
            with self._sessions_lock:
                self.sessions.pop(session_id, None)
            raise HTTPException(status_code=404, detail="session expired")
        state.last_active = time.time()
        return state

    def _persist(self, state: SessionState, caption: str, skipped: bool) -> None:
        image_id = state.current_image
        clicks = None
        if state.clicks:
            clicks = Scanpath(image_id=image_id, fixations=tuple(state.clicks),
                              source="human_click", model_tag="human")
        obs = Observation(session_id=state.session_id, image_id=image_id,
                          clicks=clicks, caption=caption, skipped=skipped)
        line = json.dumps(observation_to_dict(obs), ensure_ascii=False)
        with self._log_lock:
            with Path(self.config.output_path).open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def _advance(self, state: SessionState) -> bool:
        state.current_index += 1
        state.clicks = []
        state.reveal_mask = None
        state.fetched = False
        state.last_click_ms = 0.0
        return not state.exhausted


def create_app(config: ServiceConfig) -> FastAPI:
    service = CollectionService(config)
    app = FastAPI(title="nevalab caption collection")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.service = service

    @app.post("/session")
    def open_session():
        state = service.create_session()
        return {"session_id": state.session_id, "total_images": len(state.image_queue)}

    @app.get("/session/{session_id}/image")
    def current_image(session_id: str):
        state = service.session(session_id)
        with state.lock:
            if state.exhausted:
                raise HTTPException(status_code=410, detail="session queue exhausted")
            image_id = state.current_image
            blurred = service.blurred(image_id)
            state.fetched = True
            h, w = blurred.shape[:2]
            return {
                "image_id": image_id,
                "blurred_png": _png_b64((blurred * 255).astype(np.uint8)),
                "width": w,
                "height": h,
                "clicks_used": len(state.clicks),
            }

    @app.post("/session/{session_id}/click")
    def click(session_id: str, body: ClickBody):
        state = service.session(session_id)
        with state.lock:
            if state.exhausted:
                raise HTTPException(status_code=410, detail="session queue exhausted")
            if not state.fetched:
                raise HTTPException(status_code=409, detail="image not fetched yet")
            if len(state.clicks) >= MAX_CLICKS:
                raise HTTPException(status_code=409, detail="click budget exhausted")
            stim = service.stimulus(state.current_image)
            if not (0 <= body.x < stim.width and 0 <= body.y < stim.height):
                raise HTTPException(status_code=422, detail="click outside image bounds")

            now_ms = time.time() * 1000.0
            if now_ms <= state.last_click_ms:  # keep timestamps strictly increasing
                now_ms = state.last_click_ms + 1.0
            state.last_click_ms = now_ms
            state.clicks.append(Fixation(body.x, body.y, timestamp=now_ms))

            patch_png, origin = _reveal_patch(service, state, stim, body.x, body.y)
            return {
                "patch_png": patch_png,
                "patch_origin": origin,
                "clicks_remaining": MAX_CLICKS - len(state.clicks),
            }

    @app.post("/session/{session_id}/caption")
    def caption(session_id: str, body: CaptionBody):
        state = service.session(session_id)
        with state.lock:
            if state.exhausted:
                raise HTTPException(status_code=410, detail="session queue exhausted")
            if not state.fetched:
                raise HTTPException(status_code=409, detail="image already submitted")
            if not body.text:
                raise HTTPException(status_code=422, detail="caption must be non-empty")
            service._persist(state, caption=body.text, skipped=False)
            return {"next": service._advance(state)}

    @app.post("/session/{session_id}/skip")
    def skip(session_id: str):
        state = service.session(session_id)
        with state.lock:
            if state.exhausted:
                raise HTTPException(status_code=410, detail="session queue exhausted")
            if not state.fetched:
                raise HTTPException(status_code=409, detail="image already submitted")
            service._persist(state, caption="", skipped=True)
            return {"next": service._advance(state)}

    if config.ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(config.ui_dir), html=True), name="ui")

    return app


def _reveal_patch(
    service: CollectionService, state: SessionState, stim: Stimulus, x: float, y: float
) -> tuple[str, list[int]]:
    """Composite the cumulative reveal and cut out the new click's region.

    The reveal mask is 1 inside the click disk and falls off as a Gaussian
    beyond it; masks accumulate across clicks (maximum), so re-clicking a
    revealed spot returns the same pixels.  The cutout's alpha is the disk
    plus its soft edge, hard zero outside, and its RGB blends clean over
    blur by the cumulative mask, never exposing unrevealed content.
    """
    cfg = service.config
    radius = cfg.reveal_radius
    sigma = cfg.soft_edge_sigma
    h, w = stim.height, stim.width

    yy, xx = np.ogrid[0:h, 0:w]
    dist = np.sqrt((xx - x) ** 2 + (yy - y) ** 2)
    mask = np.where(dist <= radius, 1.0,
                    np.exp(-((dist - radius) ** 2) / (2.0 * sigma * sigma)))
    if state.reveal_mask is None:
        state.reveal_mask = mask
    else:
        state.reveal_mask = np.maximum(state.reveal_mask, mask)

    outer = radius + 3.0 * sigma
    x0, x1 = max(int(x - outer), 0), min(int(np.ceil(x + outer)) + 1, w)
    y0, y1 = max(int(y - outer), 0), min(int(np.ceil(y + outer)) + 1, h)

    cum = state.reveal_mask[y0:y1, x0:x1]
    clean = stim.pixels[y0:y1, x0:x1]
    blur = service.blurred(stim.image_id)[y0:y1, x0:x1]
    rgb = cum[:, :, None] * clean + (1.0 - cum[:, :, None]) * blur
    alpha = (dist[y0:y1, x0:x1] <= outer).astype(np.float64)

    rgba = np.dstack([(rgb * 255).astype(np.uint8), (alpha * 255).astype(np.uint8)])
    return _png_b64(rgba), [x0, y0]


def run_service(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port)

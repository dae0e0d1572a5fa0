"""HTTP facade for the labeling workflow and solver runs.

Session state machine: GET /api/candidate samples one proposal draw and
makes it pending; POST /api/label records the pending draw (flushed to the
session's CSV before the response) and clears it.  Fetching with a pending
candidate, or labeling without one, yields 409.  Solves run on background
threads and are polled by run id.  Malformed bodies yield 400.

Sessions are addressed by the optional ``session`` query parameter
(default "default"); each gets its own CSV file under the data directory
and its own deterministic sample stream derived from the config seed.
"""

from __future__ import annotations

import random
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .artifacts import report_dict, trajectory_lists
from .config import RunConfig
from .ellipsoid import Ellipsoid, ellipsoid_to_dict, mahalanobis
from .ets import EtsConfig, ets_solve, point_solve
from .synthesis import DATASET_HEADER, Dataset, LabeledSample, dataset_csv_rows, \
    format_float, mvn_sample, synthesize_ellipsoid

MIN_LABELED_FOR_SYNTHESIS = 10


@dataclass
class Session:
    session_id: str
    rng: random.Random
    csv_path: Path
    dataset: Dataset = field(default_factory=lambda: Dataset(dimension=4))
    pending: Optional[np.ndarray] = None
    ellipsoid: Optional[Ellipsoid] = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


async def _json_body(request: Request) -> Optional[dict]:
    try:
        body = await request.json()
    except Exception:
        return None
    return body if isinstance(body, dict) else None


def create_app(config: RunConfig, data_dir: Path) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="etsddp labeling service")

    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    runs: dict[str, dict] = {}
    runs_lock = threading.Lock()
    run_counter = [0]

    def get_session(name: str) -> Session:
        with sessions_lock:
            if name not in sessions:
                seed = (config.seed << 16) ^ zlib.crc32(name.encode("utf-8"))
                csv_path = data_dir / f"{name}.csv"
                session = Session(session_id=name, rng=random.Random(seed),
                                  csv_path=csv_path)
                if not csv_path.exists():
                    csv_path.write_text(",".join(DATASET_HEADER) + "\n",
                                        encoding="utf-8")
                sessions[name] = session
            return sessions[name]

    def append_row(session: Session, sample: LabeledSample) -> None:
        cells = [format_float(v) for v in sample.point]
        cells.append("1" if sample.accepted else "0")
        cells.append(format_float(sample.timestamp))
        with open(session.csv_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cells) + "\n")
            fh.flush()

    @app.get("/api/candidate")
    def candidate(session: str = "default"):
        sess = get_session(session)
        with sess.lock:
            if sess.pending is not None:
                return _error(409, "label the pending candidate first")
            draw = mvn_sample(config.proposal.mean, config.proposal.cov, sess.rng)
            sess.pending = draw
            return {"candidate": [float(v) for v in draw]}

    @app.post("/api/label")
    async def label(request: Request, session: str = "default"):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("accepted"), bool):
            return _error(400, "body must be a JSON object with boolean 'accepted'")
        sess = get_session(session)
        with sess.lock:
            if sess.pending is None:
                return _error(409, "no pending candidate; fetch one first")
            sample = LabeledSample(point=sess.pending, accepted=body["accepted"],
                                   timestamp=time.time())
            sess.dataset.append(sample)
            append_row(sess, sample)
            sess.pending = None
            return {"accepted": sess.dataset.accepted_count,
                    "rejected": sess.dataset.rejected_count}

    @app.get("/api/dataset")
    def dataset(session: str = "default"):
        sess = get_session(session)
        with sess.lock:
            content = "\n".join(dataset_csv_rows(sess.dataset)) + "\n"
        return PlainTextResponse(content, media_type="text/csv")

    @app.post("/api/ellipsoid")
    async def ellipsoid(request: Request, session: str = "default"):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("alpha"), (int, float)) \
                or isinstance(body.get("alpha"), bool):
            return _error(400, "body must be a JSON object with numeric 'alpha'")
        alpha = float(body["alpha"])
        if not 0.0 < alpha < 1.0:
            return _error(400, "alpha must lie strictly between 0 and 1")
        sess = get_session(session)
        with sess.lock:
            if sess.dataset.accepted_count < MIN_LABELED_FOR_SYNTHESIS:
                return _error(409, f"need at least {MIN_LABELED_FOR_SYNTHESIS} "
                                   f"accepted samples, have "
                                   f"{sess.dataset.accepted_count}")
            try:
                fitted = synthesize_ellipsoid(sess.dataset, alpha,
                                              min_samples=MIN_LABELED_FOR_SYNTHESIS)
            except ValueError as exc:
                return _error(409, str(exc))
            sess.ellipsoid = fitted
            return ellipsoid_to_dict(fitted)

    def run_solve(run_id: str, method: str, x0: np.ndarray,
                  target: Optional[Ellipsoid]) -> None:
        try:
            if method == "point":
                point = config.target_point if config.target_point is not None \
                    else config.eval_point
                report = point_solve(x0, config.car, point, config.solver,
                                     eval_point=config.eval_point)
            else:
                cfg = EtsConfig(base=config.solver, target=target,
                                mode=config.projection_mode,
                                eval_point=config.eval_point,
                                interior_margin=config.interior_margin,
                                exact_curvature=config.exact_curvature)
                report = ets_solve(x0, config.car, cfg)
            payload = report_dict(report, method)
            payload["trajectory"] = trajectory_lists(report.trajectory)
            if target is not None:
                payload["terminal_mahalanobis"] = float(
                    mahalanobis(report.trajectory.states[-1], target))
            with runs_lock:
                runs[run_id] = {"status": "done", "report": payload}
        except Exception as exc:  # report solver errors to the poller
            with runs_lock:
                runs[run_id] = {"status": "failed", "error": str(exc)}

    @app.post("/api/solve")
    async def solve_endpoint(request: Request, session: str = "default"):
        body = await _json_body(request)
        if body is None:
            return _error(400, "body must be a JSON object")
        method = body.get("method", "ets")
        if method not in ("ets", "point"):
            return _error(400, "method must be 'ets' or 'point'")
        try:
            x0 = np.asarray(body.get("initial_state", config.initial_state),
                            dtype=float).reshape(4)
        except (TypeError, ValueError):
            return _error(400, "initial_state must be a list of 4 numbers")
        sess = get_session(session)
        target = None
        if method == "ets":
            with sess.lock:
                target = sess.ellipsoid or config.target_ellipsoid
            if target is None:
                return _error(409, "synthesize an ellipsoid before an ets solve")
        with runs_lock:
            run_counter[0] += 1
            run_id = f"run-{run_counter[0]}"
            runs[run_id] = {"status": "running"}
        thread = threading.Thread(target=run_solve,
                                  args=(run_id, method, x0, target), daemon=True)
        thread.start()
        return {"run_id": run_id}

    @app.get("/api/run/{run_id}")
    def run_status(run_id: str):
        with runs_lock:
            state = runs.get(run_id)
            if state is None:
                return _error(404, f"unknown run id {run_id}")
            return dict(state)

    @app.get("/api/scene")
    def scene():
        payload = config.scene.as_dict()
        payload["wheel_base"] = config.car.wheel_base
        return payload

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

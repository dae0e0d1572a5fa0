"""Run configuration: one JSON document describing a benchmark run.

All physical units are SI and angles are radians.  Every field has a
default matching the parking benchmark (horizon 500, start (3, 3, 3pi/2, 0),
steering in [-0.5, 0.5], acceleration in [-2, 2]), so an empty document is a
valid point-target run.  Exactly one target kind may be given: a point, an
ellipsoid (inline or a JSON file path), or a labeled dataset plus a
significance level to synthesize from.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .car import BOX_LOWER, BOX_UPPER, CarParams
from .ellipsoid import Ellipsoid, ProjectionMode, ellipsoid_from_dict, \
    read_ellipsoid_json
from .solver import SolverConfig
from .synthesis import read_dataset_csv, synthesize_ellipsoid

DEFAULT_INITIAL_STATE = (3.0, 3.0, 3.0 * math.pi / 2.0, 0.0)
DEFAULT_PROPOSAL_COV_DIAG = (0.1, 0.1, (15.0 * math.pi / 180.0) ** 2, 1e-5)


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending field name."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"config field '{fieldname}': {message}")
        self.fieldname = fieldname


@dataclass(frozen=True)
class ProposalConfig:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class SceneConfig:
    """Rendering geometry for the labeling UI; not part of the physics."""

    parking_area: tuple[float, float, float, float] = (-1.25, -2.5, 1.25, 2.5)
    car_length: float = 3.4
    car_width: float = 1.8
    rear_overhang: float = 0.7

    def as_dict(self) -> dict:
        return {"parking_area": list(self.parking_area),
                "car_length": self.car_length,
                "car_width": self.car_width,
                "rear_overhang": self.rear_overhang}


@dataclass
class RunConfig:
    car: CarParams
    solver: SolverConfig
    initial_state: np.ndarray
    eval_point: np.ndarray
    projection_mode: ProjectionMode
    seed: int
    out_dir: Optional[Path]
    proposal: ProposalConfig
    scene: SceneConfig
    target_point: Optional[np.ndarray] = None
    target_ellipsoid: Optional[Ellipsoid] = None
    target_dataset: Optional[Path] = None
    alpha: float = 0.01
    min_samples: Optional[int] = None
    interior_margin: float = 0.5
    exact_curvature: bool = True

    @property
    def target_kind(self) -> str:
        if self.target_point is not None:
            return "point"
        if self.target_ellipsoid is not None:
            return "ellipsoid"
        return "dataset"

    def resolve_ellipsoid(self) -> Ellipsoid:
        """The set target, synthesizing from the dataset when needed."""
        if self.target_ellipsoid is not None:
            return self.target_ellipsoid
        if self.target_dataset is not None:
            data = read_dataset_csv(self.target_dataset)
            return synthesize_ellipsoid(data, self.alpha, self.min_samples)
        raise ConfigError("target", "a set-targeted run needs an ellipsoid or dataset target")


def _expect(condition: bool, fieldname: str, message: str) -> None:
    if not condition:
        raise ConfigError(fieldname, message)


def _vector(value: Any, fieldname: str, size: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float).reshape(size)
    except (TypeError, ValueError):
        raise ConfigError(fieldname, f"expected a list of {size} numbers") from None
    _expect(bool(np.isfinite(arr).all()), fieldname, "entries must be finite")
    return arr


def _check_keys(section: dict, allowed: set[str], prefix: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{prefix}{sorted(unknown)[0]}", "unknown field")


def parse_run_config(doc: dict, base_dir: Path | str = ".") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    base_dir = Path(base_dir)
    _check_keys(doc, {"seed", "initial_state", "eval_point", "projection_mode",
                      "interior_margin", "exact_curvature",
                      "car", "solver", "target", "proposal", "scene", "out_dir"},
                "")

    seed = doc.get("seed", 0)
    _expect(isinstance(seed, int), "seed", "must be an integer")

    initial_state = _vector(doc.get("initial_state", DEFAULT_INITIAL_STATE),
                            "initial_state", 4)
    eval_point = _vector(doc.get("eval_point", (0.0, 0.0, 0.0, 0.0)),
                         "eval_point", 4)

    mode_name = doc.get("projection_mode", "sigma_scaled")
    try:
        projection_mode = ProjectionMode(mode_name)
    except ValueError:
        raise ConfigError("projection_mode",
                          f"must be one of {[m.value for m in ProjectionMode]}") from None

    interior_margin = doc.get("interior_margin", 0.5)
    _expect(isinstance(interior_margin, (int, float))
            and not isinstance(interior_margin, bool)
            and 0.0 <= float(interior_margin) < 1.0,
            "interior_margin", "must be a number in [0, 1)")
    exact_curvature = doc.get("exact_curvature", True)
    _expect(isinstance(exact_curvature, bool), "exact_curvature",
            "must be a boolean")

    car_doc = doc.get("car", {})
    _check_keys(car_doc, {"wheel_base", "dt", "q1", "q2", "r1", "r2",
                          "mu1", "mu2", "mu3", "mu4"}, "car.")
    try:
        car = CarParams(**car_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError("car", str(exc)) from None

    solver_doc = dict(doc.get("solver", {}))
    _check_keys(solver_doc, {"horizon", "max_iterations", "cost_tolerance",
                             "reg_init", "reg_min", "reg_max", "reg_decrease",
                             "reg_increase", "line_search_steps",
                             "use_second_order_dynamics",
                             "control_lower", "control_upper"}, "solver.")
    solver_doc.setdefault("horizon", 500)
    solver_doc.setdefault("control_lower", list(BOX_LOWER))
    solver_doc.setdefault("control_upper", list(BOX_UPPER))
    if solver_doc["control_lower"] is not None:
        solver_doc["control_lower"] = _vector(solver_doc["control_lower"],
                                              "solver.control_lower", 2)
    if solver_doc["control_upper"] is not None:
        solver_doc["control_upper"] = _vector(solver_doc["control_upper"],
                                              "solver.control_upper", 2)
    if "line_search_steps" in solver_doc:
        solver_doc["line_search_steps"] = tuple(solver_doc["line_search_steps"])
    try:
        solver = SolverConfig(**solver_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError("solver", str(exc)) from None

    target_doc = doc.get("target", {"point": [0.0, 0.0, 0.0, 0.0]})
    _check_keys(target_doc, {"point", "ellipsoid", "dataset", "alpha",
                             "min_samples"}, "target.")
    kinds = [k for k in ("point", "ellipsoid", "dataset") if k in target_doc]
    _expect(len(kinds) == 1, "target",
            "exactly one of point, ellipsoid, dataset must be given")
    target_point = target_ellipsoid = target_dataset = None
    alpha = target_doc.get("alpha", 0.01)
    _expect(isinstance(alpha, (int, float)) and 0.0 < float(alpha) < 1.0,
            "target.alpha", "must lie strictly between 0 and 1")
    min_samples = target_doc.get("min_samples")
    if min_samples is not None:
        _expect(isinstance(min_samples, int) and min_samples > 0,
                "target.min_samples", "must be a positive integer")
    if kinds[0] == "point":
        target_point = _vector(target_doc["point"], "target.point", 4)
    elif kinds[0] == "ellipsoid":
        spec = target_doc["ellipsoid"]
        try:
            if isinstance(spec, str):
                target_ellipsoid = read_ellipsoid_json(base_dir / spec)
            else:
                target_ellipsoid = ellipsoid_from_dict(spec)
        except (OSError, ValueError) as exc:
            raise ConfigError("target.ellipsoid", str(exc)) from None
    else:
        target_dataset = base_dir / str(target_doc["dataset"])

    proposal_doc = doc.get("proposal", {})
    _check_keys(proposal_doc, {"mean", "cov", "cov_diag"}, "proposal.")
    prop_mean = _vector(proposal_doc.get("mean", (0.0,) * 4), "proposal.mean", 4)
    if "cov" in proposal_doc:
        _expect("cov_diag" not in proposal_doc, "proposal.cov_diag",
                "give either cov or cov_diag, not both")
        cov = np.asarray(proposal_doc["cov"], dtype=float)
        _expect(cov.shape == (4, 4), "proposal.cov", "must be a 4x4 matrix")
    else:
        diag = _vector(proposal_doc.get("cov_diag", DEFAULT_PROPOSAL_COV_DIAG),
                       "proposal.cov_diag", 4)
        _expect(bool(np.all(diag > 0)), "proposal.cov_diag", "entries must be positive")
        cov = np.diag(diag)
    proposal = ProposalConfig(mean=prop_mean, cov=cov)

    scene_doc = doc.get("scene", {})
    _check_keys(scene_doc, {"parking_area", "car_length", "car_width",
                            "rear_overhang"}, "scene.")
    try:
        scene_kwargs = dict(scene_doc)
        if "parking_area" in scene_kwargs:
            rect = tuple(float(v) for v in scene_kwargs["parking_area"])
            _expect(len(rect) == 4 and rect[0] < rect[2] and rect[1] < rect[3],
                    "scene.parking_area", "must be [xmin, ymin, xmax, ymax]")
            scene_kwargs["parking_area"] = rect
        scene = SceneConfig(**scene_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError("scene", str(exc)) from None

    out_dir = doc.get("out_dir")
    if out_dir is not None:
        out_dir = base_dir / str(out_dir)

    return RunConfig(car=car, solver=solver, initial_state=initial_state,
                     eval_point=eval_point, projection_mode=projection_mode,
                     seed=seed, out_dir=out_dir, proposal=proposal, scene=scene,
                     target_point=target_point, target_ellipsoid=target_ellipsoid,
                     target_dataset=target_dataset, alpha=float(alpha),
                     min_samples=min_samples,
                     interior_margin=float(interior_margin),
                     exact_curvature=exact_curvature)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path} is not valid JSON: {exc}") from None
    return parse_run_config(doc, base_dir=path.parent)

"""Ellipsoidal target-set geometry.

An ellipsoid is the open set {x : sqrt((x-o)' Sigma^-1 (x-o)) < r}.  This
module provides membership and Mahalanobis distance, the retraction of
exterior points onto the set, the offset map g(x) = x - P(x) with its
Jacobian, and composition of base costs with g (the branch-frozen smoothed
costs used by the set-targeted solver).

Two projection conventions are provided:

* ``RADIAL`` (default): interior points map to themselves; exterior points
  retract radially in the Sigma^-1 metric, o + r (x-o) / d_M(x).  This is
  idempotent and coincides with the Euclidean projection when Sigma = I.
* ``SIGMA_SCALED``: interior points map to x - o; exterior points map to
  r Sigma (x-o) / sqrt((x-o)' Sigma (x-o)).  Not idempotent and not a true
  projection; kept selectable because some formulations write the operator
  this way, and results differ.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .solver import CostExpansion

Array = np.ndarray

_TINY = 1e-300


class ProjectionMode(Enum):
    RADIAL = "radial"
    SIGMA_SCALED = "sigma_scaled"


@dataclass(frozen=True)
class Ellipsoid:
    center: Array
    sigma: Array
    radius: float
    sigma_inv: Array = None   # derived
    chol: Array = None        # derived, lower factor of sigma

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape != (center.size, center.size):
            raise ValueError("sigma shape must match the center dimension")
        scale = max(float(np.max(np.abs(sigma))), 1.0)
        if float(np.max(np.abs(sigma - sigma.T))) > 1e-12 * scale:
            raise ValueError("sigma must be symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma must be positive definite") from exc
        inv = np.linalg.solve(chol.T, np.linalg.solve(chol, np.eye(center.size)))
        inv = 0.5 * (inv + inv.T)
        if float(np.max(np.abs(sigma @ inv - np.eye(center.size)))) > 1e-8:
            raise ValueError("sigma is too ill-conditioned to invert reliably")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "sigma_inv", inv)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class BranchFlags:
    """Per-step membership of a reference trajectory, frozen for one sweep."""

    inside: Array   # boolean, length T+1


def mahalanobis(x: Array, ellipsoid: Ellipsoid) -> float:
    """sqrt((x-o)' Sigma^-1 (x-o))."""
    w = np.atleast_1d(np.asarray(x, dtype=float)) - ellipsoid.center
    if w.size != ellipsoid.dim:
        raise ValueError("dimension mismatch")
    return float(np.sqrt(max(w @ ellipsoid.sigma_inv @ w, 0.0)))


def mahalanobis_many(xs: Array, ellipsoid: Ellipsoid) -> Array:
    w = np.asarray(xs, dtype=float) - ellipsoid.center
    d2 = np.einsum("ti,ij,tj->t", w, ellipsoid.sigma_inv, w)
    return np.sqrt(np.maximum(d2, 0.0))


def contains(ellipsoid: Ellipsoid, x: Array) -> bool:
    """Strict membership test d_M(x) < r.

    Boundary points are outside; a radius-0 ellipsoid contains nothing.
    """
    return mahalanobis(x, ellipsoid) < ellipsoid.radius


def branch_flags(ellipsoid: Ellipsoid, states: Array) -> BranchFlags:
    """Membership per state of a reference trajectory."""
    return BranchFlags(inside=mahalanobis_many(states, ellipsoid) < ellipsoid.radius)


def project(ellipsoid: Ellipsoid, x: Array, mode: ProjectionMode = ProjectionMode.RADIAL) -> Array:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    o = ellipsoid.center
    r = ellipsoid.radius
    w = x - o
    if mode is ProjectionMode.RADIAL:
        if r == 0.0:
            return o.copy()
        if contains(ellipsoid, x):
            return x.copy()
        d = mahalanobis(x, ellipsoid)
        if d < _TINY:
            return o.copy()
        return o + (r / d) * w
    # SIGMA_SCALED
    if contains(ellipsoid, x):
        return w.copy()
    s2 = float(w @ ellipsoid.sigma @ w)
    if s2 < _TINY:
        return np.zeros_like(w)
    return (r / np.sqrt(s2)) * (ellipsoid.sigma @ w)


def offset(ellipsoid: Ellipsoid, x: Array, mode: ProjectionMode = ProjectionMode.RADIAL) -> Array:
    """The displacement g(x) = x - P(x) fed to set-targeted costs."""
    return np.atleast_1d(np.asarray(x, dtype=float)) - project(ellipsoid, x, mode)


def offset_jacobian(ellipsoid: Ellipsoid, x: Array,
                    mode: ProjectionMode = ProjectionMode.RADIAL) -> Array:
    """Analytic Jacobian of g(x) = x - P(x) on the exterior branch.

    The interior branch of g is constant, so its Jacobian is zero; callers
    handle that case via the frozen branch flags.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    o = ellipsoid.center
    r = ellipsoid.radius
    n = ellipsoid.dim
    w = x - o
    eye = np.eye(n)
    if mode is ProjectionMode.RADIAL:
        if r == 0.0:
            return eye
        d = mahalanobis(x, ellipsoid)
        if d < _TINY:
            return eye
        return (1.0 - r / d) * eye + (r / d**3) * np.outer(w, w) @ ellipsoid.sigma_inv
    s2 = float(w @ ellipsoid.sigma @ w)
    if s2 < _TINY:
        return eye
    s = np.sqrt(s2)
    sw = ellipsoid.sigma @ w
    return eye - (r / s) * ellipsoid.sigma + (r / s**3) * np.outer(sw, sw)


def offsets_and_jacobians(states: Array, flags: BranchFlags, ellipsoid: Ellipsoid,
                          mode: ProjectionMode = ProjectionMode.RADIAL
                          ) -> tuple[Array, Array]:
    """Vectorized g(x_t) and its Jacobian over a whole trajectory.

    Rows flagged inside get the constant interior offset and a zero
    Jacobian.  Radius-0 sets reduce exactly to the point target x - o.
    """
    xs = np.asarray(states, dtype=float)
    T1, n = xs.shape
    o = ellipsoid.center
    r = ellipsoid.radius
    w = xs - o
    offsets = np.zeros((T1, n))
    jacs = np.zeros((T1, n, n))
    inside = np.asarray(flags.inside, dtype=bool)
    out = ~inside
    eye = np.eye(n)

    if mode is ProjectionMode.RADIAL:
        if r == 0.0:
            offsets[out] = w[out]
            jacs[out] = eye
            return offsets, jacs
        d = mahalanobis_many(xs, ellipsoid)
        safe = out & (d > _TINY)
        scale = np.zeros(T1)
        scale[safe] = 1.0 - r / d[safe]
        offsets[safe] = w[safe] * scale[safe, None]
        wsi = w @ ellipsoid.sigma_inv
        jacs[safe] = scale[safe, None, None] * eye \
            + (r / d[safe] ** 3)[:, None, None] * np.einsum("ti,tj->tij", w[safe], wsi[safe])
        degenerate = out & ~safe
        jacs[degenerate] = eye
        return offsets, jacs

    offsets[inside] = o
    sw = w @ ellipsoid.sigma
    s2 = np.einsum("ti,ti->t", w, sw)
    safe = out & (s2 > _TINY)
    s = np.sqrt(np.where(safe, s2, 1.0))
    offsets[safe] = xs[safe] - (r / s[safe, None]) * sw[safe]
    jacs[safe] = eye - (r / s[safe, None, None]) * ellipsoid.sigma \
        + (r / s[safe] ** 3)[:, None, None] * np.einsum("ti,tj->tij", sw[safe], sw[safe])
    degenerate = out & ~safe
    offsets[degenerate] = xs[degenerate]
    jacs[degenerate] = eye
    return offsets, jacs


def offset_curvature(ellipsoid: Ellipsoid, x: Array, grad: Array,
                     mode: ProjectionMode = ProjectionMode.RADIAL) -> Array:
    """Curvature of the offset map contracted with a base-cost gradient.

    Returns sum_k grad[k] * d^2 g_k / dx dx on the exterior branch; this is
    the term the Gauss-Newton Hessian of base(g(x)) drops.  Derived in
    closed form for the radial retraction:

        curv = (r/d^2)(m grad' + grad m') + (grad'w)(r/d^3)(Sigma^-1 - 3 m m')

    with w = x - o, d = d_M(x), m = Sigma^-1 w / d.  Zero when r = 0 (g is
    affine) and for the sigma-scaled mode interior; the sigma-scaled
    exterior follows the analogous derivation with s = sqrt(w' Sigma w).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.atleast_1d(np.asarray(grad, dtype=float))
    n = ellipsoid.dim
    r = ellipsoid.radius
    w = x - ellipsoid.center
    if r == 0.0:
        return np.zeros((n, n))
    if mode is ProjectionMode.RADIAL:
        d = mahalanobis(x, ellipsoid)
        if d < _TINY:
            return np.zeros((n, n))
        m = ellipsoid.sigma_inv @ w / d
        gw = float(grad @ w)
        curv = (r / d**2) * (np.outer(m, grad) + np.outer(grad, m)) \
            + gw * (r / d**3) * (ellipsoid.sigma_inv - 3.0 * np.outer(m, m))
        return 0.5 * (curv + curv.T)
    s2 = float(w @ ellipsoid.sigma @ w)
    if s2 < _TINY:
        return np.zeros((n, n))
    s = np.sqrt(s2)
    sw = ellipsoid.sigma @ w
    gs = ellipsoid.sigma @ grad
    gsw = float(grad @ sw)
    curv = (r / s**3) * (np.outer(sw, gs) + np.outer(gs, sw)) \
        + gsw * (r / s**3) * (ellipsoid.sigma - 3.0 / s2 * np.outer(sw, sw))
    return 0.5 * (curv + curv.T)


def offset_curvatures(states: Array, flags: BranchFlags, ellipsoid: Ellipsoid,
                      grads: Array,
                      mode: ProjectionMode = ProjectionMode.RADIAL) -> Array:
    """Vectorized :func:`offset_curvature` over a trajectory; zero rows for
    interior-flagged states."""
    xs = np.asarray(states, dtype=float)
    T1, n = xs.shape
    out = np.zeros((T1, n, n))
    inside = np.asarray(flags.inside, dtype=bool)
    r = ellipsoid.radius
    if r == 0.0:
        return out
    w = xs - ellipsoid.center
    if mode is ProjectionMode.RADIAL:
        d = mahalanobis_many(xs, ellipsoid)
        rows = (~inside) & (d > _TINY)
        di = d[rows]
        m = (w[rows] @ ellipsoid.sigma_inv) / di[:, None]
        p = grads[rows]
        gw = np.einsum("ti,ti->t", p, w[rows])
        cross = np.einsum("ti,tj->tij", m, p) + np.einsum("ti,tj->tij", p, m)
        mm = np.einsum("ti,tj->tij", m, m)
        out[rows] = (r / di**2)[:, None, None] * cross \
            + (gw * r / di**3)[:, None, None] * (ellipsoid.sigma_inv - 3.0 * mm)
    else:
        sw = w @ ellipsoid.sigma
        s2 = np.einsum("ti,ti->t", w, sw)
        rows = (~inside) & (s2 > _TINY)
        s = np.sqrt(s2[rows])
        p = grads[rows]
        gs = p @ ellipsoid.sigma
        gsw = np.einsum("ti,ti->t", p, sw[rows])
        cross = np.einsum("ti,tj->tij", sw[rows], gs) + np.einsum("ti,tj->tij", gs, sw[rows])
        ss = np.einsum("ti,tj->tij", sw[rows], sw[rows])
        out[rows] = (r / s**3)[:, None, None] * cross \
            + (gsw * r / s**3)[:, None, None] * (ellipsoid.sigma
                                                 - 3.0 / s2[rows][:, None, None] * ss)
    out = 0.5 * (out + np.swapaxes(out, 1, 2))
    return out


def smoothed_cost_expansion(base: Callable[[Array, Optional[Array]], CostExpansion],
                            ellipsoid: Ellipsoid, x: Array,
                            u: Optional[Array], inside: bool,
                            mode: ProjectionMode = ProjectionMode.RADIAL,
                            exact_curvature: bool = False) -> CostExpansion:
    """Expansion of the branch-frozen composite cost base(g(x), u).

    ``base`` evaluates the underlying cost at an offset vector (pass u=None
    for terminal costs).  With ``inside`` true the offset is the constant
    interior value, so x-derivatives vanish and only the control terms of
    the base expansion survive.  On the exterior branch the chain rule is
    applied through g with the Gauss-Newton Hessian J' H J by default;
    ``exact_curvature`` adds the offset map's own curvature contracted with
    the base gradient, giving the full Newton Hessian of the composite.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    if inside:
        if mode is ProjectionMode.RADIAL:
            const = np.zeros(n)
        else:
            const = ellipsoid.center
        expansion = base(const, u)
        return CostExpansion(value=expansion.value,
                             grad_x=np.zeros(n), hess_xx=np.zeros((n, n)),
                             grad_u=expansion.grad_u,
                             hess_ux=None if expansion.hess_ux is None else np.zeros_like(expansion.hess_ux),
                             hess_uu=expansion.hess_uu)
    g = offset(ellipsoid, x, mode)
    jac = offset_jacobian(ellipsoid, x, mode)
    expansion = base(g, u)
    grad_x = jac.T @ expansion.grad_x
    hess_xx = jac.T @ expansion.hess_xx @ jac
    if exact_curvature:
        hess_xx = hess_xx + offset_curvature(ellipsoid, x, expansion.grad_x, mode)
    hess_ux = None
    if expansion.hess_ux is not None:
        hess_ux = np.asarray(expansion.hess_ux) @ jac
    return CostExpansion(value=expansion.value,
                         grad_x=grad_x, hess_xx=0.5 * (hess_xx + hess_xx.T),
                         grad_u=expansion.grad_u, hess_ux=hess_ux,
                         hess_uu=expansion.hess_uu)


# ---------------------------------------------------------------------------
# Serialization: {"center": [..], "sigma": [[..]], "radius": r}, row-major.


def ellipsoid_to_dict(ellipsoid: Ellipsoid) -> dict:
    return {"center": ellipsoid.center.tolist(),
            "sigma": ellipsoid.sigma.tolist(),
            "radius": ellipsoid.radius}


def ellipsoid_from_dict(data: dict) -> Ellipsoid:
    try:
        center = np.asarray(data["center"], dtype=float)
        sigma = np.asarray(data["sigma"], dtype=float)
        radius = float(data["radius"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed ellipsoid document: {exc}") from exc
    sigma = np.atleast_2d(sigma)
    scale = max(float(np.max(np.abs(sigma))), 1.0)
    if float(np.max(np.abs(sigma - sigma.T))) > 1e-8 * scale:
        raise ValueError("ellipsoid sigma not symmetric within 1e-8")
    sigma = 0.5 * (sigma + sigma.T)
    if float(np.linalg.eigvalsh(sigma).min()) <= 0.0:
        raise ValueError("ellipsoid sigma not positive definite")
    return Ellipsoid(center=center, sigma=sigma, radius=radius)


def write_ellipsoid_json(path: str | Path, ellipsoid: Ellipsoid) -> None:
    Path(path).write_text(json.dumps(ellipsoid_to_dict(ellipsoid), indent=2) + "\n",
                          encoding="utf-8")


def read_ellipsoid_json(path: str | Path) -> Ellipsoid:
    return ellipsoid_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

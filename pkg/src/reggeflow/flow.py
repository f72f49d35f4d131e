"""Discrete Ricci flows integrated in the variable ``u = l**alpha``.

* unnormalized:        du/dt = -2 R
* normalized, order a: du/dt = 2 lambda_a u - 2 R,  lambda_a = sum R l / sum l**(a+1)

At ``alpha = 2`` the normalized flow is ``dg/dt = (2/3) r g - 2 R`` with
``r = 3 lambda``; it keeps ``sum_e l_e**3`` fixed and never increases the
Regge action.  Integration is classical RK4 with step-doubling error control
and an admissibility guard on every stage.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass

import numpy as np

from .complex import Triangulation3
from .curvature import check_admissible, functionals, ricci
from .geometry import cayley_menger_144v2
from .metric import DEFAULT_EPS, admissible_tets, tet_squared_lengths

__all__ = [
    "FlowConfig",
    "FlowStatus",
    "FlowSample",
    "FlowTrajectory",
    "UnsupportedComplexError",
    "flow_rhs",
    "integrate",
    "conservation_check",
    "min_normalized_volume",
]

log = logging.getLogger(__name__)


class UnsupportedComplexError(ValueError):
    pass


class FlowStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTimeReached"
    SINGULAR = "Singular"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class FlowConfig:
    alpha: float = 2.0
    normalized: bool = True
    dt_init: float = 1e-2
    dt_min: float = 1e-12
    t_max: float = 1e3
    conv_tol: float = 1e-8
    record_every: int = 1
    safety: float = DEFAULT_EPS
    rtol: float = 1e-8
    grow_after: int = 5
    grow_factor: float = 1.5
    singular_volume_ratio: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.dt_min < self.dt_init:
            raise ValueError("need 0 < dt_min < dt_init")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.alpha == 0:
            raise ValueError("alpha = 0 gives no flow variable u = l**alpha")
        if self.normalized and self.alpha == -1:
            raise ValueError("normalized flow needs alpha not in {0, -1}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class FlowSample:
    t: float
    g: np.ndarray
    E: float
    sum_l3: float
    lambda_alpha: float
    Q_alpha: float
    residual: float


@dataclass
class FlowTrajectory:
    samples: list[FlowSample]
    status: FlowStatus
    final_metric: np.ndarray
    config: FlowConfig
    n_accepted: int = 0
    n_rejected: int = 0
    message: str = ""
    min_volume_ratio: float = 1.0

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.samples])

    def to_csv(self, tri: Triangulation3) -> str:
        buf = io.StringIO()
        buf.write(",".join(["t", *tri.edge_keys, "E", "sumL3", "lambda", "Q", "residual"]) + "\n")
        for s in self.samples:
            row = [s.t, *s.g, s.E, s.sum_l3, s.lambda_alpha, s.Q_alpha, s.residual]
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    def summary(self, tri: Triangulation3) -> dict:
        s = self.final
        return {
            "status": self.status.value,
            "message": self.message,
            "t": s.t,
            "residual": s.residual,
            "lambda": s.lambda_alpha,
            "Q": s.Q_alpha,
            "E": s.E,
            "sumL3": s.sum_l3,
            "n_accepted": self.n_accepted,
            "n_rejected": self.n_rejected,
            "min_volume_ratio": self.min_volume_ratio,
            "final_metric": {"edges": {k: float(v) for k, v in zip(tri.edge_keys, self.final_metric)}},
        }


def flow_rhs(tri: Triangulation3, g: np.ndarray, cfg: FlowConfig = FlowConfig()) -> np.ndarray:
    """``du/dt`` at metric ``g`` in the flow variable ``u = l**alpha``."""
    g = np.asarray(g, dtype=float)
    R = ricci(tri, g)
    if not cfg.normalized:
        return -2.0 * R
    l = np.sqrt(g)
    u = l**cfg.alpha
    lam = float(np.sum(R * l) / np.sum(l ** (cfg.alpha + 1.0)))
    return 2.0 * lam * u - 2.0 * R


def min_normalized_volume(tri: Triangulation3, g: np.ndarray) -> float:
    """Smallest tet volume over the cube of the mean edge length (scale free)."""
    g = np.asarray(g, dtype=float)
    expr = cayley_menger_144v2(tet_squared_lengths(tri, g))
    vol = np.sqrt(np.clip(expr, 0.0, None) / 144.0)
    return float(vol.min()) / float(np.mean(np.sqrt(g))) ** 3


def _require_closed(tri: Triangulation3) -> None:
    if not tri.is_closed:
        raise UnsupportedComplexError(
            f"flows need a closed complex; this one has {len(tri.boundary_edges)} boundary edges"
        )


def integrate(
    tri: Triangulation3, g0: np.ndarray, cfg: FlowConfig = FlowConfig()
) -> FlowTrajectory:
    _require_closed(tri)
    g0 = np.asarray(g0, dtype=float)
    check_admissible(tri, g0, cfg.safety)

    a = cfg.alpha

    def to_g(u):
        return u ** (2.0 / a)

    def admissible_u(u):
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            return False
        return bool(np.all(admissible_tets(tri, to_g(u), cfg.safety)))

    def rhs(u):
        return flow_rhs(tri, to_g(u), cfg) if admissible_u(u) else None

    def rk4(u, h):
        k1 = rhs(u)
        if k1 is None:
            return None
        k2 = rhs(u + 0.5 * h * k1)
        if k2 is None:
            return None
        k3 = rhs(u + 0.5 * h * k2)
        if k3 is None:
            return None
        k4 = rhs(u + h * k3)
        if k4 is None:
            return None
        out = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return out if admissible_u(out) else None

    def sample(t, g):
        rep = functionals(tri, g, alpha=a)
        return FlowSample(
            t=float(t),
            g=g.copy(),
            E=rep.E,
            sum_l3=rep.sum_l3,
            lambda_alpha=rep.lambda_alpha,
            Q_alpha=rep.Q_alpha,
            residual=rep.residual,
        )

    vol0 = min_normalized_volume(tri, g0)
    u = g0 ** (a / 2.0)
    t = 0.0
    dt = cfg.dt_init
    first = sample(t, g0)
    samples = [first]
    n_acc = n_rej = streak = 0
    min_ratio = 1.0

    def done(status, msg, last=None):
        if last is not None and samples[-1].t != last.t:
            samples.append(last)
        final_g = samples[-1].g
        log.info("flow finished: %s (%s) at t=%g", status.value, msg, samples[-1].t)
        return FlowTrajectory(
            samples=samples,
            status=status,
            final_metric=final_g,
            config=cfg,
            n_accepted=n_acc,
            n_rejected=n_rej,
            message=msg,
            min_volume_ratio=min_ratio,
        )

    if cfg.normalized and first.residual <= cfg.conv_tol:
        return done(FlowStatus.CONVERGED, "initial metric already Einstein")

    last = first
    last_cause = ""
    while True:
        if t >= cfg.t_max:
            return done(FlowStatus.MAX_TIME, f"reached t_max={cfg.t_max}", last)
        if n_acc + n_rej >= cfg.max_steps:
            return done(FlowStatus.MAX_TIME, f"step budget {cfg.max_steps} exhausted", last)
        h = min(dt, cfg.t_max - t)
        full = rk4(u, h)
        half = rk4(u, 0.5 * h) if full is not None else None
        two = rk4(half, 0.5 * h) if half is not None else None
        if full is None or two is None:
            cause = "inadmissible"
        else:
            err = float(np.max(np.abs(full - two) / np.abs(two)))
            cause = "" if err <= cfg.rtol else "error"
        if cause:
            n_rej += 1
            streak = 0
            last_cause = cause
            dt = 0.5 * h
            if dt < cfg.dt_min:
                if last_cause == "inadmissible" or min_ratio < cfg.singular_volume_ratio:
                    return done(
                        FlowStatus.SINGULAR,
                        f"admissibility lost near t={t:.6g} (min volume ratio {min_ratio:.3g})",
                        last,
                    )
                return done(FlowStatus.STEP_UNDERFLOW, f"dt fell below {cfg.dt_min} at t={t:.6g}", last)
            continue

        u = two
        t += h
        n_acc += 1
        streak += 1
        if streak >= cfg.grow_after:
            dt = h * cfg.grow_factor
            streak = 0
        else:
            dt = h
        g = to_g(u)
        min_ratio = min(min_ratio, min_normalized_volume(tri, g) / vol0)
        last = sample(t, g)
        if n_acc % cfg.record_every == 0:
            samples.append(last)
        if min_ratio < cfg.singular_volume_ratio:
            return done(FlowStatus.SINGULAR, f"tetrahedron volume collapsed at t={t:.6g}", last)
        if cfg.normalized and last.residual <= cfg.conv_tol:
            return done(FlowStatus.CONVERGED, f"residual {last.residual:.3g} <= {cfg.conv_tol}", last)


def conservation_check(traj: FlowTrajectory) -> tuple[float, float]:
    """``(V_drift, E_monotone_violation)`` for a normalized alpha=2 run."""
    if not traj.config.normalized or traj.config.alpha != 2:
        raise ValueError("conservation check applies to normalized alpha=2 trajectories only")
    v = np.array([s.sum_l3 for s in traj.samples])
    E = np.array([s.E for s in traj.samples])
    drift = float(np.max(np.abs(v - v[0])) / v[0])
    if len(E) < 2:
        return drift, 0.0
    rise = np.maximum(0.0, np.diff(E))
    return drift, float(np.max(rise) / max(abs(E[0]), 1.0))

"""Finite-difference Jacobians, the discrete Lichnerowicz Laplacian and
linear stability of Einstein metrics under the normalized flow.

Also hosts the closed-form gradient of the normalized action ``Q`` and a
descent estimator of ``inf Q`` over admissible metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .complex import Triangulation3
from .curvature import check_admissible, einstein_residual, ricci
from .flow import FlowConfig, flow_rhs, min_normalized_volume
from .geometry import InadmissibleError
from .metric import is_admissible

__all__ = [
    "NotEinsteinError",
    "StabilityReport",
    "MinimizeResult",
    "jacobian_R_wrt_l",
    "jacobian_R_wrt_g",
    "lichnerowicz",
    "action_gradient_fd",
    "grad_Q",
    "grad_Q_fd",
    "Q_value",
    "linearization",
    "flow_jacobian_fd",
    "stability_test",
    "minimize_Q",
    "polish_einstein",
]

DEFAULT_H = 1e-5


class NotEinsteinError(ValueError):
    def __init__(self, residual: float, gate: float):
        super().__init__(f"metric is not near-Einstein: residual {residual:.6g} > {gate:g}")
        self.residual = residual


def _central_columns(f, x: np.ndarray, h: float, max_shrink: int = 8) -> np.ndarray:
    """Columns ``(f(x + h x_e e_e) - f(x - h x_e e_e)) / (2 h x_e)``, shrinking h on failure."""
    cols = []
    for e in range(len(x)):
        step = h
        for _ in range(max_shrink + 1):
            xp, xm = x.copy(), x.copy()
            xp[e] *= 1.0 + step
            xm[e] *= 1.0 - step
            try:
                cols.append((f(xp) - f(xm)) / (2.0 * step * x[e]))
                break
            except InadmissibleError:
                step *= 0.5
        else:
            raise InadmissibleError(f"perturbing edge {e} leaves the admissible cone at every step size")
    return np.column_stack(cols)


def jacobian_R_wrt_l(tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """``L[i, e] = dR_i / dl_e``, the Hessian of the Regge action in lengths."""
    g = np.asarray(g, dtype=float)
    check_admissible(tri, g)
    return _central_columns(lambda l: ricci(tri, l * l), np.sqrt(g), h)


def jacobian_R_wrt_g(tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    check_admissible(tri, g)
    return _central_columns(lambda x: ricci(tri, x), g, h)


def _sym_spectrum(L: np.ndarray, l: np.ndarray) -> np.ndarray:
    # Delta_L = L D with D = diag(1/(2l)) is similar to D^1/2 L D^1/2
    d = np.sqrt(1.0 / (2.0 * l))
    Ls = 0.5 * (L + L.T)
    return np.linalg.eigvalsh(d[:, None] * Ls * d[None, :])


def lichnerowicz(
    tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H, L: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """``(Delta_L, lambda_inf)`` with ``Delta_L = dR/dg = L diag(1 / 2l)``."""
    g = np.asarray(g, dtype=float)
    l = np.sqrt(g)
    if L is None:
        L = jacobian_R_wrt_l(tri, g, h)
    return L / (2.0 * l)[None, :], float(_sym_spectrum(L, l)[0])


def action_gradient_fd(tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """Central differences of the Regge action in the lengths."""
    l0 = np.sqrt(np.asarray(g, dtype=float))
    return _central_columns(
        lambda l: np.atleast_1d(np.sum(ricci(tri, l * l) * l)), l0, h
    ).ravel()


def Q_value(tri: Triangulation3, g: np.ndarray) -> float:
    g = np.asarray(g, dtype=float)
    l = np.sqrt(g)
    return float(np.sum(ricci(tri, g) * l) / np.sum(l**3) ** (1.0 / 3.0))


def grad_Q(tri: Triangulation3, g: np.ndarray) -> np.ndarray:
    """``(V**(-1/3) / 2) g**(-1/2) (R - lambda g)`` with ``V = sum_e l_e**3``."""
    g = np.asarray(g, dtype=float)
    R = ricci(tri, g)
    l = np.sqrt(g)
    V = float(np.sum(l**3))
    lam = float(np.sum(R * l)) / V
    return 0.5 * V ** (-1.0 / 3.0) * (R - lam * g) / l


def grad_Q_fd(tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    return _central_columns(lambda x: np.atleast_1d(Q_value(tri, x)), g, h).ravel()


def linearization(g: np.ndarray, lam: float, delta_L: np.ndarray) -> np.ndarray:
    """``lambda (I - g l^T / V) - Delta_L``: half the Jacobian of ``2(lambda g - R)`` at an Einstein metric."""
    g = np.asarray(g, dtype=float)
    l = np.sqrt(g)
    V = float(np.sum(l**3))
    return lam * (np.eye(len(g)) - np.outer(g, l) / V) - delta_L


def flow_jacobian_fd(tri: Triangulation3, g: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """Finite-difference Jacobian of the normalized alpha=2 flow field in ``g``."""
    cfg = FlowConfig(alpha=2.0, normalized=True)
    g = np.asarray(g, dtype=float)
    return _central_columns(lambda x: flow_rhs(tri, x, cfg), g, h)


@dataclass
class StabilityReport:
    L: np.ndarray
    Delta_L: np.ndarray
    lambda_inf: float
    lambda_star: float
    stable: bool
    schlafli_residual: float
    gradient_residual: float
    symmetry_error: float
    einstein_residual: float
    L_spectrum: np.ndarray
    delta_L_spectrum: np.ndarray
    linearization_eigenvalues: np.ndarray
    scaling_eigenvalue: float
    max_transverse_eigenvalue: float
    linearly_stable: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self, tri: Triangulation3) -> dict:
        ev = self.linearization_eigenvalues
        return {
            "edge_order": tri.edge_keys,
            "lambda_inf": self.lambda_inf,
            "lambda_star": self.lambda_star,
            "stable": self.stable,
            "schlafli_residual": self.schlafli_residual,
            "gradient_residual": self.gradient_residual,
            "symmetry_error": self.symmetry_error,
            "einstein_residual": self.einstein_residual,
            "L_spectrum": [float(x) for x in self.L_spectrum],
            "Delta_L_spectrum": [float(x) for x in self.delta_L_spectrum],
            "linearization_eigenvalues": {
                "real": [float(x) for x in ev.real],
                "imag": [float(x) for x in ev.imag],
            },
            "scaling_eigenvalue": self.scaling_eigenvalue,
            "max_transverse_eigenvalue": self.max_transverse_eigenvalue,
            "linearly_stable": self.linearly_stable,
            "notes": self.notes,
            "L": self.L.tolist(),
            "Delta_L": self.Delta_L.tolist(),
        }

    def to_json(self, tri: Triangulation3) -> str:
        return json.dumps(self.to_dict(tri), indent=2) + "\n"


def stability_test(
    tri: Triangulation3, g_star: np.ndarray, h: float = DEFAULT_H, gate: float = 1e-3
) -> StabilityReport:
    """Check the criterion ``lambda_inf(Delta_L) > lambda*`` at a near-Einstein metric.

    Besides the criterion itself the report carries the spectrum of the
    linearized normalized flow.  The metric direction ``g*`` is neutral
    (curvature is scale invariant), so it is split off and the remaining
    eigenvalues decide linear stability.
    """
    g = np.asarray(g_star, dtype=float)
    lam, _, res = einstein_residual(tri, g, alpha=2.0)
    if res > gate:
        raise NotEinsteinError(res, gate)
    l = np.sqrt(g)
    R = ricci(tri, g)
    L = jacobian_R_wrt_l(tri, g, h)
    delta_L, lam_inf = lichnerowicz(tri, g, h, L=L)
    rnorm = float(np.max(np.abs(R)))
    schlafli = float(np.max(np.abs(l @ L))) / rnorm
    grad_res = float(np.max(np.abs(action_gradient_fd(tri, g, h) - R))) / rnorm
    sym = float(np.max(np.abs(L - L.T))) / float(np.max(np.abs(L)))

    M = linearization(g, lam, delta_L)
    ev, vecs = np.linalg.eig(M)
    order = np.argsort(ev.real)
    ev, vecs = ev[order], vecs[:, order]
    gn = g / np.linalg.norm(g)
    align = np.abs(gn @ vecs) / np.linalg.norm(vecs, axis=0)
    k = int(np.argmax(align))
    transverse = np.delete(ev, k)
    max_t = float(np.max(transverse.real))
    band = 1e-6 * max(1.0, float(np.max(np.abs(ev))))
    notes = []
    if np.any(np.abs(transverse.real) <= band):
        notes.append("near-zero transverse eigenvalue within the 1e-6 band")
    return StabilityReport(
        L=L,
        Delta_L=delta_L,
        lambda_inf=lam_inf,
        lambda_star=lam,
        stable=bool(lam_inf > lam),
        schlafli_residual=schlafli,
        gradient_residual=grad_res,
        symmetry_error=sym,
        einstein_residual=res,
        L_spectrum=np.linalg.eigvalsh(0.5 * (L + L.T)),
        delta_L_spectrum=_sym_spectrum(L, l),
        linearization_eigenvalues=ev,
        scaling_eigenvalue=float(ev[k].real),
        max_transverse_eigenvalue=max_t,
        linearly_stable=bool(max_t < -band),
        notes=notes,
    )


@dataclass
class MinimizeResult:
    g: np.ndarray
    Q: float
    converged: bool
    status: str
    n_iter: int
    Q_history: list[float]


def minimize_Q(
    tri: Triangulation3,
    g0: np.ndarray,
    max_iters: int = 500,
    tol: float = 1e-8,
    armijo: float = 1e-4,
    escape_ratio: float = 1e-6,
) -> MinimizeResult:
    """Armijo gradient descent on ``Q``; ``Q_min`` bounds ``inf Q`` from above.

    ``Q`` is scale invariant, so iterates are rescaled to keep ``sum l**3``
    fixed.  A run whose smallest tetrahedron collapses is reported as
    ``boundary_escape`` rather than a minimum.
    """
    g = np.asarray(g0, dtype=float).copy()
    check_admissible(tri, g)
    v0 = float(np.sum(g**1.5))
    vol0 = min_normalized_volume(tri, g)
    Q = Q_value(tri, g)
    history = [Q]
    step = 0.1 * float(np.max(g))
    for it in range(max_iters + 1):
        grad = grad_Q(tri, g)
        if float(np.max(np.abs(grad))) <= tol * max(abs(Q), 1.0):
            return MinimizeResult(g, Q, True, "converged", it, history)
        if it == max_iters:
            break
        d = -grad
        slope = float(grad @ d)
        t = step / float(np.max(np.abs(d)))
        while True:
            trial = g + t * d
            inside = bool(np.all(trial > 0) and is_admissible(tri, trial))
            if inside and Q_value(tri, trial) <= Q + armijo * t * slope:
                break
            t *= 0.5
            if t * float(np.max(np.abs(d))) < 1e-14 * float(np.max(g)):
                # even the shortest trial step leaves the cone: the descent is
                # running into a degenerate tetrahedron
                status = "line_search_failed" if inside else "boundary_escape"
                return MinimizeResult(g, Q, False, status, it, history)
        g = trial * (v0 / float(np.sum(trial**1.5))) ** (2.0 / 3.0)
        Q = Q_value(tri, g)
        history.append(Q)
        step = min(2.0 * t * float(np.max(np.abs(d))), 0.5 * float(np.max(g)))
        if min_normalized_volume(tri, g) < escape_ratio * vol0:
            return MinimizeResult(g, Q, False, "boundary_escape", it + 1, history)
    return MinimizeResult(g, Q, False, "max_iters", max_iters, history)


def polish_einstein(
    tri: Triangulation3,
    g0: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 50,
    h: float = 1e-6,
) -> tuple[np.ndarray, float, int]:
    """Newton iteration on ``R - lambda g = 0`` at fixed ``sum l**3``.

    Converges to nearby Einstein metrics whatever their stability under the
    flow.  Returns ``(g, residual, iterations)``.
    """
    g = np.asarray(g0, dtype=float).copy()
    check_admissible(tri, g)
    v0 = float(np.sum(g**1.5))

    def F(x):
        R = ricci(tri, x)
        l = np.sqrt(x)
        return R - float(np.sum(R * l) / np.sum(l**3)) * x

    res = einstein_residual(tri, g)[2]
    for it in range(max_iter):
        if res <= tol:
            return g, res, it
        J = _central_columns(F, g, h)
        delta = np.linalg.lstsq(J, -F(g), rcond=1e-8)[0]
        s = 1.0
        while True:
            trial = g + s * delta
            if np.all(trial > 0) and is_admissible(tri, trial):
                trial = trial * (v0 / float(np.sum(trial**1.5))) ** (2.0 / 3.0)
                new_res = einstein_residual(tri, trial)[2]
                if new_res < res or s < 1e-3:
                    break
            s *= 0.5
            if s < 1e-6:
                return g, res, it
        g, res = trial, new_res
    return g, res, max_iter

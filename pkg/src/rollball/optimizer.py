"""Rolling-ball descent and the baselines it is measured against.

The rolling-ball step displaces the center of a rigid sphere resting on the
loss surface along the lifted steepest-ascent tangent, then re-attaches the
sphere by projecting the displaced center back to a foot point on the graph
and re-lifting along the normal. Plain, stochastic, and sharpness-aware
gradient descent live here too so every run shares one trajectory format.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import numpy as np

from .geometry import normal_from_grad, tangent
from .landscape import Array, Landscape, value_and_grad

DIVERGENCE_LIMIT = 1e12


class WarmStart(str, enum.Enum):
    PREVIOUS_CONTACT = "previous_contact"
    CANDIDATE_THETA = "candidate_theta"


@dataclass(frozen=True)
class ProjectionConfig:
    """Inner foot-point solver settings.

    gamma=None selects the adaptive step 0.1 / (1 + |grad f(warm start)|^2);
    a float fixes the step size. The warm start policy picks the inner
    iteration's starting theta: the previous contact (default) or the
    displaced candidate's own theta block.
    """

    gamma: float | None = None
    max_iters: int = 100
    grad_tol: float = 1e-8
    warm_start: WarmStart = WarmStart.PREVIOUS_CONTACT

    def __post_init__(self):
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        object.__setattr__(self, "warm_start", WarmStart(self.warm_start))


class ProjectionDivergence(RuntimeError):
    """Inner iterate escaped the divergence guard."""

    def __init__(self, iteration: int, norm: float):
        self.iteration = iteration
        self.norm = norm
        super().__init__(
            f"foot-point iterate diverged at inner iteration {iteration}: "
            f"|theta| = {norm:.3e} exceeds {DIVERGENCE_LIMIT:.0e}")


@dataclass(frozen=True)
class GraphPoint:
    """A point on the graph surface: (theta, f(theta))."""

    theta: Array
    y: float

    @property
    def ambient(self) -> Array:
        return np.concatenate([self.theta, [self.y]])


@dataclass(frozen=True)
class BallState:
    """Rigid sphere resting on the graph: contact point plus lifted center.

    The center must sit exactly one radius from the contact; construction
    rejects states violating |center - contact| = rho beyond 1e-9 relative.
    """

    contact: GraphPoint
    center: Array
    rho: float

    def __post_init__(self):
        gap = abs(float(np.linalg.norm(self.center - self.contact.ambient)) - self.rho)
        if gap > 1e-9 * self.rho:
            raise ValueError(
                f"ball state violates contact distance: |center-contact| deviates "
                f"from rho={self.rho} by {gap:.3e}")


@dataclass(frozen=True)
class StepRecord:
    """One trajectory row. Field order is the serialization order."""

    t: int
    theta: Array
    loss: float
    center: Array
    grad_norm: float
    projection_iters: int
    projection_residual: float


@dataclass(frozen=True)
class TrajectoryHeader:
    optimizer: str
    landscape: str
    seed: int | None
    hyperparameters: dict[str, Any]


@dataclass
class Trajectory:
    """Header plus T+1 step records (records[0] is the initial state).

    A run that aborted mid-way carries the partial records and a non-None
    error string naming the failing step.
    """

    header: TrajectoryHeader
    records: list[StepRecord]
    error: str | None = None

    def thetas(self) -> Array:
        return np.array([r.theta for r in self.records])

    def losses(self) -> Array:
        return np.array([r.loss for r in self.records])


# ---------------------------------------------------------------------------
# core geometry steps
# ---------------------------------------------------------------------------

def lift(landscape: Landscape, theta: Array, rho: float) -> BallState:
    """Rest the sphere on the graph at theta: center = contact + rho * normal."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    theta = np.asarray(theta, dtype=float)
    v, g = value_and_grad(landscape, theta)
    p = GraphPoint(theta=theta, y=v)
    return BallState(contact=p, center=p.ambient + rho * normal_from_grad(g), rho=rho)


def project_footpoint(landscape: Landscape, candidate: Array,
                      warm_start_theta: Array,
                      cfg: ProjectionConfig = ProjectionConfig(),
                      ) -> tuple[GraphPoint, int, float]:
    """Foot point of an ambient candidate on the graph by descent on
    g(theta) = |theta - theta_cand|^2 + (f(theta) - y_cand)^2.

    The update uses the half-gradient (theta - theta_cand) +
    (f(theta) - y_cand) * grad f(theta); the factor 2 is absorbed into
    gamma. Returns (foot point, iterations used, final residual norm).
    Residuals above grad_tol after max_iters are reported, never hidden.
    """
    candidate = np.asarray(candidate, dtype=float)
    d = landscape.dim
    if candidate.shape != (d + 1,):
        raise ValueError(f"candidate must be ambient, shape ({d + 1},)")
    theta_cand, y_cand = candidate[:d], float(candidate[d])
    theta = np.asarray(warm_start_theta, dtype=float).copy()
    gamma = cfg.gamma
    if gamma is None:
        g0 = np.asarray(landscape.grad(theta), dtype=float)
        gamma = 0.1 / (1.0 + float(g0 @ g0))

    def residual(th: Array) -> tuple[float, Array]:
        v, g = value_and_grad(landscape, th)
        return v, (th - theta_cand) + (v - y_cand) * g

    iters = 0
    value, resid = residual(theta)
    for it in range(1, cfg.max_iters + 1):
        if float(np.linalg.norm(resid)) <= cfg.grad_tol:
            break
        theta = theta - gamma * resid
        iters = it
        if float(np.linalg.norm(theta)) > DIVERGENCE_LIMIT:
            raise ProjectionDivergence(it, float(np.linalg.norm(theta)))
        value, resid = residual(theta)
    return (GraphPoint(theta=theta, y=value), iters,
            float(np.linalg.norm(resid)))


def rbo_step(landscape: Landscape, state: BallState, eta: float,
             cfg: ProjectionConfig = ProjectionConfig(), t: int = 0,
             ) -> tuple[BallState, StepRecord]:
    """One rolling-ball update: displace the center against the lifted
    tangent, project to a new foot point, re-lift the center.

    t is the step index stamped into the returned record.
    """
    theta_t = state.contact.theta
    candidate = state.center - eta * tangent(landscape, theta_t)
    warm = theta_t if cfg.warm_start == WarmStart.PREVIOUS_CONTACT \
        else candidate[:landscape.dim]
    foot, iters, resid = project_footpoint(landscape, candidate, warm, cfg)
    g = np.asarray(landscape.grad(foot.theta), dtype=float)
    new_state = BallState(
        contact=foot,
        center=foot.ambient + state.rho * normal_from_grad(g),
        rho=state.rho)
    record = StepRecord(t=t, theta=foot.theta, loss=foot.y,
                        center=new_state.center,
                        grad_norm=float(np.linalg.norm(g)),
                        projection_iters=iters, projection_residual=resid)
    return new_state, record


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

def _record(t: int, landscape: Landscape, theta: Array,
            center: Array | None = None, iters: int = 0,
            resid: float = 0.0) -> StepRecord:
    """Snapshot at theta; center defaults to the graph point itself (the
    convention for optimizers that do not carry a ball)."""
    v, g = value_and_grad(landscape, theta)
    theta = np.asarray(theta, dtype=float)
    if center is None:
        center = np.concatenate([theta, [v]])
    return StepRecord(t=t, theta=theta, loss=v, center=center,
                      grad_norm=float(np.linalg.norm(g)),
                      projection_iters=iters, projection_residual=resid)


def _check_run_args(landscape: Landscape, theta0: Array, steps: int) -> Array:
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (landscape.dim,):
        raise ValueError(f"theta0 must have shape ({landscape.dim},)")
    if steps < 0:
        raise ValueError("step count must be >= 0")
    return theta0


def _run_rng(landscape: Landscape, seed: int | None,
             ) -> tuple[np.random.Generator | None, int | None]:
    """Minibatch RNG for stochastic landscapes, plus the seed actually in
    effect. An explicit run seed wins; otherwise the landscape's own default
    seed (meta key "default_seed") keeps unseeded runs reproducible. The
    effective seed goes into the trajectory header so a serialized run can
    be replayed from its own metadata."""
    if not landscape.is_stochastic:
        return None, seed
    if seed is None and landscape.meta is not None:
        seed = landscape.meta.get("default_seed")
    return np.random.default_rng(seed), seed


def _step_view(landscape: Landscape, rng: np.random.Generator | None) -> Landscape:
    """Landscape view for one outer step: a fresh minibatch for stochastic
    landscapes, the landscape itself otherwise. The view stays fixed for the
    whole step including every inner projection iteration."""
    if landscape.is_stochastic and rng is not None:
        return landscape.with_context(landscape.sample_context(rng))
    return landscape


def run_rbo(landscape: Landscape, theta0: Array, rho: float, eta: float,
            steps: int, cfg: ProjectionConfig = ProjectionConfig(),
            seed: int | None = None) -> Trajectory:
    """Roll the ball for `steps` updates; returns steps+1 records.

    On stochastic landscapes each outer step draws one minibatch (seeded)
    and uses it for the lift, the displacement, and all inner projection
    iterations of that step. A diverging step aborts the run and returns
    the partial trajectory with the error recorded.
    """
    theta0 = _check_run_args(landscape, theta0, steps)
    rng, seed = _run_rng(landscape, seed)
    header = TrajectoryHeader(
        optimizer="rbo", landscape=landscape.name, seed=seed,
        hyperparameters={"rho": rho, "eta": eta, "steps": steps,
                         "gamma": cfg.gamma, "max_iters": cfg.max_iters,
                         "grad_tol": cfg.grad_tol,
                         "warm_start": cfg.warm_start.value})
    state = lift(landscape, theta0, rho)
    records = [_record(0, landscape, state.contact.theta, center=state.center)]
    error = None
    for t in range(1, steps + 1):
        view = _step_view(landscape, rng)
        if view is not landscape:
            state = lift(view, state.contact.theta, rho)
        try:
            state, record = rbo_step(view, state, eta, cfg, t=t)
        except ProjectionDivergence as exc:
            error = f"step {t}: {exc}"
            break
        records.append(record)
    return Trajectory(header=header, records=records, error=error)


def _descent_loop(landscape: Landscape, theta0: Array, eta: float, steps: int,
                  header: TrajectoryHeader, rng: np.random.Generator | None,
                  sam_rho: float | None = None) -> Trajectory:
    """Shared loop for gd / sgd / sam. sam_rho=None means a plain gradient
    step; sam_rho=0.0 reproduces it bitwise since theta + 0 * u == theta."""
    theta = theta0
    records = [_record(0, landscape, theta)]
    error = None
    for t in range(1, steps + 1):
        view = _step_view(landscape, rng)
        g = np.asarray(view.grad(theta), dtype=float)
        if sam_rho is None:
            step_grad = g
        else:
            gn = float(np.linalg.norm(g))
            # zero radius or zero gradient: the ascent point is theta itself
            if sam_rho == 0.0 or gn == 0.0:
                probe = theta
            else:
                probe = theta + sam_rho * (g / gn)
            step_grad = np.asarray(view.grad(probe), dtype=float)
        theta = theta - eta * step_grad
        if float(np.linalg.norm(theta)) > DIVERGENCE_LIMIT:
            error = (f"step {t}: iterate diverged, |theta| = "
                     f"{float(np.linalg.norm(theta)):.3e}")
            break
        records.append(_record(t, view, theta))
    return Trajectory(header=header, records=records, error=error)


def run_gd(landscape: Landscape, theta0: Array, eta: float, steps: int) -> Trajectory:
    """Plain full-gradient descent."""
    theta0 = _check_run_args(landscape, theta0, steps)
    header = TrajectoryHeader(optimizer="gd", landscape=landscape.name, seed=None,
                              hyperparameters={"eta": eta, "steps": steps})
    return _descent_loop(landscape, theta0, eta, steps, header, rng=None)


def run_sgd(landscape: Landscape, theta0: Array, eta: float, steps: int,
            seed: int | None = None) -> Trajectory:
    """Stochastic gradient descent: one fresh minibatch per step.

    On a deterministic landscape (full-batch context) the records are
    bitwise identical to run_gd.
    """
    theta0 = _check_run_args(landscape, theta0, steps)
    rng, seed = _run_rng(landscape, seed)
    header = TrajectoryHeader(optimizer="sgd", landscape=landscape.name, seed=seed,
                              hyperparameters={"eta": eta, "steps": steps})
    return _descent_loop(landscape, theta0, eta, steps, header, rng=rng)


def run_sam(landscape: Landscape, theta0: Array, eta: float, sam_rho: float,
            steps: int, seed: int | None = None) -> Trajectory:
    """Sharpness-aware descent: gradient taken at the normalized ascent point
    theta + sam_rho * grad/|grad|. sam_rho = 0 reduces to run_gd bitwise."""
    theta0 = _check_run_args(landscape, theta0, steps)
    if sam_rho < 0:
        raise ValueError("sam_rho must be >= 0")
    rng, seed = _run_rng(landscape, seed)
    header = TrajectoryHeader(optimizer="sam", landscape=landscape.name, seed=seed,
                              hyperparameters={"eta": eta, "sam_rho": sam_rho,
                                               "steps": steps})
    return _descent_loop(landscape, theta0, eta, steps, header, rng=rng,
                         sam_rho=sam_rho)

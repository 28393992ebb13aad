"""Alternating assignment / vertex-relocation fitting of penalized polylines.

Each outer iteration rebuilds the nearest-target plan, descends the convex
fixed-plan objective (gradient + backtracking, decrease-only), then runs
vertex management (merge / split / endpoint drop, accepted only when the
true energy does not increase). The recorded energy trace is therefore
non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .curve import Polyline, merge_vertices, self_intersections_2d, turning_angles
from .diagnostics import TheoryReport, full_report, project_to_hull
from .energy import (
    EnergyBreakdown,
    StationarityReport,
    energy,
    fixed_plan_hessian,
    fixed_plan_value_grad,
    stationarity_report,
)
from .errors import ConfigError, NumericError
from .measure import DiscreteMeasure, convex_hull_2d, diameter, synth_measure
from .projection import build_plan


@dataclass(frozen=True)
class FitConfig:
    """Exponent, penalty, vertex budget, and stopping parameters for fit().

    None values are resolved against the measure: m_max defaults to
    10 * ceil(sqrt(n)) capped at 200, m_init to ceil(sqrt(n)) clamped into
    [2, m_max], tol_stationarity to 1e-6 * lam, and eps_tie / eps_merge to
    1e-9 * diameter.
    """

    p: float = 2.0
    lam: float = 0.1
    m_init: int | None = None
    m_max: int | None = None
    max_outer_iters: int = 200
    inner_max_steps: int = 80
    armijo: float = 1e-4
    shrink: float = 0.5
    tol_energy_rel: float = 1e-8
    tol_stationarity: float | None = None
    eps_tie: float | None = None
    eps_merge: float | None = None
    restarts: int = 1
    seed: int = 0
    tie_rule: str = "first_arc_length"

    def resolved(self, mu: DiscreteMeasure, diam: float) -> "FitConfig":
        if not self.p >= 1.0:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if not self.lam > 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        n = mu.n_atoms
        m_max = self.m_max if self.m_max is not None else min(200, 10 * math.ceil(math.sqrt(n)))
        if self.m_init is None:
            m_init = min(m_max, max(2, math.ceil(math.sqrt(n))))
        else:
            m_init = self.m_init
        if m_init < 1 or m_max < m_init:
            raise ConfigError(f"need 1 <= m_init <= m_max, got {m_init}, {m_max}")
        scale = max(diam, 1e-12)
        out = replace(
            self,
            m_init=m_init,
            m_max=m_max,
            tol_stationarity=self.tol_stationarity if self.tol_stationarity is not None
            else 1e-6 * self.lam,
            eps_tie=self.eps_tie if self.eps_tie is not None else 1e-9 * scale,
            eps_merge=self.eps_merge if self.eps_merge is not None else 1e-9 * scale,
        )
        for name in ("max_outer_iters", "inner_max_steps", "restarts"):
            if getattr(out, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("tol_energy_rel", "tol_stationarity", "armijo"):
            if not getattr(out, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        return out

    def to_dict(self) -> dict:
        return {
            "p": self.p, "lambda": self.lam, "m_init": self.m_init, "m_max": self.m_max,
            "max_outer_iters": self.max_outer_iters, "inner_max_steps": self.inner_max_steps,
            "armijo": self.armijo, "shrink": self.shrink,
            "tol_energy_rel": self.tol_energy_rel, "tol_stationarity": self.tol_stationarity,
            "eps_tie": self.eps_tie, "eps_merge": self.eps_merge,
            "restarts": self.restarts, "seed": self.seed, "tie_rule": self.tie_rule,
        }


@dataclass(frozen=True)
class FitResult:
    curve: Polyline
    energy_trace: np.ndarray  # total energy after each outer iteration, [0] = init
    breakdown: EnergyBreakdown
    stationarity: StationarityReport
    theory: TheoryReport
    iterations: int
    restart_index: int
    status: str  # "converged", "stationary", or "max_iters"

    def to_dict(self) -> dict:
        return {
            "curve": self.curve.to_dict(),
            "energy_trace": [float(e) for e in self.energy_trace],
            "energy": self.breakdown.to_dict(),
            "stationarity": self.stationarity.to_dict(),
            "theory": self.theory.to_dict(),
            "iterations": self.iterations,
            "restart_index": self.restart_index,
            "status": self.status,
        }


def _principal_frame(mu: DiscreteMeasure):
    """Weighted mean and PCA basis, sign-fixed by third moments.

    Eigenvectors are ordered by descending eigenvalue. Each axis sign is
    chosen so the weighted third central moment along it is positive,
    which keeps initialization equivariant under rigid motions; exactly
    symmetric data falls back to a coordinate-based sign and a tied top
    eigenvalue falls back to the first coordinate axis.
    """
    X = mu.positions
    w = mu.masses / mu.total_mass
    mean = w @ X
    centered = X - mean
    cov = (centered * w[:, None]).T @ centered
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    scale = math.sqrt(max(evals[0], 1e-300))
    if len(evals) > 1 and evals[0] - evals[1] <= 1e-12 * max(evals[0], 1e-300):
        evecs = np.eye(mu.dim)
    for k in range(evecs.shape[1]):
        axis = evecs[:, k]
        skew = float(np.sum(w * (centered @ axis) ** 3))
        if abs(skew) > 1e-12 * scale**3:
            if skew < 0:
                evecs[:, k] = -axis
        else:
            lead = np.argmax(np.abs(axis))
            if axis[lead] < 0:
                evecs[:, k] = -axis
    return mean, evals, evecs


def init_curve(mu: DiscreteMeasure, cfg: FitConfig, restart: int = 0,
               diam: float | None = None) -> Polyline:
    """Initial polyline on the first principal axis of the measure.

    m_init vertices are spread over +/- one weighted standard deviation
    around the weighted mean; restarts > 0 jitter the vertices (in the
    principal frame, clipped to the hull in 2-D) with seeded noise.
    """
    if diam is None:
        diam = diameter(mu)
    cfg = cfg.resolved(mu, diam)
    mean, evals, evecs = _principal_frame(mu)
    std = math.sqrt(max(evals[0], 0.0))
    if std == 0.0 or cfg.m_init == 1:
        verts = mean[None, :].copy()
    else:
        offsets = np.linspace(-std, std, cfg.m_init)
        verts = mean[None, :] + offsets[:, None] * evecs[:, 0][None, :]
    if restart > 0 and verts.shape[0] > 0:
        rng = np.random.default_rng([cfg.seed, restart])
        coeffs = rng.normal(0.0, 0.1 * diam, size=verts.shape)
        verts = verts + coeffs @ evecs.T
        if mu.dim == 2:
            hull = convex_hull_2d(mu)
            verts = np.array([project_to_hull(v, hull) for v in verts])
    verts = _collapse_exact(verts)
    return Polyline(verts)


def _collapse_exact(verts: np.ndarray) -> np.ndarray:
    if verts.shape[0] < 2:
        return verts
    keep = [verts[0]]
    for v in verts[1:]:
        if np.linalg.norm(v - keep[-1]) > 0.0:
            keep.append(v)
    return np.array(keep)


def fixed_plan_solve(mu: DiscreteMeasure, c: Polyline, plan, cfg: FitConfig,
                     diam: float | None = None):
    """Descend the fixed-plan objective; returns (curve, stalled).

    Plain gradient steps with Armijo backtracking (shrink cfg.shrink, 60
    halvings max); only strictly decreasing steps are accepted, so the
    fixed-plan objective and hence the true energy cannot go up.
    """
    if diam is None:
        diam = diameter(mu)
    cfg = cfg.resolved(mu, diam)
    V = np.array(c.vertices)
    X = mu.positions
    packed = plan.packed
    p, lam = cfg.p, cfg.lam
    val, grad = fixed_plan_value_grad(V, packed, X, p, lam, cfg.eps_tie)
    if not np.isfinite(val):
        raise NumericError("non-finite fixed-plan objective at start")
    stalled = False
    t_warm = None
    for _ in range(cfg.inner_max_steps):
        gmax = float(np.max(np.linalg.norm(grad, axis=1))) if grad.size else 0.0
        if gmax <= cfg.tol_stationarity:
            break
        g2 = float(np.sum(grad * grad))
        t = 2.0 * t_warm if t_warm is not None else max(diam, 1e-12) / math.sqrt(g2)
        accepted = False
        for _ in range(60):
            cand = V - t * grad
            cand_val, _ = fixed_plan_value_grad(cand, packed, X, p, lam, cfg.eps_tie,
                                                want_grad=False)
            if not np.isfinite(cand_val):
                raise NumericError("non-finite fixed-plan objective during line search")
            if cand_val <= val - cfg.armijo * t * g2:
                accepted = True
                break
            t *= cfg.shrink
        if not accepted:
            stalled = True
            break
        V = cand
        val = cand_val
        t_warm = t
        _, grad = fixed_plan_value_grad(V, packed, X, p, lam, cfg.eps_tie)
    return Polyline(_collapse_exact(V)), stalled


def _true_energy(mu, c, cfg, diam) -> EnergyBreakdown:
    plan, _ = build_plan(mu, c, tie_rule=cfg.tie_rule, eps_tie=cfg.eps_tie, diam=diam)
    return energy(mu, c, cfg.p, cfg.lam, plan=plan)


def _manage_vertices(mu, c: Polyline, cfg: FitConfig, diam: float,
                     current: EnergyBreakdown):
    """Merge close vertices, split oversized segments, drop idle endpoints.

    Every step is accepted only if the true energy does not increase
    (splits leave it unchanged exactly); exact duplicate vertices are
    always removed.
    """
    merged = merge_vertices(c, cfg.eps_merge)
    if merged.n_vertices < c.n_vertices:
        cand_e = _true_energy(mu, merged, cfg, diam)
        if cand_e.total <= current.total:
            c, current = merged, cand_e
        else:
            fallback = merge_vertices(c, 0.0)
            if fallback.n_vertices < c.n_vertices:
                c = fallback
                current = _true_energy(mu, c, cfg, diam)

    while c.n_vertices < cfg.m_max and c.n_vertices > 1:
        lens = c.segment_lengths
        med = float(np.median(lens))
        k = int(np.argmax(lens))
        if lens[k] <= 2.0 * med:
            break
        verts = np.insert(c.vertices, k + 1, 0.5 * (c.vertices[k] + c.vertices[k + 1]), axis=0)
        c = Polyline(verts)

    while c.n_vertices > 1:
        plan, cls = build_plan(mu, c, tie_rule=cfg.tie_rule, eps_tie=cfg.eps_tie, diam=diam)
        dropped = False
        for j, keep in ((0, slice(1, None)), (c.n_vertices - 1, slice(None, -1))):
            if c.n_vertices > 1 and not cls.talking[j]:
                cand = Polyline(c.vertices[keep])
                cand_e = _true_energy(mu, cand, cfg, diam)
                if cand_e.total < current.total:
                    c, current = cand, cand_e
                    dropped = True
                    break
        if not dropped:
            break
    return c, current


def _polish(mu: DiscreteMeasure, c: Polyline, cfg: FitConfig, diam: float) -> Polyline:
    """Damped quasi-Newton refinement to the self-consistent stationary point.

    Each iteration rebuilds the plan, so the gradient is the true energy
    gradient (envelope principle) while the fixed-plan Hessian serves as a
    positive-semidefinite model. This pins the converged vertices to the
    local stationary point at machine precision, removing the tolerance-
    sized wobble plain descent stops with; reruns and rigid-motion twins
    then agree to ~1e-12. Candidates are accepted on (near-exact) true
    energy decrease, so the caller can still gate the result.
    """
    if cfg.p == 1.0 or c.n_vertices < 1:
        return c
    X = mu.positions
    V = np.array(c.vertices)
    m, d = V.shape
    gscale = cfg.lam + cfg.p * mu.total_mass * max(diam, 1e-12) ** (cfg.p - 1.0)

    def plan_at(curve):
        return build_plan(mu, curve, tie_rule=cfg.tie_rule, eps_tie=cfg.eps_tie, diam=diam)[0]

    curve = Polyline(_collapse_exact(V))
    packed = plan_at(curve).packed
    V = np.array(curve.vertices)
    m = V.shape[0]
    val, grad = fixed_plan_value_grad(V, packed, X, cfg.p, cfg.lam, cfg.eps_tie)
    for _ in range(25):
        gmax = float(np.max(np.linalg.norm(grad, axis=1)))
        if gmax <= 1e-13 * gscale:
            break
        H = fixed_plan_hessian(V, packed, X, cfg.p, cfg.lam, cfg.eps_tie, envelope=True)
        ridge = 1e-12 * (abs(np.trace(H)) / (m * d) + gscale)
        reg = H + ridge * np.eye(m * d)
        try:
            np.linalg.cholesky(reg)
        except np.linalg.LinAlgError:
            # indefinite envelope model: fall back to the convex frozen one
            reg = fixed_plan_hessian(V, packed, X, cfg.p, cfg.lam, cfg.eps_tie) \
                + ridge * np.eye(m * d)
        try:
            step = np.linalg.solve(reg, -grad.reshape(-1))
        except np.linalg.LinAlgError:
            break
        step = step.reshape(m, d)
        slope = -float(np.sum(grad * step))  # descent rate along the step
        if not slope > 0.0:
            break
        scale = 1.0
        accepted = None
        for _ in range(30):
            cand = V + scale * step
            if np.any(np.linalg.norm(np.diff(cand, axis=0), axis=1) == 0.0):
                scale *= 0.5
                continue
            cand_curve = Polyline(cand)
            cand_packed = plan_at(cand_curve).packed
            cand_val, cand_grad = fixed_plan_value_grad(cand, cand_packed, X,
                                                        cfg.p, cfg.lam, cfg.eps_tie)
            actual = val - cand_val
            # monotone, and not a cross-ridge teleport (decrease must stay
            # commensurate with the local model so twin runs cannot fork)
            if np.isfinite(cand_val) and actual >= -1e-15 * abs(val) \
                    and actual <= 4.0 * scale * slope + 1e-14 * abs(val):
                accepted = (cand, cand_val, cand_grad, cand_packed)
                break
            scale *= 0.5
        if accepted is None:
            break
        V, val, grad, packed = accepted
    return Polyline(_collapse_exact(V))


def _drop_straight_vertices(mu: DiscreteMeasure, c: Polyline, cfg: FitConfig,
                            diam: float, current: EnergyBreakdown):
    """Remove interior vertices with zero turning angle (image unchanged).

    A vertex on a straight stretch is a flat direction of the energy: its
    position along the segment is undetermined, which would make otherwise
    identical runs disagree. Removal is gated on the recomputed energy so
    the monotone trace survives floating-point re-evaluation.
    """
    while c.n_vertices >= 3:
        angles = turning_angles(c)
        idx = np.nonzero(angles <= 1e-9)[0]
        if idx.size == 0:
            break
        j = int(idx[0]) + 1
        cand = Polyline(np.delete(c.vertices, j, axis=0))
        cand_e = _true_energy(mu, cand, cfg, diam)
        if cand_e.total <= current.total * (1.0 + 1e-13) + 1e-300:
            c, current = cand, cand_e
        else:
            break
    return c, current


def _fit_single(mu: DiscreteMeasure, cfg: FitConfig, restart: int, diam: float):
    curve = init_curve(mu, cfg, restart=restart, diam=diam)
    current = _true_energy(mu, curve, cfg, diam)
    if not np.isfinite(current.total):
        raise NumericError("non-finite energy at initialization")
    trace = [current.total]
    status = "max_iters"
    iterations = 0
    for it in range(1, cfg.max_outer_iters + 1):
        iterations = it
        plan, _ = build_plan(mu, curve, tie_rule=cfg.tie_rule, eps_tie=cfg.eps_tie, diam=diam)
        curve, stalled = fixed_plan_solve(mu, curve, plan, cfg, diam=diam)
        interim = _true_energy(mu, curve, cfg, diam)
        curve, new_energy = _manage_vertices(mu, curve, cfg, diam, interim)
        if not np.isfinite(new_energy.total):
            raise NumericError(f"non-finite energy at outer iteration {it}")
        trace.append(new_energy.total)
        rel_drop = (current.total - new_energy.total) / max(abs(current.total), 1e-300)
        current = new_energy
        if rel_drop < cfg.tol_energy_rel:
            status = "stationary" if stalled else "converged"
            break
    curve, current = _finalize(mu, curve, cfg, diam, current)
    if trace[-1] != current.total:
        trace.append(current.total)
    return curve, current, np.array(trace), iterations, status


def _finalize(mu: DiscreteMeasure, curve: Polyline, cfg: FitConfig, diam: float,
              current: EnergyBreakdown):
    """Polish to the exact stationary point and canonicalize degeneracies.

    Alternates Newton polishing with a gated collapse of near-coincident
    vertex pairs (a curve that wants a corner leaves two vertices a few
    ulps apart, where the length term is effectively kinked); every
    acceptance requires the true energy not to increase beyond a 1e-13
    relative re-evaluation slack.
    """
    slack = 1.0 + 1e-13
    for _ in range(curve.n_vertices + 2):
        polished = _polish(mu, curve, cfg, diam)
        polished_energy = _true_energy(mu, polished, cfg, diam)
        if polished_energy.total <= current.total * slack + 1e-300:
            curve, current = polished, polished_energy
        merged = merge_vertices(curve, 1e-6 * max(diam, 1e-12))
        if merged.n_vertices == curve.n_vertices:
            break
        merged_energy = _true_energy(mu, merged, cfg, diam)
        if merged_energy.total <= current.total * slack + 1e-300:
            curve, current = merged, merged_energy
        else:
            break
    return _drop_straight_vertices(mu, curve, cfg, diam, current)


def fit(mu: DiscreteMeasure, cfg: FitConfig) -> FitResult:
    """Fit a polyline minimizing the penalized energy; best restart wins.

    Restarts run independently with derived seeds; ties in final energy
    keep the lowest restart index, so results are deterministic.
    """
    diam = diameter(mu)
    cfg = cfg.resolved(mu, diam)
    best = None
    for r in range(cfg.restarts):
        curve, current, trace, iterations, status = _fit_single(mu, cfg, r, diam)
        if best is None or current.total < best[1].total:
            best = (curve, current, trace, iterations, status, r)
    curve, current, trace, iterations, status, r = best
    plan, cls = build_plan(mu, curve, tie_rule=cfg.tie_rule, eps_tie=cfg.eps_tie, diam=diam)
    stat = stationarity_report(mu, curve, cfg.p, cfg.lam, plan=plan, classification=cls)
    theory = full_report(mu, curve, cfg.p, cfg.lam, tie_rule=cfg.tie_rule)
    return FitResult(curve, trace, current, stat, theory, iterations, r, status)


def conjecture_search(p: float, families=("random_atoms",), budget: int = 20,
                      seed: int = 0, restarts: int = 4,
                      lam_range=(0.02, 0.5), n_range=(3, 8)) -> list[dict]:
    """Hunt for self-intersecting stationary fits on random instances.

    Returns full records for every instance whose best fitted curve
    crosses itself while meeting the stationarity tolerance; finding none
    proves nothing, and candidates carry no claim of global optimality.
    For p >= 2 the run serves as a consistency control: minimizers are
    provably injective there, so candidates should not appear.
    """
    if not p >= 1.0:
        raise ConfigError(f"p must be >= 1, got {p}")
    candidates = []
    for i in range(int(budget)):
        rng = np.random.default_rng([seed, i])
        family = families[i % len(families)]
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        if family == "random_atoms":
            pos = rng.uniform(0.0, 1.0, size=(n, 2))
            masses = rng.uniform(0.2, 1.0, size=n)
            masses = masses / masses.sum()
            mu = DiscreteMeasure(pos, masses)
        else:
            mu = synth_measure(family, n, seed=int(rng.integers(0, 2**31 - 1)))
        lam = float(np.exp(rng.uniform(np.log(lam_range[0]), np.log(lam_range[1]))))
        cfg = FitConfig(p=p, lam=lam, restarts=restarts, seed=int(rng.integers(0, 2**31 - 1)),
                        m_init=max(3, n // 2), m_max=max(6, n))
        result = fit(mu, cfg)
        diam = diameter(mu)
        hits = self_intersections_2d(result.curve, eps=1e-9 * max(diam, 1e-12))
        stat_ok = result.stationarity.passes(cfg.resolved(mu, diam).tol_stationarity)
        if hits and stat_ok:
            candidates.append({
                "instance": i,
                "family": family,
                "p": p,
                "lambda": lam,
                "measure": mu.to_dict(),
                "curve": result.curve.to_dict(),
                "energy": result.breakdown.total,
                "max_free_residual": result.stationarity.max_free_residual,
                "intersections": [
                    {"segments": [h.seg_a, h.seg_b], "kind": h.kind,
                     "point": [float(h.point[0]), float(h.point[1])]}
                    for h in hits
                ],
            })
    return candidates

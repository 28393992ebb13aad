"""Nearest-point projection of atoms onto a polyline: transport plan, talking sets."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curve import Polyline
from .errors import DimensionMismatchError, PencurveError
from .measure import DiscreteMeasure, diameter

EPS_PROJ = 1e-12  # relative tolerance for listing tied nearest targets
TIE_RULES = ("first_arc_length", "split_evenly")


@dataclass(frozen=True)
class Target:
    """A point on the curve: a vertex, or a barycentric point inside a segment.

    vertex is None for interior targets; seg/t locate the point as
    (1-t) * v_seg + t * v_{seg+1} with t strictly inside (0, 1).
    """

    vertex: int | None
    seg: int | None
    t: float
    arc: float
    point: np.ndarray

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None


@dataclass(frozen=True)
class PlanEntry:
    atom: int
    mass: float
    distance: float
    target: Target


@dataclass(frozen=True)
class TransportPlan:
    """Atom-to-curve mass assignment; first marginal is the measure.

    Entries are grouped by atom (ascending atom index, then target arc
    length), which fixes the deterministic summation order. Only nearest
    targets carry mass, so every entry's distance is d(x_i, curve).
    """

    entries: tuple[PlanEntry, ...]
    n_atoms: int
    n_vertices: int

    @property
    def total_mass(self) -> float:
        return float(sum(e.mass for e in self.entries))

    def atom_distances(self) -> np.ndarray:
        """d(x_i, curve) per atom, in atom order."""
        out = np.zeros(self.n_atoms)
        for e in self.entries:
            out[e.atom] = e.distance
        return out

    @cached_property
    def packed(self) -> dict:
        """Entry columns as arrays for vectorized energy/gradient work.

        Each target is the affine point (1-t) * V[ia] + t * V[ib]; vertex
        targets use ia == ib and t == 0.
        """
        n = len(self.entries)
        atom = np.zeros(n, dtype=np.int64)
        mass = np.zeros(n)
        dist = np.zeros(n)
        ia = np.zeros(n, dtype=np.int64)
        ib = np.zeros(n, dtype=np.int64)
        t = np.zeros(n)
        for k, e in enumerate(self.entries):
            atom[k] = e.atom
            mass[k] = e.mass
            dist[k] = e.distance
            if e.target.is_vertex:
                ia[k] = ib[k] = e.target.vertex
            else:
                ia[k] = e.target.seg
                ib[k] = e.target.seg + 1
                t[k] = e.target.t
        return {"atom": atom, "mass": mass, "dist": dist, "ia": ia, "ib": ib, "t": t}

    def to_dict(self) -> dict:
        groups: dict[int, list] = {}
        for e in self.entries:
            tgt = {
                "kind": "vertex" if e.target.is_vertex else "segment",
                "mass": e.mass,
                "distance": e.distance,
                "arc": e.target.arc,
            }
            if e.target.is_vertex:
                tgt["vertex"] = e.target.vertex
            else:
                tgt["segment"] = e.target.seg
                tgt["t"] = e.target.t
            groups.setdefault(e.atom, []).append(tgt)
        return {"atoms": [{"atom": i, "targets": groups[i]} for i in sorted(groups)]}


@dataclass(frozen=True)
class VertexClassification:
    """Free/tied status and talking set for every curve vertex.

    A vertex is tied when an atom sits on it (within eps_tie) and sends its
    full mass there; talking[j] lists atoms with a plan entry at vertex j.
    """

    tied_atom: tuple  # per vertex: atom index or None
    talking: tuple  # per vertex: tuple of atom indices
    eps_tie: float

    def is_tied(self, j: int) -> bool:
        return self.tied_atom[j] is not None


def _segment_feet(x: np.ndarray, c: Polyline):
    """Per-segment nearest point to x: (t values, distances)."""
    a = c.vertices[:-1]
    vec = c.segment_vectors
    denom = np.einsum("ij,ij->i", vec, vec)
    t = np.clip(np.einsum("ij,ij->i", x[None, :] - a, vec) / denom, 0.0, 1.0)
    foot = a + t[:, None] * vec
    d = np.linalg.norm(x[None, :] - foot, axis=1)
    return t, d


def _canonical_target(c: Polyline, seg: int, t: float, snap: float) -> Target:
    cum = c.cumulative_lengths
    ln = c.segment_lengths[seg]
    if t * ln <= snap:
        j = seg
        return Target(j, None, 0.0, float(cum[j]), c.vertices[j].copy())
    if (1.0 - t) * ln <= snap:
        j = seg + 1
        return Target(j, None, 0.0, float(cum[j]), c.vertices[j].copy())
    point = c.vertices[seg] + t * c.segment_vectors[seg]
    return Target(None, seg, float(t), float(cum[seg] + t * ln), point)


def project_point(x, c: Polyline, eps_abs: float = 0.0, snap: float = 0.0):
    """Distance from x to the curve and every nearest target achieving it.

    Targets within eps_abs of the global minimum are all listed, ordered by
    arc length; snap controls how close to a vertex a foot point must be to
    be reported as that vertex.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (c.dim,):
        raise DimensionMismatchError(f"point of shape {x.shape} vs curve dim {c.dim}")
    if c.n_vertices == 1:
        d = float(np.linalg.norm(x - c.vertices[0]))
        return d, [Target(0, None, 0.0, 0.0, c.vertices[0].copy())]
    t, d = _segment_feet(x, c)
    dmin = float(np.min(d))
    targets = []
    seen = set()
    for k in np.nonzero(d <= dmin + eps_abs)[0]:
        tgt = _canonical_target(c, int(k), float(t[k]), snap)
        key = ("v", tgt.vertex) if tgt.is_vertex else ("s", tgt.seg, round(tgt.arc, 15))
        if key not in seen:
            seen.add(key)
            targets.append(tgt)
    targets.sort(key=lambda g: g.arc)
    return dmin, targets


def build_plan(
    mu: DiscreteMeasure,
    c: Polyline,
    tie_rule: str = "first_arc_length",
    eps_tie: float | None = None,
    eps_proj: float = EPS_PROJ,
    diam: float | None = None,
):
    """Assign every atom's mass to its nearest curve target(s).

    tie_rule resolves atoms with several nearest targets: all mass to the
    smallest arc length, or an even split. Returns the plan and the per-
    vertex free/tied classification (eps_tie defaults to 1e-9 * diameter).
    diam, when given, skips the O(n^2) diameter recomputation.
    """
    if mu.dim != c.dim:
        raise DimensionMismatchError(f"measure dim {mu.dim} vs curve dim {c.dim}")
    if tie_rule not in TIE_RULES:
        raise PencurveError(f"unknown tie rule {tie_rule!r}; choose from {TIE_RULES}")
    if diam is None:
        diam = diameter(mu)
    if eps_tie is None:
        eps_tie = 1e-9 * diam
    eps_abs = eps_proj * diam

    X = mu.positions
    n = mu.n_atoms
    m = c.n_vertices
    entries: list[PlanEntry] = []

    if m == 1:
        v0 = c.vertices[0]
        for i in range(n):
            d = float(np.linalg.norm(X[i] - v0))
            entries.append(PlanEntry(i, float(mu.masses[i]), d,
                                     Target(0, None, 0.0, 0.0, v0.copy())))
    else:
        a = c.vertices[:-1]
        vec = c.segment_vectors
        denom = np.einsum("ij,ij->i", vec, vec)
        rel = X[:, None, :] - a[None, :, :]
        T = np.clip(np.einsum("nkj,kj->nk", rel, vec) / denom, 0.0, 1.0)
        feet = a[None, :, :] + T[:, :, None] * vec[None, :, :]
        D = np.linalg.norm(X[:, None, :] - feet, axis=2)
        dmin = np.min(D, axis=1)
        ties = D <= (dmin[:, None] + eps_abs)
        arcs = c.cumulative_lengths[:-1][None, :] + T * c.segment_lengths[None, :]
        arcs_masked = np.where(ties, arcs, np.inf)
        first_seg = np.argmin(arcs_masked, axis=1)
        n_ties = np.sum(ties, axis=1)
        for i in range(n):
            mi = float(mu.masses[i])
            di = float(dmin[i])
            if tie_rule == "first_arc_length" or n_ties[i] == 1:
                k = int(first_seg[i])
                tgt = _canonical_target(c, k, float(T[i, k]), eps_tie)
                entries.append(PlanEntry(i, mi, di, tgt))
            else:
                _, tgts = project_point(X[i], c, eps_abs=eps_abs, snap=eps_tie)
                share = mi / len(tgts)
                for tgt in tgts:
                    entries.append(PlanEntry(i, share, di, tgt))

    talking: list[list[int]] = [[] for _ in range(m)]
    tied: list[int | None] = [None] * m
    tied_dist = [np.inf] * m
    for e in entries:
        if e.target.is_vertex:
            j = e.target.vertex
            talking[j].append(e.atom)
            if e.distance <= eps_tie and e.distance < tied_dist[j]:
                tied[j] = e.atom
                tied_dist[j] = e.distance
    plan = TransportPlan(tuple(entries), n, m)
    classification = VertexClassification(tuple(tied), tuple(tuple(t) for t in talking), eps_tie)
    return plan, classification


def sigma_mass(plan: TransportPlan, window) -> float:
    """Mass projected onto the sub-curve spanned by a vertex index window.

    Counts vertex targets inside [a, b] and interior targets on segments
    a..b-1 (the segments between the window's vertices).
    """
    a, b = int(window[0]), int(window[1])
    if not (0 <= a <= b <= plan.n_vertices - 1):
        raise PencurveError(f"invalid window {window} for {plan.n_vertices} vertices")
    total = 0.0
    for e in plan.entries:
        if e.target.is_vertex:
            if a <= e.target.vertex <= b:
                total += e.mass
        elif a <= e.target.seg <= b - 1:
            total += e.mass
    return total

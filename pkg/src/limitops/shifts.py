"""Translation conjugates and limit operators along sequences to infinity.

Limits are indexed by user-declared sequences (rays, explicit point lists,
subsequences); structurally convergent coefficient classes (constant,
periodic along a compatible ray, finitely supported, half-space indicators)
get their limits symbolically with exact certificates, everything else goes
through a doubling-index Cauchy scan in window norms. Divergence is reported
as a value (with a witness), not raised.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InvalidConfigError, UnsupportedConstructionError
from .fields import (
    AndPredicate,
    ConstantField,
    EmptyPredicate,
    ExpressionField,
    ExpressionPredicate,
    Field,
    FiniteSetPredicate,
    FullPredicate,
    HalfspacePredicate,
    IndicatorField,
    NotPredicate,
    PeriodicField,
    ProductField,
    ScaledField,
    SeededRandomField,
    SublatticePredicate,
    SumField,
    TableField,
    _GenericConj,
    _GenericShifted,
    _normalize_shift,
)
from .operator import BandOperator, window_norm
from .space import Window


@dataclass(frozen=True)
class Ray:
    """x_n = n * direction + offset."""

    direction: tuple
    offset: tuple = ()
    label: str = ""

    def bind(self, space):
        v = _normalize_shift(space, self.direction)
        if all(c == 0 for c in v[: space.dim]):
            raise InvalidConfigError("ray direction must be nonzero in the lattice part")
        w = _normalize_shift(space, self.offset) if self.offset else (0,) * space.point_arity
        name = self.label or f"ray{list(v)}+{list(w)}"
        return _BoundRay(v, w, name)

    def subsequence(self, modulus, residue=0):
        """The arithmetic subsequence n -> residue + n * modulus, itself a
        ray."""
        v = tuple(c * modulus for c in self.direction)
        base = self.offset or (0,) * len(self.direction)
        w = tuple(b + residue * c for b, c in zip(base, self.direction))
        return Ray(v, w, label=(self.label or "ray") + f"[{residue} mod {modulus}]")

    def to_descriptor(self):
        return {"kind": "ray", "label": self.label, "v": list(self.direction),
                "w": list(self.offset) if self.offset else None}


class _BoundRay:
    def __init__(self, v, w, label):
        self.v, self.w, self.label = v, w, label
        self.finite = None

    def point(self, n):
        return tuple(b + n * c for b, c in zip(self.w, self.v))


@dataclass(frozen=True)
class ExplicitSequence:
    """A user-supplied point sequence; must wander off to infinity."""

    points: tuple
    label: str = "explicit"

    def bind(self, space):
        pts = [space._check_point(p) for p in self.points]
        if len(pts) < 2:
            raise InvalidConfigError("explicit sequence needs at least two points")
        d0 = space.dist(space.basepoint, pts[0])
        d1 = space.dist(space.basepoint, pts[-1])
        if d1 <= d0:
            raise InvalidConfigError(
                "explicit sequence does not move away from the basepoint"
            )
        return _BoundExplicit(pts, self.label)

    def to_descriptor(self):
        return {"kind": "explicit", "label": self.label,
                "points": [list(p) if isinstance(p, tuple) else p for p in self.points]}


class _BoundExplicit:
    def __init__(self, pts, label):
        self.pts, self.label = pts, label
        self.finite = len(pts)

    def point(self, n):
        return self.pts[min(n, len(self.pts) - 1)]


@dataclass(frozen=True)
class Subsequence:
    """Index-restricted view of a parent sequence."""

    parent: object
    indices: tuple
    label: str = "subsequence"

    def bind(self, space):
        par = self.parent.bind(space)
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise InvalidConfigError("subsequence indices must be strictly increasing")
        return _BoundExplicit([par.point(i) for i in idx], self.label)

    def to_descriptor(self):
        return {"kind": "subsequence", "label": self.label,
                "parent": self.parent.to_descriptor(), "indices": list(self.indices)}


def sequence_from_descriptor(desc):
    kind = desc.get("kind", "ray")
    if kind == "ray":
        return Ray(tuple(desc["v"]), tuple(desc.get("w") or ()), desc.get("label", ""))
    if kind == "explicit":
        return ExplicitSequence(
            tuple(tuple(p) if isinstance(p, list) else p for p in desc["points"]),
            desc.get("label", "explicit"),
        )
    if kind == "subsequence":
        return Subsequence(sequence_from_descriptor(desc["parent"]),
                           tuple(desc["indices"]), desc.get("label", "subsequence"))
    raise InvalidConfigError(f"unknown sequence kind {kind!r}")


@dataclass
class LimitOperator:
    op: BandOperator
    sequence_label: str
    exact: bool
    certificate: list  # (radius, shift index, achieved window-norm gap)
    message: str = ""

    def verify(self, A, seq, p=2):
        """Recompute every certificate entry; returns the largest deviation
        from the recorded gaps."""
        bound = seq.bind(A.space)
        omega = max(A.propagation, self.op.propagation)
        worst = 0.0
        for radius, n, gap in self.certificate:
            diff = conjugate(A, bound.point(n)) - self.op
            g = window_norm(diff, Window(A.space, A.space.basepoint, radius),
                            Window(A.space, A.space.basepoint, radius + omega), p)
            worst = max(worst, abs(g - gap))
        return worst

    def to_descriptor(self):
        return {
            "sequence": self.sequence_label,
            "exact": self.exact,
            "operator": self.op.to_descriptor(),
            "certificate": [
                {"radius": r, "index": n, "gap": g} for r, n, g in self.certificate
            ],
            "message": self.message,
        }


@dataclass
class DivergenceReport:
    sequence_label: str
    witness_indices: tuple
    radius: float
    gap: float
    message: str
    suggested: list = dc_field(default_factory=list)

    def to_descriptor(self):
        return {
            "sequence": self.sequence_label,
            "witnessIndices": list(self.witness_indices),
            "radius": self.radius,
            "gap": self.gap,
            "message": self.message,
            "suggested": self.suggested,
        }


def conjugate(A, x):
    """U_x A U_x^{-1}: every coefficient becomes c_k(. + x); the propagation
    is unchanged because the shift is an isometry."""
    if A.space.kind == "graph":
        raise UnsupportedConstructionError(
            "graph spaces carry no declared transitive shift action"
        )
    return A.translated(x)


class _Divergent(Exception):
    def __init__(self, n1, n2, detail, suggested=None):
        self.n1, self.n2, self.detail = n1, n2, detail
        self.suggested = suggested or []


def _periodic_limit(space, f, ray):
    periods = list(f.period)
    v = ray.v
    # orbit length of n*v modulo the period lattice (and fiber, if resolved)
    mods = periods + ([space.fiber] if (f.fiber_resolved and space.fiber > 1) else [])
    comps = list(v[: space.dim]) + (
        [v[-1]] if (f.fiber_resolved and space.fiber > 1) else []
    )
    q = 1
    for m, c in zip(mods, comps):
        step = np.gcd(int(c) % m, m)
        q = int(np.lcm(q, m // step if step else 1))
    base = f.shifted(space, ray.w)
    for n in range(1, q):
        shift = tuple(b + n * c for b, c in zip(ray.w, v))
        other = f.shifted(space, shift)
        if not np.array_equal(base.values, other.values):
            residues = [0, n]
            sub = [{"kind": "ray", "v": [q * c for c in v[: space.dim]],
                    "w": [b + r * c for b, c in zip(ray.w[: space.dim], v)],
                    "label": f"residue {r} mod {q}"}
                   for r in range(min(q, 4))]
            raise _Divergent(residues[0], residues[1],
                             f"periodic field cycles with period {q} along the ray",
                             suggested=sub)
    return base


def _halfspace_limit(space, pred, ray):
    drift = sum(a * b for a, b in zip(pred.normal, ray.v[: space.dim]))
    if drift > 0:
        return FullPredicate()
    if drift < 0:
        return EmptyPredicate()
    return pred.shifted(space, ray.w)


def _sublattice_limit(space, pred, ray):
    q = 1
    for m, c in zip(pred.modulus, ray.v[: space.dim]):
        step = np.gcd(int(c) % m, m)
        q = int(np.lcm(q, m // step if step else 1))
    if q == 1:
        return pred.shifted(space, ray.w)
    sub = [{"kind": "ray", "v": [q * c for c in ray.v[: space.dim]],
            "w": [b + r * c for b, c in zip(ray.w[: space.dim], ray.v)],
            "label": f"residue {r} mod {q}"} for r in range(min(q, 4))]
    raise _Divergent(0, 1, f"sublattice indicator alternates with period {q}",
                     suggested=sub)


def _predicate_limit(space, pred, ray):
    if isinstance(pred, (FullPredicate, EmptyPredicate)):
        return pred
    if isinstance(pred, HalfspacePredicate):
        return _halfspace_limit(space, pred, ray)
    if isinstance(pred, SublatticePredicate):
        return _sublattice_limit(space, pred, ray)
    if isinstance(pred, FiniteSetPredicate):
        return EmptyPredicate()
    if isinstance(pred, NotPredicate):
        inner = _predicate_limit(space, pred.base, ray)
        if inner is None:
            return None
        if isinstance(inner, FullPredicate):
            return EmptyPredicate()
        if isinstance(inner, EmptyPredicate):
            return FullPredicate()
        return NotPredicate(inner)
    if isinstance(pred, AndPredicate):
        parts = [_predicate_limit(space, p, ray) for p in pred.parts]
        if any(p is None for p in parts):
            return None
        if any(isinstance(p, EmptyPredicate) for p in parts):
            return EmptyPredicate()
        parts = [p for p in parts if not isinstance(p, FullPredicate)]
        if not parts:
            return FullPredicate()
        return AndPredicate(parts) if len(parts) > 1 else parts[0]
    if isinstance(pred, ExpressionPredicate):
        return None
    return None


def _analytic_limit(space, f, ray):
    """Symbolic limit of a field along a bound ray; None when unknown."""
    if isinstance(f, ConstantField):
        return f
    if isinstance(f, PeriodicField):
        return _periodic_limit(space, f, ray)
    if isinstance(f, TableField):
        return ConstantField(f.default)
    if isinstance(f, IndicatorField):
        p = _predicate_limit(space, f.predicate, ray)
        if p is None:
            return None
        if isinstance(p, FullPredicate):
            return ConstantField(1.0)
        if isinstance(p, EmptyPredicate):
            return ConstantField(0.0)
        return IndicatorField(p)
    if isinstance(f, ScaledField):
        inner = _analytic_limit(space, f.base, ray)
        return None if inner is None else inner.scaled(f.factor)
    if isinstance(f, _GenericConj):
        inner = _analytic_limit(space, f.base, ray)
        return None if inner is None else inner.conj()
    if isinstance(f, _GenericShifted):
        moved = _BoundRay(ray.v, tuple(a + b for a, b in zip(ray.w, f.offset)), ray.label)
        return _analytic_limit(space, f.base, moved)
    if isinstance(f, SumField):
        parts = [_analytic_limit(space, p, ray) for p in f.parts]
        if any(p is None for p in parts):
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out.plus(p)
        return out
    if isinstance(f, ProductField):
        parts = [_analytic_limit(space, p, ray) for p in f.parts]
        if any(p is None for p in parts):
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out.times(p)
        return out
    if isinstance(f, (ExpressionField, SeededRandomField)):
        return None
    return None


def _schedule(budget):
    n = 1
    while n <= budget:
        yield n
        n *= 2


def _gap(A_shifted, candidate, space, radius, omega, p):
    diff = A_shifted - candidate
    return window_norm(
        diff,
        Window(space, space.basepoint, radius),
        Window(space, space.basepoint, radius + omega),
        p,
    )


def limit_operator(A, seq, radii=(5, 10, 20), tol=1e-8, budget=2 ** 20, p=2):
    """Limit of the conjugates of A along the sequence, or a divergence
    report.

    Structurally convergent coefficients give an exact limit; the certificate
    still records measured window-norm gaps (which are then exactly zero from
    the settling index on). Otherwise conjugates are compared along a doubling
    index schedule until the gaps fall below tol on every requested radius.
    """
    space = A.space
    if space.kind == "graph":
        raise UnsupportedConstructionError(
            "graph spaces carry no declared transitive shift action"
        )
    bound = seq.bind(space)
    radii = sorted(radii)
    omega = A.propagation

    analytic = None
    if isinstance(bound, _BoundRay):
        try:
            limits = {k: _analytic_limit(space, f, bound) for k, f in A.stencil.items()}
            if all(v is not None for v in limits.values()):
                analytic = BandOperator(space, limits)
        except _Divergent as d:
            g = _gap(conjugate(A, bound.point(d.n1)), conjugate(A, bound.point(d.n2)),
                     space, radii[-1], omega, p)
            return DivergenceReport(
                sequence_label=bound.label,
                witness_indices=(d.n1, d.n2),
                radius=radii[-1],
                gap=float(g if p == 2 else g[1]),
                message=d.detail,
                suggested=d.suggested,
            )

    if analytic is not None:
        cert = []
        for radius in radii:
            best = np.inf
            for n in _schedule(budget):
                g = _gap(conjugate(A, bound.point(n)), analytic, space, radius, omega, p)
                g = g if p == 2 else g[1]
                if g < best:
                    best = g
                    cert_entry = (radius, n, float(g))
                if g <= max(tol * 1e-3, 1e-14):
                    break
                if bound.finite is not None and n >= bound.finite:
                    break
            cert.append(cert_entry)
        return LimitOperator(op=analytic, sequence_label=bound.label, exact=True,
                             certificate=cert)

    # numeric path
    maxrad = radii[-1]
    sample = Window(space, space.basepoint, maxrad + omega)
    prev_idx, prev = None, None
    settled_at = None
    last_gaps = None
    for n in _schedule(budget):
        if bound.finite is not None and n >= bound.finite:
            n = bound.finite - 1
        cur = conjugate(A, bound.point(n))
        if prev is not None:
            gaps = []
            for radius in radii:
                g = _gap(cur, prev, space, radius, omega, p)
                gaps.append(g if p == 2 else g[1])
            last_gaps = (prev_idx, n, gaps)
            if max(gaps) <= tol:
                settled_at = n
                break
        prev_idx, prev = n, cur
        if bound.finite is not None and n >= bound.finite - 1:
            break
    if settled_at is None:
        n1, n2, gaps = last_gaps if last_gaps else (0, 0, [np.inf])
        return DivergenceReport(
            sequence_label=bound.label,
            witness_indices=(n1, n2),
            radius=radii[int(np.argmax(gaps))],
            gap=float(max(gaps)),
            message="conjugates failed the Cauchy test within the index budget",
        )

    final = conjugate(A, bound.point(settled_at))
    stencil = {}
    collapse_note = []
    for k, f in final.stencil.items():
        vals = f.eval(space, sample.points)
        mean = complex(vals.mean())
        if np.max(np.abs(vals - mean)) <= tol:
            stencil[k] = ConstantField(mean)
            collapse_note.append(f"offset {k}: constant")
        else:
            entries = {tuple(pt): complex(v)
                       for pt, v in zip(map(tuple, sample.points.tolist()), vals)}
            stencil[k] = TableField(entries, default=mean)
    limit = BandOperator(space, stencil)
    cert = []
    for radius in radii:
        g = _gap(final, limit, space, radius, omega, p)
        cert.append((radius, settled_at, float(g if p == 2 else g[1])))
    msg = ("coefficients sampled on the certificate windows; values beyond "
           "radius %d are extrapolated" % (maxrad + omega))
    return LimitOperator(op=limit, sequence_label=bound.label, exact=False,
                         certificate=cert, message=msg)


def limit_set(space, predicate, seq, radii=(5, 10, 20), tol=1e-8, budget=2 ** 20):
    """Limit of the translated set indicator along the sequence: a predicate,
    or a divergence report for oscillating sets."""
    out = limit_operator(
        BandOperator(space, {(0,) * space.point_arity: IndicatorField(predicate)}),
        seq, radii=radii, tol=tol, budget=budget,
    )
    if isinstance(out, DivergenceReport):
        return out
    f = out.op.coefficient((0,) * space.point_arity)
    if isinstance(f, IndicatorField):
        return f.predicate
    if isinstance(f, ConstantField):
        if abs(f.value - 1) <= tol:
            return FullPredicate()
        if abs(f.value) <= tol:
            return EmptyPredicate()
    # sampled 0/1 table: report the points present on the certified window
    pts = Window(space, space.basepoint, max(radii)).points
    vals = f.eval(space, pts)
    return FiniteSetPredicate(
        {tuple(p) for p, v in zip(map(tuple, pts.tolist()), vals) if abs(v - 1) <= 0.5}
    )


def limit_algebra_check(A, B, seq, radii=(5, 10, 20), tol=1e-8, p=2):
    """Window-norm defects of (A+B)_x vs A_x + B_x and (AB)_x vs A_x B_x."""
    la = limit_operator(A, seq, radii=radii, tol=tol, p=p)
    if isinstance(la, DivergenceReport):
        return la
    lb = limit_operator(B, seq, radii=radii, tol=tol, p=p)
    if isinstance(lb, DivergenceReport):
        return lb
    ls = limit_operator(A + B, seq, radii=radii, tol=tol, p=p)
    if isinstance(ls, DivergenceReport):
        return ls
    lp = limit_operator(A @ B, seq, radii=radii, tol=tol, p=p)
    if isinstance(lp, DivergenceReport):
        return lp
    space = A.space
    sum_defects, prod_defects = [], []
    omega_s = max(ls.op.propagation, (la.op + lb.op).propagation)
    omega_p = max(lp.op.propagation, (la.op @ lb.op).propagation)
    for radius in radii:
        ws = Window(space, space.basepoint, radius)
        ds = window_norm(ls.op - (la.op + lb.op), ws,
                         Window(space, space.basepoint, radius + omega_s), p)
        dp = window_norm(lp.op - (la.op @ lb.op), ws,
                         Window(space, space.basepoint, radius + omega_p), p)
        sum_defects.append(float(ds if p == 2 else ds[1]))
        prod_defects.append(float(dp if p == 2 else dp[1]))
    combined = 2 * tol
    return {
        "sum_defects": sum_defects,
        "product_defects": prod_defects,
        "tolerance": combined,
        "ok": max(sum_defects + prod_defects) <= combined,
        "limits": {"A": la, "B": lb, "A+B": ls, "AB": lp},
    }


def subsequence_targeting(space, field, ray, value, count=8, tol=1e-2,
                          budget=2 ** 16, start=1):
    """Indices n along the ray where the field at x_n is within tol of the
    target value; used to refine a ray toward a declared accumulation value of
    a slowly oscillating coefficient."""
    bound = ray.bind(space)
    hits = []
    chunk = 4096
    n = start
    while n <= budget and len(hits) < count:
        ns = np.arange(n, min(n + chunk, budget + 1))
        pts = np.asarray([bound.point(int(m)) for m in ns], dtype=np.int64)
        vals = field.eval(space, pts)
        ok = np.abs(vals - value) <= tol
        for m in ns[ok]:
            if not hits or m > hits[-1]:
                hits.append(int(m))
                if len(hits) >= count:
                    break
        n += chunk
    if len(hits) < 2:
        raise InvalidConfigError(
            f"no subsequence hits for target {value} within the budget"
        )
    return Subsequence(ray, tuple(hits), label=f"{ray.label or 'ray'}->"
                       f"{np.round(value, 6)}")

"""Unit normals away from the singular point and the self-intersection curve.

Near a cross cap the set of points whose image is hit twice forms, together
with the singular point itself, a regular curve through it.  The tracer
works in the doubled source space: the system f(q) - f(q') = 0 has three
equations in four unknowns, and its solution set off the diagonal is the
one-dimensional object being traced.  Seeding uses the normal-form relation
u (v - v') = b(v') - b(v) with v' = -v, pushed back through the source
change; continuation is predictor-corrector with the tangent taken from the
null space of the 3x4 Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    JetDomainError,
    SeedFailureError,
    SingularPointError,
    StepCollapseError,
)
from .expressions import MapDefinition, eval_map_jet
from .jets import diffeo_invert
from .locate import CrossCapCertificate
from .normal_form import reduce_to_normal_form

__all__ = [
    "DoublePointCurve",
    "DoublePointSample",
    "NormalField",
    "curve_to_csv",
    "trace_double_points",
    "transversality_check",
    "unit_normal",
]

RESIDUAL_BOUND = 1e-8
_CORRECTOR_TOL = 1e-11


@dataclass(frozen=True)
class NormalField:
    """A choice of unit normal nu = sign * (f_u x f_v)/|f_u x f_v|."""

    defn: MapDefinition
    orientation_sign: int = 1
    parameters: dict[str, float] | None = None

    @classmethod
    def oriented(
        cls,
        defn: MapDefinition,
        e3: np.ndarray,
        at: tuple[float, float],
        parameters: dict[str, float] | None = None,
    ) -> "NormalField":
        """Pick the sign making nu point along e3 at a reference point."""
        field = cls(defn, 1, parameters)
        nu = unit_normal(field, at)
        sign = 1 if float(nu @ np.asarray(e3, dtype=float)) >= 0.0 else -1
        return cls(defn, sign, parameters)


def unit_normal(field: NormalField, q: tuple[float, float]) -> np.ndarray:
    """The oriented unit normal at a regular point."""
    jet = eval_map_jet(field.defn, q, 1, field.parameters)
    f_u = jet.f_u()
    f_v = jet.f_v()
    c = np.cross(f_u, f_v)
    cn = float(np.linalg.norm(c))
    bound = 1e-12 * float(np.linalg.norm(f_u)) * float(np.linalg.norm(f_v))
    if cn <= bound:
        raise SingularPointError(
            f"point {q} is singular; the normal direction is undefined"
        )
    return field.orientation_sign * c / cn


@dataclass(frozen=True)
class DoublePointSample:
    """One matched pair on the self-intersection curve.

    ``s`` is the signed arc parameter in the doubled source space with 0 at
    the crossing through the singular point; ``image`` is the common image
    (midpoint of the two evaluations); ``residual`` is |f(q) - f(q')|.
    """

    s: float
    q: tuple[float, float]
    q_prime: tuple[float, float]
    image: np.ndarray
    residual: float

    def __post_init__(self):
        arr = np.array(self.image, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "image", arr)


@dataclass(frozen=True)
class DoublePointCurve:
    samples: tuple[DoublePointSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        for sample in self.samples:
            if sample.q == sample.q_prime:
                raise ContractViolationError(
                    "double point samples must stay off the diagonal"
                )
            if sample.residual > RESIDUAL_BOUND:
                raise ContractViolationError(
                    f"sample residual {sample.residual:.3e} exceeds "
                    f"{RESIDUAL_BOUND:.1e}"
                )


class _DoubledSystem:
    """f(q) - f(q') and its 3x4 Jacobian over the doubled source space."""

    def __init__(self, defn: MapDefinition, parameters: dict[str, float] | None):
        self.defn = defn
        self.parameters = parameters

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[:2], x[2:]

    def residual(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        q, qp = self.split(x)
        ja = eval_map_jet(self.defn, (q[0], q[1]), 1, self.parameters)
        jb = eval_map_jet(self.defn, (qp[0], qp[1]), 1, self.parameters)
        fa = np.array(ja.base_value)
        fb = np.array(jb.base_value)
        jac = np.hstack([ja.jacobian(), -jb.jacobian()])
        return fa - fb, jac, 0.5 * (fa + fb)


def _tangent(jac: np.ndarray, reference: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(jac)
    t = vt[-1]
    if float(t @ reference) < 0.0:
        t = -t
    return t


def _correct(
    system: _DoubledSystem, x: np.ndarray, tangent: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float] | None:
    """Newton iterations driving |f(q) - f(q')| below the corrector tol.

    With a tangent the step solves the square bordered system (moves in the
    hyperplane normal to the tangent); without one it takes the least-norm
    step.  Returns (state, jacobian, image, residual norm) or None.
    """
    for _ in range(25):
        try:
            r, jac, image = system.residual(x)
        except (JetDomainError, ContractViolationError, OverflowError):
            return None
        rn = float(np.max(np.abs(r)))
        if not np.isfinite(rn):
            return None
        if rn <= _CORRECTOR_TOL:
            return x, jac, image, rn
        try:
            if tangent is None:
                delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
            else:
                bordered = np.vstack([jac, tangent])
                rhs = np.concatenate([-r, [0.0]])
                delta = np.linalg.solve(bordered, rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.isfinite(delta).all():
            return None
        x = x + delta
    return None


def _seed_state(
    cert: CrossCapCertificate, arc_span: float, step: float
) -> np.ndarray:
    """Initial doubled-space guess from the normal-form double-point model."""
    nf = reduce_to_normal_form(cert, cert.aligned_jet.order)
    v0 = min(max(4.0 * step, 0.02), 0.5 * arc_span)
    x0 = -(nf.b.eval(v0) - nf.b.eval(-v0)) / (2.0 * v0)
    psi_u, psi_v = diffeo_invert(*nf.source_change)
    rot = cert.kernel_rotation
    p = np.array(cert.point)
    out = []
    for y in (v0, -v0):
        w = np.array([psi_u.eval(x0, y), psi_v.eval(x0, y)])
        out.append(p + rot @ w)
    return np.concatenate(out)


def _trace_direction(
    system: _DoubledSystem,
    start: np.ndarray,
    start_jac: np.ndarray,
    direction: np.ndarray,
    budget: float,
    step: float,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Continuation from ``start`` along ``direction`` until the arc budget,
    the diagonal guard, or a domain exit.  Returns (state, image) pairs.

    The guard only fires when a corrected point lands closer to the
    diagonal than step/4; a healthy crossing jumps over that zone, so the
    trace normally passes straight through the singular point.
    """
    samples: list[tuple[np.ndarray, np.ndarray]] = []
    x = start
    tangent = _tangent(start_jac, direction)
    h = step
    arc = 0.0
    min_gap = step / 4.0
    while arc < budget:
        advanced = False
        while h >= step / 64.0:
            predicted = x + h * tangent
            corrected = _correct(system, predicted, tangent)
            if corrected is not None:
                x_new, jac_new, image_new, _ = corrected
                moved = float(np.linalg.norm(x_new - x))
                gap = float(np.linalg.norm(x_new[:2] - x_new[2:]))
                if gap < min_gap:
                    return samples
                if moved > 3.0 * h or moved == 0.0:
                    h *= 0.5
                    continue
                arc += moved
                x = x_new
                tangent = _tangent(jac_new, tangent)
                samples.append((x.copy(), image_new))
                h = min(step, 2.0 * h)
                advanced = True
                break
            h *= 0.5
        if not advanced:
            if not samples:
                raise StepCollapseError(
                    f"continuation step collapsed below {step / 64.0:.3e} "
                    "before any progress"
                )
            return samples
    return samples


def _gap(state: np.ndarray) -> float:
    return float(np.linalg.norm(state[:2] - state[2:]))


def trace_double_points(
    defn: MapDefinition,
    cert: CrossCapCertificate,
    arc_span: float,
    step: float,
    parameters: dict[str, float] | None = None,
) -> DoublePointCurve:
    """Trace the self-intersection curve through the certified cross cap.

    The curve is sampled as matched pairs (q, q') with f(q) = f(q'); the
    samples run from arc parameter -arc_span to +arc_span with the crossing
    through the singular point at 0.  One continuation direction passes
    through the crossing onto the branch with q and q' exchanged, the other
    runs outward; either direction stops early on domain exit or when a
    corrected point violates the diagonal guard |q - q'| >= step/4.
    """
    if step <= 0.0 or arc_span <= 0.0:
        raise ContractViolationError("arc_span and step must be positive")
    system = _DoubledSystem(defn, parameters)
    guess = _seed_state(cert, arc_span, step)
    seeded = _correct(system, guess, None)
    if seeded is None:
        probe = _correct_best_effort(system, guess)
        raise SeedFailureError(
            "corrector failed to converge on the double-point seed",
            best_residual=math.inf if probe is None else probe,
        )
    x0, jac0, image0, rn0 = seeded
    offset0 = _gap(x0) / math.sqrt(2.0)
    if _gap(x0) < step / 4.0:
        raise SeedFailureError(
            "double-point seed collapsed onto the diagonal", best_residual=rn0
        )

    away = np.concatenate([x0[:2] - x0[2:], x0[2:] - x0[:2]])
    away /= float(np.linalg.norm(away))
    inward = _trace_direction(
        system, x0, jac0, -away, offset0 + arc_span + 2.0 * step, step
    )
    outward = _trace_direction(
        system, x0, jac0, away, max(arc_span - offset0, 0.0) + 2.0 * step, step
    )

    chain: list[tuple[np.ndarray, np.ndarray]] = list(reversed(inward))
    chain.append((x0, image0))
    chain.extend(outward)

    positions = [0.0]
    for (xa, _), (xb, _) in zip(chain, chain[1:]):
        positions.append(positions[-1] + float(np.linalg.norm(xb - xa)))

    # locate the diagonal crossing: the reference separation is the one at
    # the outward end; entries on the far side have it reversed
    reference = chain[-1][0][:2] - chain[-1][0][2:]
    sides = [float((state[:2] - state[2:]) @ reference) for state, _ in chain]
    flip = next((i for i, side in enumerate(sides) if side > 0.0), 0)
    crossed = flip > 0
    if crossed:
        before = positions[flip - 1] + _gap(chain[flip - 1][0]) / math.sqrt(2.0)
        after = positions[flip] - _gap(chain[flip][0]) / math.sqrt(2.0)
        crossing = 0.5 * (before + after)
    else:
        crossing = positions[0] - _gap(chain[0][0]) / math.sqrt(2.0)

    samples: list[DoublePointSample] = []
    for (state, image), pos in zip(chain, positions):
        s = pos - crossing
        if abs(s) > arc_span:
            continue
        r, _, _ = system.residual(state)
        samples.append(
            DoublePointSample(
                s=s,
                q=(float(state[0]), float(state[1])),
                q_prime=(float(state[2]), float(state[3])),
                image=image,
                residual=float(np.linalg.norm(r)),
            )
        )
    if not crossed:
        # the trace stopped at the diagonal guard instead of jumping the
        # crossing; complete the other branch by the exact swap symmetry
        mirrored = [
            DoublePointSample(
                s=-sample.s,
                q=sample.q_prime,
                q_prime=sample.q,
                image=sample.image,
                residual=sample.residual,
            )
            for sample in reversed(samples)
        ]
        samples = mirrored + samples
    return DoublePointCurve(samples=tuple(samples))


def _correct_best_effort(system: _DoubledSystem, x: np.ndarray) -> float | None:
    """Best residual reachable from a failed seed, for error reporting."""
    best = None
    for _ in range(25):
        try:
            r, jac, _ = system.residual(x)
        except (JetDomainError, ContractViolationError, OverflowError):
            return best
        rn = float(np.max(np.abs(r)))
        if not np.isfinite(rn):
            return best
        if best is None or rn < best:
            best = rn
        try:
            delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        except np.linalg.LinAlgError:
            return best
        if not np.isfinite(delta).all():
            return best
        x = x + delta
    return best


def transversality_check(
    defn: MapDefinition,
    curve: DoublePointCurve,
    parameters: dict[str, float] | None = None,
) -> np.ndarray:
    """Angle between the two sheets' tangent planes at every sample.

    Measured between the unit normals at q and q', in [0, pi]; the value is
    independent of the global orientation sign.  Angles near 0 indicate a
    tangency; near the singular point the angle approaches pi, which is the
    expected behavior, not a degeneracy.
    """
    field = NormalField(defn, 1, parameters)
    angles = []
    for sample in curve.samples:
        nu = unit_normal(field, sample.q)
        nu_p = unit_normal(field, sample.q_prime)
        c = float(np.clip(nu @ nu_p, -1.0, 1.0))
        angles.append(math.acos(c))
    return np.array(angles)


def curve_to_csv(curve: DoublePointCurve) -> str:
    """CSV export with columns s, u, v, u', v', x, y, z, residual."""
    lines = ["s,u,v,u',v',x,y,z,residual"]
    for sample in curve.samples:
        fields = (
            sample.s,
            sample.q[0],
            sample.q[1],
            sample.q_prime[0],
            sample.q_prime[1],
            sample.image[0],
            sample.image[1],
            sample.image[2],
            sample.residual,
        )
        lines.append(",".join(_format_float(x) for x in fields))
    return "\n".join(lines) + "\n"


def _format_float(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".17g")

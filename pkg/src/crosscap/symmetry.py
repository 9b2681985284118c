"""Intrinsic reflectional and rotational symmetries of a cross cap.

A cross cap germ in normal form is symmetric under one of three isometries
exactly when its characteristic jets satisfy parity conditions:

  T1 (reflection fixing the tangent-normal plane): a even in v, b odd
  T2 (half-turn about the normal line):            a even in total degree,
                                                   b even
  T3 (reflection fixing the principal plane):      a even in u, b = 0

The verdicts here are finite-order statements: they certify the conditions
on the stored jets only.  Flat corrections beyond the working order are
invisible to any finite computation, so reports always carry the order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SymmetryAbsentError
from .jets import Jet2, diffeo_invert
from .normal_form import CongruenceMotion, NormalForm

__all__ = [
    "SymmetryReport",
    "SymmetryVerdict",
    "SymmetryWitness",
    "classify_symmetries",
    "symmetry_witness",
]

DEFAULT_TOL_SYMMETRY = 1e-8

_CONDITIONS = {
    1: "a(u,-v) = a(u,v) and b(-v) = -b(v)",
    2: "a(-u,-v) = a(u,v) and b(-v) = b(v)",
    3: "a(-u,v) = a(u,v) and b = 0",
}

_INVOLUTIONS = {1: "(u, -v)", 2: "(-u, -v)", 3: "(-u, v)"}


@dataclass(frozen=True)
class SymmetryVerdict:
    holds: bool
    residual: float
    condition_text: str


@dataclass(frozen=True)
class SymmetryReport:
    """Jet-order symmetry verdicts, keyed by symmetry index 1, 2, 3."""

    order: int
    verdicts: dict[int, SymmetryVerdict]
    residual_tolerance: float


@dataclass(frozen=True)
class SymmetryWitness:
    """A symmetry realized as a source involution plus a target motion.

    ``source_signs`` give the involution in normal-form coordinates;
    ``involution_jet`` is its conjugate through the source change, i.e. the
    involution in the certificate's aligned coordinates.
    """

    motion: CongruenceMotion
    involution_text: str
    source_signs: tuple[int, int]
    involution_jet: tuple[Jet2, Jet2]
    orientation_preserving: bool


def _violations(nf: NormalForm, j: int) -> float:
    worst = 0.0
    n = nf.working_order
    for ju in range(n + 1):
        for k in range(n + 1 - ju):
            value = abs(nf.a[ju, k])
            if j == 1 and k % 2 == 1:
                worst = max(worst, value)
            elif j == 2 and (ju + k) % 2 == 1:
                worst = max(worst, value)
            elif j == 3 and ju % 2 == 1:
                worst = max(worst, value)
    for k in range(3, n + 1):
        value = abs(nf.b[k])
        if j == 1 and k % 2 == 0:
            worst = max(worst, value)
        elif j == 2 and k % 2 == 1:
            worst = max(worst, value)
        elif j == 3:
            worst = max(worst, value)
    return worst


def classify_symmetries(
    nf: NormalForm, tol: float = DEFAULT_TOL_SYMMETRY
) -> SymmetryReport:
    """Check the three parity conditions on the characteristic jets.

    Each residual is the largest violating coefficient, normalized by
    max(1, largest coefficient of a or b); a symmetry holds at the working
    order when its residual is at most ``tol``.
    """
    norm = max(1.0, nf.a.max_abs(), nf.b.max_abs())
    verdicts = {}
    for j in (1, 2, 3):
        residual = _violations(nf, j) / norm
        verdicts[j] = SymmetryVerdict(
            holds=residual <= tol,
            residual=residual,
            condition_text=_CONDITIONS[j],
        )
    return SymmetryReport(
        order=nf.working_order, verdicts=verdicts, residual_tolerance=tol
    )


def symmetry_witness(
    nf: NormalForm, j: int, tol: float = DEFAULT_TOL_SYMMETRY
) -> SymmetryWitness:
    """The involution and target motion realizing symmetry ``j``.

    The involution is exact in normal-form coordinates; its conjugate
    through the source change realizes the symmetry in the aligned source
    coordinates.  Raises SymmetryAbsent when the classification fails.
    """
    if j not in (1, 2, 3):
        raise SymmetryAbsentError(f"symmetry index must be 1, 2 or 3, got {j}")
    report = classify_symmetries(nf, tol)
    verdict = report.verdicts[j]
    if not verdict.holds:
        raise SymmetryAbsentError(
            f"symmetry {j} does not hold at order {nf.working_order} "
            f"(residual {verdict.residual:.3e} > {tol:.1e})"
        )
    motion = CongruenceMotion.from_tag(f"T{j}")
    s1, s2 = motion.source_signs
    ut, vt = nf.source_change
    psi_u, psi_v = diffeo_invert(ut, vt)
    inner_u = float(s1) * ut
    inner_v = float(s2) * vt
    phi_u = psi_u.compose(inner_u, inner_v)
    phi_v = psi_v.compose(inner_u, inner_v)
    return SymmetryWitness(
        motion=motion,
        involution_text=_INVOLUTIONS[j],
        source_signs=(s1, s2),
        involution_jet=(phi_u, phi_v),
        orientation_preserving=s1 * s2 > 0,
    )

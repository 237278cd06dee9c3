"""Scheme coefficients: exact stability and order certification.

A multi-stage minimizing-movements scheme is described by a strictly lower
triangular matrix ``gamma`` with rows ``m = 1..M`` and columns ``i = 0..m-1``.
Stage ``m`` minimizes ``E(u) + sum_i gamma[m, i] / (2k) * ||u - U_i||^2``.

All checks in this module run in exact rational arithmetic
(:class:`fractions.Fraction`), so "satisfies the order conditions" means
equality, not agreement to a tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GammaError",
    "DegenerateStageError",
    "GammaMatrix",
    "StabilityCertificate",
    "OrderReport",
    "Certification",
    "compute_auxiliaries",
    "compute_betas",
    "certify",
    "builtin",
    "BUILTIN_NAMES",
    "parse_gamma",
    "serialize_gamma",
    "load_scheme",
    "dump_scheme",
    "to_fraction",
]

# Targets for (beta_1, beta_2, beta_3, beta_4) at the final stage.
ORDER_TARGETS = (Fraction(1), Fraction(1, 2), Fraction(1, 6), Fraction(1, 6))
_CONDITIONS_PER_ORDER = {1: 1, 2: 2, 3: 4}


class GammaError(ValueError):
    """Malformed coefficient matrix or unparsable coefficient text."""


class DegenerateStageError(ValueError):
    """A stage has zero row sum, so its Euler-Lagrange equation is singular."""


def to_fraction(value) -> Fraction:
    """Convert an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are rejected: a float silently carries binary rounding error,
    which defeats exact certification.
    """
    if isinstance(value, bool):
        raise GammaError(f"boolean is not a coefficient: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise GammaError(f"malformed fraction {value!r}") from exc
    raise GammaError(
        f"coefficient must be int, Fraction or 'p/q' string, got {type(value).__name__}"
    )


@dataclass(frozen=True)
class GammaMatrix:
    """Exact lower-triangular scheme coefficients.

    ``rows[m - 1][i]`` holds ``gamma_{m,i}`` for ``0 <= i < m``.

    Examples
    --------
    >>> g = GammaMatrix.from_rows([[5], [-2, 6], [-2, "3/14", "44/7"]])
    >>> g.stages, g.row_sums[2]
    (3, Fraction(9, 2))
    """

    rows: tuple[tuple[Fraction, ...], ...]
    name: str = ""

    def __post_init__(self):
        if len(self.rows) == 0:
            raise GammaError("a scheme needs at least one stage")
        for m, row in enumerate(self.rows, start=1):
            if len(row) != m:
                raise GammaError(
                    f"row {m} has {len(row)} entries; a lower-triangular row m needs exactly m"
                )
            if not all(isinstance(x, Fraction) for x in row):
                raise GammaError(f"row {m} holds non-Fraction entries")
            if sum(row) == 0:
                raise DegenerateStageError(
                    f"stage {m}: row sum S_{m} = 0, stage Euler-Lagrange degenerate"
                )

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], name: str = "") -> "GammaMatrix":
        return cls(tuple(tuple(to_fraction(x) for x in row) for row in rows), name=name)

    @property
    def stages(self) -> int:
        return len(self.rows)

    def __getitem__(self, index: tuple[int, int]) -> Fraction:
        m, i = index
        if not (1 <= m <= self.stages and 0 <= i < m):
            raise IndexError(f"gamma[{m}, {i}] is outside the lower triangle")
        return self.rows[m - 1][i]

    @cached_property
    def row_sums(self) -> tuple[Fraction, ...]:
        return tuple(sum(row, Fraction(0)) for row in self.rows)

    def as_float(self) -> np.ndarray:
        """``(M, M)`` float array; entry ``[m-1, i]`` is ``gamma_{m,i}``."""
        out = np.zeros((self.stages, self.stages))
        for m, row in enumerate(self.rows):
            out[m, : m + 1] = [float(x) for x in row]
        return out

    @cached_property
    def is_stable(self) -> bool:
        return compute_auxiliaries(self).stable

    def __eq__(self, other):
        if not isinstance(other, GammaMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)


@dataclass(frozen=True)
class StabilityCertificate:
    """Auxiliary tables whose diagonal decides unconditional stability.

    ``tilde_gamma[(m, i)]`` and ``tilde_S[(j, m)]`` (``j >= m``) are exact.
    ``reason`` is ``"ok"``, ``"nonpositive_diagonal"``, ``"boundary"`` (some
    diagonal entry is exactly zero but no division by it was needed) or
    ``"zero_pivot"`` (a zero diagonal entry blocked the recursion).
    """

    stages: int
    tilde_gamma: dict
    tilde_S: dict
    diagonal_positive: tuple[bool, ...]
    stable: bool
    reason: str = "ok"
    detail: str = ""

    @property
    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self.tilde_S.get((m, m)) for m in range(1, self.stages + 1))

    def to_json(self) -> dict:
        return {
            "stable": self.stable,
            "reason": self.reason,
            "detail": self.detail,
            "diagonal": [None if d is None else str(d) for d in self.diagonal],
            "diagonal_positive": list(self.diagonal_positive),
            "tilde_gamma": {f"{m},{i}": str(v) for (m, i), v in sorted(self.tilde_gamma.items())},
            "tilde_S": {f"{j},{m}": str(v) for (j, m), v in sorted(self.tilde_S.items())},
        }


@dataclass(frozen=True)
class OrderReport:
    """Stagewise Taylor coefficients; ``beta1[m]`` is ``beta_{1,m}`` (m = 0..M)."""

    beta1: tuple[Fraction, ...]
    beta2: tuple[Fraction, ...]
    beta3: tuple[Fraction, ...]
    beta4: tuple[Fraction, ...]
    achieved_order: int

    @property
    def final(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.beta1[-1], self.beta2[-1], self.beta3[-1], self.beta4[-1])

    def to_json(self) -> dict:
        return {
            "achieved_order": self.achieved_order,
            "final_betas": [str(b) for b in self.final],
            "beta1": [str(b) for b in self.beta1],
            "beta2": [str(b) for b in self.beta2],
            "beta3": [str(b) for b in self.beta3],
            "beta4": [str(b) for b in self.beta4],
        }


@dataclass(frozen=True)
class Certification:
    certificate: StabilityCertificate
    report: OrderReport
    order: int
    verdict: bool

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "requested_order": self.order,
            "certificate": self.certificate.to_json(),
            "report": self.report.to_json(),
        }


def compute_auxiliaries(gamma: GammaMatrix) -> StabilityCertificate:
    """Build the ``tilde_gamma`` / ``tilde_S`` tables, last stage first.

    For ``m = M, M-1, ..., 1``: first ``tilde_S[j, m]`` for ``j > m`` (these
    only use rows already processed), then ``tilde_gamma[m, i]``, then the
    diagonal ``tilde_S[m, m]``. The scheme is certified when every diagonal
    entry is strictly positive.
    """
    M = gamma.stages
    tg: dict[tuple[int, int], Fraction] = {}
    tS: dict[tuple[int, int], Fraction] = {}
    for m in range(M, 0, -1):
        for j in range(m + 1, M + 1):
            tS[j, m] = sum((tg[j, i] for i in range(m)), Fraction(0))
        for i in range(m):
            acc = gamma[m, i]
            for j in range(m + 1, M + 1):
                if tS[j, j] == 0:
                    positive = tuple(
                        tS.get((q, q), Fraction(0)) > 0 for q in range(1, M + 1)
                    )
                    return StabilityCertificate(
                        M, tg, tS, positive, False, "zero_pivot",
                        f"tilde_S[{j},{j}] = 0 blocks the recursion at stage {m}",
                    )
                acc -= tg[j, i] * tS[j, m] / tS[j, j]
            tg[m, i] = acc
        tS[m, m] = sum((tg[m, i] for i in range(m)), Fraction(0))

    positive = tuple(tS[m, m] > 0 for m in range(1, M + 1))
    stable = all(positive)
    if stable:
        return StabilityCertificate(M, tg, tS, positive, True)
    zeros = [m for m in range(1, M + 1) if tS[m, m] == 0]
    if zeros and all(tS[m, m] >= 0 for m in range(1, M + 1)):
        return StabilityCertificate(
            M, tg, tS, positive, False, "boundary",
            f"tilde_S[m,m] = 0 at stages {zeros}: boundary, not certified",
        )
    bad = [m for m in range(1, M + 1) if tS[m, m] <= 0]
    return StabilityCertificate(
        M, tg, tS, positive, False, "nonpositive_diagonal",
        f"tilde_S[m,m] <= 0 at stages {bad}",
    )


def compute_betas(gamma: GammaMatrix) -> OrderReport:
    """Taylor coefficients of each stage, and the order they imply (max 3)."""
    M = gamma.stages
    b1 = [Fraction(0)] * (M + 1)
    b2 = [Fraction(0)] * (M + 1)
    b3 = [Fraction(0)] * (M + 1)
    b4 = [Fraction(0)] * (M + 1)
    for m in range(1, M + 1):
        S = gamma.row_sums[m - 1]
        row = gamma.rows[m - 1]
        b1[m] = (1 + sum((row[i] * b1[i] for i in range(1, m)), Fraction(0))) / S
        b2[m] = (b1[m] + sum((row[i] * b2[i] for i in range(1, m)), Fraction(0))) / S
        b3[m] = (b2[m] + sum((row[i] * b3[i] for i in range(1, m)), Fraction(0))) / S
        b4[m] = (b1[m] ** 2 / 2 + sum((row[i] * b4[i] for i in range(1, m)), Fraction(0))) / S

    final = (b1[M], b2[M], b3[M], b4[M])
    achieved = 0
    for p in (1, 2, 3):
        n = _CONDITIONS_PER_ORDER[p]
        if final[:n] == ORDER_TARGETS[:n]:
            achieved = p
        else:
            break
    return OrderReport(tuple(b1), tuple(b2), tuple(b3), tuple(b4), achieved)


def certify(gamma: GammaMatrix, order: int) -> Certification:
    """Stability and order ``>= order``, both checked exactly."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    cert = compute_auxiliaries(gamma)
    report = compute_betas(gamma)
    return Certification(cert, report, order, cert.stable and report.achieved_order >= order)


# Third-order six-stage scheme. The printed fraction for gamma_{6,2} carries a
# leading minus sign that contradicts both the rounded matrix (+2.46) and the
# first-order condition; the positive value satisfies all four conditions.
_G62 = Fraction(
    96877768305591883216465260738322381995331343806720345,
    39417514787340924198452679823989476266149744556295712,
)
_G63 = Fraction(
    -910677500903250179715877776918800480038125970511673389,
    78835029574681848396905359647978952532299489112591424,
)
_G64 = Fraction(
    2985416726242784122189204876225493950575679989899779,
    446910598495928845787445349478338733176300958688160,
)
_G65 = Fraction(
    523180952458721016795516949849623944572931703979520653,
    43797238652601026887169644248877195851277493951439680,
)

_BUILTIN_ROWS = {
    "backward_euler": [[1]],
    "second_order_a": [[5], [-2, 6], [-2, "3/14", "44/7"]],
    "second_order_b": [
        ["9/2"],
        ["-11/6", "44/7"],
        ["-287591/148306", 0, "944163/148306"],
    ],
    "third_order": [
        ["67/6"],
        ["-15/2", "136/7"],
        ["-21/20", "-19/4", "587/42"],
        ["9/5", "1/21", "-47/6", "69/5"],
        ["31/5", "-43/6", "-4/3", "13/8", "242/21"],
        ["-17/6", "75/16", _G62, _G63, _G64, _G65],
    ],
}
BUILTIN_NAMES = tuple(_BUILTIN_ROWS)


def builtin(name: str) -> GammaMatrix:
    """One of the shipped schemes: ``backward_euler``, ``second_order_a``,
    ``second_order_b`` or ``third_order``."""
    try:
        rows = _BUILTIN_ROWS[name]
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    return GammaMatrix.from_rows(rows, name=name)


def _fraction_text(x: Fraction) -> str:
    return str(x)


def serialize_gamma(gamma: GammaMatrix) -> str:
    """Lower-triangular JSON array of ``"p/q"`` strings."""
    return json.dumps([[_fraction_text(x) for x in row] for row in gamma.rows])


def parse_gamma(text, name: str = "") -> GammaMatrix:
    """Inverse of :func:`serialize_gamma`. Accepts text or an already-decoded list."""
    if isinstance(text, str):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GammaError(f"not valid JSON: {exc}") from exc
    else:
        data = text
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise GammaError("gamma must be a JSON array of arrays")
    for row in data:
        for x in row:
            if not isinstance(x, (str, int)) or isinstance(x, bool):
                raise GammaError(f"entry {x!r} must be a quoted 'p/q' string")
    return GammaMatrix.from_rows(data, name=name)


def load_scheme(spec: str | Path) -> GammaMatrix:
    """Load ``builtin:<name>``, a bare builtin name, or a JSON scheme file.

    Scheme files look like ``{"name": "...", "gamma": [["p/q", ...], ...]}``.
    """
    text = str(spec)
    if text.startswith("builtin:"):
        return builtin(text.split(":", 1)[1])
    if text in _BUILTIN_ROWS:
        return builtin(text)
    path = Path(text)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GammaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "gamma" not in data:
        raise GammaError(f"{path}: scheme file needs a 'gamma' field")
    return parse_gamma(data["gamma"], name=str(data.get("name", path.stem)))


def dump_scheme(gamma: GammaMatrix, path: str | Path | None = None, name: str | None = None) -> str:
    payload = {
        "name": name or gamma.name,
        "gamma": [[_fraction_text(x) for x in row] for row in gamma.rows],
    }
    text = json.dumps(payload, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text

"""Exact static fields of circular loops and anti-Helmholtz assemblies.

The loop field is evaluated from the Biot-Savart closed form in cylindrical
variables with complete elliptic integrals,

    B_x   = mu0 F / (2 pi a^2 b) [(r_c^2 - r^2) E(k^2) + a^2 K(k^2)],
    B_rho = mu0 F (x - x_c) / (2 pi a^2 b rho) [(r_c^2 + r^2) E(k^2) - a^2 K(k^2)],

with r^2 = (x-x_c)^2 + rho^2, rho^2 = y^2 + z^2, a^2 = r_c^2 + r^2 - 2 r_c rho,
b^2 = r_c^2 + r^2 + 2 r_c rho, k^2 = 1 - a^2/b^2.  The transverse components
follow as B_y = B_rho y/rho and B_z = B_rho z/rho, which removes the y = 0
division of the raw B_z = (z/y) B_y form while keeping that ratio identity
wherever it is defined.  a is the distance to the wire circle, so a -> 0
flags the singular points.

Fields are treated as exactly static (no retardation), valid for coil sizes
far below the driving wavelength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import CONSTANTS, PhysicalConstants

__all__ = [
    "LoopSource",
    "CoilAssembly",
    "FieldSample",
    "UniformGradientField",
    "complete_elliptic_KE",
    "loop_field",
    "assembly_field",
    "field_jacobian",
    "field_map",
]

#: Switch-over to the near-axis expansion, as a fraction of the loop radius.
#: Below this the elliptic closed form loses ~(rho/r_c) digits to cancellation
#: while the axial multipole series is accurate to O((rho/r_c)^4) ~ 1e-16.
_RHO_SERIES_FACTOR = 1e-4
#: Rejection radius around the wire circle, as a fraction of the loop radius.
_WIRE_EPS_FACTOR = 1e-9


@dataclass(frozen=True)
class LoopSource:
    """One circular loop: radius r_c, axial center x_c, magnetomotive force
    mmf (signed, ampere-turns)."""

    r_c: float
    x_c: float
    mmf: float

    def __post_init__(self) -> None:
        if not self.r_c > 0.0:
            raise ValueError("loop radius r_c must be > 0")


@dataclass(frozen=True)
class CoilAssembly:
    """Two coaxial loops; the anti-Helmholtz constructor enforces equal and
    opposite magnetomotive forces at symmetric axial positions +-d_c/2."""

    loops: tuple[LoopSource, LoopSource]

    @classmethod
    def anti_helmholtz(cls, r_c: float, d_c: float, mmf: float) -> "CoilAssembly":
        if not d_c > 0.0:
            raise ValueError("coil separation d_c must be > 0")
        # +mmf on the +x loop yields a positive central gradient dBx/dx.
        return cls(loops=(LoopSource(r_c=r_c, x_c=+0.5 * d_c, mmf=+mmf),
                          LoopSource(r_c=r_c, x_c=-0.5 * d_c, mmf=-mmf)))

    @property
    def d_c(self) -> float:
        return abs(self.loops[0].x_c - self.loops[1].x_c)

    @property
    def min_radius(self) -> float:
        return min(loop.r_c for loop in self.loops)

    def field_at(self, p: Sequence[float],
                 constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
        return assembly_field(p, self, constants)

    def jacobian_at(self, p: Sequence[float],
                    constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
        """Field gradient: analytic series inside the near-axis zone of both
        loops (smooth and noise-free, as the force model needs), central
        finite differences of the closed form elsewhere."""
        x, y, z = (float(v) for v in p)
        rho = math.hypot(y, z)
        if all(rho < _RHO_SERIES_FACTOR * loop.r_c for loop in self.loops):
            J = np.zeros((3, 3))
            for loop in self.loops:
                J += _loop_jacobian_series(x, y, z, loop, constants.mu0)
            return J
        return field_jacobian(p, self, constants=constants)


@dataclass(frozen=True)
class FieldSample:
    """One sampled point: position (x, y, z) in m and field (Bx, By, Bz) in T."""

    position: tuple[float, float, float]
    B: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (*self.position, *self.B)):
            raise ValueError("field sample has non-finite components")


class UniformGradientField:
    """Idealized trap field B = B' (x, -y/2, -z/2): divergence- and curl-free
    with a uniform axial gradient.  The small-bore limit of the assembly;
    used as the analytically solvable reference in the trajectory tests."""

    def __init__(self, Bprime: float):
        if not Bprime > 0.0:
            raise ValueError("Bprime must be > 0")
        self.Bprime = Bprime

    def field_at(self, p: Sequence[float],
                 constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
        x, y, z = p
        return self.Bprime * np.array([x, -0.5 * y, -0.5 * z])

    def jacobian_at(self, p: Sequence[float],
                    constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
        return self.Bprime * np.diag([1.0, -0.5, -0.5])


def complete_elliptic_KE(k2: float) -> tuple[float, float]:
    """Complete elliptic integrals (K(k^2), E(k^2)) by AGM iteration.

    The argument is the squared modulus m = k^2 in [0, 1).  Converges
    quadratically; the loop exits on machine-precision agreement of the
    arithmetic and geometric means (well below 1e-14 relative).
    """
    if not (0.0 <= k2 < 1.0):
        raise ValueError("k2 must lie in [0, 1)")
    if k2 == 0.0:
        return math.pi / 2.0, math.pi / 2.0
    a = 1.0
    b = math.sqrt(1.0 - k2)
    c2_sum = 0.5 * k2  # 2^{-1} c_0^2 with c_0^2 = k^2
    pow2 = 0.5
    for _ in range(60):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        pow2 *= 2.0
        c2_sum += pow2 * c * c
        if abs(a - b) <= 1e-17 * a:
            break
    K = math.pi / (2.0 * a)
    E = K * (1.0 - c2_sum)
    return K, E


def _axis_profile(s: float, rc: float, mmf: float, mu0: float
                  ) -> tuple[float, float, float, float]:
    """On-axis field b0(s) = mu0 F r_c^2 / (2 (r_c^2+s^2)^{3/2}) of one loop
    and its first three axial derivatives."""
    A = 0.5 * mu0 * mmf * rc * rc
    w = rc * rc + s * s
    w5 = w ** 2.5
    b0 = A / (w * math.sqrt(w))
    b1 = -3.0 * A * s / w5
    b2 = -3.0 * A * (rc * rc - 4.0 * s * s) / (w5 * w)
    b3 = -15.0 * A * s * (4.0 * s * s - 3.0 * rc * rc) / (w5 * w * w)
    return b0, b1, b2, b3


def _loop_field_components(
    x: float, y: float, z: float, loop: LoopSource, mu0: float
) -> tuple[float, float, float]:
    dx = x - loop.x_c
    rho2 = y * y + z * z
    rho = math.sqrt(rho2)
    rc = loop.r_c

    if rho < _RHO_SERIES_FACTOR * rc:
        # Axial multipole expansion: the off-axis elliptic form cancels to
        # O(rho/r_c) here, while the series is exact to O((rho/r_c)^4).
        b0, b1, b2, b3 = _axis_profile(dx, rc, loop.mmf, mu0)
        bx = b0 - 0.25 * rho2 * b2
        t_rho = -0.5 * b1 + rho2 * b3 / 16.0  # B_rho / rho
        return bx, t_rho * y, t_rho * z

    r2 = dx * dx + rho2
    a2 = rc * rc + r2 - 2.0 * rc * rho  # squared distance to the wire circle
    b2 = rc * rc + r2 + 2.0 * rc * rho
    if a2 <= (_WIRE_EPS_FACTOR * rc) ** 2:
        raise ValueError("field evaluation on (or too close to) the wire circle")
    b = math.sqrt(b2)
    k2 = 1.0 - a2 / b2
    K, E = complete_elliptic_KE(k2)

    pref = mu0 * loop.mmf / (2.0 * math.pi * a2 * b)
    bx = pref * ((rc * rc - r2) * E + a2 * K)
    b_rho = pref * (dx / rho) * ((rc * rc + r2) * E - a2 * K)
    return bx, b_rho * (y / rho), b_rho * (z / rho)


def _loop_jacobian_series(
    x: float, y: float, z: float, loop: LoopSource, mu0: float
) -> np.ndarray:
    """Analytic near-axis jacobian from the same multipole expansion.

    Exactly traceless and symmetric; avoids the finite-difference noise that
    dominates the off-axis closed form at trap-scale radii.
    """
    dx = x - loop.x_c
    rho2 = y * y + z * z
    _, b1, b2, b3 = _axis_profile(dx, loop.r_c, loop.mmf, mu0)
    J = np.empty((3, 3))
    J[0, 0] = b1 - 0.25 * rho2 * b3
    J[0, 1] = J[1, 0] = -0.5 * y * b2
    J[0, 2] = J[2, 0] = -0.5 * z * b2
    J[1, 1] = -0.5 * b1 + (rho2 + 2.0 * y * y) * b3 / 16.0
    J[2, 2] = -0.5 * b1 + (rho2 + 2.0 * z * z) * b3 / 16.0
    J[1, 2] = J[2, 1] = y * z * b3 / 8.0
    return J


def loop_field(
    p: Sequence[float],
    loop: LoopSource,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Magnetic field vector (T) of a single loop at point p = (x, y, z)."""
    x, y, z = (float(v) for v in p)
    return np.array(_loop_field_components(x, y, z, loop, constants.mu0))


def assembly_field(
    p: Sequence[float],
    coil: CoilAssembly,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Superposed field of both loops of the assembly."""
    x, y, z = (float(v) for v in p)
    bx = by = bz = 0.0
    for loop in coil.loops:
        cx, cy, cz = _loop_field_components(x, y, z, loop, constants.mu0)
        bx += cx
        by += cy
        bz += cz
    return np.array([bx, by, bz])


def field_jacobian(
    p: Sequence[float],
    coil: CoilAssembly,
    h: float | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """3x3 gradient matrix J_ij = dB_i/dx_j by central finite differences.

    Step h defaults to max(1e-7 m, 1e-6 r_c); the field is smooth on coil
    scales, so this balances truncation against rounding.
    """
    if h is None:
        h = max(1e-7, 1e-6 * coil.min_radius)
    p = np.asarray(p, dtype=float)
    J = np.empty((3, 3))
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = h
        J[:, j] = (assembly_field(p + dp, coil, constants)
                   - assembly_field(p - dp, coil, constants)) / (2.0 * h)
    return J


def field_map(
    coil: CoilAssembly,
    z: float,
    x_values: Iterable[float],
    y_values: Iterable[float],
    constants: PhysicalConstants = CONSTANTS,
) -> list[FieldSample]:
    """Row-major sample table of a z = const plane (rows over x, columns y)."""
    samples: list[FieldSample] = []
    for x in x_values:
        for y in y_values:
            B = assembly_field((x, y, z), coil, constants)
            samples.append(FieldSample(position=(float(x), float(y), float(z)),
                                       B=(B[0], B[1], B[2])))
    return samples

"""Two-nanodiamond gravity-phase bookkeeping and protocol-time optimization.

The protocol runs on two identical particles held a distance d apart in the
same trap: (b) the gradient splits each into a spin superposition over half
an oscillation period, (c) the gradient is off and the branches hold at the
maximum separation, (d) half a period recombines them.  Gravity acts purely
as a phase on otherwise frozen branch positions; with the instantaneous
branch separation s, the entangling phase accumulates at

    d(dphi)/dt = (G m^2 / hbar) (1/(d-s) + 1/(d+s) - 2/d).

The minimum center distance is d_min = dx_max + Delta_CP, where Delta_CP
keeps the Casimir-Polder attraction of the closest branch pair an order of
magnitude below their gravitational interaction.

Scenario split: ``HOLD_ONLY`` counts phase only during the hold (c);
``FULL_CYCLE`` also integrates it through the separation/recombination
sweep, where s(t) = dx_max (1 - cos omega t)/2 over the full cycle.  Either
way the interferometer must close, so t_total is never below one period.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    CONSTANTS,
    FieldConfig,
    NanodiamondParams,
    PhysicalConstants,
    derive_oscillator,
    max_separation,
)

__all__ = [
    "Scenario",
    "ProtocolConfig",
    "ProtocolResult",
    "TwoQubitState",
    "OptimizeResult",
    "casimir_polder_separation",
    "min_distance",
    "delta_phi_rate",
    "delta_phi_bd",
    "protocol_duration",
    "optimize_tmin",
    "write_surface_csv",
    "final_state",
    "gravity_phases",
    "partial_transpose",
    "negativity",
    "SURFACE_CSV_HEADER",
]


class Scenario(enum.Enum):
    HOLD_ONLY = "hold-only"
    FULL_CYCLE = "full-cycle"


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol target and geometry.

    ``distance=None`` selects Auto, i.e. the minimum distance d_min.  A
    manual distance below d_min is rejected unless ``allow_close`` is set,
    in which case a warning is emitted (the Casimir-Polder bound is then
    violated by construction).
    """

    target_delta_phi: float = 0.01 * math.pi
    scenario: Scenario = Scenario.HOLD_ONLY
    distance: Optional[float] = None
    allow_close: bool = False

    def __post_init__(self) -> None:
        if not self.target_delta_phi > 0.0:
            raise ValueError("target_delta_phi must be > 0")
        if self.distance is not None and not self.distance > 0.0:
            raise ValueError("distance must be > 0 (or None for Auto)")


@dataclass(frozen=True)
class ProtocolResult:
    t_total: float
    t_hold: float
    period: float
    delta_phi_bd: float
    delta_phi_hold: float
    d_used: float
    dx_max: float
    delta_cp: float


def casimir_polder_separation(
    nd: NanodiamondParams,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Extra separation at which V_CP drops to 0.1 V_G for the closest pair:

        Delta_CP = (2.01413/2) (c hbar V^2 (eps-1)^2 / (G m^2 (2+eps)^2))^{1/6}.

    At fixed density the V^2/m^2 ratio is constant, so this depends only on
    the material, not the particle mass.
    """
    V = nd.volume
    m = nd.mass
    eps = nd.epsilon
    arg = (constants.c * constants.hbar * V**2 * (eps - 1.0) ** 2
           / (constants.G * m**2 * (2.0 + eps) ** 2))
    return (2.01413 / 2.0) * arg ** (1.0 / 6.0)


def min_distance(
    nd: NanodiamondParams,
    fld: FieldConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Minimum center-to-center distance d_min = dx_max + Delta_CP."""
    return max_separation(nd, fld, constants) + casimir_polder_separation(nd, constants)


def delta_phi_rate(
    d: float,
    s: float,
    m_nd: float,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Instantaneous entangling-phase rate at branch separation s (rad/s).

    Evaluated as 2 s^2 / (d (d^2 - s^2)) times G m^2 / hbar, which is the
    cancellation-free form of 1/(d-s) + 1/(d+s) - 2/d.
    """
    if not 0.0 <= s < d:
        raise ValueError("separation must satisfy 0 <= s < d "
                         "(branches may not cross the partner particle)")
    return (constants.G * m_nd**2 / constants.hbar) * (
        2.0 * s * s / (d * (d * d - s * s)))


def _adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    max_depth: int = 40,
) -> float:
    """Classic adaptive Simpson quadrature with absolute tolerance."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + recurse(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1))

    return recurse(a, fa, b, fb, m, fm, whole, tol, max_depth)


def delta_phi_bd(
    nd: NanodiamondParams,
    fld: FieldConfig,
    d: float,
    constants: PhysicalConstants = CONSTANTS,
    tol: float = 1e-12,
) -> float:
    """Entangling phase accumulated over one full separation/recombination
    cycle, integrating the rate along s(t) = dx_max (1 - cos omega t)/2."""
    osc = derive_oscillator(nd, fld, constants)
    dx = max_separation(nd, fld, constants)
    m = nd.mass

    def rate_at(t: float) -> float:
        s = 0.5 * dx * (1.0 - math.cos(osc.omega * t))
        return delta_phi_rate(d, min(s, dx), m, constants)

    return _adaptive_simpson(rate_at, 0.0, osc.period, tol)


def protocol_duration(
    nd: NanodiamondParams,
    fld: FieldConfig,
    cfg: ProtocolConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> ProtocolResult:
    """Total protocol time for one (particle, field, scenario) choice.

    The hold stretches until the phase target is met; if the sweep phase
    already overshoots the target (FULL_CYCLE only), the hold collapses to
    zero and the total stays at one full period, since the interferometer
    still has to close.
    """
    osc = derive_oscillator(nd, fld, constants)
    dx = max_separation(nd, fld, constants)
    d_min = dx + casimir_polder_separation(nd, constants)
    if cfg.distance is None:
        d = d_min
    else:
        d = cfg.distance
        if d < d_min:
            if not cfg.allow_close:
                raise ValueError(
                    f"distance {d:.6e} m is below d_min {d_min:.6e} m; "
                    "set allow_close to override")
            warnings.warn(
                f"distance {d:.6e} m below d_min {d_min:.6e} m: Casimir-Polder "
                "interaction exceeds a tenth of gravity", stacklevel=2)

    if cfg.scenario is Scenario.FULL_CYCLE:
        phi_bd = delta_phi_bd(nd, fld, d, constants)
    else:
        phi_bd = 0.0

    hold_rate = delta_phi_rate(d, dx, nd.mass, constants)
    t_hold = max(0.0, (cfg.target_delta_phi - phi_bd) / hold_rate)
    return ProtocolResult(
        t_total=osc.period + t_hold,
        t_hold=t_hold,
        period=osc.period,
        delta_phi_bd=phi_bd,
        delta_phi_hold=t_hold * hold_rate,
        d_used=d,
        dx_max=dx,
        delta_cp=casimir_polder_separation(nd, constants),
    )


SURFACE_CSV_HEADER = ("m_kg", "Bprime_T_per_m", "t_total_s", "t_hold_s",
                      "period_s", "delta_phi_bd_rad", "d_min_m")


@dataclass(frozen=True)
class OptimizeResult:
    m_opt: float
    Bprime_opt: float
    t_min: float
    result: ProtocolResult
    on_mass_boundary: bool
    on_gradient_boundary: bool
    surface: list[tuple[float, float, ProtocolResult]]

    def surface_rows(self) -> list[tuple[float, ...]]:
        """Rows matching :data:`SURFACE_CSV_HEADER`."""
        return [(m, bp, r.t_total, r.t_hold, r.period, r.delta_phi_bd, r.d_used)
                for m, bp, r in self.surface]


def _protocol_at(
    m: float,
    bprime: float,
    template: NanodiamondParams,
    cfg: ProtocolConfig,
    constants: PhysicalConstants,
) -> ProtocolResult:
    nd = NanodiamondParams.from_mass(m, density=template.density,
                                     chi_magnitude=template.chi_magnitude,
                                     epsilon=template.epsilon)
    fld = FieldConfig(B0=0.0, Bprime=bprime)
    return protocol_duration(nd, fld, cfg, constants)


def optimize_tmin(
    scenario: Scenario,
    mass_range: tuple[float, float],
    bprime_range: tuple[float, float],
    grid_shape: tuple[int, int] = (60, 60),
    refine: bool = True,
    refine_rel_tol: float = 1e-3,
    template: Optional[NanodiamondParams] = None,
    target_delta_phi: float = 0.01 * math.pi,
    constants: PhysicalConstants = CONSTANTS,
    threads: int = 1,
) -> OptimizeResult:
    """Minimize the protocol time over a log-log (mass, gradient) grid.

    Two deterministic stages: a coarse logarithmic scan, then alternating
    golden-section refinement of each coordinate (in log space) down to
    ``refine_rel_tol`` relative parameter resolution.  Ties in the scan are
    broken lexicographically by (m, B').  A minimizer on the range boundary
    is flagged, not treated as a failure.
    """
    if template is None:
        template = NanodiamondParams()
    if not (mass_range[0] > 0.0 and mass_range[0] < mass_range[1]):
        raise ValueError("mass_range must be increasing and positive")
    if not (bprime_range[0] > 0.0 and bprime_range[0] < bprime_range[1]):
        raise ValueError("bprime_range must be increasing and positive")
    cfg = ProtocolConfig(target_delta_phi=target_delta_phi, scenario=scenario)

    n_m, n_b = grid_shape
    m_values = np.logspace(math.log10(mass_range[0]), math.log10(mass_range[1]), n_m)
    b_values = np.logspace(math.log10(bprime_range[0]), math.log10(bprime_range[1]), n_b)

    def row(i: int) -> list[tuple[float, float, ProtocolResult]]:
        m = float(m_values[i])
        return [(m, float(b), _protocol_at(m, float(b), template, cfg, constants))
                for b in b_values]

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n_m)))
    else:
        rows = [row(i) for i in range(n_m)]
    surface = [cell for r in rows for cell in r]

    best = None
    for m, b, res in surface:  # ascending (m, B'): first strict win = lexicographic
        if best is None or res.t_total < best[2].t_total:
            best = (m, b, res)
    m_best, b_best, res_best = best
    i = int(np.searchsorted(m_values, m_best))
    j = int(np.searchsorted(b_values, b_best))

    if refine:
        lo_m = math.log10(m_values[max(i - 1, 0)])
        hi_m = math.log10(m_values[min(i + 1, n_m - 1)])
        lo_b = math.log10(b_values[max(j - 1, 0)])
        hi_b = math.log10(b_values[min(j + 1, n_b - 1)])

        log_m, log_b = math.log10(m_best), math.log10(b_best)
        for _ in range(12):
            new_m = _golden_min(
                lambda lm: _protocol_at(10**lm, 10**log_b, template, cfg,
                                        constants).t_total,
                lo_m, hi_m, math.log10(1.0 + refine_rel_tol) / 4.0)
            new_b = _golden_min(
                lambda lb: _protocol_at(10**new_m, 10**lb, template, cfg,
                                        constants).t_total,
                lo_b, hi_b, math.log10(1.0 + refine_rel_tol) / 4.0)
            moved = max(abs(new_m - log_m), abs(new_b - log_b))
            log_m, log_b = new_m, new_b
            if moved < math.log10(1.0 + refine_rel_tol) / 4.0:
                break
        cand = _protocol_at(10**log_m, 10**log_b, template, cfg, constants)
        if cand.t_total <= res_best.t_total:
            m_best, b_best, res_best = 10**log_m, 10**log_b, cand

    rel = 1.0 + 1e-9
    mass_edge = m_best <= mass_range[0] * (m_values[1] / m_values[0]) * rel or \
        m_best >= mass_range[1] / (m_values[1] / m_values[0]) / rel
    grad_edge = b_best <= bprime_range[0] * (b_values[1] / b_values[0]) * rel or \
        b_best >= bprime_range[1] / (b_values[1] / b_values[0]) / rel

    return OptimizeResult(m_opt=m_best, Bprime_opt=b_best, t_min=res_best.t_total,
                          result=res_best, on_mass_boundary=bool(mass_edge),
                          on_gradient_boundary=bool(grad_edge), surface=surface)


def _golden_min(f: Callable[[float], float], a: float, b: float, xtol: float) -> float:
    """Deterministic golden-section minimizer on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def write_surface_csv(path, result: OptimizeResult, fmt: str = ".17g") -> None:
    """Surface table in the fixed export schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SURFACE_CSV_HEADER)
        for row in result.surface_rows():
            writer.writerow([format(v, fmt) for v in row])


# --- final two-qubit state and entanglement measure -------------------------

_BASIS = ("|-1,-1>", "|-1,+1>", "|+1,-1>", "|+1,+1>")


@dataclass(frozen=True)
class TwoQubitState:
    """State on the ordered basis (|-1,-1>, |-1,+1>, |+1,-1>, |+1,+1>)."""

    amplitudes: tuple[complex, complex, complex, complex]

    def __post_init__(self) -> None:
        norm = math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes))
        if abs(norm - 1.0) > 1e-14:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond 1e-14")

    def density_matrix(self) -> np.ndarray:
        psi = np.asarray(self.amplitudes, dtype=complex)
        return np.outer(psi, psi.conj())


def final_state(phi_plus: float, phi_minus: float) -> TwoQubitState:
    """Protocol output state (1, e^{-i phi_+}, e^{i phi_-}, 1)/2."""
    amps = (
        0.5 + 0.0j,
        0.5 * complex(math.cos(phi_plus), -math.sin(phi_plus)),
        0.5 * complex(math.cos(phi_minus), math.sin(phi_minus)),
        0.5 + 0.0j,
    )
    return TwoQubitState(amplitudes=amps)


def gravity_phases(
    d: float,
    dx: float,
    m_nd: float,
    t: float,
    constants: PhysicalConstants = CONSTANTS,
) -> tuple[float, float]:
    """Individual branch-pair phases (phi_plus, phi_minus) under the literal
    reading phi_+- = +-(G m^2/hbar)(1/d - 1/(d +- dx)) t.

    Convention-sensitive in overall sign; their difference phi_- - phi_+ is
    the unambiguous entangling phase used everywhere else.
    """
    if not 0.0 <= dx < d:
        raise ValueError("dx must satisfy 0 <= dx < d")
    k = constants.G * m_nd**2 / constants.hbar
    phi_plus = k * (1.0 / d - 1.0 / (d + dx)) * t
    phi_minus = -k * (1.0 / d - 1.0 / (d - dx)) * t
    return phi_plus, phi_minus


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Partial transpose over the second qubit of a 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return rho.transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(state: "TwoQubitState | Sequence[complex]") -> float:
    """Entanglement negativity: |sum of negative eigenvalues| of the partial
    transpose, via a symmetric eigensolver on the explicit 4x4 matrix.

    Accepts a :class:`TwoQubitState` or a raw length-4 amplitude vector;
    the latter is rejected if its norm deviates from 1 beyond 1e-10.
    """
    if isinstance(state, TwoQubitState):
        rho = state.density_matrix()
    else:
        psi = np.asarray(state, dtype=complex)
        if psi.shape != (4,):
            raise ValueError("expected 4 amplitudes")
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond 1e-10")
        rho = np.outer(psi, psi.conj())
    eigenvalues = np.linalg.eigvalsh(partial_transpose(rho))
    return float(-np.sum(eigenvalues[eigenvalues < 0.0]))

"""Piecewise branch evolution under dynamical decoupling.

Spin flips at omega_DD = N omega are idealized as instantaneous.  Two
control schemes exist:

* ``FULL_FLIP``: B0 and B' both reverse with the spin.  The Hamiltonian is
  invariant, so the branch evolution equals the plain closed form.
* ``GRADIENT_ONLY_FLIP``: only B' follows the spin, equivalent to B0 alone
  flipping sign every interval [2 pi j / omega_DD, 2 pi (j+1) / omega_DD).
  Each branch then hops between two shifted oscillators with coupling
  lambda_s^{(j)} = (-1)^j lambda0 + s lambda.

Within segment j (local time tau, chi_j = lambda^{(j)} / omega):

    alpha^{(j)}(tau) = -chi_j + (A_j + chi_j) e^{+i omega tau},
    A_{j+1} = alpha^{(j)}(Dt),            Dt = 2 pi / omega_DD,

with A_0 = 0, so the running sum over earlier segments is carried in O(1)
per segment advance.  The phase accumulates per segment as

    Q^{(j)}(tau) = zeta_j tau + chi_j^2 sin(omega tau)
                   - chi_j Im[A_j (1 - e^{+i omega tau})],
    zeta_j = D s^2 + gamma_e B0 (-1)^j s - (lambda^{(j)})^2 / omega,

which reduces to the no-decoupling phase on segment 0 and keeps the
recursive phase coefficient C^{(j)} = e^{-i sum Q} exactly unimodular.
The e^{+i omega t} phasor convention matches the plain branch evolution;
expectation values are checked against an independent piecewise classical
integration rather than trusting either phasor sign in isolation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .coherent import BranchState, branch_state, expectation_xp
from .core import (
    CONSTANTS,
    FieldConfig,
    NanodiamondParams,
    OscillatorParams,
    PhysicalConstants,
    derive_oscillator,
    max_separation,
)

__all__ = [
    "FlipScheme",
    "DDConfig",
    "DDBranchTrace",
    "build_dd_trace",
    "dd_branch_state",
    "dd_branch_states",
    "dd_expectation",
    "dd_piecewise_ode_reference",
    "dd_symmetry_metric",
    "dd_mirror_defect",
    "sampled_symmetry_metric",
    "sampled_mirror_defect",
    "excursion_bias_defect",
]


class FlipScheme(enum.Enum):
    FULL_FLIP = "full-flip"
    GRADIENT_ONLY_FLIP = "gradient-only-flip"


@dataclass(frozen=True)
class DDConfig:
    """Decoupling drive: omega_DD = n * omega, plus the control scheme."""

    n: int
    scheme: FlipScheme = FlipScheme.GRADIENT_ONLY_FLIP
    n_periods: float = 1.0  # default evolution window in motion periods

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("DD frequency multiplier n must be >= 1")
        if not self.n_periods > 0.0:
            raise ValueError("n_periods must be > 0")


@dataclass(frozen=True)
class DDBranchTrace:
    """Per-segment closed-form data for one spin branch under decoupling.

    ``alpha_starts[j]`` is the coherent amplitude at the start of segment j
    and ``phase_starts[j]`` the phase accumulated over all earlier segments;
    both let any time inside segment j be evaluated in O(1).
    """

    spin: int
    osc: OscillatorParams
    segment_duration: float
    lambdas: np.ndarray
    zetas: np.ndarray
    alpha_starts: np.ndarray
    phase_starts: np.ndarray

    @property
    def n_segments(self) -> int:
        return len(self.lambdas)

    @property
    def t_end(self) -> float:
        return self.n_segments * self.segment_duration

    def segment_index(self, t: float) -> int:
        if t < 0.0:
            raise ValueError("t must be >= 0")
        j = int(t / self.segment_duration)
        return min(j, self.n_segments - 1)

    def _local(self, t: float) -> tuple[int, float]:
        j = self.segment_index(t)
        return j, t - j * self.segment_duration

    def alpha_at(self, t: float) -> complex:
        j, tau = self._local(t)
        chi = self.lambdas[j] / self.osc.omega
        rot = complex(math.cos(self.osc.omega * tau), math.sin(self.osc.omega * tau))
        return -chi + (self.alpha_starts[j] + chi) * rot

    def phase_at(self, t: float) -> float:
        j, tau = self._local(t)
        chi = self.lambdas[j] / self.osc.omega
        rot = complex(math.cos(self.osc.omega * tau), math.sin(self.osc.omega * tau))
        a0 = self.alpha_starts[j]
        return (
            self.phase_starts[j]
            + self.zetas[j] * tau
            + chi**2 * math.sin(self.osc.omega * tau)
            - chi * (a0 * (1.0 - rot)).imag
        )

    def state_at(self, t: float) -> BranchState:
        return BranchState(t=t, spin=self.spin, alpha=self.alpha_at(t),
                           theta=self.phase_at(t))

    def phase_coefficient(self, t: float) -> complex:
        """Recursive phase coefficient C(t) = e^{-i Q(t)}, unit modulus."""
        q = self.phase_at(t)
        return complex(math.cos(q), -math.sin(q))

    def expectation_at(self, t: float) -> tuple[float, float]:
        return expectation_xp(self.state_at(t), self.osc)


def build_dd_trace(
    spin: int,
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: DDConfig,
    t_end: Optional[float] = None,
    constants: PhysicalConstants = CONSTANTS,
) -> DDBranchTrace:
    """Walk the segment recursion once up to ``t_end`` (default: the window
    set by ``dd.n_periods``) and cache per-segment prefix data."""
    if spin not in (-1, 0, 1):
        raise ValueError("spin eigenvalue must be -1, 0 or +1")
    if dd.scheme is not FlipScheme.GRADIENT_ONLY_FLIP:
        raise ValueError("segment recursion applies to the gradient-only scheme")
    osc = derive_oscillator(nd, fld, constants)
    if t_end is None:
        t_end = dd.n_periods * osc.period
    seg = osc.period / dd.n  # 2 pi / omega_DD
    n_segments = max(1, math.ceil(t_end / seg - 1e-12))

    omega = osc.omega
    rot_seg = complex(math.cos(omega * seg), math.sin(omega * seg))
    sin_seg = math.sin(omega * seg)

    lambdas = np.empty(n_segments)
    zetas = np.empty(n_segments)
    alpha_starts = np.empty(n_segments, dtype=complex)
    phase_starts = np.empty(n_segments)

    d_term = constants.D_zfs * spin * spin
    zeeman = constants.gamma_e * fld.B0 * spin

    alpha = 0.0 + 0.0j
    phase = 0.0
    for j in range(n_segments):
        sign = 1.0 if j % 2 == 0 else -1.0
        lam_j = sign * osc.lambda0 + spin * osc.lam
        chi = lam_j / omega
        lambdas[j] = lam_j
        zetas[j] = d_term + sign * zeeman - lam_j**2 / omega
        alpha_starts[j] = alpha
        phase_starts[j] = phase
        phase += (
            zetas[j] * seg
            + chi**2 * sin_seg
            - chi * (alpha * (1.0 - rot_seg)).imag
        )
        alpha = -chi + (alpha + chi) * rot_seg

    return DDBranchTrace(spin=spin, osc=osc, segment_duration=seg,
                         lambdas=lambdas, zetas=zetas,
                         alpha_starts=alpha_starts, phase_starts=phase_starts)


def dd_branch_state(
    t: float,
    spin: int,
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: DDConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> BranchState:
    """Branch state at time t under the configured decoupling scheme."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if dd.scheme is FlipScheme.FULL_FLIP:
        # B0 and B' flip together with the spin: dynamics identical to no DD.
        return branch_state(t, spin, nd, fld, constants)
    trace = build_dd_trace(spin, nd, fld, dd, t_end=t if t > 0 else None,
                           constants=constants)
    return trace.state_at(t)


def dd_branch_states(
    times: Sequence[float],
    spin: int,
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: DDConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> list[BranchState]:
    """Branch states at many times with a single segment walk."""
    times = list(times)
    if any(t < 0.0 for t in times):
        raise ValueError("times must be >= 0")
    if dd.scheme is FlipScheme.FULL_FLIP:
        return [branch_state(t, spin, nd, fld, constants) for t in times]
    t_max = max(times) if times else 0.0
    trace = build_dd_trace(spin, nd, fld, dd, t_end=t_max if t_max > 0 else None,
                           constants=constants)
    return [trace.state_at(t) for t in times]


def dd_expectation(
    times: Sequence[float],
    spin: int,
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: DDConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """(<x>, <p>) samples, shape (len(times), 2)."""
    osc = derive_oscillator(nd, fld, constants)
    states = dd_branch_states(times, spin, nd, fld, dd, constants)
    return np.array([expectation_xp(s, osc) for s in states])


def dd_piecewise_ode_reference(
    times: Sequence[float],
    spin: int,
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: DDConfig,
    constants: PhysicalConstants = CONSTANTS,
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> np.ndarray:
    """Brute-force oracle: classical piecewise integration of the branch.

    Integrates u'' = -(u - u_eq^{(j)}) in dimensionless units (u = x per
    max-separation, tau = omega t), with the equilibrium hopping each
    decoupling segment exactly as the recursion assumes.  Returns lab-frame
    (<x>, <p>) samples, shape (len(times), 2).  Integrator failures raise.
    """
    if dd.scheme is not FlipScheme.GRADIENT_ONLY_FLIP:
        raise ValueError("the oracle targets the gradient-only scheme")
    osc = derive_oscillator(nd, fld, constants)
    times = np.asarray(list(times), dtype=float)
    if np.any(times < 0.0):
        raise ValueError("times must be >= 0")
    x_scale = max_separation(nd, fld, constants)
    seg_tau = 2.0 * math.pi / dd.n  # segment length in tau units
    n_segments = max(1, math.ceil((times.max() * osc.omega if times.size else seg_tau)
                                  / seg_tau - 1e-12))

    taus = times * osc.omega
    out = np.empty((len(times), 2))
    state = np.array([0.0, 0.0])  # (u, du/dtau), rest start at the origin
    for j in range(n_segments):
        sign = 1.0 if j % 2 == 0 else -1.0
        lam_j = sign * osc.lambda0 + spin * osc.lam
        u_eq = -2.0 * osc.x_zpf * (lam_j / osc.omega) / x_scale
        t0, t1 = j * seg_tau, (j + 1) * seg_tau
        mask = (taus >= t0 - 1e-12) & (taus <= t1 + 1e-12) if j < n_segments - 1 \
            else (taus >= t0 - 1e-12)

        def rhs(_t, y, ueq=u_eq):
            return [y[1], -(y[0] - ueq)]

        sol = solve_ivp(rhs, (t0, t1), state, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"piecewise oracle integration failed: {sol.message}")
        if np.any(mask):
            vals = sol.sol(np.clip(taus[mask], t0, t1))
            out[mask, 0] = vals[0] * x_scale
            out[mask, 1] = vals[1] * x_scale * osc.omega * nd.mass
        state = sol.y[:, -1]
    return out


def dd_symmetry_metric(
    x_plus: Iterable[float],
    x_minus: Iterable[float],
    dx_max: float,
) -> float:
    """Excursion asymmetry | max|x_+| - max|x_-| | / dx_max of a branch pair.

    The inputs are position samples covering at least one full period.

    Caveat: for an even flip multiplier the decoupled orbit closes after one
    period, and time-reversal then forces the two branch excursions to agree
    identically, so this metric is zero for any decoupled pair regardless of
    the bias.  It still separates the undecoupled biased case from the
    decoupled ones; :func:`dd_mirror_defect` resolves the convergence with N.
    """
    xp = np.max(np.abs(np.asarray(list(x_plus))))
    xm = np.max(np.abs(np.asarray(list(x_minus))))
    return abs(xp - xm) / dx_max


def dd_mirror_defect(
    x_plus: Iterable[float],
    x_minus: Iterable[float],
    dx_max: float,
) -> float:
    """Pointwise origin-symmetry defect max_t |x_+(t) + x_-(t)| / dx_max.

    Zero iff the branch pair is mirror-symmetric through the origin at every
    instant, which is how the bias immunity of the decoupled dynamics shows
    up in phase space; decays with the flip multiplier.
    """
    xp = np.asarray(list(x_plus))
    xm = np.asarray(list(x_minus))
    return float(np.max(np.abs(xp + xm)) / dx_max)


def _sampled_branch_positions(
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: Optional[DDConfig],
    n_samples: int,
    constants: PhysicalConstants,
) -> tuple[np.ndarray, np.ndarray, float]:
    osc = derive_oscillator(nd, fld, constants)
    times = np.linspace(0.0, osc.period, n_samples)
    if dd is None:
        xs = {}
        for spin in (1, -1):
            states = [branch_state(t, spin, nd, fld, constants, osc) for t in times]
            xs[spin] = np.array([expectation_xp(s, osc)[0] for s in states])
        x_plus, x_minus = xs[1], xs[-1]
    else:
        x_plus = dd_expectation(times, 1, nd, fld, dd, constants)[:, 0]
        x_minus = dd_expectation(times, -1, nd, fld, dd, constants)[:, 0]
    return x_plus, x_minus, max_separation(nd, fld, constants)


def sampled_symmetry_metric(
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: Optional[DDConfig],
    n_samples: int = 4096,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Excursion asymmetry over one period, from the closed-form evolution.

    ``dd=None`` evaluates the undecoupled dynamics (the biased baseline).
    """
    x_plus, x_minus, dx = _sampled_branch_positions(nd, fld, dd, n_samples,
                                                    constants)
    return dd_symmetry_metric(x_plus, x_minus, dx)


def sampled_mirror_defect(
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: Optional[DDConfig],
    n_samples: int = 4096,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Origin-symmetry defect over one period, from the closed-form evolution."""
    x_plus, x_minus, dx = _sampled_branch_positions(nd, fld, dd, n_samples,
                                                    constants)
    return dd_mirror_defect(x_plus, x_minus, dx)


def excursion_bias_defect(
    nd: NanodiamondParams,
    fld: FieldConfig,
    dd: Optional[DDConfig],
    n_samples: int = 4096,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Bias immunity: excursion mismatch against the unbiased branch,

        | max|x(B0)| - max|x(B0 = 0)| | / dx_max,

    for the spin +1 branch over one period.  Large without decoupling,
    shrinking with the flip multiplier as the dynamics forgets the bias.
    """
    osc = derive_oscillator(nd, fld, constants)
    times = np.linspace(0.0, osc.period, n_samples)
    fld0 = FieldConfig(B0=0.0, Bprime=fld.Bprime, tilt_theta_g=fld.tilt_theta_g)
    osc0 = derive_oscillator(nd, fld0, constants)
    x_ref = np.array([
        expectation_xp(branch_state(float(t), 1, nd, fld0, constants, osc0),
                       osc0)[0]
        for t in times])
    if dd is None:
        x = np.array([
            expectation_xp(branch_state(float(t), 1, nd, fld, constants, osc),
                           osc)[0]
            for t in times])
    else:
        x = dd_expectation(times, 1, nd, fld, dd, constants)[:, 0]
    dx = max_separation(nd, fld, constants)
    return float(abs(np.max(np.abs(x)) - np.max(np.abs(x_ref))) / dx)

#!/usr/bin/env python3
"""
Matching constraint for spiral sheet families

A family is a weak Euler solution iff for every branch m

    K_m = (1/sinh πA) Σ_k 𝒜_mk g_k  =  -(a²+1-2μ+2aμi)/(2a²)

where 𝒜_mk = e^{A(θ_k-θ_m)} times e^{-πA}, cosh πA or e^{πA} for k > m,
k = m, k < m. The imaginary part is velocity matching, the real part
pressure matching.
"""

import cmath
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from spiral_errors import (ConfigError, DegenerateDirection, InvalidGauge, NoConvergence,
                           NonPositivePitch, SingularJacobian)
from spiral_model import (TWO_PI, SpiralFamily, growth_constant, shifted_growth_constant,
                          validate_family, family_to_dict)

logger = logging.getLogger(__name__)

COMPAT_TOL = 1e-12
DEGENERACY_TOL = 1e-12
RANK_TOL = 1e-12
MAX_HALVINGS = 40


class Hyperbolics(NamedTuple):
    exp_plus: complex   # e^{πA}
    exp_minus: complex  # e^{-πA}
    sinh: complex
    cosh: complex


def hyperbolics(a: float) -> Hyperbolics:
    pi_b = math.pi * shifted_growth_constant(a)
    exp_plus = cmath.exp(pi_b)
    exp_minus = cmath.exp(-pi_b)
    return Hyperbolics(exp_plus, exp_minus, cmath.sinh(pi_b), cmath.cosh(pi_b))


def coth_pi_A_over(a: float, M: int) -> complex:
    """coth(πA/M), reduced by the iπ period of coth before evaluation"""
    if M < 1:
        raise ConfigError(f"M must be at least 1, got {M}")
    # πA/M = πB/M - 2πi/M and -2π/M ≡ π((-2) mod M)/M modulo π
    offset = math.pi * ((-2) % M) / M
    x = math.pi * shifted_growth_constant(a) / M + 1j * offset
    return cmath.cosh(x) / cmath.sinh(x)


def large_pitch_coth(a: float) -> Tuple[complex, float]:
    """coth(πA) and its large-a asymptote -a/(2π)"""
    return coth_pi_A_over(a, 1), -a / TWO_PI


def _coupling(A: complex, hyp: Hyperbolics, theta: np.ndarray) -> np.ndarray:
    M = len(theta)
    m_idx, k_idx = np.meshgrid(np.arange(M), np.arange(M), indexing='ij')
    weights = np.where(k_idx > m_idx, hyp.exp_minus,
                       np.where(k_idx == m_idx, hyp.cosh, hyp.exp_plus))
    return np.exp(A * (theta[None, :] - theta[:, None])) * weights


def coupling_matrix(family: SpiralFamily) -> np.ndarray:
    """𝒜 with rows m and columns k"""
    return _coupling(family.A, hyperbolics(family.a), family.theta_array)


def constraint_rhs(a: float, mu: float) -> complex:
    return -complex(a * a + 1.0 - 2.0 * mu, 2.0 * a * mu) / (2.0 * a * a)


def _aggregates(a: float, g: np.ndarray, theta: np.ndarray) -> np.ndarray:
    hyp = hyperbolics(a)
    return _coupling(growth_constant(a), hyp, theta) @ g / hyp.sinh


@dataclass(frozen=True)
class ConstraintReport:
    Amk: np.ndarray
    K: np.ndarray
    rhs: complex
    residual: np.ndarray
    velocity_residual: np.ndarray
    pressure_residual: np.ndarray
    compat1: complex
    compat2: complex
    compat_holds: bool

    @property
    def residual_max(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def is_weak_solution(self, tol: float = 1e-10) -> bool:
        """Residual within tol relative to the size of the right-hand side"""
        return self.residual_max <= tol * (1.0 + abs(self.rhs))


class Compatibility(NamedTuple):
    holds: bool
    compat1: complex
    compat2: complex


def compatibility_check(family: SpiralFamily) -> Compatibility:
    """Σ g_k e^{-iθ_k} = 0 and Σ g_k e^{-2iθ_k} = 0 within 1e-12 Σ|g_k|"""
    g = family.g_array
    theta = family.theta_array
    compat1 = complex(np.sum(g * np.exp(-1j * theta)))
    compat2 = complex(np.sum(g * np.exp(-2j * theta)))
    tol = COMPAT_TOL * family.total_abs_circulation
    return Compatibility(abs(compat1) <= tol and abs(compat2) <= tol, compat1, compat2)


def constraint_report(family: SpiralFamily) -> ConstraintReport:
    a, mu = family.a, family.mu
    hyp = hyperbolics(a)
    Amk = _coupling(family.A, hyp, family.theta_array)
    K = Amk @ family.g_array / hyp.sinh
    rhs = constraint_rhs(a, mu)
    compat = compatibility_check(family)
    return ConstraintReport(
        Amk=Amk,
        K=K,
        rhs=rhs,
        residual=K - rhs,
        velocity_residual=np.imag(a * K + mu * complex(a, 1.0)),
        pressure_residual=np.real(K) - (2.0 * mu - a * a - 1.0) / (2.0 * a * a),
        compat1=compat.compat1,
        compat2=compat.compat2,
        compat_holds=compat.holds,
    )


def alexander_solve(a: float, M: int) -> Tuple[float, float]:
    """(g, μ) of the symmetric M-branch family from
    a²+1-2μ+2aμi = -2a² g coth(πA/M)"""
    if not a > 0:
        raise NonPositivePitch(f"spiral pitch must be positive, got {a}")
    c = coth_pi_A_over(a, M)
    direction = c.imag + a * c.real
    if abs(direction) < DEGENERACY_TOL:
        raise DegenerateDirection(
            f"coth(πA/M) lies along -1+ai for a={a}, M={M}; no real (g, mu) solves the constraint")
    g = -(a * a + 1.0) / (2.0 * a * direction)
    mu = -a * g * c.imag
    logger.debug(f"Alexander a={a} M={M}: coth={c}, g={g}, mu={mu}")
    return g, mu


# General solver

_SLOT_PATTERN = re.compile(r'^(mu|g|theta)(\d*)$')


def parse_free(free: Iterable[str], M: int) -> List[Tuple[str, int]]:
    """Expand free-variable names into (kind, index) slots.

    Accepted names: mu, g (all circulations), g<k>, theta (θ_1..θ_{M-1}),
    theta<k> with k >= 1. θ_0 fixes the rotation gauge and is never free.
    """
    slots: List[Tuple[str, int]] = []
    for raw_name in free:
        name = raw_name.strip()
        if not name:
            continue
        match = _SLOT_PATTERN.match(name)
        if match is None:
            raise ConfigError(f"unknown free variable '{name}'")
        kind, index = match.group(1), match.group(2)
        if kind == 'mu':
            if index:
                raise ConfigError(f"unknown free variable '{name}'")
            expanded = [('mu', 0)]
        elif index:
            k = int(index)
            if kind == 'theta' and k == 0:
                raise InvalidGauge("theta0 fixes the rotation gauge and cannot be freed")
            if k >= M:
                raise ConfigError(f"free variable '{name}' refers to branch {k} of {M}")
            expanded = [(kind, k)]
        elif kind == 'g':
            expanded = [('g', k) for k in range(M)]
        else:
            expanded = [('theta', k) for k in range(1, M)]
        for slot in expanded:
            if slot not in slots:
                slots.append(slot)
    return slots


class _State(NamedTuple):
    mu: float
    g: np.ndarray
    theta: np.ndarray


def _unpack(base: _State, slots: Sequence[Tuple[str, int]], x: np.ndarray) -> _State:
    mu = base.mu
    g = base.g.copy()
    theta = base.theta.copy()
    for value, (kind, k) in zip(x, slots):
        if kind == 'mu':
            mu = value
        elif kind == 'g':
            g[k] = value
        else:
            theta[k] = value
    return _State(mu, g, theta)


def _pack(state: _State, slots: Sequence[Tuple[str, int]]) -> np.ndarray:
    values = []
    for kind, k in slots:
        if kind == 'mu':
            values.append(state.mu)
        elif kind == 'g':
            values.append(state.g[k])
        else:
            values.append(state.theta[k])
    return np.asarray(values, dtype=float)


def _admissible(state: _State) -> bool:
    theta = state.theta
    return (np.all(state.g != 0.0) and theta[0] >= 0.0 and theta[-1] < TWO_PI
            and bool(np.all(np.diff(theta) > 0.0)))


def _residual(a: float, state: _State) -> np.ndarray:
    K = _aggregates(a, state.g, state.theta)
    residual = K - constraint_rhs(a, state.mu)
    return np.concatenate([residual.real, residual.imag])


def residual_vector(family: SpiralFamily) -> np.ndarray:
    """2M reals: real parts of K_m - rhs, then imaginary parts"""
    return _residual(family.a, _State(family.mu, family.g_array, family.theta_array))


def _jacobian(a: float, base: _State, slots, x: np.ndarray) -> np.ndarray:
    columns = []
    for i in range(len(x)):
        h = 1e-7 * max(1.0, abs(x[i]))
        forward = x.copy()
        backward = x.copy()
        forward[i] += h
        backward[i] -= h
        columns.append((_residual(a, _unpack(base, slots, forward))
                        - _residual(a, _unpack(base, slots, backward))) / (2.0 * h))
    return np.column_stack(columns)


class SolveResult(NamedTuple):
    family: SpiralFamily
    iterations: int
    residual_max: float


def general_solve(family0: SpiralFamily, free: Iterable[str], max_iter: int = 50,
                  tol: float = 1e-12) -> SolveResult:
    """Damped Gauss-Newton on the 2M real constraint residuals"""
    slots = parse_free(free, family0.M)
    a = family0.a
    base = _State(family0.mu, family0.g_array, family0.theta_array)
    x = _pack(base, slots)
    F = _residual(a, base)
    norm = float(np.linalg.norm(F))
    iterations = 0

    logger.debug(f"Solving for {slots or 'nothing'} from residual {np.max(np.abs(F)):.3e}")

    while np.max(np.abs(F)) > tol:
        if not slots:
            raise NoConvergence("no free variables and the family does not satisfy the constraint")
        if iterations >= max_iter:
            raise NoConvergence(
                f"residual {np.max(np.abs(F)):.3e} above {tol:.1e} after {max_iter} iterations")

        J = _jacobian(a, base, slots, x)
        singular_values = np.linalg.svd(J, compute_uv=False)
        if singular_values[0] == 0.0 or singular_values[-1] <= RANK_TOL * singular_values[0]:
            raise SingularJacobian(
                f"Jacobian rank-deficient (singular values {singular_values[-1]:.3e}/{singular_values[0]:.3e})")
        step = np.linalg.lstsq(J, -F, rcond=None)[0]

        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = x + lam * step
            state = _unpack(base, slots, trial)
            if _admissible(state):
                F_trial = _residual(a, state)
                trial_norm = float(np.linalg.norm(F_trial))
                if trial_norm < norm:
                    break
            lam *= 0.5
        else:
            raise NoConvergence(
                f"line search stalled at residual {np.max(np.abs(F)):.3e} after {iterations} iterations")

        x, F, norm = trial, F_trial, trial_norm
        iterations += 1
        logger.debug(f"Iteration {iterations}: step {lam:g}, residual {np.max(np.abs(F)):.3e}")

    state = _unpack(base, slots, x)
    raw = family_to_dict(family0)
    raw.update(mu=float(state.mu), g=[float(v) for v in state.g],
               theta=[float(v) for v in state.theta])
    family = validate_family(raw)
    residual_max = float(np.max(np.abs(F)))
    logger.info(f"Converged in {iterations} iterations, residual {residual_max:.3e}")
    return SolveResult(family, iterations, residual_max)

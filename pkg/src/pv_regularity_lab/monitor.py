# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Evaluate the mixed pressure-velocity criterion along a trajectory.

For every snapshot the monitor measures the quartic energy balance, the
Hoelder and Riesz steps, the interpolation-Sobolev bound of V^2, the Young
absorption and the control of V by v. Every link of the estimate chain is
checked separately against explicit constants from the registry. The
criterion integral and a Gronwall envelope close the report.
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import (
    ExponentRelationViolated,
    InsufficientSnapshots,
    NonPositiveShift,
    QOutOfRange,
    ValidationError,
)
from .exponents import (
    Classification,
    ExponentSolution,
    absorption_exponent,
    as_rational,
    beta_of_theta,
    classify,
    conjugate_split,
    format_rational,
    gronwall_time_exponent,
    interpolation_delta,
    mixed_pv_line,
    solve_p,
)
from .fields import (
    Domain,
    Grid3,
    ScalarField,
    VectorField,
    finite_difference_gradient,
    gaussian_profile,
    gradient,
    l2_norm,
    velocity_gradient,
)
from .lab_config import (
    ABSORPTION_LIMIT,
    DEFAULT_DEALIAS,
    DEFAULT_EPSILON,
    DEFAULT_LEDGER_C_TOL,
    ENV_PVLAB_THREADS,
    LEDGER_CSV_FILENAME,
    REPORT_FILENAME,
    REPORT_META_FILENAME,
)
from .logger import get_logger
from .lorentz import lebesgue_norm, lorentz_norm, weak_norm
from .registry import ConstantsRegistry
from .solver import FlowState

logger = get_logger(__name__)

# Coefficient of the largest gradient term in the bound of ||grad V^2||^2 by v
GRADIENT_CONTROL = {Domain.TORUS: 8, Domain.WINDOWED: 16}
# max |grad exp(-|x|^2)|, attained at |x| = 1/sqrt(2)
GAUSS_GRADIENT_SUP = math.sqrt(2.0) * math.exp(-0.5)
VERDICT_RTOL = 1e-12
UNIFORM_SPACING_RTOL = 1e-9


@dataclass(frozen=True)
class MonitorConfig:
    """Exponents, absorption parameter and constants of one monitor run.

    Attributes:
        theta: Mixing exponent in [0, 1]
        q: Weak Lorentz space exponent, q > 3/(2 - theta)
        p: Time exponent; derived from 2/p + 3/q = 2 - theta when None
        epsilon: Young absorption parameter
        torus_weight: Use the constant weight 1 instead of exp(-|x|^2) on the torus
        c_tol: Scale of the quartic-ledger tolerance
        gronwall_q: Space exponent of the Gronwall envelope (> 3)
        constants: Registry constants
    """

    theta: Fraction
    q: Fraction
    p: Fraction | None = None
    epsilon: Fraction = DEFAULT_EPSILON
    torus_weight: bool = True
    c_tol: float = DEFAULT_LEDGER_C_TOL
    gronwall_q: Fraction = Fraction(4)
    constants: ConstantsRegistry = field(default_factory=ConstantsRegistry)

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", as_rational(self.theta))
        object.__setattr__(self, "q", as_rational(self.q))
        object.__setattr__(self, "epsilon", as_rational(self.epsilon))
        object.__setattr__(self, "gronwall_q", as_rational(self.gronwall_q))
        beta_of_theta(self.theta)
        solution = conjugate_split(self.theta, self.q)
        object.__setattr__(self, "p", solution.p if self.p is None else as_rational(self.p))
        if self.p <= 0:
            raise ValidationError(f"p must be positive, got {self.p}")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not self.c_tol > 0:
            raise ValidationError(f"c_tol must be positive, got {self.c_tol}")
        if self.gronwall_q <= 3:
            raise QOutOfRange(f"gronwall_q must exceed 3, got {self.gronwall_q}")

    @cached_property
    def solution(self) -> ExponentSolution:
        return conjugate_split(self.theta, self.q)

    @property
    def derived_p(self) -> Fraction:
        return self.solution.p

    @property
    def classification(self) -> Classification:
        return classify(mixed_pv_line(self.theta), self.p, self.q)

    def check_absorption(self, domain: Domain) -> None:
        """Require epsilon * C < 1/2 against the quartic dissipation.

        Raises:
            ValidationError: If epsilon is too large for the domain
        """
        product = self.epsilon * GRADIENT_CONTROL[domain]
        if product >= ABSORPTION_LIMIT:
            raise ValidationError(
                f"epsilon = {self.epsilon} is too large on the {domain.value} domain: "
                f"{GRADIENT_CONTROL[domain]} * epsilon = {product} must be < {ABSORPTION_LIMIT}"
            )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "theta": format_rational(self.theta),
            "q": format_rational(self.q),
            "p": format_rational(self.p),
            "p_derived": self.p == self.derived_p,
            "epsilon": format_rational(self.epsilon),
            "torus_weight": self.torus_weight,
            "c_tol": self.c_tol,
            "gronwall_q": format_rational(self.gronwall_q),
        }


def v_shift(v: VectorField, torus_weight: bool = True) -> ScalarField:
    """V = weight + |v| with weight exp(-|x - x_c|^2), or 1 on a torus run with torus_weight."""
    speed = np.sqrt(v.magnitude_squared())
    if v.grid.domain is Domain.TORUS and torus_weight:
        return ScalarField(v.grid, 1.0 + speed)
    return ScalarField(v.grid, gaussian_profile(v.grid) + speed)


def tilde_pi(pi: ScalarField, shift: ScalarField, theta: Fraction | int | str) -> ScalarField:
    """pi / V^theta pointwise; theta = 0 returns pi itself.

    Raises:
        NonPositiveShift: If V <= 0 anywhere
    """
    theta = as_rational(theta)
    if np.any(shift.values <= 0):
        raise NonPositiveShift("The shift V must be strictly positive")
    if theta == 0:
        return pi
    return pi.with_values(pi.values / shift.values ** float(theta))


def _integral(array: np.ndarray, grid: Grid3) -> float:
    return float(np.sum(array)) * grid.cell_volume


def _holds(lhs: float, bound: float) -> bool:
    return lhs <= bound * (1 + VERDICT_RTOL) + np.finfo(float).tiny


def _relative_margin(lhs: float, bound: float) -> float:
    scale = max(abs(lhs), abs(bound))
    return 0.0 if scale == 0 else (bound - lhs) / scale


@dataclass(frozen=True)
class HolderChain:
    """Both links of the Hoelder/Riesz step.

    Attributes:
        lhs: integral |pi|^2 |v|^2
        holder_bound: C_H ||pi~||^beta ||pi||^{2-beta}_{T,2} ||V^2||^beta_{T,2}
        pressure_norm: ||pi||_{T,2} (0 when beta = 2)
        riesz_bound: C_R || |v|^2 ||_{T,2} (0 when beta = 2)
        bound: C_H C_R^{2-beta} ||pi~||^beta ||V^2||^2_{T,2}
        tilde_pi_weak: ||pi~||_{q,inf}
        shift_norm: ||V^2||_{T,2}
    """

    lhs: float
    holder_bound: float
    pressure_norm: float
    riesz_bound: float
    bound: float
    tilde_pi_weak: float
    shift_norm: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.lhs, self.bound))


def holder_chain(v: VectorField, pi: ScalarField, cfg: MonitorConfig) -> HolderChain:
    """Evaluate the Hoelder step and its Riesz follow-up with registry constants.

    With beta = 2 the pressure leg vanishes and the two-factor form is used.
    """
    sol = cfg.solution
    beta = float(sol.beta)
    target = sol.shift_target
    shift = v_shift(v, cfg.torus_weight)
    speed_squared = v.magnitude_squared()
    lhs = _integral(pi.values**2 * speed_squared, v.grid)

    p_weak = weak_norm(tilde_pi(pi, shift, cfg.theta), cfg.q).value
    shift_norm = lorentz_norm(shift.with_values(shift.values**2), target, 2).value
    constants = cfg.constants
    if sol.uses_r1:
        pressure_norm = lorentz_norm(pi, target, 2).value
        riesz_bound = constants.C_riesz_corpus * lorentz_norm(pi.with_values(speed_squared), target, 2).value
        holder_bound = constants.C_holder_corpus * p_weak**beta * pressure_norm ** (2 - beta) * shift_norm**beta
    else:
        pressure_norm = riesz_bound = 0.0
        holder_bound = constants.C_holder_corpus * p_weak**2 * shift_norm**2
    bound = constants.C_holder_corpus * constants.C_riesz_corpus ** (2 - beta) * p_weak**beta * shift_norm**2
    return HolderChain(lhs, holder_bound, pressure_norm, riesz_bound, bound, p_weak, shift_norm)


@dataclass(frozen=True)
class InterpolationBound:
    lhs: float
    bound: float
    delta: Fraction


def interp_sobolev_bound(
    shift_squared: ScalarField, target: Fraction | int | str, constants: ConstantsRegistry
) -> InterpolationBound:
    """Bound ||V^2||_{target,2} by C ||V^2||_2^{1-delta} G^delta.

    G is ||grad V^2||_2 on a windowed grid and ||V^2||_2 + ||grad V^2||_2 on the
    torus, with 1/target = (1 - delta)/2 + delta/6.

    Raises:
        ExponentInfeasible: If target is not in (2, 6)
    """
    delta = interpolation_delta(as_rational(target))
    x = l2_norm(shift_squared.values, shift_squared.grid)
    y = l2_norm(gradient(shift_squared).data, shift_squared.grid)
    g = x + y if shift_squared.grid.domain is Domain.TORUS else y
    d = float(delta)
    bound = constants.interp_sobolev * x ** (1 - d) * g**d
    lhs = lorentz_norm(shift_squared, target, 2).value
    return InterpolationBound(lhs, bound, delta)


def young_constant(epsilon: float | Fraction, a: float | Fraction, k: float) -> float:
    """C_eps with K P X^{2-a} Y^a <= C_eps (P X^{2-a})^{2/(2-a)} + eps Y^2, 0 < a < 2.

    Equals K^{s'} (eps s)^{-s'/s} / s' for s = 2/a, s' = 2/(2-a).
    """
    a = float(a)
    epsilon = float(epsilon)
    if not 0 < a < 2:
        raise ValidationError(f"Young split needs 0 < a < 2, got {a}")
    s = 2 / a
    s_conj = 2 / (2 - a)
    return k**s_conj * (epsilon * s) ** (-s_conj / s) / s_conj


@dataclass(frozen=True)
class VControl:
    """||V^2||_2^2 and ||grad V^2||_2^2 measured directly and bounded through v."""

    l2_direct: float
    l2_bound: float
    grad_direct: float
    grad_bound: float


def v_control(v: VectorField, torus_weight: bool = True) -> VControl:
    """Expand V^2 = w^2 + 2 w |v| + |v|^2 and bound both norms with explicit constants.

    Unit weight: ||V^2||^2 <= 3(|Omega| + 4||v||^2 + |||v|^2||^2) and
    ||grad V^2||^2 <= 8||grad v||^2 + 2||grad |v|^2||^2.
    Gaussian weight g: ||V^2||^2 <= 3(||g^2||^2 + 4||v||^2 + |||v|^2||^2) and
    ||grad V^2||^2 <= 4(||grad g^2||^2 + 4 sup|grad g|^2 ||v||^2 + 4||grad v||^2 + ||grad |v|^2||^2).
    """
    grid = v.grid
    shift = v_shift(v, torus_weight)
    shift_squared = shift.with_values(shift.values**2)
    speed_squared = ScalarField(grid, v.magnitude_squared())

    v_sq = l2_norm(v.data, grid) ** 2
    speed_sq_sq = l2_norm(speed_squared.values, grid) ** 2
    grad_v_sq = l2_norm(velocity_gradient(v), grid) ** 2
    grad_speed_sq = l2_norm(gradient(speed_squared).data, grid) ** 2

    if grid.domain is Domain.TORUS and torus_weight:
        l2_bound = 3 * (grid.total_measure + 4 * v_sq + speed_sq_sq)
        grad_bound = 8 * grad_v_sq + 2 * grad_speed_sq
    else:
        weight_squared = ScalarField(grid, gaussian_profile(grid) ** 2)
        l2_bound = 3 * (l2_norm(weight_squared.values, grid) ** 2 + 4 * v_sq + speed_sq_sq)
        grad_weight_sq = l2_norm(gradient(weight_squared).data, grid) ** 2
        grad_bound = 4 * (grad_weight_sq + 4 * GAUSS_GRADIENT_SUP**2 * v_sq + 4 * grad_v_sq + grad_speed_sq)

    return VControl(
        l2_direct=l2_norm(shift_squared.values, grid) ** 2,
        l2_bound=l2_bound,
        grad_direct=l2_norm(gradient(shift_squared).data, grid) ** 2,
        grad_bound=grad_bound,
    )


def gradient_agreement(v: VectorField, torus_weight: bool = True) -> float:
    """Relative gap between the spectral and second-order finite-difference ||grad V^2||_2."""
    shift = v_shift(v, torus_weight)
    shift_squared = shift.with_values(shift.values**2)
    spectral = l2_norm(gradient(shift_squared).data, v.grid)
    finite = l2_norm(finite_difference_gradient(shift_squared).data, v.grid)
    if spectral == 0:
        return 0.0 if finite == 0 else math.inf
    return abs(spectral - finite) / spectral


@dataclass(frozen=True)
class AbsorptionBound:
    """Right-hand side after Young absorption.

    Attributes:
        exponent: Power of ||pi~||_{q,inf}; equals p on the criterion line
        young: Young constant used
        direct: Bound evaluated with ||V^2||_2 and ||grad V^2||_2
        expanded: Bound with both norms replaced by their control through v
    """

    exponent: Fraction
    young: float
    direct: float
    expanded: float


def absorption_bound(
    tilde_pi_weak: float, control: VControl, cfg: MonitorConfig, domain: Domain
) -> AbsorptionBound:
    """Evaluate C_eps ||pi~||^p X^2 + eps Y^2, plus eps X^2 on the torus.

    Raises:
        ExponentRelationViolated: If the absorption exponent differs from solve_p on the line
    """
    sol = cfg.solution
    exponent = absorption_exponent(sol)
    line_p = solve_p(mixed_pv_line(cfg.theta), cfg.q)
    if exponent != line_p:
        raise ExponentRelationViolated(f"Absorption exponent {exponent} differs from the line's p = {line_p}")
    cfg.check_absorption(domain)

    constants = cfg.constants
    k = constants.C_holder_corpus * constants.C_riesz_corpus ** float(2 - sol.beta) * constants.interp_sobolev**2
    epsilon = float(cfg.epsilon)
    torus = domain is Domain.TORUS
    young = young_constant(epsilon / 2 if torus else epsilon, sol.delta_mix, k)
    weight = young * tilde_pi_weak ** float(exponent)

    def evaluate(x_sq: float, y_sq: float) -> float:
        value = weight * x_sq + epsilon * y_sq
        return value + epsilon * x_sq if torus else value

    return AbsorptionBound(
        exponent=exponent,
        young=young,
        direct=evaluate(control.l2_direct, control.grad_direct),
        expanded=evaluate(control.l2_bound, control.grad_bound),
    )


@dataclass(frozen=True)
class SnapshotTerms:
    """Spatial integrals of one snapshot, before time differencing."""

    t: float
    l4_fourth: float
    weighted_dissipation: float
    modulus_dissipation: float
    pressure_moment: float
    pressure_work: float
    resolution: float
    chain: HolderChain
    interpolation: InterpolationBound
    control: VControl
    absorption: AbsorptionBound


def _resolution_fraction(speed_squared: np.ndarray, grid: Grid3) -> float:
    """sqrt of the share of |v|^2 spectral energy above the dealiasing cutoff."""
    spectrum = np.abs(np.fft.fftn(speed_squared)) ** 2
    total = float(np.sum(spectrum))
    if total == 0:
        return 0.0
    return math.sqrt(float(np.sum(spectrum[~grid.dealias_mask(DEFAULT_DEALIAS)])) / total)


def evaluate_snapshot(state: FlowState, cfg: MonitorConfig) -> SnapshotTerms:
    v, pi, grid = state.v, state.pi, state.grid
    speed_squared = v.magnitude_squared()
    grad_speed_squared = gradient(ScalarField(grid, speed_squared)).data
    grad_v_squared = np.sum(velocity_gradient(v) ** 2, axis=(0, 1))

    shift = v_shift(v, cfg.torus_weight)
    chain = holder_chain(v, pi, cfg)
    interpolation = interp_sobolev_bound(shift.with_values(shift.values**2), cfg.solution.shift_target, cfg.constants)
    control = v_control(v, cfg.torus_weight)
    return SnapshotTerms(
        t=state.t,
        l4_fourth=_integral(speed_squared**2, grid),
        weighted_dissipation=_integral(grad_v_squared * speed_squared, grid),
        modulus_dissipation=_integral(np.sum(grad_speed_squared**2, axis=0), grid),
        pressure_moment=chain.lhs,
        pressure_work=_integral(pi.values * np.sum(v.data * grad_speed_squared, axis=0), grid),
        resolution=_resolution_fraction(speed_squared, grid),
        chain=chain,
        interpolation=interpolation,
        control=control,
        absorption=absorption_bound(chain.tilde_pi_weak, control, cfg, grid.domain),
    )


@dataclass(frozen=True)
class LedgerRow:
    """One snapshot of the quartic energy ledger and the estimate chain.

    Time-differenced entries are None at the first and last snapshot.
    """

    t: float
    l4_fourth: float
    ddt_l4: float | None
    grad_weighted: float
    grad_sq_mod: float
    rhs_pressure: float
    pressure_work: float
    identity_residual: float | None
    ledger_tol: float | None
    tilde_pi_weak: float
    v_shift_l2: float
    holder_lhs: float
    holder_link: float
    pressure_chain_norm: float
    riesz_bound: float
    holder_bound: float
    interp_lhs: float
    interp_bound: float
    absorbed_direct: float
    absorbed_bound: float
    v2_l2_sq: float
    v2_l2_sq_bound: float
    grad_v2_l2_sq: float
    grad_v2_l2_sq_bound: float

    @property
    def ledger_lhs(self) -> float | None:
        if self.ddt_l4 is None:
            return None
        return self.ddt_l4 + self.grad_weighted + self.grad_sq_mod


LEDGER_COLUMNS = tuple(f.name for f in fields(LedgerRow))


def _worker_count() -> int:
    configured = os.getenv(ENV_PVLAB_THREADS)
    if configured:
        try:
            return max(1, int(configured))
        except ValueError:
            logger.warning(f"-> Ignoring non-integer {ENV_PVLAB_THREADS}={configured!r}")
    return os.cpu_count() or 1


def _snapshot_spacing(states: Sequence[FlowState]) -> float:
    times = np.array([s.t for s in states])
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        raise InsufficientSnapshots("Snapshot times must be strictly increasing")
    h = float(gaps[0])
    if np.max(np.abs(gaps - h)) > UNIFORM_SPACING_RTOL * max(h, abs(times[-1])):
        raise InsufficientSnapshots("Snapshots must be uniformly spaced in time")
    return h


def build_rows(
    terms: Sequence[SnapshotTerms], cfg: MonitorConfig, h: float, viscosity: float = 1.0
) -> list[LedgerRow]:
    """Assemble ledger rows; interior rows carry centred time differences."""
    rows = []
    last = len(terms) - 1
    for i, item in enumerate(terms):
        grad_weighted = viscosity / 2 * item.weighted_dissipation
        grad_sq_mod = viscosity / 2 * item.modulus_dissipation
        rhs = item.pressure_moment / viscosity
        ddt = residual = tol = None
        if 0 < i < last:
            ddt = (terms[i + 1].l4_fourth - terms[i - 1].l4_fourth) / (4 * 2 * h)
            residual = ddt + 2 * grad_weighted + grad_sq_mod - item.pressure_work
            scale = max(abs(ddt), grad_weighted, grad_sq_mod, rhs, np.finfo(float).tiny)
            resolution = max(terms[j].resolution for j in (i - 1, i, i + 1))
            tol = cfg.c_tol * (h**2 + resolution) * scale
        rows.append(
            LedgerRow(
                t=item.t,
                l4_fourth=item.l4_fourth,
                ddt_l4=ddt,
                grad_weighted=grad_weighted,
                grad_sq_mod=grad_sq_mod,
                rhs_pressure=rhs,
                pressure_work=item.pressure_work,
                identity_residual=residual,
                ledger_tol=tol,
                tilde_pi_weak=item.chain.tilde_pi_weak,
                v_shift_l2=math.sqrt(item.control.l2_direct),
                holder_lhs=item.chain.lhs,
                holder_link=item.chain.holder_bound,
                pressure_chain_norm=item.chain.pressure_norm,
                riesz_bound=item.chain.riesz_bound,
                holder_bound=item.chain.bound,
                interp_lhs=item.interpolation.lhs,
                interp_bound=item.interpolation.bound,
                absorbed_direct=item.absorption.direct,
                absorbed_bound=item.absorption.expanded,
                v2_l2_sq=item.control.l2_direct,
                v2_l2_sq_bound=item.control.l2_bound,
                grad_v2_l2_sq=item.control.grad_direct,
                grad_v2_l2_sq_bound=item.control.grad_bound,
            )
        )
    return rows


def collect_terms(states: Sequence[FlowState], cfg: MonitorConfig) -> list[SnapshotTerms]:
    """Evaluate every snapshot, concurrently; output order follows the input."""
    with ThreadPoolExecutor(max_workers=min(_worker_count(), max(len(states), 1))) as pool:
        return list(pool.map(lambda s: evaluate_snapshot(s, cfg), states))


def quartic_ledger(states: Sequence[FlowState], cfg: MonitorConfig, viscosity: float = 1.0) -> list[LedgerRow]:
    """Quartic energy ledger over a uniformly spaced trajectory.

    Raises:
        InsufficientSnapshots: With fewer than 3 snapshots or irregular spacing
    """
    if len(states) < 3:
        raise InsufficientSnapshots(f"The ledger needs at least 3 snapshots, got {len(states)}")
    h = _snapshot_spacing(states)
    return build_rows(collect_terms(states, cfg), cfg, h, viscosity)


@dataclass(frozen=True)
class CriterionIntegral:
    value: float
    theta: Fraction
    p: Fraction
    q: Fraction
    classification: Classification

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "theta": format_rational(self.theta),
            "p": format_rational(self.p),
            "q": format_rational(self.q),
            "classification": self.classification.value,
        }


def criterion_integral_from_norms(
    times: Sequence[float], weak_norms: Sequence[float], cfg: MonitorConfig
) -> CriterionIntegral:
    powered = np.asarray(weak_norms, dtype=float) ** float(cfg.p)
    value = float(trapezoid(powered, x=np.asarray(times, dtype=float))) if len(times) > 1 else 0.0
    return CriterionIntegral(value, cfg.theta, cfg.p, cfg.q, cfg.classification)


def criterion_integral(states: Sequence[FlowState], cfg: MonitorConfig) -> CriterionIntegral:
    """Trapezoid rule in time of ||pi~(t)||^p_{q,inf} over the snapshots."""
    norms = [
        weak_norm(tilde_pi(s.pi, v_shift(s.v, cfg.torus_weight), cfg.theta), cfg.q).value for s in states
    ]
    return criterion_integral_from_norms([s.t for s in states], norms, cfg)


@dataclass(frozen=True)
class GronwallPoint:
    t: float
    actual: float
    bound: float


def gronwall_envelope(
    states: Sequence[FlowState], q: Fraction | int | str, c: float, mu: float
) -> list[GronwallPoint]:
    """Compare ||v(t)||_q with exp(c mu^{-(3+q)/(q-3)} int_0^t ||v||_q^p ds) ||v_0||_q, 2/p + 3/q = 1.

    Raises:
        QOutOfRange: If q <= 3
    """
    q = as_rational(q)
    p = gronwall_time_exponent(3, q)
    if not (c > 0 and mu > 0):
        raise ValidationError(f"Gronwall constants must be positive, got c = {c}, mu = {mu}")
    times = np.array([s.t for s in states])
    norms = np.array([lebesgue_norm(s.v.magnitude(), q) for s in states])
    rate = c * mu ** (-float(3 + q) / float(q - 3))
    accumulated = cumulative_trapezoid(norms ** float(p), x=times, initial=0.0) if len(states) > 1 else np.zeros(1)
    bounds = np.exp(rate * accumulated) * norms[0]
    return [GronwallPoint(float(t), float(a), float(b)) for t, a, b in zip(times, norms, bounds, strict=True)]


@dataclass
class Verdict:
    """Pass/fail of one inequality over all rows it applies to.

    Attributes:
        name: Inequality identifier
        passed: True if every checked row holds
        worst_margin: Smallest relative margin (bound - lhs)/max(|lhs|, |bound|)
        tolerance: Tolerance description recorded with the verdict
        checked: Number of rows checked
    """

    name: str
    passed: bool
    worst_margin: float
    tolerance: str
    checked: int


def _verdict(name: str, pairs: Sequence[tuple[float, float]], tolerance: str) -> Verdict:
    margins = [_relative_margin(lhs, bound) for lhs, bound in pairs]
    return Verdict(
        name=name,
        passed=all(_holds(lhs, bound) for lhs, bound in pairs),
        worst_margin=min(margins) if margins else 0.0,
        tolerance=tolerance,
        checked=len(pairs),
    )


def build_verdicts(
    rows: Sequence[LedgerRow], gronwall: Sequence[GronwallPoint], cfg: MonitorConfig
) -> list[Verdict]:
    interior = [r for r in rows if r.ddt_l4 is not None]
    rel = f"relative {VERDICT_RTOL:g}"
    ledger_pairs = [(r.ledger_lhs, r.rhs_pressure + r.ledger_tol) for r in interior]
    verdicts = [
        _verdict("quartic_ledger", ledger_pairs, f"c_tol * (h^2 + resolution) * scale, c_tol = {cfg.c_tol:g}"),
        _verdict("holder_step", [(r.holder_lhs, r.holder_link) for r in rows], rel),
    ]
    if cfg.solution.uses_r1:
        verdicts.append(_verdict("riesz_step", [(r.pressure_chain_norm, r.riesz_bound) for r in rows], rel))
    verdicts += [
        _verdict("holder_chain", [(r.holder_lhs, r.holder_bound) for r in rows], rel),
        _verdict("interp_sobolev", [(r.interp_lhs, r.interp_bound) for r in rows], rel),
        _verdict("absorption_direct", [(r.holder_lhs, r.absorbed_direct) for r in rows], rel),
        _verdict("absorption_expanded", [(r.holder_lhs, r.absorbed_bound) for r in rows], rel),
        _verdict("v_control_l2", [(r.v2_l2_sq, r.v2_l2_sq_bound) for r in rows], rel),
        _verdict("v_control_gradient", [(r.grad_v2_l2_sq, r.grad_v2_l2_sq_bound) for r in rows], rel),
        _verdict("gronwall_envelope", [(g.actual, g.bound) for g in gronwall], rel),
    ]
    return verdicts


@dataclass
class MonitorReport:
    """Everything a monitor run produces.

    Attributes:
        config: Monitor configuration
        grid: Trajectory grid
        viscosity: Trajectory viscosity
        config_hash: Hash of the configuration that produced the trajectory
        rows: One ledger row per snapshot
        criterion: Criterion integral with its classification
        gronwall: Gronwall envelope per snapshot
        verdicts: Per-inequality verdicts
        gradient_gaps: Per-snapshot gap between spectral and finite-difference ||grad V^2||_2;
            reported as a diagnostic, never a verdict
    """

    config: MonitorConfig
    grid: Grid3
    viscosity: float
    config_hash: str
    rows: list[LedgerRow]
    criterion: CriterionIntegral
    gronwall: list[GronwallPoint]
    verdicts: list[Verdict]
    gradient_gaps: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def failed_verdicts(self) -> list[Verdict]:
        return [v for v in self.verdicts if not v.passed]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "config": self.config.to_json_dict(),
            "constants": self.config.constants.to_json_dict(),
            "exponents": self.config.solution.to_json_dict(),
            "grid": self.grid.to_json_dict(),
            "viscosity": self.viscosity,
            "tolerances": {"verdict_relative": VERDICT_RTOL, "ledger_c_tol": self.config.c_tol},
            "criterion_integral": self.criterion.to_json_dict(),
            "rows": {name: [getattr(r, name) for r in self.rows] for name in LEDGER_COLUMNS},
            "gronwall": [asdict(g) for g in self.gronwall],
            "verdicts": [asdict(v) for v in self.verdicts],
            "diagnostics": {"gradient_gap": [g if math.isfinite(g) else None for g in self.gradient_gaps]},
            "passed": self.passed,
        }


def run_monitor(
    states: Sequence[FlowState], cfg: MonitorConfig, viscosity: float = 1.0, config_hash: str = ""
) -> MonitorReport:
    """Evaluate the ledger, the chain, the criterion integral and the Gronwall envelope."""
    if len(states) < 3:
        raise InsufficientSnapshots(f"The monitor needs at least 3 snapshots, got {len(states)}")
    grid = states[0].grid
    cfg.check_absorption(grid.domain)
    h = _snapshot_spacing(states)
    logger.info(
        f"-> Monitoring {len(states)} snapshots, theta = {cfg.theta}, q = {cfg.q}, p = {cfg.p} "
        f"({cfg.classification.value})"
    )
    terms = collect_terms(states, cfg)
    rows = build_rows(terms, cfg, h, viscosity)
    criterion = criterion_integral_from_norms([t.t for t in terms], [t.chain.tilde_pi_weak for t in terms], cfg)
    gronwall = gronwall_envelope(states, cfg.gronwall_q, cfg.constants.c_gronwall, cfg.constants.mu_gronwall)
    verdicts = build_verdicts(rows, gronwall, cfg)
    gradient_gaps = [gradient_agreement(s.v, cfg.torus_weight) for s in states]
    logger.debug(f"   spectral vs finite-difference gradient gap: worst {max(gradient_gaps):.3e}")
    for verdict in verdicts:
        marker = "[OK]" if verdict.passed else "[FAIL]"
        logger.info(f"  {marker} {verdict.name}: worst margin {verdict.worst_margin:.3e} over {verdict.checked} rows")
    return MonitorReport(cfg, grid, viscosity, config_hash, rows, criterion, gronwall, verdicts, gradient_gaps)


def _csv_cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_report(report: MonitorReport, output_dir: str | Path, meta: dict[str, Any] | None = None) -> Path:
    """Write report.json, ledger.csv and, when given, report.meta.json into output_dir."""
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    report_path = directory / REPORT_FILENAME
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report.to_json_dict(), f, indent=2)

    with open(directory / LEDGER_CSV_FILENAME, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for row in report.rows:
            writer.writerow([_csv_cell(getattr(row, name)) for name in LEDGER_COLUMNS])

    if meta is not None:
        with open(directory / REPORT_META_FILENAME, "w", encoding="utf-8") as f:
            json.dump({"config_hash": report.config_hash, **meta}, f, indent=2)
    logger.info(f"-> Monitor report written to {report_path}")
    return report_path

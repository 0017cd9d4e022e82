# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Tests for monitor.py ledger, estimate chain, verdicts and reports."""

import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from pv_regularity_lab.errors import (
    InsufficientSnapshots,
    NonPositiveShift,
    QOutOfRange,
    ThetaOutOfRange,
    ValidationError,
)
from pv_regularity_lab.exponents import Classification
from pv_regularity_lab.fields import (
    Domain,
    Grid3,
    ScalarField,
    VectorField,
    gaussian_profile,
    pressure_from_velocity,
)
from pv_regularity_lab.lab_config import LEDGER_CSV_FILENAME, REPORT_FILENAME, REPORT_META_FILENAME
from pv_regularity_lab.lorentz import weak_norm
from pv_regularity_lab.monitor import (
    LEDGER_COLUMNS,
    MonitorConfig,
    collect_terms,
    criterion_integral,
    criterion_integral_from_norms,
    gradient_agreement,
    gronwall_envelope,
    holder_chain,
    quartic_ledger,
    run_monitor,
    tilde_pi,
    v_control,
    v_shift,
    write_report,
    young_constant,
)
from pv_regularity_lab.registry import ConstantsRegistry
from pv_regularity_lab.solver import (
    FlowState,
    InitialCondition,
    InitialConditionKind,
    SolverConfig,
    random_solenoidal,
    simulate,
)


def _trajectory(
    kind: InitialConditionKind, t_end: float, snapshot_every: int, n: int = 16, dt: float = 0.01
) -> list[FlowState]:
    config = SolverConfig(
        grid=Grid3(n, 2 * math.pi),
        t_end=t_end,
        initial_condition=InitialCondition(kind),
        dt=dt,
        snapshot_every=snapshot_every,
    )
    return simulate(config)


@pytest.fixture(scope="module")
def shear_states():
    """Five equally spaced states of the decaying shear, h = 0.01."""
    return _trajectory(InitialConditionKind.SHEAR, 0.04, 1)


@pytest.fixture(scope="module")
def tg_states():
    """Three Taylor-Green states at t = 0, 0.05, 0.1."""
    return _trajectory(InitialConditionKind.TAYLOR_GREEN, 0.1, 5)


class TestMonitorConfig:
    """Test suite for MonitorConfig validation and derived values."""

    def test_derived_p(self):
        """Test p = 8 on the line through theta = 1, q = 4."""
        cfg = MonitorConfig(theta=1, q=4)

        assert cfg.p == 8
        assert cfg.classification is Classification.STRONG
        assert cfg.to_json_dict()["p_derived"] is True

    def test_explicit_p_below_line(self):
        """Test an explicit p with 2/p + 3/q < 2 - theta is classified as mild."""
        cfg = MonitorConfig(theta=1, q=4, p=16)

        assert cfg.classification is Classification.MILD
        assert cfg.to_json_dict()["p_derived"] is False

    def test_strings_are_exact(self):
        """Test rational strings become Fractions."""
        cfg = MonitorConfig(theta="1/2", q="4")
        assert cfg.theta == Fraction(1, 2)
        assert cfg.p == Fraction(8, 3)

    @pytest.mark.parametrize("theta", ["3/2", "1.01", "-1/4"])
    def test_theta_out_of_range(self, theta):
        """Test theta outside [0, 1] is rejected."""
        with pytest.raises(ThetaOutOfRange):
            MonitorConfig(theta=theta, q=4)

    def test_q_at_threshold(self):
        """Test q = 3/(2 - theta) is rejected."""
        with pytest.raises(QOutOfRange):
            MonitorConfig(theta="1/2", q=2)

    @pytest.mark.parametrize("kwargs", [{"epsilon": 0}, {"c_tol": 0.0}, {"p": 0}])
    def test_non_positive_parameters(self, kwargs):
        """Test non-positive epsilon, c_tol or p raise ValidationError."""
        with pytest.raises(ValidationError):
            MonitorConfig(theta=1, q=4, **kwargs)

    def test_gronwall_q_above_three(self):
        """Test gronwall_q <= 3 is rejected."""
        with pytest.raises(QOutOfRange):
            MonitorConfig(theta=1, q=4, gronwall_q=3)

    @pytest.mark.parametrize(("epsilon", "domain"), [("1/16", Domain.TORUS), ("1/32", Domain.WINDOWED)])
    def test_absorption_limit(self, epsilon, domain):
        """Test epsilon times the gradient-control constant must stay below 1/2."""
        cfg = MonitorConfig(theta=1, q=4, epsilon=epsilon)
        with pytest.raises(ValidationError, match="too large"):
            cfg.check_absorption(domain)

    def test_default_epsilon_is_admissible(self):
        """Test the default epsilon passes on both domains."""
        cfg = MonitorConfig(theta=1, q=4)
        cfg.check_absorption(Domain.TORUS)
        cfg.check_absorption(Domain.WINDOWED)


class TestShiftAndTildePi:
    """Test suite for v_shift and tilde_pi."""

    def test_torus_shift(self, tg_velocity):
        """Test V = 1 + |v| on the torus."""
        shift = v_shift(tg_velocity)
        np.testing.assert_allclose(shift.values, 1.0 + tg_velocity.magnitude().values)

    def test_gaussian_shift(self, windowed_grid):
        """Test V = exp(-|x - x_c|^2) + |v| on a windowed grid."""
        shift = v_shift(VectorField.zeros(windowed_grid))
        np.testing.assert_allclose(shift.values, gaussian_profile(windowed_grid))

    def test_torus_weight_switch(self, torus_grid):
        """Test torus_weight=False uses the Gaussian on the torus too."""
        shift = v_shift(VectorField.zeros(torus_grid), torus_weight=False)
        assert shift.values.max() == pytest.approx(1.0)
        assert shift.values.min() < 1e-10

    def test_tilde_pi(self, small_grid):
        """Test pi / V^theta and the theta = 0 identity."""
        pi = ScalarField.constant(small_grid, 8.0)
        shift = ScalarField.constant(small_grid, 4.0)

        assert tilde_pi(pi, shift, 0) is pi
        np.testing.assert_allclose(tilde_pi(pi, shift, Fraction(1, 2)).values, 4.0)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    @pytest.mark.parametrize("theta", [Fraction(1, 2), Fraction(1)])
    def test_gaussian_weight_dominates_unit_weight(self, torus_grid, seed, theta):
        """Test ||pi~||_{q,inf} with the Gaussian weight is at least the norm with weight 1."""
        v = random_solenoidal(torus_grid, seed=seed)
        pi = pressure_from_velocity(v)
        q = Fraction(4)

        gaussian = weak_norm(tilde_pi(pi, v_shift(v, torus_weight=False), theta), q).value
        unit = weak_norm(tilde_pi(pi, v_shift(v, torus_weight=True), theta), q).value

        assert gaussian >= unit > 0

    def test_tilde_pi_needs_positive_shift(self, small_grid):
        """Test NonPositiveShift for V = 0 somewhere."""
        pi = ScalarField.constant(small_grid, 1.0)
        with pytest.raises(NonPositiveShift):
            tilde_pi(pi, ScalarField.zeros(small_grid), 1)


class TestEstimateChain:
    """Test suite for holder_chain, young_constant and v_control."""

    def test_two_factor_form_without_pressure_leg(self, tg_states):
        """Test beta = 2 skips the Riesz step and both bounds coincide."""
        state = tg_states[0]
        cfg = MonitorConfig(theta=1, q=4, constants=ConstantsRegistry(C_riesz_corpus=7.0))
        chain = holder_chain(state.v, state.pi, cfg)

        assert chain.pressure_norm == 0.0
        assert chain.riesz_bound == 0.0
        assert chain.bound == pytest.approx(chain.holder_bound, rel=1e-14)
        assert tuple(chain) == (chain.lhs, chain.bound)

    def test_three_factor_form(self, tg_states):
        """Test beta < 2 measures the pressure leg."""
        state = tg_states[0]
        chain = holder_chain(state.v, state.pi, MonitorConfig(theta="1/2", q=4))

        assert chain.lhs > 0
        assert chain.pressure_norm > 0
        assert chain.riesz_bound > 0

    def test_young_constant_quadratic_case(self):
        """Test a = 1 gives K^2/(4 eps)."""
        assert young_constant(Fraction(1, 4), 1, 1.0) == pytest.approx(1.0)
        assert young_constant(0.5, 1, 2.0) == pytest.approx(2.0)

    @pytest.mark.parametrize("a", [0.25, 0.75, 1.5])
    def test_young_inequality_holds(self, a):
        """Test K A Y^a <= C A^{2/(2-a)} + eps Y^2 on a sample grid."""
        k, eps = 3.0, 0.1
        c = young_constant(eps, a, k)
        for base in np.geomspace(1e-3, 1e3, 13):
            for y in np.geomspace(1e-3, 1e3, 13):
                assert k * base * y**a <= (c * base ** (2 / (2 - a)) + eps * y**2) * (1 + 1e-12)

    @pytest.mark.parametrize("a", [0, 2])
    def test_young_rejects_endpoints(self, a):
        """Test a outside (0, 2) raises."""
        with pytest.raises(ValidationError):
            young_constant(0.1, a, 1.0)

    @pytest.mark.parametrize("torus_weight", [True, False])
    def test_v_control_l2(self, random_velocity, torus_weight):
        """Test ||V^2||_2^2 <= 3(|w^2|^2 + 4||v||^2 + || |v|^2 ||^2)."""
        control = v_control(random_velocity, torus_weight)
        assert 0 < control.l2_direct <= control.l2_bound

    def test_v_control_windowed_gradient(self, windowed_grid):
        """Test the gradient bound for the zero flow reduces to the weight term."""
        control = v_control(VectorField.zeros(windowed_grid))

        assert control.grad_direct == pytest.approx(control.grad_bound / 4, rel=1e-12)

    @pytest.mark.slow
    def test_gradient_agreement_smooth_flow(self):
        """Test spectral and finite-difference ||grad V^2||_2 agree within 1e-3."""
        grid = Grid3(128, 2 * math.pi)
        data = np.zeros((3, *grid.shape))
        data[0] = 2.0 + 0.1 * np.sin(grid.coordinates[1])

        assert gradient_agreement(VectorField(grid, data)) < 1e-3


class TestQuarticLedger:
    """Test suite for quartic_ledger on the exactly decaying shear."""

    def test_shear_values(self, shear_states):
        """Test int |v|^4 = (3/8) L^3 e^{-4t} and zero pressure terms."""
        rows = quartic_ledger(shear_states, MonitorConfig(theta=1, q=4))
        volume = (2 * math.pi) ** 3

        for row in rows:
            assert row.l4_fourth == pytest.approx(0.375 * volume * math.exp(-4 * row.t), rel=1e-10)
            assert row.rhs_pressure < 1e-10
            assert abs(row.pressure_work) < 1e-10

    def test_shear_identity_residual(self, shear_states):
        """Test the energy identity closes up to the centred-difference error."""
        rows = quartic_ledger(shear_states, MonitorConfig(theta=1, q=4))
        interior = [r for r in rows if r.ddt_l4 is not None]

        assert len(interior) == 3
        for row in interior:
            assert row.ddt_l4 == pytest.approx(-0.375 * (2 * math.pi) ** 3 * math.exp(-4 * row.t), rel=1e-3)
            assert abs(row.identity_residual) < 1e-3 * abs(row.ddt_l4)
            assert row.ledger_lhs <= row.rhs_pressure + row.ledger_tol

    def test_end_rows_have_no_difference(self, shear_states):
        """Test the first and last rows carry no time derivative."""
        rows = quartic_ledger(shear_states, MonitorConfig(theta=1, q=4))

        assert rows[0].ddt_l4 is None and rows[0].ledger_lhs is None
        assert rows[-1].identity_residual is None

    def test_too_few_snapshots(self, shear_states):
        """Test InsufficientSnapshots below three states."""
        with pytest.raises(InsufficientSnapshots):
            quartic_ledger(shear_states[:2], MonitorConfig(theta=1, q=4))

    def test_irregular_spacing(self, shear_states):
        """Test InsufficientSnapshots for non-uniform times."""
        states = [shear_states[0], shear_states[1], shear_states[3]]
        with pytest.raises(InsufficientSnapshots, match="uniformly"):
            quartic_ledger(states, MonitorConfig(theta=1, q=4))

    @pytest.mark.slow
    def test_tolerance_shrinks_with_time_step(self):
        """Test the 32^3 Taylor-Green ledger passes at two step sizes and halving dt at least halves its tolerance."""
        cfg = MonitorConfig(theta=1, q=4)
        worst = []
        for dt in (0.01, 0.005):
            report = run_monitor(_trajectory(InitialConditionKind.TAYLOR_GREEN, 0.5, 5, n=32, dt=dt), cfg)
            interior = [r for r in report.rows if r.ledger_tol is not None]
            ledger = next(v for v in report.verdicts if v.name == "quartic_ledger")

            assert ledger.passed
            assert ledger.checked == len(interior) == round(0.5 / (5 * dt)) - 1
            worst.append(max(r.ledger_tol for r in interior))

        assert worst[0] / worst[1] >= 2

    def test_thread_count_does_not_change_results(self, monkeypatch, tg_states):
        """Test serial and concurrent evaluation agree."""
        cfg = MonitorConfig(theta="1/2", q=4)
        monkeypatch.setenv("PVLAB_THREADS", "1")
        serial = collect_terms(tg_states, cfg)
        monkeypatch.setenv("PVLAB_THREADS", "4")
        concurrent = collect_terms(tg_states, cfg)

        assert [t.t for t in serial] == [t.t for t in concurrent]
        assert [t.l4_fourth for t in serial] == [t.l4_fourth for t in concurrent]


class TestCriterionAndGronwall:
    """Test suite for the criterion integral and the Gronwall envelope."""

    def test_integral_of_constant_norms(self):
        """Test the trapezoid rule of a constant."""
        cfg = MonitorConfig(theta=1, q=4)
        result = criterion_integral_from_norms([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], cfg)

        assert result.value == pytest.approx(2.0)
        assert result.to_json_dict()["p"] == "8/1"
        assert result.to_json_dict()["classification"] == Classification.STRONG.value

    def test_integral_vanishes_for_shear(self, shear_states):
        """Test zero pressure gives a zero integral."""
        assert criterion_integral(shear_states, MonitorConfig(theta=0, q=2)).value < 1e-20

    def test_envelope_starts_at_initial_norm(self, tg_states):
        """Test the bound equals the measured norm at t = 0 and dominates afterwards."""
        points = gronwall_envelope(tg_states, 4, 1.0, 1.0)

        assert points[0].bound == pytest.approx(points[0].actual)
        assert all(p.actual <= p.bound for p in points)

    def test_envelope_needs_q_above_three(self, tg_states):
        """Test QOutOfRange for q = 3."""
        with pytest.raises(QOutOfRange):
            gronwall_envelope(tg_states, 3, 1.0, 1.0)

    def test_envelope_needs_positive_constants(self, tg_states):
        """Test ValidationError for c = 0."""
        with pytest.raises(ValidationError):
            gronwall_envelope(tg_states, 4, 0.0, 1.0)


class TestRunMonitor:
    """Test suite for run_monitor and write_report."""

    def test_shear_verdicts(self, shear_states):
        """Test the ledger, L^2 control and Gronwall verdicts pass on the shear."""
        report = run_monitor(shear_states, MonitorConfig(theta=1, q=4), config_hash="0" * 64)
        by_name = {v.name: v for v in report.verdicts}

        for name in ("quartic_ledger", "v_control_l2", "gronwall_envelope"):
            assert by_name[name].passed, name
        assert "riesz_step" not in by_name
        assert by_name["quartic_ledger"].checked == 3

    def test_riesz_step_is_reported_when_used(self, tg_states):
        """Test the Riesz verdict appears for beta < 2."""
        report = run_monitor(tg_states, MonitorConfig(theta="1/2", q=4))
        assert "riesz_step" in [v.name for v in report.verdicts]

    def test_failed_verdicts(self, tg_states):
        """Test a tiny Hoelder constant makes the Hoelder verdicts fail."""
        cfg = MonitorConfig(theta=1, q=4, constants=ConstantsRegistry(C_holder_corpus=1e-12))
        report = run_monitor(tg_states, cfg)

        assert not report.passed
        assert "holder_step" in [v.name for v in report.failed_verdicts]
        assert report.to_json_dict()["passed"] is False

    def test_gradient_gaps_are_reported(self, tg_states):
        """Test one spectral vs finite-difference gradient gap per snapshot, outside the verdicts."""
        report = run_monitor(tg_states, MonitorConfig(theta=1, q=4))
        document = report.to_json_dict()

        assert report.gradient_gaps == [gradient_agreement(s.v) for s in tg_states]
        assert all(math.isfinite(g) and g >= 0 for g in report.gradient_gaps)
        assert document["diagnostics"]["gradient_gap"] == report.gradient_gaps
        assert "gradient_agreement" not in [v.name for v in report.verdicts]

    def test_needs_three_snapshots(self, tg_states):
        """Test InsufficientSnapshots below three states."""
        with pytest.raises(InsufficientSnapshots):
            run_monitor(tg_states[:2], MonitorConfig(theta=1, q=4))

    def test_write_report(self, tmp_path, tg_states):
        """Test report.json, ledger.csv and the meta file."""
        report = run_monitor(tg_states, MonitorConfig(theta=1, q=4), config_hash="ab" * 32)
        path = write_report(report, tmp_path / "out", meta={"duration": 1.5})

        document = json.loads(path.read_text(encoding="utf-8"))
        assert path.name == REPORT_FILENAME
        assert document["config_hash"] == "ab" * 32
        assert document["exponents"]["p"] == "8/1"
        assert document["rows"]["ddt_l4"][0] is None
        assert len(document["rows"]["t"]) == 3

        with open(tmp_path / "out" / LEDGER_CSV_FILENAME, encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == LEDGER_COLUMNS
        assert len(rows) == 4
        assert rows[1][LEDGER_COLUMNS.index("ddt_l4")] == ""

        meta = json.loads((tmp_path / "out" / REPORT_META_FILENAME).read_text(encoding="utf-8"))
        assert meta == {"config_hash": "ab" * 32, "duration": 1.5}

    def test_report_is_deterministic(self, tmp_path, tg_states):
        """Test two runs on the same trajectory write identical reports."""
        cfg = MonitorConfig(theta="1/2", q=4)
        first = write_report(run_monitor(tg_states, cfg), tmp_path / "a", meta={"duration": 1.0})
        second = write_report(run_monitor(tg_states, cfg), tmp_path / "b", meta={"duration": 2.0})

        assert first.read_bytes() == second.read_bytes()
        meta_a = (tmp_path / "a" / REPORT_META_FILENAME).read_bytes()
        assert meta_a != (tmp_path / "b" / REPORT_META_FILENAME).read_bytes()

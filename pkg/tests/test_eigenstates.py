import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qci_sim import eigenstates as E
from qci_sim.kinematics import offsets, reflect
from qci_sim.scenario import Body, Scenario


def two(m=1.0, v=2 * math.pi, M2=100.0, M3=100.0, V2=0.0, V3=0.0, x0=5.0):
    return Scenario(Body(m, v0=v, label="particle"), (Body(M2, v0=V2), Body(M3, v0=V3, x0=x0)))


def half_phase(m, v, M2, V2, M3, V3, x0, x1, x2, x3, hb=1.0):
    """Half the phase gap between the two scattered eigenstates, from textbook kinematics."""
    r2, r3 = reflect(m, v, M2, V2, hb), reflect(m, v, M3, V3, hb)
    o = offsets(m, M3, x0)
    phi_a = r2.k_r * x1 + r2.K_r * x2 + M3 * V3 / hb * (x3 - x0)
    phi_b = r3.k_r * (x1 - o.x10) + r3.K_r * (x3 - o.x30) + M2 * V2 / hb * x2
    return -(phi_a - phi_b) / 2


class TestExact:
    def test_reduces_to_heavy(self):
        sc = two(M2=1e9, M3=1e9)
        x2, x3 = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
        np.testing.assert_allclose(E.joint_pdf_exact(sc, 0.3, x2, x3),
                                   np.cos(2 * np.pi * (x3 - x2)) ** 2, atol=1e-6)

    def test_equal_positions_max(self):
        assert E.joint_pdf_heavy(two(M2=1e4, M3=1e4), 0.7, 0.7) == pytest.approx(1.0)

    def test_numeric_example(self):
        sc = two(m=1.0, v=1.0, M2=100.0, M3=100.0)
        ab = E.exact_phase(sc, 0.0, 0.0, math.pi / 2)
        # A = -dV13 dx13 m^2 M3 + m M2 M3 dV13 x3 with x1 = x2 = 0
        a = -1.0 * (-math.pi / 2) * 100 + 100 * 100 * (math.pi / 2)
        assert ab == pytest.approx(a / (101 * 101), rel=1e-15)

    @given(st.floats(0.5, 2), st.floats(1, 10), st.floats(2, 1e3), st.floats(-1, 1),
           st.floats(2, 1e3), st.floats(-1, 1), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
    def test_matches_independent_phase(self, m, v, M2, V2, M3, V3, x1, x2, x3):
        sc = two(m, v, M2, M3, V2, V3)
        # the printed form drops constants (x0 terms), so compare coordinate gradients
        f = lambda a, b, c: E.exact_phase(sc, a, b, c)
        g = lambda a, b, c: half_phase(m, v, M2, V2, M3, V3, 5.0, a, b, c)
        for d in np.eye(3):
            lhs = f(x1 + d[0], x2 + d[1], x3 + d[2]) - f(x1, x2, x3)
            rhs = g(x1 + d[0], x2 + d[1], x3 + d[2]) - g(x1, x2, x3)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    def test_gradient_finite_difference(self):
        sc = two(m=1.3, v=2.0, M2=7.0, M3=11.0, V2=0.2, V3=-0.4)
        m, v, M2, V2, M3, V3 = 1.3, 2.0, 7.0, 0.2, 11.0, -0.4
        grad = np.array([
            ((v - V2) * m * m * M2 - (v - V3) * m * m * M3 + m * M2 * M3 * (V3 - V2)),
            (-(v - V2) * m * m * M2 + m * M2 * M3 * (-v + V2)),
            ((v - V3) * m * m * M3 + m * M2 * M3 * (v - V3)),
        ]) / ((m + M2) * (m + M3))
        p = np.array([0.3, -0.2, 0.9])
        h = 1e-6
        fd = [(E.exact_phase(sc, *(p + h * e)) - E.exact_phase(sc, *(p - h * e))) / (2 * h)
              for e in np.eye(3)]
        np.testing.assert_allclose(fd, grad, rtol=1e-8)

    def test_requires_eigenstates(self):
        sc = Scenario(Body(1.0, v0=1.0, dv=0.1, label="particle"), (Body(10.0), Body(10.0, x0=1)))
        with pytest.raises(ValueError, match="eigenstates"):
            E.joint_pdf_exact(sc, 0, 0, 0)

    def test_arity(self):
        sc = Scenario(Body(1.0, v0=1.0, label="particle"), (Body(10.0),))
        with pytest.raises(ValueError, match="exactly 2"):
            E.joint_pdf_exact(sc, 0, 0, 0)

    def test_residual_x1_dependence_shrinks(self):
        x1 = np.linspace(0, 2, 21)
        spread = []
        for ratio in (1e2, 1e4, 1e6):
            sc = two(M2=ratio, M3=1.5 * ratio)  # equal masses cancel x1 exactly
            spread.append(np.ptp(E.joint_pdf_exact(sc, x1, 0.0, 0.1)))
        assert spread[0] > spread[1] > spread[2]


class TestHeavy:
    def test_quarter_wavelength_zero(self):
        assert E.joint_pdf_heavy(two(M2=1e4, M3=1e4), 0.0, 0.25) == pytest.approx(0.0, abs=1e-30)

    def test_warns_below_cutoff(self):
        with pytest.warns(E.HeavyLimitWarning):
            E.joint_pdf_heavy(two(M2=100.0, M3=100.0), 0.0, 0.1)

    def test_rejects_light_scatterer(self):
        with pytest.raises(ValueError):
            E.joint_pdf_heavy(two(M2=0.5, M3=100.0), 0.0, 0.1)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_period_half_wavelength(self, x2, x3):
        sc = two(M2=1e4, M3=1e4)
        assert E.joint_pdf_heavy(sc, x2, x3 + 0.5) == pytest.approx(E.joint_pdf_heavy(sc, x2, x3), abs=1e-9)

    def test_offset_form(self):
        sc = two(M2=1e4, M3=1e4, x0=5.3)
        assert E.classical_scatterer_pdf(sc) == pytest.approx(math.cos(2 * math.pi * 5.3) ** 2)
        assert E.joint_pdf_offset(sc, 0.1, 0.6) == pytest.approx(E.classical_scatterer_pdf(sc))

    @pytest.mark.parametrize("n", [10, 11, 12])
    def test_offset_maxima(self, n):
        sc = two(M2=1e4, M3=1e4, x0=5.0)
        d3 = n * 0.5 - 5.0 + 0.1
        assert E.joint_pdf_offset(sc, 0.1, d3) == pytest.approx(1.0)


class TestFourBody:
    pos = (0.0, 2.3, 5.1)

    def test_all_constructive(self):
        assert E.joint_pdf_fourbody((0.0, 1.0, 2.0), (0.0, 0.0, 0.0), 1.0, 2 * math.pi) == pytest.approx(9.0)

    def test_phase_constraint(self):
        pdf = E.FourBodyPdf(self.pos, 1.0, 2 * math.pi)
        d = {2: 0.1, 3: -0.3, 4: 0.25}
        assert pdf.phase(2, 4, d) == pytest.approx(pdf.phase(2, 3, d) + pdf.phase(3, 4, d))
        assert pdf.phase(2, 3, d) == pytest.approx(-pdf.phase(3, 2, d))

    def test_pi_phases(self):
        # a23 = a34 = pi forces a24 = 2 pi
        val = E.joint_pdf_fourbody((0.0, 0.5, 1.0), (0.0, 0.0, 0.0), 1.0, 2 * math.pi)
        assert val == pytest.approx(3 + 2 * (-1 - 1 + 1))

    def test_non_negative(self):
        rng = np.random.default_rng(3)
        d = rng.uniform(-1, 1, (3, 5000))
        assert np.all(E.joint_pdf_fourbody(self.pos, d, 1.0, 2 * math.pi) >= -1e-12)

    def test_collapse_four_onto_three(self):
        pdf = E.FourBodyPdf((0.0, 2.3, 2.3), 1.0, 2 * math.pi)
        d2, d3 = np.meshgrid(np.linspace(-1, 1, 41), np.linspace(-1, 1, 41))
        four = pdf(d2, d3, d3)
        a23 = pdf.phase(2, 3, {2: d2, 3: d3})
        # 5 + 4 cos a23 = 1 + 2 (2 + 2 cos a23): affine in the two-scatterer form
        np.testing.assert_allclose(four, 1 + 2 * (2 + 2 * np.cos(a23)), atol=1e-12)

    @pytest.mark.parametrize("open_set, pairs", [((4,), ((2, 3),)), ((3, 4), ()), ((), E.ALL_PAIRS)])
    def test_trace_drops_pairs(self, open_set, pairs):
        pdf = E.trace_fourbody(E.FourBodyPdf(self.pos, 1.0, 2 * math.pi), open_set)
        assert pdf.pairs == pairs

    def test_trace_all_flat(self):
        pdf = E.trace_fourbody(E.FourBodyPdf(self.pos, 1.0, 2 * math.pi), (2, 3, 4))
        assert pdf(0.1, 0.2, 0.3) == 3.0

    def test_trace_span_check(self):
        pdf = E.FourBodyPdf(self.pos, 1.0, 2 * math.pi)
        with pytest.raises(ValueError, match="period"):
            E.trace_fourbody(pdf, (4,), spans={4: 0.5})

    def test_trace_unknown_index(self):
        with pytest.raises(ValueError):
            E.trace_fourbody(E.FourBodyPdf(self.pos, 1.0, 1.0), (5,))

    @pytest.mark.parametrize("open_set", [s for r in range(4) for s in itertools.combinations((2, 3, 4), r)])
    def test_trace_matches_numerical_average(self, open_set):
        pdf = E.FourBodyPdf(self.pos, 1.0, 2 * math.pi)
        n = 48
        grid = np.arange(n) * pdf.period / n
        fixed = {2: 0.07, 3: -0.11, 4: 0.2}
        axes = [grid if j in open_set else np.array([fixed[j]]) for j in (2, 3, 4)]
        mesh = np.meshgrid(*axes, indexing="ij")
        numeric = pdf(*mesh).mean()
        analytic = E.trace_fourbody(pdf, open_set)(fixed[2], fixed[3], fixed[4])
        assert numeric == pytest.approx(analytic, abs=1e-10)

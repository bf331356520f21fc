"""Weight integrals, cube-supremum constants, and the region checkers."""

import math

import numpy as np
import pytest
import scipy.integrate as si

import sparseheat.grid as g
import sparseheat.weights as wt
from sparseheat.errors import NotLocallyIntegrableError, PreconditionError

# exact value of the 2-D singular integral int_{[0,1]^2} |x|^-1 dx, computed
# by the polar-coordinate oracle 2 int_0^{pi/4} sec(t) dt = 2 ln(1 + sqrt 2)
TWO_D_INV_NORM = 2.0 * math.log(1.0 + math.sqrt(2.0))


@pytest.fixture(scope="module")
def scan1d():
    box = g.Box(1, 2.0, 256)
    return g.CubeScan(shifts=g.CubeScan.all_shifts(1), level_min=-1,
                      level_max=5, restrict_to=box)


class TestWeightIntegral:
    def test_lebesgue_measure(self):
        Q = g.DyadicCube(shift=(0, 0), level=0, index=(0, 0))
        assert wt.weight_integral(wt.one(2), Q) == pytest.approx(1.0, abs=0)

    def test_abs_closed_form(self):
        Q = g.DyadicCube(shift=(0,), level=0, index=(0,))
        assert wt.weight_integral(wt.PowerHom(1, 1.0), Q) == pytest.approx(0.5)

    def test_2d_inverse_norm_frozen(self):
        Q = g.DyadicCube(shift=(0, 0), level=0, index=(0, 0))
        got = wt.weight_integral(wt.PowerHom(2, -1.0), Q, tol=1e-11)
        assert got == pytest.approx(TWO_D_INV_NORM, rel=1e-10)

    def test_not_integrable_rejected_at_construction(self):
        with pytest.raises(NotLocallyIntegrableError):
            wt.PowerHom(1, -1.0)
        with pytest.raises(NotLocallyIntegrableError):
            wt.ProductWeight(2, -2.0, 1.0)

    def test_composed_singularity_raises_lazily(self):
        w = wt.weight_power(wt.PowerHom(1, -0.5), 2.5)  # |x|^-1.25, kept lazy
        assert isinstance(w, wt.PowerOf)
        Q = g.DyadicCube(shift=(0,), level=0, index=(0,))
        with pytest.raises(NotLocallyIntegrableError):
            wt.weight_integral(w, Q)

    def test_bracket_against_quad(self):
        w = wt.Bracket(1, -1.7)
        Q = g.DyadicCube(shift=(0,), level=-1, index=(0,))  # [0, 2)
        ref, _ = si.quad(lambda x: (1 + x * x) ** (-0.85), 0, 2, epsabs=1e-13)
        assert wt.weight_integral(w, Q, tol=1e-11) == pytest.approx(ref, rel=1e-9)

    def test_product_weight_against_quad(self):
        w = wt.ProductWeight(1, -0.4, 1.3)
        Q = g.DyadicCube(shift=(0,), level=1, index=(-1,))  # [-0.5, 0)
        ref, _ = si.quad(lambda x: abs(x) ** -0.4 * (1 + x * x) ** 0.65,
                         -0.5, 0, epsabs=1e-13)
        assert wt.weight_integral(w, Q, tol=1e-11) == pytest.approx(ref, rel=1e-9)


class TestApConstant:
    def test_unit_weight(self, scan1d):
        rep = wt.ap_constant(wt.one(1), 2.0, scan1d)
        assert rep.value == 1.0
        assert not rep.divergent

    def test_brute_force_oracle(self, scan1d):
        # independent maximization over the same cubes with quad integrals;
        # |x|^(1/2) is in A_2 in 1-D (-1 < 1/2 < 1)
        w = wt.PowerHom(1, 0.5)
        best = 0.0
        for Q in g.enumerate_cubes(scan1d):
            a, b = Q.low()[0], Q.high()[0]
            iw, _ = si.quad(lambda x: abs(x) ** 0.5, a, b, points=[0.0]
                            if a < 0 < b else None, epsabs=1e-14)
            idw, _ = si.quad(lambda x: abs(x) ** -0.5, a, b, points=[0.0]
                             if a < 0 < b else None, epsabs=1e-14)
            best = max(best, (iw / Q.measure) * (idw / Q.measure))
        rep = wt.ap_constant(w, 2.0, scan1d)
        assert rep.value == pytest.approx(best, rel=1e-8)
        assert not rep.divergent

    def test_beyond_boundary_divergent(self, scan1d):
        # |x|^2 with p=2 in 1-D: alpha = 2 >= n(p-1) = 1
        rep = wt.ap_constant(wt.PowerHom(1, 2.0), 2.0, scan1d)
        assert rep.divergent

    def test_above_one(self, scan1d):
        rep = wt.ap_constant(wt.Bracket(1, 0.8), 2.0, scan1d)
        assert not rep.divergent and rep.value >= 1.0

    def test_duality_identity(self, scan1d):
        for w, p in [(wt.PowerHom(1, 0.5), 2.5), (wt.Bracket(1, 1.1), 3.0)]:
            pc = p / (p - 1.0)
            lhs = wt.ap_constant(wt.weight_power(w, 1.0 - pc), pc, scan1d)
            rhs = wt.ap_constant(w, p, scan1d)
            assert lhs.value == pytest.approx(rhs.value ** (pc - 1.0), rel=1e-10)

    def test_dilation_invariance(self, scan1d):
        w = wt.PowerHom(1, 0.5)
        base = wt.ap_constant(w, 2.0, scan1d)
        doubled = g.CubeScan(shifts=scan1d.shifts,
                             level_min=scan1d.level_min - 1,
                             level_max=scan1d.level_max - 1,
                             restrict_to=scan1d.restrict_to.scaled(2.0))
        other = wt.ap_constant(w, 2.0, doubled)
        assert other.value == pytest.approx(base.value, rel=1e-10)

    def test_p_one_constant_weight(self, scan1d):
        rep = wt.ap_constant(wt.one(1), 1.0, scan1d)
        assert rep.value == pytest.approx(1.0)

    def test_p_inf_exp_log_form(self, scan1d):
        rep = wt.ap_constant(wt.Bracket(1, 1.0), math.inf, scan1d)
        assert not rep.divergent and 1.0 <= rep.value < 3.0


class TestFujiiWilson:
    def test_unit_weight_value_one(self):
        box = g.Box(1, 2.0, 256)
        scan = g.CubeScan(shifts=((0,),), level_min=0, level_max=2, restrict_to=box)
        inner = g.CubeScan(shifts=((0,),), level_min=0, level_max=5, restrict_to=box)
        rep = wt.fujii_wilson(wt.one(1), scan, inner)
        assert rep.value == pytest.approx(1.0, abs=1e-9)
        assert not rep.divergent

    def test_refinement_consistency(self):
        # |x|^(1/2) in A_infinity: values Cauchy within 5% under inner refinement
        box = g.Box(1, 2.0, 512)
        w = wt.PowerHom(1, 0.5)
        scan = g.CubeScan(shifts=((0,),), level_min=-1, level_max=1, restrict_to=box)
        vals = []
        for fine in (3, 5):
            inner = g.CubeScan(shifts=((0,),), level_min=-1, level_max=fine,
                               restrict_to=box)
            vals.append(wt.fujii_wilson(w, scan, inner).value)
        assert abs(vals[1] - vals[0]) <= 0.05 * vals[1]

    def test_inverse_power_divergent(self):
        # |x|^-1 in 1-D is not in A_infinity (it is not even locally
        # integrable, so only the lazy composed form can represent it);
        # cubes at the origin make the functional infinite and the scan
        # flags divergence.
        box = g.Box(1, 2.0, 256)
        w = wt.weight_power(wt.PowerHom(1, -0.5), 2.0)
        assert isinstance(w, wt.PowerOf)
        scan = g.CubeScan(shifts=((0,),), level_min=-1, level_max=2, restrict_to=box)
        inner = g.CubeScan(shifts=((0,),), level_min=-1, level_max=4, restrict_to=box)
        rep = wt.fujii_wilson(w, scan, inner)
        assert rep.divergent


class TestTwoWeightAndMorrey:
    def test_trivial_unit_pair(self, scan1d):
        rep = wt.two_weight_constant(wt.one(1), wt.one(1), 2.0, 2.0, 0.0, scan1d)
        assert rep.value == 1.0 and not rep.divergent

    def test_power_pair_admissible(self, scan1d):
        # exponents from the admissible power-weight region at n=1, p=q=2,
        # alpha=beta=1/4, gamma=0: sigma = |x|^(-1/2) dual pair with w=|x|^(1/2)
        sig = wt.weight_power(wt.PowerHom(1, 0.5), -1.0)
        rep = wt.two_weight_constant(sig, wt.PowerHom(1, 0.5), 2.0, 2.0, 0.0, scan1d)
        assert not rep.divergent and rep.value > 0

    def test_below_exponent_floor_divergent(self, scan1d):
        rep = wt.two_weight_constant(wt.one(1), wt.one(1), 2.0, 2.0, -0.25, scan1d)
        assert rep.divergent

    def test_morrey_unit_p_equals_q_divergent(self, scan1d):
        rep = wt.morrey_norm(wt.one(1), 2.0, 2.0, scan1d)
        assert rep.divergent

    def test_morrey_critical_power_finite(self, scan1d):
        # V = |x|^-l lies in the Morrey space with exponents (n/l, p') in 1-D
        ell, pc = 0.4, 1.5
        rep = wt.morrey_norm(wt.PowerHom(1, -ell), 1.0 / ell, pc, scan1d)
        assert not rep.divergent

    def test_morrey_supercritical_divergent(self, scan1d):
        ell, pc = 0.4, 1.5
        rep = wt.morrey_norm(wt.PowerHom(1, -ell - 0.1), 1.0 / ell, pc, scan1d)
        assert rep.divergent

    def test_pair_constant_is_morrey_composition(self, scan1d):
        # [sigma, 1] with exponent a equals the Morrey norm of sigma^(1/p')
        # with exponents (n/l, p'), l = a - n(1/p - 1/q); matches the paper's
        # own use of the identity (its remark's l = a - n/q' is a typo).
        sigma = wt.PowerHom(1, -0.3)
        p, q, a = 2.5, 3.0, 0.6
        pc = p / (p - 1.0)
        lhs = wt.two_weight_constant(sigma, wt.one(1), p, q, a, scan1d)
        ell = a - (1.0 / p - 1.0 / q)
        rhs = wt.morrey_norm(wt.weight_power(sigma, 1.0 / pc), 1.0 / ell, pc, scan1d)
        assert lhs.value == pytest.approx(rhs.value, rel=1e-10)
        assert lhs.divergent == rhs.divergent


class TestBallOracle:
    def test_constant_weight_scales_like_volume(self):
        for R in (0.2, 1.0, 3.7):
            lo, up = wt.ball_norm_oracle(0.0, 0.0, 0.0, R, 2)
            ball = math.pi * R * R
            assert lo <= ball <= up

    def test_type_one_power_envelope(self):
        w = wt.PowerHom(2, 2.0)
        rng = np.random.default_rng(5)
        for _ in range(100):
            R = rng.uniform(0.05, 1.5)
            c = rng.uniform(3.0 * R, 8.0 * R)
            ang = rng.uniform(0, 2 * math.pi)
            center = np.array([c * math.cos(ang), c * math.sin(ang)])
            got = wt.ball_weight_integral(w, center, R)
            lo, up = wt.ball_norm_oracle(2.0, 0.0, c, R, 2)
            assert lo <= got <= up

    def test_type_two_envelope_small_and_large(self):
        w = wt.ProductWeight(2, -0.5, 1.0)
        rng = np.random.default_rng(6)
        for _ in range(100):
            R = rng.uniform(0.1, 4.0)
            c = rng.uniform(0.0, 2.9 * R)
            center = np.array([c, 0.0])
            got = wt.ball_weight_integral(w, center, R)
            lo, up = wt.ball_norm_oracle(-0.5, 1.0, c, R, 2)
            assert lo <= got <= up

    def test_type_two_needs_integrable_power(self):
        with pytest.raises(PreconditionError):
            wt.ball_norm_oracle(-2.5, 0.0, 0.1, 1.0, 2)

    def test_one_dimensional_exact_interval(self):
        w = wt.PowerHom(1, 1.0)
        got = wt.ball_weight_integral(w, np.array([0.0]), 1.0)
        assert got == pytest.approx(1.0)  # int_{-1}^{1} |x| dx


class TestClosedFormAp:
    def test_trivial(self):
        assert wt.is_ap_closed_form("power", 0.0, 0.0, 2.0, 1)

    def test_boundary_excluded(self):
        assert not wt.is_ap_closed_form("power", 1.0, 0.0, 2.0, 1)

    def test_product_case(self):
        assert wt.is_ap_closed_form("product", 1.0, -1.0, 2.0, 2)
        assert not wt.is_ap_closed_form("product", 5.0, -1.0, 2.0, 2)

    def test_flag_agreement_grid(self):
        # 20 admissibility points straddling the upper boundary (the region
        # below -n is not constructible; its dual shows up through the upper
        # side, where the dual exponent crosses -n)
        box = g.Box(1, 2.0, 256)
        scan = g.CubeScan(shifts=g.CubeScan.all_shifts(1), level_min=-1,
                          level_max=4, restrict_to=box)
        count = 0
        for p in (1.5, 2.0, 3.0, 4.0, 6.0):
            top = p - 1.0
            for alpha in (-0.7, -0.2, top - 0.3, top + 0.4):
                expected_inside = wt.is_ap_closed_form("power", alpha, 0.0, p, 1)
                rep = wt.ap_constant(wt.PowerHom(1, alpha), p, scan)
                assert rep.divergent == (not expected_inside), (p, alpha)
                count += 1
        assert count == 20


class TestTheoremConstants:
    def test_local_sigma_one_is_morrey_norm(self, scan1d):
        V = wt.PowerHom(1, -0.3)
        p, tau, beta = 3.0, 2.0, 0.9
        out = wt.theorem_constants(wt.one(1), V, dict(mode="local", p=p,
                                                      tau=tau, beta=beta), scan1d)
        ell = beta - (tau - 1.0) / p
        ref = wt.morrey_norm(V, 1.0 / ell, p / (p - tau), scan1d)
        assert out["W"].value == pytest.approx(ref.value, rel=1e-12)

    def test_global_sigma_one_structure(self, scan1d):
        # sigma = 1, q = p, alpha = 0: W2 = 1 and W1 = W3
        V = wt.PowerHom(1, -0.25)
        out = wt.theorem_constants(wt.one(1), V, dict(mode="global", p=3.0,
                                                      q=3.0, q1=3.0, tau=2.5,
                                                      alpha=0.0), scan1d)
        assert out["W2"].value == 1.0
        assert out["W1"].value == pytest.approx(out["W3"].value, rel=1e-14)

    def test_zero_potential_gives_zero(self, scan1d):
        zero = wt.SampledWeight(1, g.constant_field(g.Box(1, 2.0, 64), 0.0))
        out = wt.theorem_constants(wt.one(1), zero, dict(mode="local", p=3.0,
                                                         tau=2.0, beta=0.9), scan1d)
        assert out["W"].value == 0.0 and not out["W"].divergent

    def test_tau_above_p_rejected(self, scan1d):
        with pytest.raises(PreconditionError, match="exponent out of range"):
            wt.theorem_constants(wt.one(1), wt.one(1),
                                 dict(mode="local", p=2.0, tau=2.5, beta=0.5),
                                 scan1d)


class TestCheckRegion:
    def test_fixture_vectors(self):
        from region_fixtures import ALL_VECTORS

        assert len(ALL_VECTORS) == 30
        for case, params, expect_ok, expect_violated in ALL_VECTORS:
            ok, witness, violated = wt.check_region(wt.RegionQuery(case, params))
            assert ok == expect_ok, (case, params, violated)
            if expect_ok:
                assert violated == []
            elif len(expect_violated) == 1:
                assert violated == expect_violated, (case, params)
            else:
                assert set(expect_violated) <= set(violated), (case, params)

    def test_global_one_witness(self):
        ok, witness, _ = wt.check_region(
            wt.RegionQuery("GLOBAL_I", dict(n=3, p=3, tau=2.5, alpha=0)))
        assert ok and witness["gamma"] == pytest.approx(-0.5)

    def test_local_one_witness_beta(self):
        ok, witness, _ = wt.check_region(
            wt.RegionQuery("LOCAL_I", dict(n=3, p=3, tau=2, alpha=0, gamma=-0.5)))
        assert ok and witness["beta"] == pytest.approx(1.5)

    def test_missing_parameter_named(self):
        with pytest.raises(PreconditionError, match="gamma"):
            wt.check_region(wt.RegionQuery("LOCAL_I", dict(n=3, p=3, tau=2, alpha=0)))

    def test_unknown_case_rejected(self):
        with pytest.raises(PreconditionError):
            wt.RegionQuery("HEAT_V", {})

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polykin.collide import (
    BorgnakkeLarsenParams,
    DiscreteParams,
    MonatomicParams,
    ParticleState,
    PolyMonoParams,
    ResonantParams,
    bl_poly_poly,
    collide_borgnakke_larsen,
    collide_discrete,
    collide_monatomic,
    collide_resonant,
    com_energy,
    discrete_rule,
    invariant_defect,
    inverse_parameters,
    jacobian_bl,
    monatomic_rule,
    resonant_rule,
    total_energy,
    unit_vector,
)
from support import (
    bl_spec,
    discrete_spec,
    mixture_cont_spec,
    mixture_disc_spec,
    resonant_spec,
    uniform_sphere,
)

EX = np.array([1.0, 0.0, 0.0])


def _state(v, species=0, I=None, level=None):
    return ParticleState(v=np.asarray(v, float), species=species, I=I, level=level)


class TestExchangeRule:
    """Frozen numeric example: m = 2, v = (1,0,0), v_* = (-1,0,0),
    I = I_* = 1, r = 1/2, R = 1/4, sigma = (1,0,0)."""

    spec = bl_spec(delta=2.0, mass=2.0)
    pre = (_state(EX, I=1.0), _state(-EX, I=1.0))
    params = BorgnakkeLarsenParams(r=0.5, R=0.25, sigma=EX)

    def test_frozen_outcome(self):
        out = collide_borgnakke_larsen(self.spec, *self.pre, self.params)
        assert out.E == pytest.approx(4.0, abs=1e-15)
        s = np.sqrt(0.5)
        np.testing.assert_allclose(out.post[0].v, [s, 0, 0], atol=1e-15)
        np.testing.assert_allclose(out.post[1].v, [-s, 0, 0], atol=1e-15)
        assert out.post[0].I == pytest.approx(1.5, abs=1e-15)
        assert out.post[1].I == pytest.approx(1.5, abs=1e-15)
        assert out.jacobian == pytest.approx(8.0 / (0.5 * 0.75), rel=1e-15)

    def test_inverse_of_forward_direction(self):
        out = collide_borgnakke_larsen(self.spec, *self.pre, self.params)
        inv = inverse_parameters(self.spec, self.pre, out.post)
        assert inv.R == pytest.approx(0.5, abs=1e-15)
        assert inv.r == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(inv.sigma, EX, atol=1e-15)
        assert inv.degenerate == ()

    def test_round_trip_recovers_parameters(self):
        out = collide_borgnakke_larsen(self.spec, *self.pre, self.params)
        back = inverse_parameters(self.spec, out.post, self.pre)
        assert back.r == pytest.approx(self.params.r, abs=1e-12)
        assert back.R == pytest.approx(self.params.R, abs=1e-12)
        np.testing.assert_allclose(back.sigma, self.params.sigma, atol=1e-12)

    def test_reverse_collision_restores_pre(self):
        out = collide_borgnakke_larsen(self.spec, *self.pre, self.params)
        inv = inverse_parameters(self.spec, self.pre, out.post)
        rev = collide_borgnakke_larsen(
            self.spec,
            *out.post,
            BorgnakkeLarsenParams(r=inv.r, R=inv.R, sigma=inv.sigma),
        )
        np.testing.assert_allclose(rev.post[0].v, self.pre[0].v, atol=1e-14)
        np.testing.assert_allclose(rev.post[1].v, self.pre[1].v, atol=1e-14)
        assert rev.post[0].I == pytest.approx(self.pre[0].I, abs=1e-14)


class TestEnergies:
    def test_single_species_energy(self):
        spec = bl_spec(mass=2.0)
        E = total_energy(spec, _state(EX, I=1.0), _state(-EX, I=1.0))
        assert E == pytest.approx(4.0, abs=1e-15)

    def test_mixture_reduced_mass_energy(self):
        # m_i = 1, m_j = 3 -> mu = 3/4; |V| = 4 -> E = (mu/2) * 16 = 6
        spec = mixture_cont_spec(m_a=1.0, m_b=3.0)
        E = total_energy(spec, _state(2 * EX, 0, I=0.0), _state(-2 * EX, 1, I=0.0))
        assert E == pytest.approx(6.0, abs=1e-15)

    def test_com_energy_array(self):
        v = np.array([[1.0, 0, 0], [2.0, 0, 0]])
        vs = -v
        E = com_energy(0.5, v, vs, 1.0, 0.0)
        np.testing.assert_allclose(E, [2.0, 5.0])


class TestJacobian:
    def test_values(self):
        assert jacobian_bl(0.0, 0.0) == pytest.approx(8.0)
        assert jacobian_bl(0.5, 0.5) == pytest.approx(32.0)

    def test_boundary_rejected(self):
        with pytest.raises(ValueError):
            jacobian_bl(1.0, 0.5)

    @given(r=st.floats(0.0, 0.999), R=st.floats(0.0, 0.999))
    @settings(max_examples=100)
    def test_closed_form(self, r, R):
        assert jacobian_bl(r, R) == pytest.approx(8.0 / ((1 - r) * (1 - R)), rel=1e-14)


class TestMonatomic:
    def test_relative_speed_preserved(self):
        rng = np.random.default_rng(1)
        v, vs = rng.normal(size=3), rng.normal(size=3)
        sig = uniform_sphere(rng, 1)[0]
        vp, vsp = collide_monatomic(v, vs, sig)
        assert np.linalg.norm(vp - vsp) == pytest.approx(np.linalg.norm(v - vs), rel=1e-13)
        np.testing.assert_allclose(vp + vsp, v + vs, atol=1e-14)

    def test_unequal_masses_center_conserved(self):
        rng = np.random.default_rng(2)
        v, vs = rng.normal(size=3), rng.normal(size=3)
        sig = uniform_sphere(rng, 1)[0]
        m, ms = 1.0, 3.0
        vp, vsp = monatomic_rule(v, vs, sig, m, ms)
        np.testing.assert_allclose(m * vp + ms * vsp, m * v + ms * vs, atol=1e-13)
        kin = lambda a, b: 0.5 * m * a @ a + 0.5 * ms * b @ b
        assert kin(vp, vsp) == pytest.approx(kin(v, vs), rel=1e-13)


class TestPolyMono:
    def test_internal_energy_share(self):
        # poly(m=1, I=2) vs mono(m=1): E = |V|^2/4 + 2 and I' = E/2 at R = 1/2
        spec = mixture_cont_spec(delta_b=None, m_a=1.0, m_b=1.0)
        pre = (_state(EX, 0, I=2.0), _state(-EX, 1))
        out = collide_borgnakke_larsen(spec, *pre, PolyMonoParams(R=0.5, sigma=EX))
        E = 0.25 * 4.0 + 2.0
        assert out.E == pytest.approx(E, abs=1e-14)
        assert out.post[0].I == pytest.approx(E / 2, abs=1e-14)
        assert out.post[1].I is None

    def test_mono_poly_order_swapped(self):
        spec = mixture_cont_spec(delta_b=None, m_a=1.0, m_b=1.0)
        pre = (_state(-EX, 1), _state(EX, 0, I=2.0))
        out = collide_borgnakke_larsen(spec, *pre, PolyMonoParams(R=0.5, sigma=EX))
        assert out.post[0].I is None
        assert out.post[1].I == pytest.approx(1.5, abs=1e-14)

    def test_params_variant_must_match(self):
        spec = mixture_cont_spec(delta_b=None)
        pre = (_state(EX, 0, I=2.0), _state(-EX, 1))
        with pytest.raises(ValueError):
            collide_borgnakke_larsen(spec, *pre, BorgnakkeLarsenParams(0.5, 0.5, EX))


class TestResonant:
    def test_split_conservation(self):
        spec = resonant_spec()
        pre = (_state([1.0, 2.0, 0.5], I=0.8), _state([-1.0, 0.0, 0.3], I=1.4))
        sig = uniform_sphere(np.random.default_rng(3), 1)[0]
        out = collide_resonant(spec, *pre, ResonantParams(I_prime=2.0, sigma=sig))
        d = invariant_defect(spec, pre, out.post)
        assert abs(d.kinetic) < 1e-13
        assert abs(d.internal) < 1e-13
        assert out.post[0].I == pytest.approx(2.0)
        assert out.post[1].I == pytest.approx(0.2, abs=1e-14)

    def test_out_of_range_internal_rejected(self):
        spec = resonant_spec()
        pre = (_state(EX, I=1.0), _state(-EX, I=1.0))
        with pytest.raises(ValueError):
            collide_resonant(spec, *pre, ResonantParams(I_prime=2.5, sigma=EX))


class TestDiscrete:
    def test_frozen_post_speed(self):
        # m = 2, |V| = 2, delta_I = 1 -> |V'| = sqrt(4 - 4*1/2) = sqrt 2
        spec = discrete_spec(energies=(0.0, 1.0), degeneracies=(1.0, 1.0), mass=2.0)
        pre = (_state(EX, level=0), _state(-EX, level=0))
        out = collide_discrete(spec, *pre, DiscreteParams(k_prime=1, l_prime=0, sigma=EX))
        assert out.admissible
        rel = out.post[0].v - out.post[1].v
        assert np.linalg.norm(rel) == pytest.approx(np.sqrt(2.0), rel=1e-14)
        assert out.post[0].level == 1 and out.post[1].level == 0

    def test_inadmissible_flagged_not_raised(self):
        # delta_I = 3 needs |V|^2 >= 6 but |V|^2 = 4
        spec = discrete_spec(energies=(0.0, 3.0), degeneracies=(1.0, 1.0), mass=2.0)
        pre = (_state(EX, level=0), _state(-EX, level=0))
        out = collide_discrete(spec, *pre, DiscreteParams(k_prime=1, l_prime=1, sigma=EX))
        assert not out.admissible
        assert out.post == pre

    def test_elastic_channel(self):
        spec = discrete_spec(mass=2.0)
        pre = (_state(EX, level=1), _state(-EX, level=1))
        out = collide_discrete(spec, *pre, DiscreteParams(k_prime=1, l_prime=1, sigma=EX))
        assert out.admissible
        d = invariant_defect(spec, pre, out.post)
        assert abs(d.energy) < 1e-14

    def test_downward_jump_always_admissible(self):
        spec = discrete_spec(energies=(0.0, 5.0), degeneracies=(1.0, 1.0), mass=2.0)
        pre = (_state(0.1 * EX, level=1), _state(-0.1 * EX, level=1))
        out = collide_discrete(spec, *pre, DiscreteParams(k_prime=0, l_prime=0, sigma=EX))
        assert out.admissible
        d = invariant_defect(spec, pre, out.post)
        assert abs(d.energy) < 1e-13 * total_energy(spec, *pre)


class TestSwapSymmetry:
    def test_bl_particle_interchange(self):
        rng = np.random.default_rng(7)
        spec = bl_spec(delta=3.0, mass=1.7)
        v, vs = rng.normal(size=3), rng.normal(size=3)
        sig = uniform_sphere(rng, 1)[0]
        a = collide_borgnakke_larsen(
            spec, _state(v, I=0.9), _state(vs, I=0.4),
            BorgnakkeLarsenParams(r=0.3, R=0.6, sigma=sig),
        )
        b = collide_borgnakke_larsen(
            spec, _state(vs, I=0.4), _state(v, I=0.9),
            BorgnakkeLarsenParams(r=0.7, R=0.6, sigma=-sig),
        )
        np.testing.assert_allclose(a.post[0].v, b.post[1].v, atol=1e-14)
        np.testing.assert_allclose(a.post[1].v, b.post[0].v, atol=1e-14)
        assert a.post[0].I == pytest.approx(b.post[1].I, rel=1e-14)
        assert a.post[1].I == pytest.approx(b.post[0].I, rel=1e-14)


class TestBatchConservation:
    """Vectorized invariant checks over random configurations per family."""

    N = 20_000
    RTOL = 1e-12

    def _random_kinematics(self, rng, n):
        v = rng.normal(0, 1.3, (n, 3))
        vs = rng.normal(0, 0.8, (n, 3))
        sig = uniform_sphere(rng, n)
        return v, vs, sig

    def test_bl_batch(self):
        rng = np.random.default_rng(10)
        v, vs, sig = self._random_kinematics(rng, self.N)
        I, Is = rng.gamma(1.0, 1.0, self.N), rng.gamma(1.5, 0.5, self.N)
        r, R = rng.uniform(0, 1, self.N), rng.uniform(0, 1, self.N)
        m = 1.37
        vp, vsp, Ip, Isp, E = bl_poly_poly(v, vs, I, Is, r, R, sig, m)
        mom = np.abs(m * (vp + vsp) - m * (v + vs)).max()
        Epost = com_energy(m / 2, vp, vsp, Ip, Isp)
        assert mom <= self.RTOL * np.abs(v).max() * m
        assert np.abs(Epost / E - 1).max() <= self.RTOL

    def test_resonant_batch(self):
        rng = np.random.default_rng(11)
        v, vs, sig = self._random_kinematics(rng, self.N)
        I, Is = rng.gamma(1.0, 1.0, self.N), rng.gamma(1.0, 1.0, self.N)
        Ip = rng.uniform(0, 1, self.N) * (I + Is)
        vp, vsp, Ipo, Iso = resonant_rule(v, vs, I, Is, Ip, sig)
        kin = lambda a, b: 0.5 * (np.sum(a * a, 1) + np.sum(b * b, 1))
        assert np.abs(kin(vp, vsp) - kin(v, vs)).max() <= self.RTOL * 10
        assert np.abs((Ipo + Iso) - (I + Is)).max() <= self.RTOL * 10

    def test_discrete_batch(self):
        rng = np.random.default_rng(12)
        v, vs, sig = self._random_kinematics(rng, self.N)
        dI = rng.uniform(-1.0, 3.0, self.N)
        m = 2.0
        vp, vsp, ok = discrete_rule(v, vs, dI, sig, m)
        kin = 0.25 * m * np.sum((vp - vsp) ** 2, 1)
        kin_pre = 0.25 * m * np.sum((v - vs) ** 2, 1)
        good = ok
        assert np.abs((kin[good] + dI[good]) - kin_pre[good]).max() < 1e-12 * kin_pre.max()
        assert np.all(kin_pre[~ok] < 2.0 * dI[~ok] / (m / 2) * (m / 4) + 1e-12)


class TestInverseDegenerate:
    def test_zero_relative_velocity_flagged(self):
        spec = bl_spec()
        a = _state([1.0, 1.0, 1.0], I=1.0)
        b = _state([1.0, 1.0, 1.0], I=2.0)
        inv = inverse_parameters(spec, (a, b), (a, b))
        assert inv.sigma is None
        assert any("sigma" in d for d in inv.degenerate)
        assert inv.r == pytest.approx(1.0 / 3.0)

    def test_shell_mismatch_raises(self):
        spec = bl_spec()
        a = _state(EX, I=1.0)
        b = _state(-EX, I=1.0)
        c = _state(EX * 2, I=1.0)
        with pytest.raises(ValueError):
            inverse_parameters(spec, (a, b), (c, b))


class TestSigmaHandling:
    def test_non_unit_sigma_rejected(self):
        with pytest.raises(ValueError):
            MonatomicParams(sigma=np.array([1.0, 1.0, 0.0]))

    def test_slightly_off_sigma_renormalized(self):
        sig = np.array([1.0 + 5e-13, 0.0, 0.0])
        p = MonatomicParams(sigma=sig)
        assert np.linalg.norm(p.sigma) == pytest.approx(1.0, abs=1e-15)

    def test_state_shape_checked(self):
        with pytest.raises(ValueError):
            ParticleState(v=np.zeros(2))


class TestMixtureBranches:
    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_all_continuous_branches_conserve(self, seed):
        rng = np.random.default_rng(seed)
        spec = mixture_cont_spec(m_a=1.0, m_b=2.5)
        sig = uniform_sphere(rng, 1)[0]
        pre = (
            _state(rng.normal(size=3), 0, I=float(rng.gamma(1.0))),
            _state(rng.normal(size=3), 1, I=float(rng.gamma(1.5))),
        )
        out = collide_borgnakke_larsen(
            spec, *pre,
            BorgnakkeLarsenParams(r=float(rng.uniform()), R=float(rng.uniform()), sigma=sig),
        )
        d = invariant_defect(spec, pre, out.post)
        scale = max(1.0, out.E)
        assert np.abs(d.momentum).max() < 1e-12 * scale
        assert abs(d.energy) < 1e-12 * scale

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_discrete_mixture_conserves(self, seed):
        rng = np.random.default_rng(seed)
        spec = mixture_disc_spec()
        sig = uniform_sphere(rng, 1)[0]
        pre = (
            _state(rng.normal(size=3) * 2, 0, level=int(rng.integers(2))),
            _state(rng.normal(size=3) * 2, 1, level=int(rng.integers(3))),
        )
        out = collide_discrete(
            spec, *pre,
            DiscreteParams(k_prime=int(rng.integers(2)), l_prime=int(rng.integers(3)), sigma=sig),
        )
        if out.admissible:
            d = invariant_defect(spec, pre, out.post)
            scale = max(1.0, out.E)
            assert np.abs(d.momentum).max() < 1e-12 * scale
            assert abs(d.energy) < 1e-12 * scale

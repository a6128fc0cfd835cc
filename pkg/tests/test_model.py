import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polykin.model import (
    CollisionContext,
    ContinuousEnergy,
    DiscreteLevels,
    MixtureSpec,
    Monatomic,
    PowerLawE,
    PsiWeighted,
    ResonantTensored,
    Species,
    eval_kernel,
    phi_weight,
    single_species,
    spec_from_json,
    spec_to_json,
    validate,
)
from support import bl_spec, discrete_spec, mixture_cont_spec, resonant_spec


class TestPhiWeight:
    def test_delta_two_is_flat(self):
        assert phi_weight(0.0, 2.0) == 1.0
        assert phi_weight(3.7, 2.0) == 1.0

    def test_powers(self):
        assert phi_weight(4.0, 4.0) == pytest.approx(4.0, rel=1e-15)
        assert phi_weight(4.0, 3.0) == pytest.approx(2.0, rel=1e-15)
        assert phi_weight(0.0, 4.0) == 0.0

    def test_zero_energy_below_two_dof_is_domain_error(self):
        with pytest.raises(ValueError):
            phi_weight(0.0, 1.5)

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            phi_weight(-1.0, 2.0)

    def test_vectorized(self):
        I = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(phi_weight(I, 6.0), I**2, rtol=1e-15)

    @given(
        I=st.floats(1e-8, 1e8),
        a=st.floats(1e-6, 1e6),
        delta=st.floats(0.5, 12.0),
    )
    @settings(max_examples=200)
    def test_homogeneous_scaling(self, I, a, delta):
        lhs = phi_weight(a * I, delta)
        rhs = a ** (0.5 * delta - 1.0) * phi_weight(I, delta)
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestEvalKernel:
    def test_power_law(self):
        k = PowerLawE(C=2.0, zeta=1.0)
        assert eval_kernel(k, CollisionContext(E=4.0)) == pytest.approx(4.0)
        assert eval_kernel(PowerLawE(C=3.0, zeta=0.0), CollisionContext(E=17.0)) == 3.0

    def test_power_law_negative_energy(self):
        with pytest.raises(ValueError):
            eval_kernel(PowerLawE(C=1.0, zeta=1.0), CollisionContext(E=-1.0))

    def test_power_law_missing_context(self):
        with pytest.raises(ValueError):
            eval_kernel(PowerLawE(C=1.0, zeta=1.0), CollisionContext())

    def test_psi_default_matches_power_law(self):
        ctx = CollisionContext(E=9.0, r=0.3, R=0.7)
        a = eval_kernel(PsiWeighted(C=1.5, zeta=1.0), ctx)
        b = eval_kernel(PowerLawE(C=1.5, zeta=1.0), CollisionContext(E=9.0))
        assert a == b

    def test_psi_weight_applied(self):
        psi = lambda r, R: r * (1.0 - r) + R  # symmetric in r <-> 1-r
        ctx = CollisionContext(E=1.0, r=0.25, R=0.5)
        got = eval_kernel(PsiWeighted(C=2.0, zeta=0.0, psi=psi), ctx)
        assert got == pytest.approx(2.0 * (0.25 * 0.75 + 0.5))

    def test_resonant_indicator_cuts_off(self):
        k = ResonantTensored(C=1.0, zeta2=0.0)
        ctx = CollisionContext(
            rel_speed=2.0, cos_theta=0.0, I=1.0, I_star=1.0, I_prime=3.0, delta=2.0
        )
        assert eval_kernel(k, ctx) == 0.0

    def test_resonant_default_value(self):
        # b_kin = |V|, b_int = (I+I_*)^(1 + zeta2/2 - delta) = 2^-1
        k = ResonantTensored(C=1.0, zeta2=0.0)
        ctx = CollisionContext(
            rel_speed=2.0, cos_theta=0.3, I=1.0, I_star=1.0, I_prime=1.0, delta=2.0
        )
        assert eval_kernel(k, ctx) == pytest.approx(1.0)

    def test_resonant_optional_terms(self):
        k = ResonantTensored(C=1.0, zeta=0.5, zeta1=0.25, kin_terms=("speed", "sin_neg"))
        ctx = CollisionContext(
            rel_speed=4.0, cos_theta=0.6, I=0.5, I_star=1.5, I_prime=0.25, delta=2.0
        )
        sin = np.sqrt(1 - 0.36)
        expect = (4.0 + sin**-0.25) * 2.0**-1.0
        assert eval_kernel(k, ctx) == pytest.approx(expect, rel=1e-12)


class TestValidate:
    def test_good_specs_pass(self):
        for spec in (bl_spec(), resonant_spec(), discrete_spec(), mixture_cont_spec()):
            assert validate(spec) == []

    def test_bad_mass(self):
        spec = single_species(ContinuousEnergy(2.0), PowerLawE(1.0, 0.0), mass=-1.0)
        assert any("mass" in e for e in validate(spec))

    def test_asymmetric_kernels(self):
        ka, kb = PowerLawE(1.0, 0.0), PowerLawE(2.0, 0.0)
        spec = MixtureSpec(
            species=(
                Species("a", 1.0, Monatomic()),
                Species("b", 2.0, Monatomic()),
            ),
            kernels=((ka, ka), (kb, kb)),
        )
        assert any("symmetric" in e for e in validate(spec))

    def test_resonant_on_mixture_rejected(self):
        ker = ResonantTensored(C=1.0)
        spec = MixtureSpec(
            species=(
                Species("a", 1.0, ContinuousEnergy(2.0)),
                Species("b", 2.0, ContinuousEnergy(2.0)),
            ),
            kernels=((ker, ker), (ker, ker)),
        )
        assert any("resonant" in e for e in validate(spec))

    def test_resonant_zeta2_range(self):
        spec = resonant_spec(delta=2.0, zeta2=2.5)
        assert any("zeta2" in e for e in validate(spec))
        assert validate(resonant_spec(delta=3.0, zeta2=2.5)) == []

    def test_level_ordering(self):
        spec = single_species(
            DiscreteLevels((0.0, 2.0, 1.0), (1.0, 1.0, 1.0)), PowerLawE(1.0, 0.0)
        )
        assert any("increasing" in e for e in validate(spec))

    def test_duplicate_labels(self):
        ker = PowerLawE(1.0, 0.0)
        spec = MixtureSpec(
            species=(Species("x", 1.0), Species("x", 2.0)),
            kernels=((ker, ker), (ker, ker)),
        )
        assert any("unique" in e for e in validate(spec))


class TestJsonRoundTrip:
    @pytest.mark.parametrize(
        "spec",
        [
            bl_spec(delta=2.017, zeta=0.537),
            resonant_spec(delta=4.0, zeta2=1.5),
            discrete_spec(),
            mixture_cont_spec(),
            mixture_cont_spec(delta_b=None),
        ],
        ids=["bl", "resonant", "discrete", "mix-poly", "mix-mono"],
    )
    def test_round_trip(self, spec):
        assert spec_from_json(spec_to_json(spec)) == spec

    def test_custom_psi_not_serializable(self):
        spec = single_species(
            ContinuousEnergy(3.0), PsiWeighted(C=1.0, zeta=0.5, psi=lambda r, R: r)
        )
        with pytest.raises(ValueError):
            spec_to_json(spec)

    def test_field_names(self):
        import json

        doc = json.loads(spec_to_json(bl_spec(delta=2.5, C=2.0, zeta=0.5)))
        assert doc["species"][0]["energy"] == {"kind": "continuous", "delta": 2.5}
        assert doc["kernels"][0][0] == {"kind": "power_law_e", "C": 2.0, "zeta": 0.5}

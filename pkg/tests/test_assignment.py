import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddassign.assignment import (AssignmentSpec, assign, closed_form_gain, project_to_allowable,
                                 select_eigvecs, solve_gamma)
from ddassign.dataset import kernel_pair, restrict_to_T1, simulate_experiments
from ddassign.errors import (EigvecsDependent, IllConditionedAssignment, InvalidInput,
                             InvalidSpec, SpectrumNotConjugateClosed, TargetNotAllowable)
from ddassign.numkit import spectrum
from ddassign.oracle import (BATCH_REACTOR_TARGET, STRUCTURED_EIGVECS, STRUCTURED_GAIN,
                             model_gain_for_assignment, random_plant, verify_closed_loop)
from ddassign.subspace import allowable_subspace, subspaces_for_spectrum

from support import allowable_eigvecs, random_spectrum


@pytest.fixture(scope="module")
def reactor_T1(reactor_data):
    ds1 = restrict_to_T1(reactor_data)
    return ds1, kernel_pair(ds1)


def t1_data(model, seed):
    ds = simulate_experiments(model, T=1, seed=seed)
    return ds, kernel_pair(ds)


class TestSpec:
    def test_unpaired(self):
        with pytest.raises(SpectrumNotConjugateClosed) as exc:
            AssignmentSpec((0.5 + 0.1j, 0.2))
        assert exc.value.stage == "spec"

    def test_wrong_eigvec_shape(self):
        with pytest.raises(InvalidSpec):
            AssignmentSpec((0.1, 0.2), np.eye(3))

    def test_dependent(self):
        with pytest.raises(EigvecsDependent):
            AssignmentSpec((0.1, 0.2), np.ones((2, 2)))

    def test_nonconjugate_columns(self):
        V = np.array([[1, 1], [1j, 2j]])
        with pytest.raises(InvalidSpec):
            AssignmentSpec((0.5 + 0.1j, 0.5 - 0.1j), V)

    def test_complex_vector_for_real_eigenvalue(self):
        with pytest.raises(InvalidSpec):
            AssignmentSpec((0.1, 0.2), np.array([[1, 0], [1j, 1]]))


class TestSolveGamma:
    def test_first_column(self, reactor_data, reactor_kp):
        sb = allowable_subspace(reactor_data, reactor_kp, 0.2)
        g = solve_gamma(sb, sb.basis[:, 0])
        assert np.allclose(g.gamma, [1, 0], atol=1e-12)

    def test_linearity(self, reactor_data, reactor_kp):
        sb = allowable_subspace(reactor_data, reactor_kp, 0.2)
        g = solve_gamma(sb, 2 * sb.basis.sum(axis=1))
        assert np.allclose(g.gamma, [2, 2], atol=1e-12)
        F = reactor_data.X0 @ reactor_kp.KU
        assert np.allclose(F @ g.alpha, 2 * sb.basis.sum(axis=1), atol=1e-10)

    def test_orthogonal_target(self, reactor_data, reactor_kp):
        sb = allowable_subspace(reactor_data, reactor_kp, 0.2)
        Q = np.linalg.qr(np.hstack([sb.basis, np.eye(4)]))[0]
        with pytest.raises(TargetNotAllowable) as exc:
            solve_gamma(sb, Q[:, 2])
        assert np.linalg.norm(exc.value.details["projection"]) < 1e-12
        assert exc.value.details["residual"] == pytest.approx(1.0)

    def test_wrong_length(self, reactor_data, reactor_kp):
        sb = allowable_subspace(reactor_data, reactor_kp, 0.2)
        with pytest.raises(InvalidInput):
            solve_gamma(sb, np.ones(3))


class TestClosedForm:
    def test_open_loop_structure_gives_zero_gain(self, reactor, reactor_T1):
        w, V = spectrum(reactor.A)
        gain = closed_form_gain(*reactor_T1, AssignmentSpec(tuple(w.real), V.real))
        assert np.abs(gain.K).max() < 1e-9

    def test_published_structured_example(self, reactor, reactor_T1):
        # printed V is 4-digit; project each column onto its allowable subspace first
        ds1, kp = reactor_T1
        bases = subspaces_for_spectrum(ds1, kp, BATCH_REACTOR_TARGET)
        V = np.column_stack([project_to_allowable(sb, STRUCTURED_EIGVECS[:, i])
                             for i, sb in enumerate(bases)])
        gain = closed_form_gain(ds1, kp, AssignmentSpec(BATCH_REACTOR_TARGET, V))
        assert np.abs(gain.K - STRUCTURED_GAIN).max() <= 3e-3
        assert verify_closed_loop(reactor, gain.K, BATCH_REACTOR_TARGET).max_eig_error < 1e-8

    def test_raw_printed_eigvecs_are_rejected(self, reactor_T1):
        with pytest.raises(TargetNotAllowable):
            closed_form_gain(*reactor_T1, AssignmentSpec(BATCH_REACTOR_TARGET, STRUCTURED_EIGVECS))

    def test_requires_T1(self, reactor_data, reactor_kp):
        with pytest.raises(InvalidInput):
            closed_form_gain(reactor_data, reactor_kp,
                             AssignmentSpec(BATCH_REACTOR_TARGET, np.eye(4)))

    def test_requires_eigvecs(self, reactor_T1):
        with pytest.raises(InvalidSpec):
            closed_form_gain(*reactor_T1, AssignmentSpec(BATCH_REACTOR_TARGET))

    def test_ill_conditioned(self, reactor, reactor_T1):
        # two nearly parallel allowable vectors for nearly equal eigenvalues
        ds1, kp = reactor_T1
        vals = (0.3, 0.3 + 1e-13, 0.1, -0.2)
        bases = subspaces_for_spectrum(ds1, kp, vals)
        V = np.column_stack([sb.basis[:, 0] for sb in bases])
        V[:, 1] = V[:, 0] + 1e-14 * bases[1].basis[:, 1]
        with pytest.raises((IllConditionedAssignment, EigvecsDependent)):
            closed_form_gain(ds1, kp, AssignmentSpec(vals, V))

    @given(seed=st.integers(0, 10_000), n=st.integers(2, 6), m=st.integers(1, 3))
    def test_matches_model_gain(self, seed, n, m):
        rng = np.random.default_rng(seed)
        model = random_plant(rng, n, min(m, n))
        vals = random_spectrum(rng, n)
        V = allowable_eigvecs(model, vals, rng)
        if np.linalg.cond(V) > 1e6:
            return
        gain = closed_form_gain(*t1_data(model, seed), AssignmentSpec(vals, V))
        ref = model_gain_for_assignment(model, vals, V)
        assert ref.residual <= 1e-8 * max(1.0, np.abs(ref.K).max())
        assert np.abs(gain.K - ref.K).max() <= 1e-6 * max(1.0, np.abs(ref.K).max())
        assert gain.max_imag_discarded <= 1e-8 * max(1.0, np.abs(gain.K).max())
        gain.attach_model(model)
        assert np.all(gain.eigvec_residuals <= 1e-8 * max(1.0, np.abs(gain.K).max()))

    @given(seed=st.integers(0, 10_000))
    def test_unique_across_datasets(self, seed):
        rng = np.random.default_rng(seed)
        model = random_plant(rng, 4, 2)
        vals = random_spectrum(rng, 4)
        spec = AssignmentSpec(vals, allowable_eigvecs(model, vals, rng))
        a = closed_form_gain(*t1_data(model, seed), spec)
        b = closed_form_gain(*t1_data(model, seed + 7), spec)
        assert np.abs(a.K - b.K).max() <= 1e-6 * max(1.0, np.abs(a.K).max())


class TestAssignPipeline:
    def test_example_setup_without_eigvecs(self, reactor, reactor_data):
        gain = assign(reactor_data, AssignmentSpec(BATCH_REACTOR_TARGET), model=reactor)
        assert verify_closed_loop(reactor, gain.K, BATCH_REACTOR_TARGET).max_eig_error <= 1e-6
        assert np.isrealobj(gain.K)

    def test_conjugate_pair_on_random_model(self):
        model = random_plant(np.random.default_rng(3), 4, 2)
        ds = simulate_experiments(model, T=2, seed=3)
        vals = (0.5 + 0.2j, 0.5 - 0.2j, 0.1, 0.3)
        gain = assign(ds, AssignmentSpec(vals))
        assert np.isrealobj(gain.K)
        assert verify_closed_loop(model, gain.K, vals).max_eig_error <= 1e-6

    def test_wrong_length(self, reactor_data):
        with pytest.raises(InvalidSpec) as exc:
            assign(reactor_data, AssignmentSpec((0.1, 0.2)))
        assert exc.value.stage == "spec"

    def test_stage_tag(self, reactor_data):
        with pytest.raises(Exception) as exc:
            assign(reactor_data.select(range(5)), AssignmentSpec(BATCH_REACTOR_TARGET))
        assert exc.value.stage == "restrict"

    def test_select_eigvecs_full_rank_and_allowable(self, reactor_data, reactor_kp):
        vals = [0.5 + 0.2j, 0.5 - 0.2j, 0.1, -0.3]
        bases = subspaces_for_spectrum(reactor_data, reactor_kp, vals)
        V = select_eigvecs(bases, vals)
        assert np.linalg.matrix_rank(V) == 4
        assert np.allclose(V[:, 1], V[:, 0].conj())
        for i, sb in enumerate(bases):
            solve_gamma(sb, V[:, i])

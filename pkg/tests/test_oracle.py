import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddassign.dataset import PlantModel
from ddassign.errors import EigvecsDependent, InvalidInput
from ddassign.numkit import numerical_rank, spectrum
from ddassign.oracle import (BATCH_REACTOR_SPECTRUM, BATCH_REACTOR_TARGET, MAX_SPARSE_EIGVEC_ORDER,
                             MAX_SPARSE_EIGVECS, MAX_SPARSE_GAIN, STRUCTURED_EIGVECS,
                             STRUCTURED_GAIN, batch_reactor, model_gain_for_assignment,
                             random_plant, verify_closed_loop)

from support import allowable_eigvecs, random_spectrum


class TestFixture:
    def test_printed_entries(self):
        model = batch_reactor().model
        assert model.A[0, 0] == 1.178 and model.B[1, 0] == 0.467
        assert model.A.shape == (4, 4) and model.B.shape == (4, 2)

    def test_spectrum(self):
        w, _ = spectrum(batch_reactor().model.A)
        assert np.sort(w.real) == pytest.approx(np.sort(BATCH_REACTOR_SPECTRUM), abs=1e-3)
        assert np.all(w.imag == 0)

    def test_input_rank_and_controllability(self):
        model = batch_reactor().model
        assert numerical_rank(model.B) == 2 and model.is_controllable()


class TestModelGain:
    def test_open_loop_is_zero(self, reactor):
        w, V = spectrum(reactor.A)
        sol = model_gain_for_assignment(reactor, w.real, V.real)
        assert np.abs(sol.K).max() < 1e-10 and sol.residual < 1e-10

    def test_published_structured_example(self, reactor):
        sol = model_gain_for_assignment(reactor, BATCH_REACTOR_TARGET, STRUCTURED_EIGVECS)
        assert np.abs(sol.K - STRUCTURED_GAIN).max() <= 1e-3

    def test_published_max_sparse_example(self, reactor):
        # the 4-digit eigenvectors move K by up to ~3e-3 through rounding alone
        sol = model_gain_for_assignment(reactor, MAX_SPARSE_EIGVEC_ORDER, MAX_SPARSE_EIGVECS)
        assert np.abs(sol.K - MAX_SPARSE_GAIN).max() <= 3e-3

    def test_non_allowable_reports_residual(self, reactor):
        sol = model_gain_for_assignment(reactor, BATCH_REACTOR_TARGET, np.eye(4))
        assert sol.residual > 1e-2

    def test_singular(self, reactor):
        with pytest.raises(EigvecsDependent):
            model_gain_for_assignment(reactor, BATCH_REACTOR_TARGET, np.ones((4, 4)))

    @given(seed=st.integers(0, 10_000))
    def test_allowable_gives_zero_residual(self, seed):
        rng = np.random.default_rng(seed)
        model = random_plant(rng, 4, 2)
        vals = random_spectrum(rng, 4)
        V = allowable_eigvecs(model, vals, rng)
        sol = model_gain_for_assignment(model, vals, V)
        assert sol.residual <= 1e-8 * max(1.0, np.abs(sol.K).max())
        assert verify_closed_loop(model, sol.K, vals, V).max_eig_error <= 1e-6


class TestVerify:
    def test_open_loop(self, reactor):
        rep = verify_closed_loop(reactor, np.zeros((2, 4)), BATCH_REACTOR_SPECTRUM)
        assert not rep.stable and rep.max_eig_error <= 1e-3

    def test_published_structured(self, reactor):
        rep = verify_closed_loop(reactor, STRUCTURED_GAIN, BATCH_REACTOR_TARGET)
        assert rep.stable and rep.max_eig_error <= 1e-3

    def test_published_max_sparse(self, reactor):
        rep = verify_closed_loop(reactor, MAX_SPARSE_GAIN, BATCH_REACTOR_TARGET)
        assert rep.max_eig_error <= 1e-3
        assert int(np.sum(MAX_SPARSE_GAIN == 0)) == 4

    def test_eigvec_residuals(self, reactor):
        rep = verify_closed_loop(reactor, STRUCTURED_GAIN, BATCH_REACTOR_TARGET, STRUCTURED_EIGVECS)
        assert rep.eigvec_residuals.shape == (4,) and rep.eigvec_residuals.max() < 1e-2

    def test_bad_shape(self, reactor):
        with pytest.raises(InvalidInput):
            verify_closed_loop(reactor, np.zeros((4, 2)), BATCH_REACTOR_TARGET)


def test_random_plant_properties():
    rng = np.random.default_rng(0)
    for n, m in ((2, 1), (5, 3), (6, 2)):
        model = random_plant(rng, n, m)
        assert isinstance(model, PlantModel)
        assert model.is_controllable() and numerical_rank(model.B) == m

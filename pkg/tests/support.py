"""Shared generators for the test suite (model side only)."""

import numpy as np

from ddassign.numkit import clean_spectrum
from ddassign.oracle import random_plant
from ddassign.subspace import model_subspace_oracle


def random_spectrum(rng, n, with_pair=None, radius=0.9, min_gap=0.05):
    """Conjugate-closed spectrum of ``n`` distinct values inside the disc."""
    if with_pair is None:
        with_pair = n >= 2 and rng.random() < 0.5
    while True:
        vals = []
        if with_pair:
            r, th = radius * np.sqrt(rng.uniform(0.05, 1)), rng.uniform(0.2, np.pi - 0.2)
            z = r * np.exp(1j * th)
            vals += [z, np.conj(z)]
        vals += list(rng.uniform(-radius, radius, n - len(vals)))
        v = np.asarray(vals, dtype=complex)
        gaps = np.abs(v[:, None] - v[None, :]) + np.eye(n)
        if gaps.min() > min_gap:
            return clean_spectrum(vals)


def allowable_eigvecs(model, spectrum_, rng):
    """Random eigenvectors from the model-based allowable subspaces."""
    n = model.n
    V = np.zeros((n, n), dtype=complex)
    for i, lam in enumerate(spectrum_):
        lam = complex(lam)
        if lam.imag < 0:
            continue
        sb = model_subspace_oracle(model, lam)
        g = rng.standard_normal(sb.dim)
        if lam.imag != 0:
            g = g + 1j * rng.standard_normal(sb.dim)
        v = sb.basis @ g
        V[:, i] = v / np.linalg.norm(v)
        if lam.imag > 0:
            j = next(k for k, mu in enumerate(spectrum_) if complex(mu) == lam.conjugate())
            V[:, j] = V[:, i].conj()
    return V.real.copy() if np.all(V.imag == 0) else V


def plant_ensemble(seed, count, n_range=(2, 6), m_range=(1, 3)):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(m_range[0], min(m_range[1], n) + 1))
        out.append(random_plant(rng, n, m))
    return out, rng

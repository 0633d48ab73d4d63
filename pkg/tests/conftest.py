"""Shared fixtures and independent oracles.

The oracles deliberately avoid the package's embedding and commutant
machinery: they build raw numpy tensors so that agreement is evidence, not
tautology.
"""
import itertools

import numpy as np
import pytest

from qmparse import SystemRegistry

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def ket(index: int, dim: int = 2) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def kron_all(*mats) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex) if mats[0].ndim == 2 else np.array([1.0], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def commutant_dim_oracle(generators: list, dim: int) -> int:
    """Dimension of the commutant by rank of the stacked commutator
    superoperators, computed with raw kron (independent of the engine).
    """
    blocks = []
    for g in generators:
        for m in (g, g.conj().T):
            blocks.append(np.kron(m, np.eye(dim)) - np.kron(np.eye(dim), m.T))
    if not blocks:
        return dim * dim
    s = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    return dim * dim - rank


def l2_assignment_oracle(v: np.ndarray, b: np.ndarray,
                         effects: list, tol: float = 1e-8) -> bool:
    """Does any assignment of the nondegenerate observable b's eigenprojectors
    to outcomes reproduce the POVM under pull-back through v?  Brute force.
    """
    _, vecs = np.linalg.eigh(b)
    mins = [np.outer(vecs[:, j], vecs[:, j].conj()) for j in range(b.shape[0])]
    pb = [v.conj().T @ p @ v for p in mins]
    n_k = len(effects)
    d_s = v.shape[1]
    for assign in itertools.product(range(n_k), repeat=len(mins)):
        ok = True
        for i in range(n_k):
            s = sum((pb[j] for j in range(len(mins)) if assign[j] == i),
                    np.zeros((d_s, d_s), dtype=complex))
            if np.linalg.norm(s - effects[i]) > tol:
                ok = False
                break
        if ok:
            return True
    return False


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def qubit_pair():
    return SystemRegistry([("S", 2), ("M", 2)])

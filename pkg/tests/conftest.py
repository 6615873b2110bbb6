import itertools
import math

import numpy as np
import pytest

from cobosim.fock import StateVector

ACCEPTANCE_LINES = []


def record_acceptance(criterion, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# --- independent oracles -------------------------------------------------------------

def antisymmetrized(modes, n_modes):
    """First-quantized Slater wavefunction ``A[e_{m1} x e_{m2} x ...]`` as a dense tensor."""
    k = len(modes)
    psi = np.zeros((n_modes,) * k)
    for perm in itertools.permutations(range(k)):
        sign = np.linalg.det(np.eye(k)[list(perm)])
        idx = tuple(modes[p] for p in perm)
        psi[idx] += sign
    return psi


def slater_sign(new_mode, occupied, n_modes):
    """Sign of ``a_new^dagger a_{s1}^dagger ... |0>`` relative to the sorted product."""
    unsorted = antisymmetrized([new_mode, *occupied], n_modes)
    ordered = antisymmetrized(sorted([new_mode, *occupied]), n_modes)
    return int(round(np.sum(unsorted * ordered) / np.sum(ordered * ordered)))


def jordan_wigner_annihilators(n_modes, same_block=None):
    """Dense ``a_k`` on the full ``2**n_modes`` space; basis index == occupation bitmask.

    ``same_block(j, k)`` restricts the Z string to modes j that share k's block.
    """
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for k in range(n_modes):
        mat = np.array([[1.0]])
        for j in reversed(range(n_modes)):
            if j == k:
                factor = lower
            elif j < k and (same_block is None or same_block(j, k)):
                factor = z
            else:
                factor = eye
            mat = np.kron(mat, factor)
        ops.append(mat)
    return ops


def dense_operator(expr, d, same_block=None):
    from cobosim.operators import Kind

    ann = jordan_wigner_annihilators(4 * d, same_block)
    dim = 2 ** (4 * d)
    total = np.zeros((dim, dim), dtype=complex)
    for term in expr.terms:
        mat = np.eye(dim, dtype=complex) * term.coefficient
        for mode, kind in term.factors:
            a = ann[mode.index(d)]
            mat = mat @ (a.T if kind is Kind.CREATE else a)
        total += mat
    return total


def esp_bruteforce(values, n):
    return sum(math.prod(c) for c in itertools.combinations(values, n))


# --- helpers ----------------------------------------------------------------------

def random_state(rng, d, n_terms, sector=None):
    if sector is None:
        keys = rng.choice(2 ** (4 * d), size=n_terms, replace=False)
    else:
        keys = rng.choice(sector.basis, size=min(n_terms, sector.dim), replace=False)
    amps = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    return StateVector(d, dict(zip((int(k) for k in keys), amps)))


def assert_states_close(a, b, tol):
    diff = a.add_scaled(-1.0, b)
    worst = max((abs(v) for _, v in diff), default=0.0)
    assert worst <= tol, f"max amplitude difference {worst:.3g} > {tol}"


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)

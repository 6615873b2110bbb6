"""Compare the compiled ladder-operator kernel with the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Two measurements per backend:
the raw kernel on every basis state of a sector, and the full matrix build of
the nonlocal Hamiltonian on that sector.
"""
import argparse
import timeit

from cobosim import _kernels_py, operators
from cobosim.operators import _compile, matrix_on_sector
from cobosim.protocols import build_hamiltonian
from cobosim.sector import enumerate_sector

try:
    from cobosim import _kernels as _compiled
except ImportError:
    _compiled = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(d: int, repeat: int) -> None:
    sector = enumerate_sector(d, 2, 2)
    h = build_hamiltonian("NONLOCAL_A", d) + build_hamiltonian("NONLOCAL_B", d)
    compiled_terms = _compile(h, d, operators.CrossSpecies.ANTICOMMUTE)
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["compiled"] = _compiled
    print(f"d={d}, sector (2, 2): {sector.dim} states, {len(h)} terms")
    reference = None
    original = operators.apply_term
    for name, impl in backends.items():
        def kernel_only():
            for _, modes, creates, masks in compiled_terms:
                impl.apply_term(sector.basis, modes, creates, masks)

        def full_matrix():
            operators.apply_term = impl.apply_term
            try:
                return matrix_on_sector(h, sector, sparse=True)
            finally:
                operators.apply_term = original

        m = full_matrix()
        if reference is None:
            reference = m
        else:
            assert abs(m - reference).max() == 0, "backends disagree"
        t_kernel = _best(kernel_only, repeat)
        t_matrix = _best(full_matrix, repeat)
        print(f"  {name:9s} kernel {t_kernel * 1e3:8.2f} ms   matrix build {t_matrix * 1e3:8.2f} ms")


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--d", type=int, nargs="+", default=[4, 6])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; only the fallback is timed")
    for d in args.d:
        bench(d, args.repeat)


if __name__ == "__main__":
    main()

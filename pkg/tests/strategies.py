"""Random inputs shared by the test modules."""
import numpy as np
from hypothesis import strategies as st


def random_mapping(rng, rows, cols, max_entry=4, inclusion=False):
    """Random nonnegative integer matrix with positive rows (and columns if asked)."""
    while True:
        lam = rng.integers(0, max_entry + 1, size=(rows, cols))
        if not lam.any(axis=1).all():
            continue
        if inclusion and not lam.any(axis=0).all():
            continue
        return lam.tolist()


def random_dims(rng, length, max_dim=4):
    return tuple(int(v) for v in rng.integers(1, max_dim + 1, size=length))


def random_hermitian(rng, n, scale=1.0):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (z + z.conj().T) / 2


def random_projection(rng, n, rank):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(z)
    v = q[:, :rank]
    return v @ v.conj().T


def random_chain(rng, depth, max_dim=6, max_blocks=3):
    """Random valid Bratteli chain with every block at most ``max_dim``.

    Built top-down: each level's blocks are sums of the previous blocks.
    Returns (dims per level, inclusion matrices).
    """
    while True:
        dims = [random_dims(rng, int(rng.integers(1, max_blocks + 1)), 3)]
        incs = []
        ok = True
        for _ in range(depth - 1):
            prev = dims[-1]
            lam = random_mapping(rng, int(rng.integers(1, max_blocks + 1)), len(prev),
                                 max_entry=2, inclusion=True)
            nxt = tuple(int(v) for v in np.array(lam) @ np.array(prev))
            if max(nxt) > max_dim:
                ok = False
                break
            dims.append(nxt)
            incs.append(lam)
        if ok:
            return dims, incs


dims_strategy = st.lists(st.integers(1, 6), min_size=1, max_size=3).map(tuple)


@st.composite
def mapping_problems(draw, max_entry=3):
    """(source dims, mapping matrix rows) with every row positive."""
    src = draw(dims_strategy)
    rows = draw(st.integers(1, 3))
    lam = []
    for _ in range(rows):
        row = draw(st.lists(st.integers(0, max_entry), min_size=len(src), max_size=len(src))
                   .filter(any))
        lam.append(row)
    return src, lam

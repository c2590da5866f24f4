"""Random commuting and non-commuting channel pairs on M_n.

Commuting pairs are built from shared structure: a common eigenbasis of
the Kraus operators, polynomials in a single channel, or covariance under
the Weyl group (Weyl channels are diagonal in the Weyl basis and so
commute with each other, while their Kraus operators do not).
"""

from __future__ import annotations

import numpy as np

from .channel import Channel, commutation_defect, compose, from_kraus, random_channel, random_unitary


def weyl_ops(n: int) -> np.ndarray:
    """``X^a Z^b`` for ``0 <= a, b < n``, stacked with ``a`` major."""
    shift = np.roll(np.eye(n), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(n) / n))
    out = []
    for a in range(n):
        for b in range(n):
            out.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return np.array(out)


def _weights(rng: np.random.Generator, k: int, total: float) -> np.ndarray:
    w = rng.dirichlet(np.ones(k))
    return total * w


def shared_basis_pair(rng: np.random.Generator, n: int, m: int = 2, k: int = 2) -> tuple[Channel, Channel]:
    """Kraus operators diagonal in one random basis; contractive."""
    u = random_unitary(rng, n)

    def family(size):
        d = rng.normal(size=(size, n)) + 1j * rng.normal(size=(size, n))
        d /= np.sqrt(np.max(np.sum(np.abs(d) ** 2, axis=0)))
        return [u @ np.diag(row) @ u.conj().T for row in d]

    return from_kraus(family(m)), from_kraus(family(k))


def polynomial_pair(rng: np.random.Generator, n: int, m: int = 2) -> tuple[Channel, Channel]:
    """``Theta`` and ``a Theta + b Theta^2 + c id`` with ``a + b + c <= 1``."""
    theta = random_channel(rng, n, m, scale=rng.uniform(0.5, 1.0))
    a, b, c = _weights(rng, 3, rng.uniform(0.5, 1.0))
    phi = Channel(a * theta.choi + b * compose(theta, theta).choi + c * Channel.identity(n).choi, n)
    return theta, phi


def weyl_pair(rng: np.random.Generator, n: int) -> tuple[Channel, Channel]:
    """Two random Weyl channels ``sum p_g W_g a W_g*``."""
    ops = weyl_ops(n)

    def channel():
        keep = rng.choice(len(ops), size=rng.integers(2, len(ops) + 1), replace=False)
        p = _weights(rng, len(keep), 1.0)
        return from_kraus([np.sqrt(pi) * ops[g] for pi, g in zip(p, keep)])

    return channel(), channel()


def commuting_pairs(rng: np.random.Generator, count: int, dims=(2, 3)) -> list[tuple[str, Channel, Channel]]:
    """``count`` labelled commuting pairs cycling through the families and ``dims``."""
    makers = (
        ("shared_basis", lambda n: shared_basis_pair(rng, n, int(rng.integers(1, 4)), int(rng.integers(1, 4)))),
        ("polynomial", lambda n: polynomial_pair(rng, n, int(rng.integers(1, 3)))),
        ("weyl", lambda n: weyl_pair(rng, n)),
    )
    out = []
    for i in range(count):
        name, make = makers[i % len(makers)]
        n = dims[(i // len(makers)) % len(dims)]
        th, ph = make(n)
        out.append((f"{name}_{n}", th, ph))
    return out


def noncommuting_pairs(
    rng: np.random.Generator, count: int, dims=(2, 3), min_defect: float = 1e-3
) -> list[tuple[str, Channel, Channel]]:
    """Generic random pairs, kept only if their commutator is clearly nonzero."""
    out = []
    i = 0
    while len(out) < count:
        n = dims[i % len(dims)]
        i += 1
        th = random_channel(rng, n, int(rng.integers(1, 4)))
        ph = random_channel(rng, n, int(rng.integers(1, 4)))
        if commutation_defect(th, ph) > min_defect:
            out.append((f"random_{n}", th, ph))
    return out

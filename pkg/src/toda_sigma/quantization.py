"""Cartan-matrix algebra and the energy identities of SU(n+1) Toda systems.

Everything here is exact: inputs are rationals (or RealScalars, which go
through the same formulas), and results are Fractions when the inputs are.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import as_rational


@dataclass(frozen=True)
class CartanMatrix:
    """The tridiagonal (2, -1) matrix A_n with its exact inverse."""

    n: int
    entries: tuple[tuple[int, ...], ...]
    inverse: tuple[tuple[Fraction, ...], ...]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def apply(self, v: Sequence) -> list:
        """``A v`` for a vector of Fractions, ints or RealScalars."""
        _check_dim(self, v)
        return [_dot(row, v) for row in self.entries]

    def solve(self, b: Sequence) -> list:
        """``A^{-1} b`` using the stored exact inverse."""
        _check_dim(self, b)
        return [_dot(row, b) for row in self.inverse]

    def quadratic(self, v: Sequence):
        """``sum_ij a_ij v_i v_j``."""
        return _dot(v, self.apply(v))

    def determinant(self) -> int:
        return self.n + 1


def _dot(a: Sequence, b: Sequence):
    total = 0
    for x, y in zip(a, b):
        if x == 0:
            continue
        total = total + x * y
    return total


def _check_dim(A: CartanMatrix, v: Sequence):
    if len(v) != A.n:
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, vector has {len(v)} entries")


def cartan(n: int) -> CartanMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    entries = tuple(
        tuple(2 if i == j else -1 if abs(i - j) == 1 else 0 for j in range(n)) for i in range(n)
    )
    # closed form: (A^{-1})_ij = min(i,j) (n + 1 - max(i,j)) / (n + 1), 1-based
    inverse = tuple(
        tuple(Fraction(min(i, j) * (n + 1 - max(i, j)), n + 1) for j in range(1, n + 1))
        for i in range(1, n + 1)
    )
    return CartanMatrix(n, entries, inverse)


def gamma_vector(gamma: Sequence) -> tuple[Fraction, ...]:
    """Validate singular strengths: each must be a rational > -1."""
    out = tuple(as_rational(g) for g in gamma)
    for i, g in enumerate(out):
        if g <= -1:
            raise ValueError(f"gamma[{i}] = {g} must be > -1")
    return out


def pohozaev_residual(A: CartanMatrix, sigma: Sequence, gamma: Sequence):
    """``sum a_ij s_i s_j - 4 sum (1 + gamma_i) s_i``; zero for admissible limit energies."""
    _check_dim(A, sigma)
    gamma = gamma_vector(gamma)
    _check_dim(A, gamma)
    linear = _dot([4 * (1 + g) for g in gamma], sigma)
    return A.quadratic(sigma) - linear


def fully_bubbling_energy(n: int, gamma: Sequence) -> list[Fraction]:
    """Energy of an entire SU(n+1) solution with singular strengths ``gamma``.

    Solves ``A sigma = b`` with ``b_i = 2 (2 + gamma_i + gamma_{n+1-i})``.
    """
    gamma = gamma_vector(gamma)
    A = cartan(n)
    _check_dim(A, gamma)
    b = [2 * (2 + gamma[i] + gamma[n - 1 - i]) for i in range(n)]
    return A.solve(b)


def gap_form(A: CartanMatrix, sigma_v: Sequence, gamma: Sequence, s: Sequence):
    """``sum a_ij s_i s_j + 2 sum_i (sum_j a_ij sv_j - 2 - 2 gamma_i) s_i``.

    This is the difference of the Pohozaev identity at ``sigma_v + s`` and at
    ``sigma_v``; for ``gamma = 0`` it reduces to the regular-case form.
    """
    _check_dim(A, s)
    margins = margin_check(A, sigma_v, gamma)
    return A.quadratic(s) + 2 * _dot(margins, s)


def margin_check(A: CartanMatrix, sigma_v: Sequence, gamma: Sequence) -> list:
    """Margins ``m_i = sum_j a_ij sv_j - 2 - 2 gamma_i``; all positive for a bubble energy."""
    gamma = gamma_vector(gamma)
    _check_dim(A, gamma)
    return [row - 2 - 2 * g for row, g in zip(A.apply(sigma_v), gamma)]

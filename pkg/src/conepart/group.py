"""Elementary abelian group (Z_p)^k acting on R^d by permuting coordinates.

Elements are integers 0..d-1 encoding base-p digit vectors (little-endian),
so the identity is always index 0 and the group law is componentwise
addition mod p. The action on R^d is the left regular action on the
standard basis indexed by group elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, InvalidParameterError

# Largest supported group order d = p^k. Desk-scale work needs far less;
# the op table is a dense d x d array, so keep this bounded.
MAX_ORDER = 2048


def _is_odd_prime(p: int) -> bool:
    if p < 3 or p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class GroupTable:
    """The group (Z_p)^k with elements enumerated 0..d-1 by base-p digits."""

    p: int
    k: int
    d: int
    op_table: np.ndarray = field(repr=False)  # (d, d) int64, op_table[g, h] = g*h

    def multiply(self, g: int, h: int) -> int:
        if not (0 <= g < self.d and 0 <= h < self.d):
            raise InvalidParameterError(f"element index out of range 0..{self.d - 1}")
        return int(self.op_table[g, h])

    def inverse(self, g: int) -> int:
        if not (0 <= g < self.d):
            raise InvalidParameterError(f"element index out of range 0..{self.d - 1}")
        return int(self._inverses[g])

    @property
    def _inverses(self) -> np.ndarray:
        # identity is index 0; invert by digitwise negation mod p
        digits = _digits(np.arange(self.d), self.p, self.k)
        return _undigits((-digits) % self.p, self.p)

    def digits(self, g: int) -> tuple[int, ...]:
        """Base-p digit vector of an element (little-endian)."""
        return tuple(int(x) for x in _digits(np.array([g]), self.p, self.k)[0])


def _digits(idx: np.ndarray, p: int, k: int) -> np.ndarray:
    out = np.empty((idx.size, k), dtype=np.int64)
    rem = idx.astype(np.int64)
    for i in range(k):
        out[:, i] = rem % p
        rem = rem // p
    return out


def _undigits(digits: np.ndarray, p: int) -> np.ndarray:
    weights = p ** np.arange(digits.shape[1], dtype=np.int64)
    return digits @ weights


def make_group(p: int, k: int) -> GroupTable:
    """Build (Z_p)^k for an odd prime p; d = p^k is the ambient dimension."""
    if not isinstance(p, (int, np.integer)) or not isinstance(k, (int, np.integer)):
        raise InvalidParameterError("p and k must be integers")
    if not _is_odd_prime(int(p)):
        raise InvalidParameterError(f"p must be an odd prime, got {p}")
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    d = int(p) ** int(k)
    if d > MAX_ORDER:
        raise CapacityError(f"group order p^k = {d} exceeds cap {MAX_ORDER}")
    idx = np.arange(d)
    digits = _digits(idx, p, k)  # (d, k)
    # op_table[g, h]: digitwise sum mod p, re-encoded
    sums = (digits[:, None, :] + digits[None, :, :]) % p
    table = _undigits(sums.reshape(d * d, k), p).reshape(d, d)
    return GroupTable(p=int(p), k=int(k), d=d, op_table=table)


def multiply(t: GroupTable, g: int, h: int) -> int:
    return t.multiply(g, h)


@dataclass(frozen=True)
class PermutationAction:
    """Left regular action of a GroupTable on basis vectors e_0..e_{d-1}.

    perm(g) sends basis index h to g*h, i.e. act(g, x)[g*h] = x[h].
    """

    table: GroupTable
    perms: np.ndarray = field(repr=False)      # perms[g][h] = g*h
    inv_perms: np.ndarray = field(repr=False)  # inv_perms[g][i] = g^{-1}*i

    @property
    def d(self) -> int:
        return self.table.d

    def perm(self, g: int) -> np.ndarray:
        return self.perms[g]

    def act(self, g: int, x: np.ndarray) -> np.ndarray:
        return act_on_vector(self, g, x)

    def permutation_matrix(self, g: int) -> np.ndarray:
        """Matrix P with P @ e_h = e_{g*h}."""
        d = self.d
        mat = np.zeros((d, d))
        mat[self.perms[g], np.arange(d)] = 1.0
        return mat


def regular_action(t: GroupTable) -> PermutationAction:
    perms = t.op_table.copy()
    inv = np.empty_like(perms)
    for g in range(t.d):
        inv[g, perms[g]] = np.arange(t.d)
    return PermutationAction(table=t, perms=perms, inv_perms=inv)


def act_on_vector(a: PermutationAction, g: int, x: np.ndarray) -> np.ndarray:
    """Permute coordinates of x by the action of g: output g*h gets input h."""
    x = np.asarray(x, dtype=float)
    if x.shape != (a.d,):
        raise InvalidParameterError(f"vector must have length {a.d}, got shape {x.shape}")
    # gather form: y[i] = x[g^{-1} i]
    return x[a.inv_perms[g]]

"""Symmetric Jordan data for complex confocal families"""

from typing import Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


def isotropic_vector(j: int, size: int, conjugate: bool = False) -> np.ndarray:
    """f_j = (e_{2j-1} + i e_{2j}) / sqrt(2) inside a block of the given size"""
    v = np.zeros(size, dtype=complex)
    v[2 * j - 2] = 1.0
    v[2 * j - 1] = -1j if conjugate else 1j
    return v / np.sqrt(2.0)


def nilpotent_block(size: int) -> np.ndarray:
    """Symmetric nilpotent J_p of exact order p built on isotropic vectors"""
    J = np.zeros((size, size), dtype=complex)
    if size == 1:
        return J
    k = size // 2
    for j in range(1, k):
        f = isotropic_vector(j, size)
        fb = isotropic_vector(j + 1, size, conjugate=True)
        J += np.outer(f, fb) + np.outer(fb, f)
    fk = isotropic_vector(k, size)
    if size % 2 == 0:
        J += np.outer(fk, fk)
    else:
        e = np.zeros(size, dtype=complex)
        e[-1] = 1.0
        J += np.outer(fk, e) + np.outer(e, fk)
    return J


class SJBlock(BaseModel):
    """Block a I_p + J_p"""
    model_config = ConfigDict(frozen=True)

    eigenvalue: Any
    size: int

    @field_validator("eigenvalue")
    @classmethod
    def as_complex(cls, value: Any) -> complex:
        return complex(value)

    @field_validator("size")
    @classmethod
    def check_size(cls, size: int) -> int:
        if size < 1:
            raise ValueError("block size must be positive")
        return size

    def realize(self) -> np.ndarray:
        return self.eigenvalue * np.eye(self.size, dtype=complex) + nilpotent_block(self.size)


class SJMatrix(BaseModel):
    """Block diagonal matrix in symmetric Jordan form"""
    model_config = ConfigDict(frozen=True)

    blocks: Tuple[SJBlock, ...]

    @property
    def dimension(self) -> int:
        return sum(b.size for b in self.blocks)

    @property
    def offsets(self) -> Tuple[int, ...]:
        out, pos = [], 0
        for b in self.blocks:
            out.append(pos)
            pos += b.size
        return tuple(out)

    def realize(self) -> np.ndarray:
        M = np.zeros((self.dimension, self.dimension), dtype=complex)
        for b, off in zip(self.blocks, self.offsets):
            M[off:off + b.size, off:off + b.size] = b.realize()
        return M


class CanonicalQuadric(BaseModel):
    """Q_0(x) = x^T A x + 2 B^T x + C with A in symmetric Jordan form"""
    model_config = ConfigDict(frozen=True)

    A: SJMatrix
    B: Tuple[Any, ...]
    C: Any
    kind: str

    @field_validator("B")
    @classmethod
    def as_complex_vector(cls, value: Tuple[Any, ...]) -> Tuple[complex, ...]:
        return tuple(complex(v) for v in value)

    @field_validator("C")
    @classmethod
    def as_complex(cls, value: Any) -> complex:
        return complex(value)

    @model_validator(mode="after")
    def check_kind(self) -> "CanonicalQuadric":
        n = self.A.dimension
        if len(self.B) != n:
            raise ValueError("B must match the dimension of A")
        A = self.A.realize()
        B = self.b
        tol = 1e-12
        if self.kind == "QC":
            if np.any(np.abs([blk.eigenvalue for blk in self.A.blocks]) <= tol):
                raise ValueError("QC needs invertible A")
            if np.max(np.abs(B), initial=0.0) > tol or abs(self.C + 1) > tol:
                raise ValueError("QC needs B = 0 and C = -1")
        elif self.kind == "QWC":
            last = self.A.blocks[-1]
            kernel_blocks = [blk for blk in self.A.blocks if abs(blk.eigenvalue) <= tol]
            e = np.zeros(n, dtype=complex)
            e[-1] = 1.0
            if kernel_blocks != [last] or last.size != 1:
                raise ValueError("QWC needs ker A spanned by the last basis vector")
            if np.max(np.abs(B + e)) > tol or abs(self.C) > tol:
                raise ValueError("QWC needs B = -e_last and C = 0")
        elif self.kind == "IQWC":
            first = self.A.blocks[0]
            kernel_blocks = [blk for blk in self.A.blocks if abs(blk.eigenvalue) <= tol]
            if kernel_blocks != [first] or first.size < 2:
                raise ValueError("IQWC needs a leading nilpotent block of size >= 2")
            fb = np.zeros(n, dtype=complex)
            fb[:first.size] = isotropic_vector(1, first.size, conjugate=True)
            if np.max(np.abs(B + fb)) > tol or abs(self.C) > tol:
                raise ValueError("IQWC needs B = -conj(f_1) and C = 0")
        else:
            raise ValueError(f"Unknown quadric kind: {self.kind}")
        return self

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.B, dtype=complex)

    @property
    def dim(self) -> int:
        return self.A.dimension

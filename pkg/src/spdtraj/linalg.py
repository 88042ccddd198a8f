"""Eigendecomposition-based functions of symmetric matrices.

Every matrix formula in the SPD geometry reduces to compositions of
exp/log/sqrt/pow of symmetric matrices, so a single well-guarded primitive
is used throughout: diagonalize, map the eigenvalues, reassemble, and
re-symmetrize the result as ``(R + R.T) / 2`` to shed rounding drift.

All functions accept stacked inputs of shape ``(..., n, n)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalRangeError, ValidationError

# Relative tolerance for symmetry checks of inputs.
SYM_RTOL = 1e-9
# Eigenvalues below PD_RTOL * max_eigenvalue are treated as numerically zero.
PD_RTOL = 1e-12

_POSITIVE_ONLY = {"sqrt", "log"}

_FUNCS = {
    "sqrt": np.sqrt,
    "log": np.log,
    "exp": np.exp,
}


def sym(mat: np.ndarray) -> np.ndarray:
    """Symmetric part ``(M + M.T) / 2`` of the trailing two axes."""
    return 0.5 * (mat + np.swapaxes(mat, -1, -2))


def is_symmetric(mat: np.ndarray, rtol: float = SYM_RTOL) -> bool:
    scale = max(float(np.abs(mat).max()), 1.0)
    return bool(np.abs(mat - np.swapaxes(mat, -1, -2)).max() <= rtol * scale)


def require_symmetric(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.shape[-1] != mat.shape[-2]:
        raise ValidationError(f"{what} must be square, got shape {mat.shape}")
    if not is_symmetric(mat):
        raise ValidationError(f"{what} is not symmetric within tolerance {SYM_RTOL}")
    return mat


def sym_matrix_function(mat: np.ndarray, func: str, power: float | None = None) -> np.ndarray:
    """Apply ``func`` in {'sqrt', 'log', 'exp', 'pow'} to a symmetric matrix.

    The function acts on the eigenvalues while the eigenvectors are kept.
    For 'sqrt' and 'log' (and 'pow' with non-integer exponents) the matrix
    must be positive definite; an eigenvalue at or below the PD cutoff
    raises :class:`NumericalRangeError` naming the offending eigenvalue.
    """
    mat = require_symmetric(mat, what=f"argument of {func}")
    eigvals, eigvecs = np.linalg.eigh(mat)
    if func in _POSITIVE_ONLY or func == "pow":
        cutoff = PD_RTOL * max(float(eigvals.max()), 0.0)
        low = float(eigvals.min())
        if low <= cutoff:
            raise NumericalRangeError(
                f"matrix {func} needs a positive-definite argument; "
                f"smallest eigenvalue {low:.3e} is below cutoff {cutoff:.3e}"
            )
    if func == "pow":
        if power is None:
            raise ValidationError("'pow' requires the power argument")
        mapped = eigvals**power
    else:
        try:
            f = _FUNCS[func]
        except KeyError:
            raise ValidationError(f"unknown matrix function tag {func!r}") from None
        with np.errstate(over="raise"):
            try:
                mapped = f(eigvals)
            except FloatingPointError:
                raise NumericalRangeError(
                    f"matrix {func} overflowed; eigenvalue range "
                    f"[{eigvals.min():.3e}, {eigvals.max():.3e}]"
                ) from None
    return sym((eigvecs * mapped[..., None, :]) @ np.swapaxes(eigvecs, -1, -2))


def sym_sqrt(mat: np.ndarray) -> np.ndarray:
    return sym_matrix_function(mat, "sqrt")


def sym_log(mat: np.ndarray) -> np.ndarray:
    return sym_matrix_function(mat, "log")


def sym_exp(mat: np.ndarray) -> np.ndarray:
    return sym_matrix_function(mat, "exp")


def sym_pow(mat: np.ndarray, power: float) -> np.ndarray:
    return sym_matrix_function(mat, "pow", power=power)


def spd_inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix through its eigendecomposition."""
    return sym_matrix_function(mat, "pow", power=-1.0)

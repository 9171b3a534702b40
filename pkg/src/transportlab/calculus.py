"""Small-matrix calculus and the scalar functionals of transport theory.

Matrix functions accept a single ``(d, d)`` array or a batch ``(..., d, d)``
and act on the last two axes.  Functionals integrate against a measure on
a :class:`~transportlab.quadrature.QuadratureRule`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetryError, InvalidArgumentError, SingularMatrixError, UnderflowError
from .quadrature import integrate_values

SYMMETRY_TOLERANCE = 1e-12
SINGULAR_FLOOR = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class SymSpectrum:
    """Eigen-decomposition ``A = Q diag(eigenvalues) Q^T``, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, fn=None):
        """``Q diag(fn(eigenvalues)) Q^T`` (``fn`` defaults to the identity)."""
        lam = self.eigenvalues if fn is None else fn(self.eigenvalues)
        Q = self.eigenvectors
        return np.einsum("...ik,...k,...jk->...ij", Q, lam, Q)


def _matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InvalidArgumentError(f"expected square matrices, got shape {A.shape}")
    return A


def symmetrize(A):
    """Return ``(A + A^T)/2`` after checking the asymmetry is round-off."""
    A = _matrix(A)
    At = np.swapaxes(A, -1, -2)
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    gap = float(np.max(np.abs(A - At), initial=0.0))
    if gap > SYMMETRY_TOLERANCE * scale:
        raise AsymmetryError(f"matrix is not symmetric (max |A - A^T| = {gap:.3e})")
    return 0.5 * (A + At)


def sym_spectrum(A):
    """Spectrum of a symmetric matrix (or batch)."""
    lam, Q = np.linalg.eigh(symmetrize(A))
    return SymSpectrum(lam, Q)


def hs_norm(A):
    """Hilbert-Schmidt norm ``sqrt(sum A_ij^2)``."""
    A = _matrix(A)
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def op_norm(A):
    """Operator norm of a symmetric matrix, the largest ``|eigenvalue|``."""
    lam = sym_spectrum(A).eigenvalues
    return np.max(np.abs(lam), axis=-1)


def positive_part(A):
    """Clamp the negative eigenvalues of a symmetric matrix to zero."""
    return sym_spectrum(A).reconstruct(lambda lam: np.maximum(lam, 0.0))


def _positive_spectrum(A):
    spec = sym_spectrum(A)
    lam_min = float(np.min(spec.eigenvalues))
    if not lam_min > SINGULAR_FLOOR:
        raise SingularMatrixError(f"matrix is not positive definite (smallest eigenvalue {lam_min:.3e})")
    return spec


def log_det2(A):
    """``log det2(A - Id) = sum(log lam + 1 - lam)`` for positive definite ``A``."""
    lam = _positive_spectrum(A).eigenvalues
    return np.sum(np.log(lam) + 1.0 - lam, axis=-1)


def det2_fredholm(A, d=None):
    """Fredholm-Carleman determinant ``det A * exp(d - Tr A)``.

    Evaluated in log space from the eigenvalues and exponentiated at the
    end, so large traces do not overflow.

    Parameters
    ----------
    A : array_like, shape (..., d, d)
        Positive definite.
    d : int, optional
        Must match the matrix size when given.
    """
    A = _matrix(A)
    if d is not None and d != A.shape[-1]:
        raise InvalidArgumentError(f"dimension {d} does not match matrix size {A.shape[-1]}")
    return np.exp(log_det2(A))


def matrix_sqrt(A):
    """Symmetric positive square root of an SPD matrix."""
    return _positive_spectrum(A).reconstruct(np.sqrt)


def matrix_inv_sqrt(A):
    """``A^{-1/2}`` for an SPD matrix."""
    return _positive_spectrum(A).reconstruct(lambda lam: 1.0 / np.sqrt(lam))


def fisher_information(mu, rule):
    """Fisher information ``int |grad V|^2 d mu``."""
    x = rule.nodes
    grad = mu.potential.gradient(x)
    return float(integrate_values(np.einsum("ni,ni->n", grad, grad) * mu.density(x), rule))


def _relative_weights(g, nu, rule):
    x = rule.nodes
    log_g = g.log_value(x)
    dens = nu.density(x)
    gdens = np.exp(log_g) * dens
    if np.any((gdens == 0) & (dens > LOG_FLOOR)):
        raise UnderflowError("relative density underflows where the reference density does not")
    return log_g, gdens


def relative_fisher(g, nu, rule):
    """Relative Fisher information ``int |grad g|^2 / g d nu``."""
    _, gdens = _relative_weights(g, nu, rule)
    dlog = g.log_gradient(rule.nodes)
    return float(integrate_values(np.einsum("ni,ni->n", dlog, dlog) * gdens, rule))


def relative_entropy(g, nu, rule):
    """Relative entropy ``int g log g d nu``."""
    log_g, gdens = _relative_weights(g, nu, rule)
    return float(integrate_values(log_g * gdens, rule))


def wasserstein2(mu, nu, transport, rule):
    """``(int |x - T(x)|^2 d mu)^{1/2}`` for a map ``T`` sending ``mu`` onto ``nu``."""
    if mu.dim != nu.dim or transport.dim != mu.dim:
        raise InvalidArgumentError("measure and map dimensions differ")
    x = rule.nodes
    disp = x - transport.value(x)
    return float(np.sqrt(integrate_values(np.einsum("ni,ni->n", disp, disp) * mu.density(x), rule)))


def lp_norm_values(values, density, p, rule):
    """``(int |f|^p d mu)^{1/p}`` from node values of ``f`` and of the density."""
    if not p >= 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p!r}")
    mag = np.maximum(np.abs(np.asarray(values, dtype=float)), LOG_FLOOR)
    powered = np.exp(p * np.log(mag))
    powered[np.abs(values) == 0] = 0.0
    return float(integrate_values(powered * density, rule)) ** (1.0 / p)


def directional_lp_norm(field, mu, p, rule):
    """``L^p(mu)`` norm of a scalar field.

    Parameters
    ----------
    field : callable or ndarray
        Vectorized scalar field, or its values at the nodes of ``rule``.
    p : float
        Exponent, ``p >= 1``; non-integer values are fine.
    """
    x = rule.nodes
    values = field(x) if callable(field) else field
    return lp_norm_values(values, mu.density(x), p, rule)

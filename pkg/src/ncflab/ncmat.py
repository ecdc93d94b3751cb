"""Finite-dimensional noncommutative core.

Elements of the trace algebra are plain complex ``(n, n)`` ndarrays.  The
state is the *normalized* matrix trace ``tau = Tr / n``, so ``tau(eye(n)) = 1``
and all L_p norms below inherit that normalization.  Operations are pure
functions of their inputs; nothing here mutates its arguments.
"""

import json

import numpy as np

from . import defaults

__all__ = [
    "tau",
    "absval",
    "herm_defect",
    "require_selfadjoint",
    "schatten_norm",
    "polar_decompose",
    "psd_leq",
    "mat_power",
    "random_mat",
    "random_psd",
    "random_selfadjoint",
    "mat_to_json",
    "mat_from_json",
]


def _as_square(x):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("matrix has non-finite entries")
    return x


def tau(x):
    """Normalized trace Tr(x)/n; a tracial state on the matrix algebra."""
    x = _as_square(x)
    return np.trace(x) / x.shape[0]


def absval(x):
    """Modulus |x| = (x* x)^(1/2), positive semidefinite."""
    x = _as_square(x)
    # svd route: x = U s V*  =>  |x| = V s V*
    _, s, vh = np.linalg.svd(x)
    return (vh.conj().T * s) @ vh


def herm_defect(x):
    """Operator-norm distance from x to its self-adjoint part."""
    x = _as_square(x)
    return float(np.linalg.norm(x - x.conj().T, 2))


def require_selfadjoint(x, tol=None, what="matrix"):
    x = _as_square(x)
    if tol is None:
        tol = defaults.HERM_TOL * max(1.0, np.linalg.norm(x, 2))
    if herm_defect(x) > tol:
        raise ValueError(f"{what} is not self-adjoint within tolerance {tol:g}")
    return 0.5 * (x + x.conj().T)


def schatten_norm(x, p):
    """Schatten norm (tau(|x|^p))^(1/p) w.r.t. the normalized trace.

    ``p`` may be any real >= 1 or ``np.inf`` (operator norm).  Note the
    normalization: for the identity in any dimension the 2-norm is 1, and
    for a general x the 2-norm equals the Frobenius norm divided by sqrt(n).
    """
    x = _as_square(x)
    if not (p >= 1):
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    s = np.linalg.svd(x, compute_uv=False)
    if np.isinf(p):
        return float(s[0]) if s.size else 0.0
    n = x.shape[0]
    return float((np.sum(s**p) / n) ** (1.0 / p))


def polar_decompose(x):
    """Polar decomposition x = u @ m with m = |x| PSD and u unitary.

    For rank-deficient x the partial isometry is completed to a full
    unitary (any orthonormal completion); only ``u @ m == x`` and
    ``m == |x|`` are guaranteed.
    """
    x = _as_square(x)
    u_svd, s, vh = np.linalg.svd(x)
    m = (vh.conj().T * s) @ vh
    u = u_svd @ vh
    return u, m


def psd_leq(a, b, tol=0.0):
    """Order test a <= b in the positive-cone sense: min eig(b - a) >= -tol."""
    a = require_selfadjoint(a, what="left operand")
    b = require_selfadjoint(b, what="right operand")
    if a.shape != b.shape:
        raise ValueError("operands must share dimension")
    w = np.linalg.eigvalsh(b - a)
    return bool(w[0] >= -tol)


def mat_power(a, alpha):
    """Functional-calculus power a^alpha of a PSD matrix.

    Eigenvalues are clipped at ``-EIG_CLIP * ||a||_inf`` to absorb
    eigensolver noise; anything more negative raises.
    """
    a = require_selfadjoint(a, what="base")
    w, v = np.linalg.eigh(a)
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    clip = defaults.EIG_CLIP * scale
    if w[0] < -clip:
        raise ValueError(
            f"matrix has negative eigenvalue {w[0]:.3e} beyond tolerance {clip:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return (v * w**float(alpha)) @ v.conj().T


def random_mat(rng, n, scale=1.0):
    """Complex Ginibre matrix, entries ~ scale * (N(0,1) + i N(0,1))/sqrt(2)."""
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def random_selfadjoint(rng, n, scale=1.0):
    x = random_mat(rng, n, scale)
    return 0.5 * (x + x.conj().T)


def random_psd(rng, n, scale=1.0):
    x = random_mat(rng, n, scale)
    return x @ x.conj().T


def mat_to_json(x):
    """Serialize a matrix as a row-major JSON array of [re, im] pairs."""
    x = _as_square(x)
    n = x.shape[0]
    flat = [[float(z.real), float(z.imag)] for z in x.reshape(-1)]
    return json.dumps({"dim": n, "entries": flat})


def mat_from_json(text):
    obj = json.loads(text)
    n = int(obj["dim"])
    flat = np.array([complex(re, im) for re, im in obj["entries"]])
    if flat.size != n * n:
        raise ValueError("entry count does not match dim")
    return flat.reshape(n, n)

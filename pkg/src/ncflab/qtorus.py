"""Rational-angle quantum torus: polynomials, trace, Fourier data, summability.

A polynomial sum_k alpha_k U^k on the 2-torus algebra with angle
theta = p/q is stored as a finite coefficient map with the fixed normal
ordering ``U^k = U1^{k1} U2^{k2}``; all commutation phases are absorbed at
multiplication time.  The concrete representation is the q-dimensional
clock/shift pair twisted by a point x of the ordinary torus,

    rho_x(U1) = e^{2 pi i x1} * clock,   rho_x(U2) = e^{2 pi i x2} * shift,

whose normalized matrix trace averaged over x recovers the canonical
trace (the x-average of any nonzero mode vanishes exactly on a grid finer
than the support).  L_p norms are grid quadratures of tau_q(|rho_x(f)|^p);
the p = 2 case is exact and must match Parseval.
"""

import json
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .optorus import OpGrid

__all__ = [
    "RationalAngle",
    "QTorusPoly",
    "clock_shift_rep",
    "twisted_rep",
    "fourier_coeff",
    "bochner_riesz_qt",
    "pi_x",
    "lp_norm_qt",
    "transfer_tilde",
    "riesz_factor",
    "random_poly",
    "poly_to_json",
    "poly_from_json",
]


@dataclass(frozen=True)
class RationalAngle:
    """Reduced fraction theta = p/q with q >= 1."""

    p: int
    q: int

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q must be a positive integer")
        g = gcd(self.p, self.q)
        if g != 1:
            object.__setattr__(self, "p", self.p // g)
            object.__setattr__(self, "q", self.q // g)

    @property
    def value(self):
        return self.p / self.q

    @classmethod
    def parse(cls, text):
        """Parse 'p/q' (or a bare integer) into a RationalAngle."""
        if "/" in text:
            p_s, q_s = text.split("/", 1)
            return cls(int(p_s), int(q_s))
        return cls(int(text), 1)


@dataclass
class QTorusPoly:
    """Finite coefficient map Z^2 -> C over a fixed rational angle."""

    angle: RationalAngle
    coeffs: dict = field(default_factory=dict)

    def cleaned(self, tol=0.0):
        out = {k: complex(v) for k, v in self.coeffs.items() if abs(v) > tol}
        return QTorusPoly(self.angle, out)

    def support_diameter(self):
        """Max per-axis spread of the frequency support."""
        if not self.coeffs:
            return 0
        ks = np.array(list(self.coeffs.keys()), dtype=int)
        return int((ks.max(axis=0) - ks.min(axis=0)).max())

    def l2_coeff_norm(self):
        return float(np.sqrt(sum(abs(v) ** 2 for v in self.coeffs.values())))

    def __add__(self, other):
        if other.angle != self.angle:
            raise ValueError("angles differ")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return QTorusPoly(self.angle, out)

    def __rmul__(self, scalar):
        return QTorusPoly(self.angle, {k: scalar * v for k, v in self.coeffs.items()})

    def adjoint(self):
        """f* under the normal ordering: (U^k)* = e^{-2 pi i theta k1 k2} U^{-k}."""
        th = self.angle.value
        out = {}
        for (k1, k2), v in self.coeffs.items():
            phase = np.exp(-2j * np.pi * th * k1 * k2)
            out[(-k1, -k2)] = out.get((-k1, -k2), 0.0) + np.conj(v) * phase
        return QTorusPoly(self.angle, out)

    def mul(self, other):
        """Product with commutation bookkeeping: U^k U^m = e^{-2 pi i theta k2 m1} U^{k+m}."""
        if other.angle != self.angle:
            raise ValueError("angles differ")
        th = self.angle.value
        out = {}
        for (k1, k2), a in self.coeffs.items():
            for (m1, m2), b in other.coeffs.items():
                key = (k1 + m1, k2 + m2)
                phase = np.exp(-2j * np.pi * th * k2 * m1)
                out[key] = out.get(key, 0.0) + a * b * phase
        return QTorusPoly(self.angle, out)

    def trace(self):
        """tau(f) = alpha_0."""
        return complex(self.coeffs.get((0, 0), 0.0))


def clock_shift_rep(angle):
    """Unitary q x q pair (U1, U2) with U1 U2 = e^{2 pi i theta} U2 U1.

    U1 is the clock diag(w^j) with w = e^{2 pi i p/q}; U2 the cyclic
    shift e_j -> e_{j+1}.  The normalized trace of U1^a U2^b vanishes
    unless q divides both a and b.
    """
    q = angle.q
    w = np.exp(2j * np.pi * angle.p / q)
    u1 = np.diag(w ** np.arange(q)).astype(complex)
    u2 = np.zeros((q, q), dtype=complex)
    u2[(np.arange(q) + 1) % q, np.arange(q)] = 1.0
    return u1, u2


def _mode_matrices(poly):
    """Matrices of the normal-ordered monomials U^k for each k in the support."""
    angle = poly.angle
    q = angle.q
    w = np.exp(2j * np.pi * angle.p / q)
    j = np.arange(q)
    mats = {}
    for (k1, k2) in poly.coeffs:
        # clock^k1 @ shift^k2 has entries w^{r k1} at (r, r - k2 mod q)
        m = np.zeros((q, q), dtype=complex)
        m[j, (j - k2) % q] = w ** (j * k1)
        mats[(k1, k2)] = m
    return mats


def twisted_rep(poly, x):
    """Evaluate the fiber representation rho_x(f) as a q x q matrix."""
    x = np.asarray(x, dtype=float)
    mats = _mode_matrices(poly)
    q = poly.angle.q
    out = np.zeros((q, q), dtype=complex)
    for k, v in poly.coeffs.items():
        out += v * np.exp(2j * np.pi * (x[0] * k[0] + x[1] * k[1])) * mats[k]
    return out


def _twisted_rep_grid(poly, grid_m):
    """rho_x(f) on the uniform grid x = (i, j)/M; returns (M, M, q, q)."""
    q = poly.angle.q
    mats = _mode_matrices(poly)
    t = np.arange(grid_m) / grid_m
    out = np.zeros((grid_m, grid_m, q, q), dtype=complex)
    for (k1, k2), v in poly.coeffs.items():
        ph = np.exp(2j * np.pi * np.add.outer(t * k1, t * k2))
        out += (v * ph)[:, :, None, None] * mats[(k1, k2)]
    return out


def fourier_coeff(poly, m):
    """tau((U^m)* f), computed through the algebra (adjoint, product, trace)."""
    um = QTorusPoly(poly.angle, {(int(m[0]), int(m[1])): 1.0})
    return um.adjoint().mul(poly).trace()


def riesz_factor(k1, k2, big_r, lam):
    """Summability factor (1 - |k/R|^2)_+^lambda; zero outside |k| < R."""
    base = 1.0 - (np.asarray(k1, dtype=float) ** 2 + np.asarray(k2, dtype=float) ** 2) / big_r**2
    out = np.zeros(np.shape(base), dtype=complex)
    pos = base > 0.0
    if np.any(pos):
        out[pos] = np.exp(lam * np.log(base[pos])) if lam != 0 else 1.0
    return out


def bochner_riesz_qt(poly, big_r, lam):
    """Summed means: coefficients scaled by (1 - |k/R|^2)_+^lambda."""
    if not (big_r > 0):
        raise ValueError("R must be positive")
    out = {}
    for (k1, k2), v in poly.coeffs.items():
        fac = complex(riesz_factor(np.array([k1]), np.array([k2]), big_r, lam)[0])
        if fac != 0.0:
            out[(k1, k2)] = v * fac
    return QTorusPoly(poly.angle, out)


def pi_x(poly, x):
    """Point isomorphism: alpha_k -> e^{2 pi i x.k} alpha_k (trace preserving)."""
    x = np.asarray(x, dtype=float)
    out = {
        k: v * np.exp(2j * np.pi * (x[0] * k[0] + x[1] * k[1]))
        for k, v in poly.coeffs.items()
    }
    return QTorusPoly(poly.angle, out)


def lp_norm_qt(poly, p, grid_m=None):
    """L_p norm via the x-averaged trace of |rho_x(f)|^p.

    Exact (to eigensolver precision) for p = 2 and, more generally, for
    even integer p once ``grid_m`` is at least p/2 times the support
    diameter plus one; other p are quadrature approximations whose
    convergence should be monitored by grid doubling.
    """
    if not (p >= 1):
        raise ValueError("p must satisfy p >= 1")
    diam = poly.support_diameter()
    if grid_m is None:
        grid_m = 2 * diam + 2
    if grid_m < 2 * diam + 1:
        raise ValueError(f"grid_m={grid_m} too small; need >= {2 * diam + 1}")
    q = poly.angle.q
    reps = _twisted_rep_grid(poly, grid_m)
    if p == 2:
        vals = np.abs(reps) ** 2
        return float(np.sqrt(vals.sum() / (q * grid_m**2)))
    gram = np.einsum("xyij,xyik->xyjk", reps.conj(), reps)
    if float(p).is_integer() and int(p) % 2 == 0:
        half = int(p) // 2
        power = np.linalg.matrix_power(gram, half)
        tr = np.einsum("xyii->xy", power).real
    else:
        w = np.linalg.eigvalsh(gram)
        tr = np.sum(np.clip(w, 0.0, None) ** (p / 2.0), axis=-1)
    return float((tr.sum() / (q * grid_m**2)) ** (1.0 / p))


def transfer_tilde(poly, grid_g):
    """Isometric embedding onto an operator-valued torus grid.

    Samples x -> rho_x(f) (equivalently: the anchor representation of
    pi_x(f)), so the m-th matrix Fourier coefficient of the output is
    alpha_m times the matrix of U^m, and scalar frequency multipliers act
    identically on grid and coefficients.
    """
    if grid_g < 2 or (grid_g & (grid_g - 1)) != 0:
        raise ValueError("grid_g must be a power of two")
    if grid_g < max(2, poly.support_diameter()):
        raise ValueError("grid_g must resolve the frequency support")
    data = _twisted_rep_grid(poly, grid_g)
    return OpGrid(data=data, domain="torus", length=1.0)


def random_poly(rng, angle, kmax=10, n_modes=12, scale=1.0):
    """Random polynomial with spectrum in [-kmax, kmax]^2."""
    coeffs = {}
    for _ in range(n_modes):
        k = (int(rng.integers(-kmax, kmax + 1)), int(rng.integers(-kmax, kmax + 1)))
        coeffs[k] = coeffs.get(k, 0.0) + scale * complex(
            rng.standard_normal(), rng.standard_normal()
        )
    return QTorusPoly(angle, coeffs)


def poly_to_json(poly):
    rows = [
        [int(k1), int(k2), float(v.real), float(v.imag)]
        for (k1, k2), v in sorted(poly.coeffs.items())
    ]
    return json.dumps({"p": poly.angle.p, "q": poly.angle.q, "coeffs": rows})


def poly_from_json(text):
    obj = json.loads(text)
    angle = RationalAngle(int(obj["p"]), int(obj["q"]))
    coeffs = {(int(r[0]), int(r[1])): complex(r[2], r[3]) for r in obj["coeffs"]}
    return QTorusPoly(angle, coeffs)

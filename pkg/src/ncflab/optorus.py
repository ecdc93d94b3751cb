"""Operator-valued functions on discretized tori and periodized boxes.

An :class:`OpGrid` holds a G x G array of n x n complex matrices sampled
either on the unit torus [0,1)^2 (cell measure 1/G^2) or on a centered box
[-L/2, L/2)^2 (cell measure (L/G)^2).  ``op_fft`` moves to the frequency
side with the continuum normalization, so Plancherel and the Parseval
pairing hold exactly on band-limited data; scalar Fourier multipliers act
entrywise on the matrix coefficients.

Conventions: the frequency window is the integers {-G/2, ..., G/2 - 1}
(torus) or that lattice divided by L (box), in numpy fft ordering.  Test
functions should be band-limited to half the window so products do not
alias.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "OpGrid",
    "MultiplierFn",
    "tau_abs_power",
    "op_fft",
    "op_ifft",
    "lp_norm_grid",
    "pairing",
    "apply_multiplier",
    "riesz_symbol",
    "bochner_riesz_grid",
    "riesz_ratio_sweep",
    "transference_check",
    "adversarial_family",
    "write_opgrid",
    "read_opgrid",
]

_MAGIC = b"NCFG"


@dataclass
class OpGrid:
    """Operator-valued samples on a uniform periodic grid."""

    data: np.ndarray  # (G, G, n, n) complex
    domain: str = "torus"  # 'torus' | 'box'
    length: float = 1.0  # physical side length L (1 for the torus)
    space: str = "x"  # 'x' | 'freq'

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == 2:
            self.data = self.data[:, :, None, None]
        if self.data.ndim != 4 or self.data.shape[0] != self.data.shape[1] \
                or self.data.shape[2] != self.data.shape[3]:
            raise ValueError(f"expected (G, G, n, n) data, got {self.data.shape}")
        if self.domain not in ("torus", "box"):
            raise ValueError("domain must be 'torus' or 'box'")
        if self.domain == "torus":
            self.length = 1.0
        if self.space not in ("x", "freq"):
            raise ValueError("space must be 'x' or 'freq'")

    @property
    def grid_g(self):
        return self.data.shape[0]

    @property
    def mat_dim(self):
        return self.data.shape[2]

    def cell_measure(self):
        g, L = self.grid_g, self.length
        if self.space == "x":
            return (L / g) ** 2
        return 1.0 / L**2

    def coords_1d(self):
        g = self.grid_g
        if self.space == "freq":
            return np.fft.fftfreq(g, d=1.0 / g) / self.length
        if self.domain == "torus":
            return np.arange(g) / g
        return -self.length / 2.0 + np.arange(g) * (self.length / g)

    def freq_ints(self):
        """Integer frequency indices in fft ordering."""
        g = self.grid_g
        return np.fft.fftfreq(g, d=1.0 / g).astype(int)

    def copy(self, data=None, space=None):
        return OpGrid(
            data=self.data.copy() if data is None else data,
            domain=self.domain,
            length=self.length,
            space=self.space if space is None else space,
        )


def tau_abs_power(data, p):
    """Per-sample tau(|A|^p) for stacked matrices (..., n, n)."""
    data = np.asarray(data, dtype=complex)
    n = data.shape[-1]
    if p == 2:
        return (np.abs(data) ** 2).sum(axis=(-1, -2)).real / n
    gram = np.einsum("...ij,...ik->...jk", data.conj(), data)
    if float(p).is_integer() and int(p) % 2 == 0:
        power = np.linalg.matrix_power(gram, int(p) // 2)
        return np.einsum("...ii->...", power).real / n
    if np.isinf(p):
        w = np.linalg.eigvalsh(gram)
        return np.sqrt(np.clip(w[..., -1], 0.0, None))
    w = np.linalg.eigvalsh(gram)
    return np.sum(np.clip(w, 0.0, None) ** (p / 2.0), axis=-1) / n


def _alt_signs(g):
    m = np.fft.fftfreq(g, d=1.0 / g).astype(int)
    return np.where((np.add.outer(m, m)) % 2 == 0, 1.0, -1.0)


def op_fft(grid):
    """Entrywise 2D transform to the frequency side (continuum normalization)."""
    if grid.space != "x":
        raise ValueError("op_fft expects a physical-side grid")
    g, L = grid.grid_g, grid.length
    spec = np.fft.fft2(grid.data, axes=(0, 1)) * (L / g) ** 2
    if grid.domain == "box":
        spec = spec * _alt_signs(g)[:, :, None, None]
    return grid.copy(data=spec, space="freq")


def op_ifft(grid):
    if grid.space != "freq":
        raise ValueError("op_ifft expects a frequency-side grid")
    g, L = grid.grid_g, grid.length
    spec = grid.data
    if grid.domain == "box":
        spec = spec * _alt_signs(g)[:, :, None, None]
    data = np.fft.ifft2(spec, axes=(0, 1)) * (g / L) ** 2
    return grid.copy(data=data, space="x")


def lp_norm_grid(grid, p):
    """(sum_x tau(|F(x)|^p) * cell)^{1/p}; p = inf gives the sup operator norm."""
    if not (p >= 1):
        raise ValueError("p must satisfy p >= 1")
    vals = tau_abs_power(grid.data, p)
    if np.isinf(p):
        return float(vals.max())
    return float((vals.sum() * grid.cell_measure()) ** (1.0 / p))


def pairing(g_grid, f_grid):
    """Trace pairing sum_x tr(g(x)* f(x)) * cell (same side, same layout)."""
    if g_grid.data.shape != f_grid.data.shape or g_grid.space != f_grid.space:
        raise ValueError("pairing requires identically laid out grids")
    val = np.einsum("xyij,xyij->", g_grid.data.conj(), f_grid.data)
    return complex(val * g_grid.cell_measure())


@dataclass
class MultiplierFn:
    """Scalar symbol xi -> C with a human-readable tag."""

    fn: callable
    tag: str = ""
    domain: str = "any"  # 'torus' | 'box' | 'any'

    def __call__(self, xi1, xi2):
        return np.asarray(self.fn(xi1, xi2), dtype=complex)


def apply_multiplier(grid, mult):
    """F^{-1}[ m(xi) F^[F] ]; the scalar m acts on every matrix entry."""
    if mult.domain != "any" and mult.domain != grid.domain:
        raise ValueError(f"multiplier domain {mult.domain!r} does not match grid")
    spec = op_fft(grid)
    f = spec.coords_1d()
    sym = mult(f[:, None], f[None, :])
    if not np.isfinite(sym).all():
        raise ValueError(f"multiplier {mult.tag!r} is not finite on the grid")
    spec.data = spec.data * sym[:, :, None, None]
    return op_ifft(spec)


def riesz_symbol(xi1, xi2, big_r, lam):
    """(1 - |xi/R|^2)_+^lambda with principal powers; sharp cutoff at lam = 0."""
    base = 1.0 - (np.asarray(xi1, dtype=float) ** 2 + np.asarray(xi2, dtype=float) ** 2) / big_r**2
    out = np.zeros_like(base, dtype=complex)
    pos = base > 0.0
    if lam == 0:
        out[pos] = 1.0
    else:
        out[pos] = np.exp(lam * np.log(base[pos]))
    return out


def bochner_riesz_grid(grid, big_r, lam):
    if not (big_r > 0):
        raise ValueError("R must be positive")
    if np.real(lam) < 0:
        raise ValueError("Re(lambda) must be nonnegative")
    mult = MultiplierFn(lambda a, b: riesz_symbol(a, b, big_r, lam), tag=f"riesz(R={big_r},lam={lam})")
    return apply_multiplier(grid, mult)


def riesz_ratio_sweep(family, p, lam, r_list):
    """Ratio table ||B_R f||_p / ||f||_p with the convergence column ||B_R f - f||_p.

    ``family`` is an iterable of (family_id, OpGrid).  Zero-norm members
    are skipped with a warning record.
    """
    records = []
    for fam_id, grid in family:
        base = lp_norm_grid(grid, p)
        if base == 0.0:
            records.append({"family_id": fam_id, "R": None, "ratio": None,
                            "error_norm": None, "warning": "zero-norm member skipped"})
            continue
        for big_r in r_list:
            out = bochner_riesz_grid(grid, big_r, lam)
            ratio = lp_norm_grid(out, p) / base
            diff = out.copy(data=out.data - grid.data)
            err = lp_norm_grid(diff, p)
            records.append({"family_id": fam_id, "R": float(big_r),
                            "ratio": float(ratio), "error_norm": float(err)})
    return records


def _bandlimit_defect(grid, max_abs_freq):
    spec = op_fft(grid)
    f = np.abs(spec.freq_ints())
    mask = (f[:, None] > max_abs_freq) | (f[None, :] > max_abs_freq)
    out_mass = np.abs(spec.data[mask]).max() if mask.any() else 0.0
    total = np.abs(spec.data).max()
    return float(out_mass / total) if total > 0 else 0.0


def transference_check(mult, grid, reps=3):
    """Max discrepancy between the torus multiplier {m(z)} and the periodized box route.

    The torus samples are tiled ``reps`` times per axis onto a box of side
    ``reps``; there the frequency lattice is Z^2 / reps and the tiled
    function lives exactly on the integer sub-lattice, so applying the
    continuous symbol and restricting to one period must reproduce the
    torus-side computation for band-limited input.
    """
    if grid.domain != "torus" or grid.space != "x":
        raise ValueError("transference_check expects a physical torus grid")
    g = grid.grid_g
    if _bandlimit_defect(grid, g // 4) > 1e-12:
        raise ValueError("input is not band-limited to half the frequency window")
    torus_out = apply_multiplier(grid, MultiplierFn(mult.fn, mult.tag, domain="any"))
    tiled = np.tile(grid.data, (reps, reps, 1, 1))
    box = OpGrid(data=tiled, domain="box", length=float(reps))
    box_out = apply_multiplier(box, MultiplierFn(mult.fn, mult.tag, domain="any"))
    restricted = box_out.data[:g, :g]
    return float(np.abs(restricted - torus_out.data).max())


# ---------------------------------------------------------------------------
# Documented adversarial families for the ratio sweeps.
# ---------------------------------------------------------------------------

def _shell_modes(big_r, width):
    m = np.arange(-int(np.ceil(big_r + width)), int(np.ceil(big_r + width)) + 1)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    rad = np.hypot(m1, m2)
    sel = (rad >= big_r - width) & (rad <= big_r + width)
    return m1[sel], m2[sel]


def focusing_field(grid_g, big_r, width=2.0, mat_dim=1, rng=None):
    """Sum of unimodular modes on the shell |m| ~ R (diagonally embedded)."""
    data = np.zeros((grid_g, grid_g, mat_dim, mat_dim), dtype=complex)
    m1, m2 = _shell_modes(big_r, width)
    if m1.size == 0:
        raise ValueError("empty frequency shell")
    phases = np.zeros(m1.shape) if rng is None else rng.uniform(0, 2 * np.pi, m1.shape)
    spec = np.zeros((grid_g, grid_g), dtype=complex)
    spec[m1 % grid_g, m2 % grid_g] = np.exp(1j * phases)
    field = np.fft.ifft2(spec) * grid_g**2
    for i in range(mat_dim):
        data[:, :, i, i] = field
    return OpGrid(data=data, domain="torus")


def random_matrix_field(grid_g, band, mat_dim, rng):
    """Random matrix coefficients supported on |m|_inf <= band."""
    spec = np.zeros((grid_g, grid_g, mat_dim, mat_dim), dtype=complex)
    m = np.arange(-band, band + 1)
    for a in m:
        for b in m:
            spec[a % grid_g, b % grid_g] = (
                rng.standard_normal((mat_dim, mat_dim))
                + 1j * rng.standard_normal((mat_dim, mat_dim))
            )
    data = np.fft.ifft2(spec, axes=(0, 1)) * grid_g**2
    return OpGrid(data=data, domain="torus")


def adversarial_family(grid_g, big_r, mat_dim=2, seed=0):
    """The documented sweep family: focusing shell, random field, diagonal scalar."""
    rng = np.random.default_rng(seed)
    fam = [
        ("focusing", focusing_field(grid_g, big_r, width=2.0, mat_dim=1)),
        ("focusing-random-phase", focusing_field(grid_g, big_r, width=2.0, mat_dim=1, rng=rng)),
        ("random-matrix", random_matrix_field(grid_g, max(2, int(big_r / 2)), mat_dim, rng)),
        ("diagonal-scalar", focusing_field(grid_g, big_r, width=1.0, mat_dim=mat_dim)),
    ]
    return fam


# ---------------------------------------------------------------------------
# Binary grid format: header (G, n, domain, L, space) + complex64 payload.
# ---------------------------------------------------------------------------

def write_opgrid(path_or_file, grid):
    header = struct.pack(
        "<4sIIIBdB",
        _MAGIC, 1, grid.grid_g, grid.mat_dim,
        0 if grid.domain == "torus" else 1,
        float(grid.length),
        0 if grid.space == "x" else 1,
    )
    payload = np.ascontiguousarray(grid.data, dtype=np.complex64).tobytes()
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "wb") as fh:
            fh.write(header + payload)
    else:
        path_or_file.write(header + payload)


def read_opgrid(path_or_file):
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "rb") as fh:
            raw = fh.read()
    else:
        raw = path_or_file.read()
    head = struct.calcsize("<4sIIIBdB")
    magic, version, g, n, dom, length, space = struct.unpack("<4sIIIBdB", raw[:head])
    if magic != _MAGIC or version != 1:
        raise ValueError("not an OpGrid file")
    data = np.frombuffer(raw[head:], dtype=np.complex64).reshape(g, g, n, n).astype(complex)
    return OpGrid(data=data, domain="torus" if dom == 0 else "box",
                  length=length, space="x" if space == 0 else "freq")

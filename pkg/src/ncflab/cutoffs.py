"""Smooth compactly supported bumps and partitions of unity.

All bumps derive from the standard C-infinity mollifier step, so the
telescoping partition identities hold exactly up to float rounding:

* ``phi`` (even, support [-1/2, 1/2]) and ``psi`` (support [1/4, 5/8])
  satisfy  phi(t) + sum_k psi(2^k (1 - t)) = 1  on [0, 1);
* ``omega`` equals 1 on |u| <= 1/4, vanishes for |u| >= 3/4, and its
  integer translates tile the line:  sum_l omega(x - l) = 1;
* ``kakeya_psi`` is the nonnegative, radially decreasing smoothing bump
  (1 on |t| < 1/2, support |t| < 2) used by the smoothed directional
  averages; ``psihat`` tabulates the transform of its mass-one rescaling.
"""

import numpy as np

__all__ = [
    "smoothstep",
    "CutoffSet",
    "build_cutoffs",
    "kakeya_psi",
    "kakeya_psi_mass",
    "psihat",
    "psihat_envelope",
    "psihat_curvature_bound",
]


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between."""
    t = np.asarray(t, dtype=float)
    pos = np.zeros_like(t)
    neg = np.zeros_like(t)
    m = t > 0
    pos[m] = np.exp(-1.0 / t[m])
    m = t < 1
    neg[m] = np.exp(-1.0 / (1.0 - t[m]))
    return pos / (pos + neg)


def _step_h(v):
    # 1 on v <= 1/2, 0 on v >= 5/8, smooth monotone transition between.
    return smoothstep((0.625 - np.asarray(v, dtype=float)) / 0.125)


class CutoffSet:
    """The concrete radial/angular cutoff triple (phi, psi, omega)."""

    def phi(self, t):
        """Even bump, 1 near 0, supported in [-1/2, 1/2]."""
        return 1.0 - _step_h(1.0 - np.abs(np.asarray(t, dtype=float)))

    def psi(self, u):
        """Radial annulus bump, supported in [1/4, 5/8] subset [1/8, 5/8]."""
        u = np.asarray(u, dtype=float)
        return _step_h(u) - _step_h(2.0 * u)

    def omega(self, u):
        """Angular bump: 1 on |u| <= 1/4, 0 for |u| >= 3/4, unit translates tile."""
        u = np.asarray(u, dtype=float)
        return smoothstep(2.0 * (u + 0.5) + 0.5) - smoothstep(2.0 * (u - 0.5) + 0.5)

    def radial_partition_residual(self, t):
        """|phi(t) + sum_k psi(2^k (1-t)) - 1| for t in [0, 1)."""
        t = np.asarray(t, dtype=float)
        total = self.phi(t).astype(float)
        for k in range(64):
            u = 2.0**k * (1.0 - t)
            if np.all(u > 0.625):
                break
            total = total + self.psi(u)
        return np.abs(total - 1.0)

    def angular_partition_residual(self, x):
        """|sum_l omega(x - l) - 1|."""
        x = np.asarray(x, dtype=float)
        base = np.floor(x)
        total = np.zeros_like(x)
        for d in (-1.0, 0.0, 1.0, 2.0):
            total = total + self.omega(x - (base + d))
        return np.abs(total - 1.0)


def build_cutoffs(check=True, tol=1e-8):
    """Construct the cutoff set and verify its partition identities."""
    cs = CutoffSet()
    if check:
        t = np.linspace(0.0, 1.0, 2049, endpoint=False)
        rad = float(cs.radial_partition_residual(t).max())
        x = np.linspace(-3.0, 3.0, 4097)
        ang = float(cs.angular_partition_residual(x).max())
        if rad > tol or ang > tol:
            raise RuntimeError(
                f"cutoff construction failed: radial residual {rad:.2e}, "
                f"angular residual {ang:.2e}"
            )
    return cs


# ---------------------------------------------------------------------------
# Smoothing bump for directional averages and its Fourier transform table.
# ---------------------------------------------------------------------------

def kakeya_psi(t):
    """Nonnegative, even, radially decreasing bump: 1 on |t| < 1/2, 0 for |t| >= 2."""
    t = np.abs(np.asarray(t, dtype=float))
    return smoothstep((2.0 - t) / 1.5)


def kakeya_psi_mass():
    """Total mass of kakeya_psi (the averages use psi / mass)."""
    return _psihat_table()["mass"]


_PSIHAT_CACHE = {}


def _psihat_table(s_max=2048.0, ds=1.0 / 4096.0):
    key = (s_max, ds)
    if key not in _PSIHAT_CACHE:
        # Zero-padded FFT of the (unnormalized) bump sampled on [-T/2, T/2).
        t_span = 1.0 / ds
        n = int(round(2.0 * s_max * t_span))
        dt = t_span / n
        j = np.arange(int(np.ceil(4.0 / dt)) + 2)
        tpos = j * dt
        half = kakeya_psi(tpos)
        vals = np.zeros(n)
        vals[: half.size] = half                      # t in [0, 2]
        vals[n - half.size + 1:] = half[1:][::-1]     # t in [-2, 0)
        spec = np.fft.rfft(vals).real * dt            # even real input -> real
        mass = float(spec[0])
        k_max = int(round(s_max * t_span))
        grid = np.arange(k_max + 1) * (1.0 / t_span)
        table = spec[: k_max + 1] / mass
        # Monotone decreasing majorant of |psihat| for tail certification.
        env = np.maximum.accumulate(np.abs(table)[::-1])[::-1]
        # (2 pi)^2 * integral t^2 psi~(t) dt  bounds |psihat''| everywhere.
        d2 = (2.0 * np.pi) ** 2 * float(np.sum(tpos**2 * half) * dt * 2.0) / mass
        _PSIHAT_CACHE[key] = {
            "grid": grid,
            "table": table,
            "env": env,
            "mass": mass,
            "ds": 1.0 / t_span,
            "s_max": s_max,
            "d2": d2,
        }
    return _PSIHAT_CACHE[key]


def psihat(s):
    """Fourier transform of the mass-one smoothing bump (real, even)."""
    tab = _psihat_table()
    s = np.abs(np.asarray(s, dtype=float))
    out = np.interp(s, tab["grid"], tab["table"], right=0.0)
    return out


def psihat_envelope(s):
    """Certified decreasing majorant of |psihat|; conservative beyond the table."""
    tab = _psihat_table()
    s = np.abs(np.asarray(s, dtype=float))
    out = np.interp(s, tab["grid"], tab["env"])
    beyond = s > tab["s_max"]
    if np.any(beyond):
        # integration by parts twice: |psihat(s)| <= tail constant / s^2,
        # anchored so the bound is continuous at the table end.
        anchor = tab["env"][-1] * tab["s_max"] ** 2
        out = np.where(beyond, anchor / np.maximum(s, 1.0) ** 2, out)
    return out


def psihat_curvature_bound():
    """Global bound on |psihat''|; gives |psihat(x)-psihat(y)| <= D2 |x^2-y^2| / 2."""
    return _psihat_table()["d2"]

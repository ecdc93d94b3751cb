"""Microlocal decomposition of the summability symbol and its geometric audits.

The radial dyadic pieces live on annuli 1 - (5/8) 2^-k <= |xi| <= 1 - (1/8) 2^-k
and split angularly into arcs of width ~ 2^{-k/2}.  Arc centers sit at
l / L(k) with L(k) = round(2^{k/2}) equally spaced angles, so the circular
angular partition of unity is exact for every k (and coincides with the
2^{-k/2} spacing whenever k is even).

Pieces are indexed by the wrapped signed arc index; the quadrant-a family
is the set of arcs strictly inside {x > 0, |y| < |x|}.  Overlap counting
for translated difference sets of arcs uses exact annular-sector
intersection geometry after a rectangle prune around the predicted center
w = e(th_l') - e(th_l).
"""

from dataclasses import dataclass

import numpy as np

from . import defaults
from .cutoffs import build_cutoffs, psihat, psihat_curvature_bound, psihat_envelope
from .kakeya import sector_indicator
from .optorus import OpGrid, op_ifft, riesz_symbol

__all__ = [
    "arc_count",
    "MicrolocalPiece",
    "eval_m00",
    "eval_mk",
    "eval_mkl",
    "riesz_reconstruction",
    "partition_audit",
    "case_tag",
    "case_a_indices",
    "strip_assign",
    "verify_deriv_bounds",
    "kernel_mkl",
    "kernel_scaled",
    "kernel_l1_audit",
    "geometry_witness",
    "overlap_count",
    "targeted_overlap_audit",
    "multiplier_sum_bound",
    "multiplier_sum_audit",
]

_CS = build_cutoffs(check=False)


def arc_count(k):
    """Number of angular arcs L(k) = round(2^{k/2}); equals 2^{k/2} for even k."""
    return int(round(2.0 ** (k / 2.0)))


def _wrap_half(x):
    """Wrap to [-1/2, 1/2)."""
    return (np.asarray(x, dtype=float) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class MicrolocalPiece:
    """One arc piece (k, l) of the dyadic annulus, with its order parameter."""

    k: int
    l: int
    lam: complex = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    @property
    def n_arcs(self):
        return arc_count(self.k)

    @property
    def theta_center(self):
        """Arc center in revolutions."""
        return (self.l % self.n_arcs) / self.n_arcs

    @property
    def theta_halfwidth(self):
        return 1.0 / self.n_arcs

    @property
    def radial_band(self):
        d = 2.0**-self.k
        return (1.0 - 0.625 * d, 1.0 - 0.125 * d)

    @property
    def case(self):
        return case_tag(self.k, self.l)

    def strip(self):
        return strip_assign(self.k, self.l)


def _lam_power(base, lam):
    """base^lam for positive base arrays, principal branch; base <= 0 -> 0."""
    base = np.asarray(base, dtype=float)
    out = np.zeros(base.shape, dtype=complex)
    pos = base > 0.0
    if lam == 0:
        out[pos] = 1.0
    else:
        out[pos] = np.exp(lam * np.log(base[pos]))
    return out


def eval_m00(xi1, xi2, lam):
    """Smooth head piece phi(|xi|) (1 - |xi|^2)^lam."""
    r = np.hypot(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    amp = _CS.phi(r)
    out = _lam_power(1.0 - r**2, lam)
    return amp * out


def eval_mk(xi1, xi2, k, lam):
    """Dyadic annulus piece (2^k (1-|xi|))^lam psi(2^k (1-|xi|)) (1+|xi|)^lam."""
    r = np.hypot(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    u = 2.0**k * (1.0 - r)
    amp = _CS.psi(u)
    out = np.zeros(np.shape(r), dtype=complex)
    m = amp > 0.0
    if np.any(m):
        out[m] = amp[m] * np.exp(lam * (np.log(u[m]) + np.log1p(r[m])))
    return out


def eval_mkl(xi1, xi2, piece):
    """Arc piece value m_k(xi) * omega(L(k) * (theta - l/L(k))) (wrapped angle)."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    theta = np.arctan2(xi2, xi1) / (2.0 * np.pi)
    big_l = piece.n_arcs
    u = _wrap_half(theta - piece.l / big_l) * big_l
    ang = _CS.omega(u)
    return eval_mk(xi1, xi2, piece.k, piece.lam) * ang


def riesz_reconstruction(xi1, xi2, lam, k_max=None):
    """m00 + sum_k 2^{-k lam} m_k; equals (1 - |xi|^2)_+^lam up to rounding."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    r = np.hypot(xi1, xi2)
    if k_max is None:
        gap = np.where(r < 1.0, 1.0 - r, 1.0)
        gap_min = max(float(gap.min()), 1e-18)
        k_max = int(np.ceil(np.log2(0.625 / gap_min))) + 1
        k_max = min(max(k_max, 0), 80)
    total = eval_m00(xi1, xi2, lam).astype(complex)
    for k in range(k_max + 1):
        total = total + 2.0 ** (-k * lam) * eval_mk(xi1, xi2, k, lam)
    return total


def partition_audit(n_points=10000, lam=0.5, k_list=(4, 6, 7, 9, 12), seed=0):
    """Residuals of the symbol reconstruction and of sum_l m_{k,l} = m_k."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, 1.2, n_points)
    th = rng.uniform(0.0, 2.0 * np.pi, n_points)
    xi1, xi2 = r * np.cos(th), r * np.sin(th)
    recon = riesz_reconstruction(xi1, xi2, lam)
    target = riesz_symbol(xi1, xi2, 1.0, lam)
    # the reconstruction carries (1-r)^lam (1+r)^lam = (1-r^2)^lam exactly
    sym_res = float(np.abs(recon - target).max())
    arc_res = {}
    for k in k_list:
        d = 2.0**-k
        rr = rng.uniform(1.0 - 0.625 * d, 1.0 - 0.125 * d, n_points)
        tt = rng.uniform(0.0, 2.0 * np.pi, n_points)
        a1, a2 = rr * np.cos(tt), rr * np.sin(tt)
        total = np.zeros(n_points, dtype=complex)
        for l in range(arc_count(k)):
            total += eval_mkl(a1, a2, MicrolocalPiece(k, l, lam))
        arc_res[k] = float(np.abs(total - eval_mk(a1, a2, k, lam)).max())
    return {"symbol_residual": sym_res, "arc_residuals": arc_res}


# ---------------------------------------------------------------------------
# Five-case quadrant split and strips.
# ---------------------------------------------------------------------------

def case_tag(k, l):
    """Quadrant classification of the arc support: 'a'..'d' or the diagonal case 'e'."""
    big_l = arc_count(k)
    c = _wrap_half(l / big_l)
    w = 1.0 / big_l
    lo, hi = c - w, c + w
    # diagonals at odd multiples of 1/8 (angles in revolutions)
    for diag in (-0.375, -0.125, 0.125, 0.375):
        if lo < diag < hi:
            return "e"
    mid = 0.5 * (lo + hi)
    if -0.125 <= mid <= 0.125:
        return "a"
    if 0.125 <= mid <= 0.375:
        return "c"
    if mid >= 0.375 or mid <= -0.375:
        return "b"
    return "d"


def case_a_indices(k):
    """Signed wrapped arc indices whose support lies strictly in {x>0, |y|<|x|}."""
    big_l = arc_count(k)
    l_max = int(np.floor(big_l / 8.0)) - 1
    return np.arange(-l_max, l_max + 1)


def strip_assign(k, l):
    """Canonical strip of width 40 * 2^{-k/2} containing the widened xi2 shadow.

    Returns (sigma, upsilon, (lo, hi)) with the strip
    [40 sigma w + upsilon w, 40 (sigma+1) w + upsilon w], w = 2^{-k/2};
    the subfamily index is upsilon + 1 in {1..40}.
    """
    if case_tag(k, l) != "a":
        raise ValueError("strips are assigned to quadrant-a pieces only")
    big_l = arc_count(k)
    w = 2.0 ** (-k / 2.0)
    center = (1.0 - 0.375 * 2.0**-k) * np.sin(2.0 * np.pi * _wrap_half(l / big_l))
    n = int(np.floor(center / w)) - 20
    lo, hi = n * w, (n + 40) * w
    if not (lo <= center - 10.0 * w and center + 10.0 * w <= hi):
        raise RuntimeError("no containing strip found")
    ups = n % 40
    sigma = (n - ups) // 40
    return sigma, ups, (lo, hi)


def shadow_interval(k, l):
    """Widened xi2 projection of the arc: center +- 10 * 2^{-k/2}."""
    big_l = arc_count(k)
    w = 2.0 ** (-k / 2.0)
    center = (1.0 - 0.375 * 2.0**-k) * np.sin(2.0 * np.pi * _wrap_half(l / big_l))
    return center - 10.0 * w, center + 10.0 * w


# ---------------------------------------------------------------------------
# Derivative bounds (separable finite differences in (r, theta)).
# ---------------------------------------------------------------------------

def _fd_sup(fun, grid, order, step):
    """Sup of |d^order f| on the grid by central differences."""
    if order == 0:
        return float(np.abs(fun(grid)).max())
    coeffs = {
        1: ([-0.5, 0.0, 0.5], 1),
        2: ([1.0, -2.0, 1.0], 1),
        3: ([-0.5, 1.0, 0.0, -1.0, 0.5], 2),
        4: ([1.0, -4.0, 6.0, -4.0, 1.0], 2),
    }[order]
    weights, reach = coeffs
    acc = np.zeros(grid.shape, dtype=complex)
    for i, w in enumerate(weights):
        acc += w * fun(grid + (i - reach) * step)
    return float(np.abs(acc).max() / step**order)


def verify_deriv_bounds(k, l, lam, max_order=2):
    """Normalized sups of d_r^a d_theta^b m_{k,l} against (1+|lam|)^a 2^{ka} 2^{kb/2}.

    The piece is separable in (r, theta), so the mixed sup is the product
    of the 1D sups.  Steps below ~1e-7 underflow the finite differences.
    """
    if max_order > 4:
        raise ValueError("finite differences degrade beyond order 4")
    big_l = arc_count(k)
    scale = 2.0**-k

    def radial(u):
        # m_k as a function of u = 2^k (1 - r), on the band [1/8, 5/8]
        amp = _CS.psi(u)
        out = np.zeros(np.shape(u), dtype=complex)
        m = amp > 0.0
        um = np.asarray(u)[m]
        out[m] = amp[m] * np.exp(lam * (np.log(um) + np.log(2.0 - scale * um)))
        return out

    u_grid = np.linspace(0.05, 0.7, 1201)
    t_grid = np.linspace(-0.9, 0.9, 1201)
    report = {}
    for a in range(max_order + 1):
        # d_r^a = (-2^k)^a d_u^a; normalization divides 2^{ka} back out
        step_u = max(1e-3, 1e-2 / (1 + abs(lam)))
        if step_u < 1e-7:
            raise ValueError("step-size underflow")
        sup_u = _fd_sup(radial, u_grid, a, step_u)
        for b in range(max_order + 1 - a):
            sup_t = _fd_sup(lambda t: _CS.omega(t), t_grid, b, 1e-2)
            # d_theta^b omega(L * (theta - c)) = L^b omega^{(b)}
            val = sup_u * sup_t * (big_l / 2.0 ** (k / 2.0)) ** b
            report[(a, b)] = val / (1.0 + abs(lam)) ** a
    return report


# ---------------------------------------------------------------------------
# Kernels: direct box transform and the rescaled engine for the k-sweep.
# ---------------------------------------------------------------------------

def kernel_mkl(piece, box_g, box_l):
    """Inverse transform of the sampled arc symbol on a centered box (scalar grid).

    Requires the box to resolve the 2^-k radial feature: box_g >= 2^{k+4}
    samples and a frequency window containing the unit disk.
    """
    if box_g < 2 ** (piece.k + 4):
        raise ValueError(f"box_g={box_g} cannot resolve 2^-{piece.k} features")
    if box_g / (2.0 * box_l) < 1.05:
        raise ValueError("frequency window must contain the unit disk")
    f = np.fft.fftfreq(box_g, d=1.0 / box_g) / box_l
    sym = eval_mkl(f[:, None], f[None, :], piece)
    spec = OpGrid(data=sym[:, :, None, None], domain="box", length=float(box_l),
                  space="freq")
    return op_ifft(spec)


def kernel_scaled(k, lam, grid=1024, u_center=-7.0, span=16.0):
    """Modulus of the l = 0 piece's kernel in the rescaled frame.

    Writing xi = (1 + 2^-k u, 2^{-k/2} v), the piece becomes a k-uniform
    compactly supported symbol eta(u, v); its inverse transform K satisfies
    |K(y1, y2)| = 2^{3k/2} |F^-1[m_{k,0}](2^k y1, 2^{k/2} y2)| exactly, and
    by rotation every l shares its modulus, total mass, and decay.
    Returns (y_axis, |K| array, metadata); y sampled at spacing 1/span.
    """
    g = grid
    step = span / g
    u = u_center - span / 2.0 + step * np.arange(g)
    v = -span / 2.0 + step * np.arange(g)
    scale = 2.0**-k
    root = 2.0 ** (-k / 2.0)
    xi1 = 1.0 + scale * u[:, None] + 0.0 * v[None, :]
    xi2 = root * (0.0 * u[:, None] + v[None, :])
    sym = eval_mkl(xi1, xi2, MicrolocalPiece(k, 0, lam))
    # rectangle-rule transform; the grid-offset phases drop under | . |
    kern = np.fft.ifft2(sym) * span**2
    y = np.fft.fftshift(np.fft.fftfreq(g, d=1.0 / g)) / span
    kmod = np.abs(np.fft.fftshift(kern))
    meta = {"k": k, "lam": lam, "dy": 1.0 / span, "y_max": float(-y[0]), "du": step}
    return y, kmod, meta


def kernel_l1_audit(k_list, lam, grid=1024, span=16.0, y_box=24.0):
    """L1 mass of the rescaled kernel on a fixed spatial box, per k.

    Reports mass / (1+|lam|)^3, the measured decay-envelope constant
    sup |K| (1+|y1|+|y2|)^3 / (1+|lam|)^3, and a tail bound for the
    mass outside the comparison box.
    """
    rows = []
    for k in k_list:
        y, kmod, meta = kernel_scaled(k, lam, grid=grid, span=span)
        dy = y[1] - y[0]
        box = np.abs(y) <= y_box
        sel = kmod[np.ix_(box, box)]
        mass = float(sel.sum() * dy * dy)
        yy = y[box]
        wgt = (1.0 + np.abs(yy[:, None]) + np.abs(yy[None, :])) ** 3
        env = float((sel * wgt).max())
        norm = (1.0 + abs(lam)) ** 3
        tail = 4.0 * env / (1.0 + y_box)
        rows.append({"k": int(k), "l1_box": mass, "l1_norm": mass / norm,
                     "env_const": env / norm, "tail_bound": tail / norm})
    vals = [r["l1_norm"] for r in rows]
    return {"rows": rows, "ratio": max(vals) / min(vals), "lam": lam}


# ---------------------------------------------------------------------------
# Difference-set geometry: witness rectangles and exact overlap counting.
# ---------------------------------------------------------------------------

def _arc_point(theta_rev, r):
    return np.stack([r * np.cos(2.0 * np.pi * theta_rev),
                     r * np.sin(2.0 * np.pi * theta_rev)], axis=-1)


def geometry_witness(k, l, lp, n_samples=1000, seed=0):
    """Difference vector w(l, l'), its predicted rectangle, and a containment audit.

    w = e(th_l) - e(th_l'); the rectangle is centered at w with
    half-length 100 s along w and half-width 90 |l - l'| 2^-k along i w,
    s = 1/L(k).  Samples a in arc_l, b in arc_l' and reports the max of
    the rectangle coordinates of (a - b - w) relative to the half-dims.
    """
    if l == lp:
        return {"w": np.zeros(2), "half_len": 0.0, "half_wid": 0.0,
                "max_along": 0.0, "max_perp": 0.0, "contained": True}
    big_l = arc_count(k)
    s = 1.0 / big_l
    delta = 2.0**-k
    th_l, th_lp = l * s, lp * s
    w_vec = (_arc_point(th_l, 1.0) - _arc_point(th_lp, 1.0)).ravel()
    w_len = np.hypot(*w_vec)
    half_len = 100.0 * s
    half_wid = 90.0 * abs(l - lp) * delta
    rng = np.random.default_rng(seed)
    r0, r1 = 1.0 - 0.625 * delta, 1.0 - 0.125 * delta
    a = _arc_point(th_l + rng.uniform(-s, s, n_samples), rng.uniform(r0, r1, n_samples))
    b = _arc_point(th_lp + rng.uniform(-s, s, n_samples), rng.uniform(r0, r1, n_samples))
    diff = a - b - w_vec
    u_hat = w_vec / w_len
    v_hat = np.array([-u_hat[1], u_hat[0]])
    along = np.abs(diff @ u_hat)
    perp = np.abs(diff @ v_hat)
    return {
        "w": w_vec,
        "w_len": float(w_len),
        "w_len_identity": float(2.0 * abs(np.sin(np.pi * (l - lp) * s))),
        "half_len": half_len,
        "half_wid": half_wid,
        "max_along": float(along.max()),
        "max_perp": float(perp.max()),
        "contained": bool((along.max() <= half_len) and (perp.max() <= half_wid)),
    }


def _in_region(pts, offset, theta_rev, half_ang_rev, r0, r1, tol):
    """Membership of points (..., 2) in the annular sector offset + arc."""
    rel = pts - offset
    rad = np.hypot(rel[..., 0], rel[..., 1])
    ang = np.arctan2(rel[..., 1], rel[..., 0]) / (2.0 * np.pi)
    good_r = (rad >= r0 - tol) & (rad <= r1 + tol)
    good_a = np.abs(_wrap_half(ang - theta_rev)) <= half_ang_rev + tol
    return good_r & good_a


def _sector_regions_intersect(xi, th_a, th_b, half_ang, r0, r1, tol=1e-11):
    """Vectorized exact test: (xi + arc(th_a)) intersects arc(th_b).

    Regions are annular sectors with common radii [r0, r1] and angular
    half-width half_ang (revolutions); th_a, th_b, xi are arrays over the
    pair axis.  Complete for connected closed regions: any boundary-pair
    intersection point inside both regions, or one region's midpoint
    inside the other.
    """
    n = th_a.shape[0]
    cand = []

    def seg_ends(offset, th, side):
        ang = (th + side * half_ang) * 2.0 * np.pi
        d = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        return offset + r0 * d, offset + r1 * d

    zero = np.zeros((n, 2))
    offs = {"a": xi, "b": zero}
    ths = {"a": th_a, "b": th_b}

    # circle-circle: centers xi and 0, radii in {r0, r1} x {r0, r1}
    d_vec = -xi
    d2 = np.einsum("ij,ij->i", d_vec, d_vec)
    d_len = np.sqrt(d2)
    for ra in (r0, r1):
        for rb in (r0, r1):
            ok = (d_len > 1e-15) & (d_len <= ra + rb + tol) & (d_len >= abs(ra - rb) - tol)
            a_par = (ra**2 - rb**2 + d2) / np.where(d2 == 0, 1.0, 2.0 * d2)
            h2 = np.clip(ra**2 - a_par**2 * d2, 0.0, None)
            h = np.sqrt(h2)
            base = xi + a_par[:, None] * d_vec
            perp = np.stack([-d_vec[:, 1], d_vec[:, 0]], axis=-1)
            ln = np.where(d_len == 0, 1.0, d_len)[:, None]
            for sgn in (1.0, -1.0):
                pts = base + sgn * (h / ln.ravel())[:, None] * perp
                cand.append((pts, ok))

    # circle-segment pairs (both orders)
    for circ_side in ("a", "b"):
        seg_side = "b" if circ_side == "a" else "a"
        c_off = offs[circ_side]
        for rho in (r0, r1):
            for side in (-1.0, 1.0):
                p0, p1 = seg_ends(offs[seg_side], ths[seg_side], side)
                dseg = p1 - p0
                rel = p0 - c_off
                aa = np.einsum("ij,ij->i", dseg, dseg)
                bb = 2.0 * np.einsum("ij,ij->i", rel, dseg)
                cc = np.einsum("ij,ij->i", rel, rel) - rho**2
                disc = bb**2 - 4.0 * aa * cc
                ok0 = disc >= 0
                sq = np.sqrt(np.clip(disc, 0.0, None))
                for sgn in (1.0, -1.0):
                    t = (-bb + sgn * sq) / np.where(aa == 0, 1.0, 2.0 * aa)
                    ok = ok0 & (t >= -1e-9) & (t <= 1.0 + 1e-9) & (aa > 0)
                    cand.append((p0 + t[:, None] * dseg, ok))

    # segment-segment pairs
    for side_a in (-1.0, 1.0):
        a0, a1 = seg_ends(offs["a"], ths["a"], side_a)
        da = a1 - a0
        for side_b in (-1.0, 1.0):
            b0, b1 = seg_ends(offs["b"], ths["b"], side_b)
            db = b1 - b0
            den = da[:, 0] * db[:, 1] - da[:, 1] * db[:, 0]
            ok0 = np.abs(den) > 1e-18
            den_s = np.where(ok0, den, 1.0)
            r_vec = b0 - a0
            t = (r_vec[:, 0] * db[:, 1] - r_vec[:, 1] * db[:, 0]) / den_s
            s = (r_vec[:, 0] * da[:, 1] - r_vec[:, 1] * da[:, 0]) / den_s
            ok = ok0 & (t >= -1e-9) & (t <= 1 + 1e-9) & (s >= -1e-9) & (s <= 1 + 1e-9)
            cand.append((a0 + t[:, None] * da, ok))

    # nesting fallbacks: region midpoints
    rm = 0.5 * (r0 + r1)
    mid_a = xi + rm * np.stack([np.cos(2 * np.pi * th_a), np.sin(2 * np.pi * th_a)], axis=-1)
    mid_b = rm * np.stack([np.cos(2 * np.pi * th_b), np.sin(2 * np.pi * th_b)], axis=-1)
    cand.append((mid_a, np.ones(n, dtype=bool)))
    cand.append((mid_b, np.ones(n, dtype=bool)))

    hit = np.zeros(n, dtype=bool)
    for pts, ok in cand:
        todo = ok & ~hit
        if not np.any(todo):
            continue
        in_a = _in_region(pts[todo], xi[todo], th_a[todo], half_ang, r0, r1, tol)
        in_b = _in_region(pts[todo], zero[todo], th_b[todo], half_ang, r0, r1, tol)
        sub = np.zeros(n, dtype=bool)
        sub[todo] = in_a & in_b
        hit |= sub
    return hit


def _count_positive(k, xi, sep):
    """Ordered pairs (l, l') in the quadrant-a family, l' - l > sep, with
    xi in arc(l') - arc(l)."""
    big_l = arc_count(k)
    s = 1.0 / big_l
    delta = 2.0**-k
    l_max = int(np.floor(big_l / 8.0)) - 1
    if 2 * l_max <= sep:
        return 0
    rho = float(np.hypot(*xi))
    if rho <= 1e-12:
        return 0
    prune_len = 128.0 * s
    prune_rad = 170.0 * s
    sin_hi = min((rho + prune_rad) / 2.0, np.sin(np.pi * min(2 * l_max * s, 0.25)))
    sin_lo = max((rho - prune_rad) / 2.0, 0.0)
    if sin_lo > sin_hi:
        return 0
    d_lo = max(sep + 1, int(np.floor(np.arcsin(min(sin_lo, 1.0)) / (np.pi * s))))
    d_hi = min(2 * l_max, int(np.ceil(np.arcsin(min(sin_hi, 1.0)) / (np.pi * s))) + 1)
    if d_lo > d_hi:
        return 0
    ang_xi = np.arctan2(xi[1], xi[0])
    d_ang = np.arcsin(min(prune_rad / max(rho - prune_rad, 1e-9), 1.0)) if rho > prune_rad \
        else np.pi
    sig_lo = int(np.floor((ang_xi - np.pi / 2.0 - d_ang) / (np.pi * s)))
    sig_hi = int(np.ceil((ang_xi - np.pi / 2.0 + d_ang) / (np.pi * s)))
    dd, ss_idx = np.meshgrid(np.arange(d_lo, d_hi + 1),
                             np.arange(sig_lo, sig_hi + 1), indexing="ij")
    dd = dd.ravel()
    ss_idx = ss_idx.ravel()
    keep = ((ss_idx + dd) % 2 == 0)
    l_hi = (ss_idx + dd) // 2
    l_lo = (ss_idx - dd) // 2
    keep &= (np.abs(l_hi) <= l_max) & (np.abs(l_lo) <= l_max)
    if not np.any(keep):
        return 0
    dd, ss_idx, l_hi, l_lo = dd[keep], ss_idx[keep], l_hi[keep], l_lo[keep]
    # rectangle prune around the predicted difference center
    w_len = 2.0 * np.sin(np.pi * dd * s)
    w_ang = np.pi * ss_idx * s + np.pi / 2.0
    w_vec = np.stack([w_len * np.cos(w_ang), w_len * np.sin(w_ang)], axis=-1)
    rel = xi[None, :] - w_vec
    u_hat = np.stack([np.cos(w_ang), np.sin(w_ang)], axis=-1)
    v_hat = np.stack([-np.sin(w_ang), np.cos(w_ang)], axis=-1)
    along = np.abs(np.einsum("ij,ij->i", rel, u_hat))
    perp = np.abs(np.einsum("ij,ij->i", rel, v_hat))
    half_wid = 128.0 * dd * s * s + 64.0 * delta
    keep2 = (along <= prune_len) & (perp <= half_wid)
    if not np.any(keep2):
        return 0
    l_hi, l_lo = l_hi[keep2], l_lo[keep2]
    n = l_hi.size
    xi_arr = np.broadcast_to(xi, (n, 2)).astype(float)
    # membership: xi in arc(l_hi) - arc(l_lo)  <=>  (xi + arc(l_lo)) meets arc(l_hi)
    hits = _sector_regions_intersect(
        xi_arr, th_a=l_lo * s, th_b=l_hi * s, half_ang=s,
        r0=1.0 - 0.625 * delta, r1=1.0 - 0.125 * delta,
    )
    return int(hits.sum())


def overlap_count(k, xi, sep=defaults.OVERLAP_SEP):
    """Number of ordered quadrant-a pairs (l, l'), |l - l'| > sep, whose
    reflected difference set contains xi."""
    xi = np.asarray(xi, dtype=float)
    return _count_positive(k, xi, sep) + _count_positive(k, -xi, sep)


def targeted_overlap_audit(k, n_samples=10000, seed=0, sep=defaults.OVERLAP_SEP):
    """Overlap counts at xi sampled near the predicted difference rectangles.

    Returns the sampled counts plus the admissible pair-family size; 5%
    of the samples are far-field sanity points (expected count 0).
    """
    rng = np.random.default_rng(seed)
    big_l = arc_count(k)
    s = 1.0 / big_l
    delta = 2.0**-k
    l_max = int(np.floor(big_l / 8.0)) - 1
    counts = np.zeros(n_samples, dtype=int)
    d_max = 2 * l_max
    empty = d_max <= sep
    for i in range(n_samples):
        if i % 20 == 19 or empty:
            xi = rng.uniform(4.1, 8.0) * _unit(rng)
            counts[i] = overlap_count(k, xi, sep)
            continue
        d = int(rng.integers(sep + 1, d_max + 1))
        sig = int(rng.integers(-(2 * l_max - d), 2 * l_max - d + 1))
        if (sig + d) % 2 != 0:
            sig += 1 if sig < 0 else -1
        w_len = 2.0 * np.sin(np.pi * d * s)
        w_ang = np.pi * sig * s + np.pi / 2.0
        u_hat = np.array([np.cos(w_ang), np.sin(w_ang)])
        v_hat = np.array([-u_hat[1], u_hat[0]])
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        xi = sign * (w_len * u_hat
                     + rng.uniform(-100.0, 100.0) * s * u_hat
                     + rng.uniform(-90.0, 90.0) * d * delta * v_hat)
        counts[i] = overlap_count(k, xi, sep)
    return {"k": int(k), "counts": counts, "max": int(counts.max()),
            "family_empty": bool(empty), "l_max": l_max}


def _unit(rng):
    a = rng.uniform(0, 2 * np.pi)
    return np.array([np.cos(a), np.sin(a)])


# ---------------------------------------------------------------------------
# Directional multiplier sum (sector-complement square sum).
# ---------------------------------------------------------------------------

def multiplier_sum_bound(m, xi, c=defaults.SECTOR_C, tail_tol=1e-14):
    """Value of the square sum over scales and direction pairs at xi != 0.

    sum_j sum_{l < 2^{m-1}} |psihat(2^{j+m} <e^{2l+1}, xi>) -
    psihat(2^{j+m} <e^{2l}, xi>)|^2 restricted to xi outside both sectors,
    with the scale sum truncated once certified tails drop below tail_tol.
    Returns (value, certified_tail_bound).
    """
    xi = np.asarray(xi, dtype=float)
    if np.hypot(*xi) == 0:
        raise ValueError("xi must be nonzero")
    vals, tails = _multiplier_sum_many(m, xi[None, :], c, tail_tol)
    return float(vals[0]), float(tails[0])


def _multiplier_sum_many(m, xis, c, tail_tol):
    n = xis.shape[0]
    l_idx = np.arange(2 ** (m - 1))
    e_even = 2.0 * l_idx * 2.0**-m
    e_odd = (2.0 * l_idx + 1) * 2.0**-m
    a = xis[:, 0][:, None] + xis[:, 1][:, None] * e_odd[None, :]
    b = xis[:, 0][:, None] + xis[:, 1][:, None] * e_even[None, :]
    chi = ~(sector_indicator(m, 2 * l_idx[None, :] + 1, xis[:, 0][:, None],
                             xis[:, 1][:, None], c)
            | sector_indicator(m, 2 * l_idx[None, :], xis[:, 0][:, None],
                               xis[:, 1][:, None], c))
    # scale window: arguments 2^{j+m} <e, xi>; tails certified on both sides
    j_lo = -(m + 12)
    j_hi = 12
    scales = 2.0 ** (np.arange(j_lo, j_hi + 1) + m)
    args_a = scales[None, None, :] * a[:, :, None]
    args_b = scales[None, None, :] * b[:, :, None]
    terms = np.abs(psihat(args_a) - psihat(args_b)) ** 2
    total = (terms * chi[:, :, None]).sum(axis=(1, 2))
    d2 = psihat_curvature_bound()
    # small-argument tail: |psihat(x) - psihat(y)| <= d2 (x^2 + y^2) / 2
    sc_lo = 2.0 ** (j_lo - 1 + m)
    low_term = (0.5 * d2 * sc_lo**2 * (a**2 + b**2)) ** 2
    low_tail = np.where(chi, low_term, 0.0).sum(axis=1) * (16.0 / 15.0)
    # large-argument tail via the decreasing envelope on the dyadic chain
    sc_hi = 2.0 ** (j_hi + 1 + m)
    hi_env = np.zeros(n)
    amin = np.where(chi, np.minimum(np.abs(a), np.abs(b)), 1e300)
    base_arg = sc_hi * amin
    for i in range(60):
        e = psihat_envelope(base_arg * 2.0**i)
        add = np.where(chi, 4.0 * e**2, 0.0).sum(axis=1)
        hi_env += add
        if add.max(initial=0.0) < tail_tol * 1e-3:
            break
    return total, low_tail + hi_env


def multiplier_sum_audit(m_list, n_samples=10000, seed=0, c=defaults.SECTOR_C,
                         chunk=512):
    """Sup over random unit xi of the multiplier square sum, per m."""
    rng = np.random.default_rng(seed)
    out = {}
    for m in m_list:
        ang = rng.uniform(0.0, 2.0 * np.pi, n_samples)
        xis = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        sup_val = 0.0
        tail_max = 0.0
        for i in range(0, n_samples, chunk):
            vals, tails = _multiplier_sum_many(m, xis[i:i + chunk], c, 1e-14)
            sup_val = max(sup_val, float(vals.max()))
            tail_max = max(tail_max, float(tails.max()))
        out[m] = {"sup": sup_val, "tail_bound": tail_max}
    sups = [v["sup"] for v in out.values()]
    return {"per_m": out, "cross_m_ratio": max(sups) / min(sups)}

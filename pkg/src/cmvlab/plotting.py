"""SVG rendering of spectrum scans: bounded arcs on the circle and the Lyapunov curve."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tracemap import SpectrumScan  # noqa: E402


def bounded_arcs(scan: SpectrumScan, budget: int | None = None) -> list:
    """Maximal runs of bounded points as ``(start, stop)`` angle pairs (radians).

    Each point owns the cell between the midpoints to its neighbours, so the
    arc lengths add up to :meth:`SpectrumScan.bounded_measure`.  An arc
    crossing angle 0 is returned with ``stop > 2 pi``.
    """
    mask = scan.bounded_mask(budget)
    if not mask.any():
        return []
    if mask.all():
        return [(0.0, 2 * np.pi)]
    order = np.argsort(scan.angles, kind="stable")
    a, b = scan.angles[order], mask[order]
    nxt = np.concatenate([a[1:], [a[0] + 2 * np.pi]])
    prv = np.concatenate([[a[-1] - 2 * np.pi], a[:-1]])
    lo, hi = 0.5 * (a + prv), 0.5 * (a + nxt)
    # rotate so that the first point is escaped, then collect runs
    shift = int(np.argmin(b))
    arcs, cur = [], None
    for j in range(a.size):
        i = (shift + j) % a.size
        wrap = 2 * np.pi if i < shift else 0.0
        if b[i]:
            if cur is None:
                cur = [lo[i] + wrap, hi[i] + wrap]
            else:
                cur[1] = hi[i] + wrap
        elif cur is not None:
            arcs.append(tuple(cur))
            cur = None
    if cur is not None:
        arcs.append(tuple(cur))
    return [(float(np.mod(s, 2 * np.pi)), float(np.mod(s, 2 * np.pi) + (e - s))) for s, e in arcs]


def largest_gaps(scan: SpectrumScan, count: int = 8, budget: int | None = None) -> list:
    """The ``count`` widest complementary arcs, widest first, as ``(start, stop)``."""
    arcs = sorted(bounded_arcs(scan, budget))
    if not arcs or (len(arcs) == 1 and arcs[0][1] - arcs[0][0] >= 2 * np.pi - 1e-12):
        return []
    gaps = []
    for (s0, e0), (s1, _) in zip(arcs, arcs[1:] + [(arcs[0][0] + 2 * np.pi, 0)]):
        if s1 > e0:
            gaps.append((e0, s1))
    gaps.sort(key=lambda g: g[0] - g[1])
    return gaps[:count]


def render_scan(scan: SpectrumScan, path, title: str | None = None, budget: int | None = None,
                n_gap_markers: int = 8):
    """Write a deterministic SVG of ``scan`` to ``path``."""
    with plt.rc_context({"svg.hashsalt": "cmvlab", "svg.fonttype": "none", "path.simplify": False}):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.6), gridspec_kw={"width_ratios": [1, 1.5]})
        t = np.linspace(0, 2 * np.pi, 721)
        ax0.plot(np.cos(t), np.sin(t), color="0.8", lw=0.8)
        for s, e in bounded_arcs(scan, budget):
            tt = np.linspace(s, e, max(2, int((e - s) / (2 * np.pi) * 720) + 2))
            ax0.plot(np.cos(tt), np.sin(tt), color="C0", lw=3, solid_capstyle="butt")
        gaps = largest_gaps(scan, n_gap_markers, budget)
        for s, e in gaps:
            m = 0.5 * (s + e)
            ax0.plot([0.9 * np.cos(m), 1.1 * np.cos(m)], [0.9 * np.sin(m), 1.1 * np.sin(m)], color="C3", lw=0.8)
        ax0.set_aspect("equal")
        ax0.set_xlim(-1.25, 1.25)
        ax0.set_ylim(-1.25, 1.25)
        ax0.set_xticks([])
        ax0.set_yticks([])
        ax0.set_title(f"bounded at budget {scan.budget if budget is None else budget}")

        ax1.plot(scan.angles, scan.lyapunov, color="k", lw=0.6)
        bmask = scan.bounded_mask(budget)
        ax1.plot(scan.angles[bmask], np.zeros(bmask.sum()), "|", color="C0", ms=6)
        for s, e in gaps:
            ax1.axvline(np.mod(0.5 * (s + e), 2 * np.pi), color="C3", lw=0.5, ls=":")
        ax1.set_xlim(0, 2 * np.pi)
        ax1.set_xlabel("angle")
        ax1.set_ylabel(f"log ||M_n|| / q_n  (n = {scan.lyapunov_level})")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

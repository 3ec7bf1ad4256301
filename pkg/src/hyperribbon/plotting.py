"""Static SVG figures for the CLI reports.

Every figure carries the same numbers as the CSV written next to it.  With
``deterministic=True`` the SVG has no date stamp and fixed element ids, so
reruns are byte-identical.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bounds import WidthReport  # noqa: E402


@contextmanager
def _figure(path, deterministic: bool, figsize=(5.0, 3.6)):
    rc = {"svg.hashsalt": "hyperribbon"} if deterministic else {}
    with plt.rc_context(rc):
        fig, ax = plt.subplots(figsize=figsize)
        try:
            yield fig, ax
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None} if deterministic else None)
        finally:
            plt.close(fig)


def _positive(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def plot_widths(report: WidthReport, path, title: str = "", guide_rate: float | None = None,
                deterministic: bool = True) -> None:
    """Widths per axis on a log scale, with whatever bound columns are present."""
    j = np.array([a.j for a in report.axes])
    with _figure(path, deterministic) as (fig, ax):
        ax.semilogy(j, _positive(report.column("ell_y")), "o-", ms=4, label=r"$\ell_j(H_Y)$")
        ax.semilogy(j, _positive(report.column("ell_p")), "s--", ms=3, label=r"$\ell_j(H_P)$")
        for name, style, label in (("bound_taylor", "k:", "Taylor bound"),
                                   ("bound_cheb", "r-.", "Chebyshev bound"),
                                   ("empirical", "^", "sampled")):
            col = report.column(name)
            if np.any(np.isfinite(col)):
                ax.semilogy(j, _positive(col), style, ms=4, label=label)
        if guide_rate is not None:
            y0 = float(report.column("ell_p")[0])
            ax.semilogy(j, y0 * guide_rate ** (1.0 - j), color="0.5", lw=0.8,
                        label=rf"$\rho^{{-j}}$, $\rho={guide_rate:.3g}$")
        ax.set_xlabel("axis j")
        ax.set_ylabel("width")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)


def plot_kink(sigma_taylor, sigma_cheb, bound_taylor, bound_cheb, path, j_kink: int | None = None,
              deterministic: bool = True) -> None:
    j = np.arange(1, len(sigma_taylor) + 1)
    with _figure(path, deterministic) as (fig, ax):
        ax.semilogy(j, _positive(sigma_taylor), ".", label=r"$\sigma_j(VD)$")
        ax.semilogy(j, _positive(sigma_cheb), ".", label=r"$\sigma_j(JD)$, $\rho_{max}$")
        ax.semilogy(j, _positive(bound_taylor), "k:", lw=0.8, label=r"$R^{-j}$ rate")
        ax.semilogy(j, _positive(bound_cheb), "r-.", lw=0.8, label=r"$\rho_{max}^{-j}$ rate")
        if j_kink is not None:
            ax.axvline(j_kink, color="0.6", lw=0.8)
        ax.set_xlabel("j")
        ax.set_ylabel("singular value")
        ax.legend(fontsize=7)


def plot_nonanalytic(spectra: Mapping[int, Sequence[float]], slopes: Mapping[int, float], path,
                     deterministic: bool = True) -> None:
    with _figure(path, deterministic) as (fig, ax):
        for nu, sig in spectra.items():
            j = np.arange(1, len(sig) + 1)
            ax.loglog(j, _positive(sig), ".", label=rf"$\nu={nu}$, slope {slopes[nu]:.2f}")
        ax.set_xlabel("j")
        ax.set_ylabel("singular value")
        ax.legend(fontsize=7)


def plot_scatter(Z, half_widths: Sequence[float], path, deterministic: bool = True,
                 max_points: int = 5000) -> None:
    """First two rotated coordinates with the enclosing ellipse ``|z_j| <= half_width_j``."""
    Z = np.asarray(Z, dtype=float)
    pts = Z[:: max(1, Z.shape[0] // max_points)]
    a, b = float(half_widths[0]), float(half_widths[1])
    th = np.linspace(0.0, 2.0 * np.pi, 400)
    with _figure(path, deterministic, figsize=(4.4, 4.0)) as (fig, ax):
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.5, alpha=0.6)
        ax.plot(a * np.cos(th), b * np.sin(th), "k-", lw=0.8)
        ax.set_xlabel(r"$z_1$")
        ax.set_ylabel(r"$z_2$")
        ax.set_aspect("equal", adjustable="datalim")

"""Boundary-fitted structured quadrilateral meshes.

The mesh is a single logically-rectangular grid of "chords": each station i
carries a straight segment from a point B_i on the matrix boundary to the
corresponding point T_i on the inclusion boundary, subdivided by a uniform
grid t in [0, 1].  Inside the contact patch the chords are vertical, so the
gap becomes a unit strip in (x', t) coordinates and the linear-in-x_n
structure of the near fields is captured exactly by the bilinear elements.
Outside the patch the chords are radial about the closure center.

Station layouts:

* planar (n=2):       x' = -2R..2R, then cap angles tau_lo..2pi-tau_lo; periodic.
* axisymmetric (n=3): x' = 0..2R, then cap angles tau_lo..pi; open, end chords
  on the symmetry axis (natural boundary).
* touching (eps=0, excision sigma): the contact region |x'| < sigma is removed,
  so the patch halves sit at the open ends of the station sequence and the end
  chords are Dirichlet cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import GapGeometry
from .curves import CurvePair

__all__ = ["Resolution", "Mesh", "build_mesh"]


@dataclass(frozen=True)
class Resolution:
    """Mesh resolution policy.

    points_per_decade controls the logarithmic radial grading of patch
    stations toward the contact point; n_t is the number of cells across the
    gap (>= 8); n_cap the number of far-field stations; n_axis the number of
    uniform stations inside the innermost radial decade.
    """

    points_per_decade: int = 64
    n_t: int = 16
    n_cap: int = 128
    n_axis: int = 8

    def __post_init__(self) -> None:
        if self.n_t < 8:
            raise ValueError("resolution must keep at least 8 cells across the gap")

    def refined(self, factor: float) -> "Resolution":
        return Resolution(
            points_per_decade=max(4, int(round(self.points_per_decade * factor))),
            n_t=max(8, int(round(self.n_t * factor))),
            n_cap=max(16, int(round(self.n_cap * factor))),
            n_axis=max(4, int(round(self.n_axis * factor))),
        )


@dataclass
class Mesh:
    geom: GapGeometry
    curves: CurvePair
    eps_eff: float
    axisym: bool
    periodic: bool
    nodes: np.ndarray               # (Ns, Nt+1, 2)
    t: np.ndarray                   # (Nt+1,)
    patch_blocks: list              # [(start_index, xs ascending), ...]
    cap_start: int                  # station index of the first cap chord
    cap_taus_unwrapped: np.ndarray  # ascending tau of cap stations
    cut_first: bool = False         # first chord is a Dirichlet excision cut
    cut_last: bool = False
    _cache: dict | None = None

    def __post_init__(self) -> None:
        if self._cache is None:
            self._cache = {}

    # -- basic shape ---------------------------------------------------------

    @property
    def n_s(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_t(self) -> int:
        return self.nodes.shape[1] - 1

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0] * self.nodes.shape[1]

    @property
    def n_station_cells(self) -> int:
        return self.n_s if self.periodic else self.n_s - 1

    @property
    def n_elements(self) -> int:
        return self.n_station_cells * self.n_t

    def node_index(self, i, j):
        return np.asarray(i) * (self.n_t + 1) + np.asarray(j)

    def stats(self) -> dict:
        return {
            "nodes": int(self.n_nodes),
            "stations": int(self.n_s),
            "cells_across_gap": int(self.n_t),
            "elements": int(self.n_elements),
            "axisymmetric": bool(self.axisym),
        }

    # -- connectivity ----------------------------------------------------------

    def connectivity(self) -> np.ndarray:
        """Element-to-node map, one row per element, corner order
        (i,j), (i+1,j), (i+1,j+1), (i,j+1)."""
        if "conn" not in self._cache:
            i = np.arange(self.n_station_cells)
            i2 = (i + 1) % self.n_s
            j = np.arange(self.n_t)
            ii, jj = np.meshgrid(i, j, indexing="ij")
            ii2, _ = np.meshgrid(i2, j, indexing="ij")
            conn = np.stack(
                [
                    self.node_index(ii, jj),
                    self.node_index(ii2, jj),
                    self.node_index(ii2, jj + 1),
                    self.node_index(ii, jj + 1),
                ],
                axis=-1,
            ).reshape(-1, 4)
            self._cache["conn"] = conn
        return self._cache["conn"]

    def element_of(self, i_station, j_cell):
        return np.asarray(i_station) * self.n_t + np.asarray(j_cell)

    def dirichlet_mask(self) -> np.ndarray:
        """Boolean (Ns, Nt+1): True where nodal values are prescribed."""
        mask = np.zeros((self.n_s, self.n_t + 1), dtype=bool)
        mask[:, 0] = True          # matrix boundary
        mask[:, -1] = True         # inclusion boundary
        if self.cut_first:
            mask[0, :] = True
        if self.cut_last:
            mask[-1, :] = True
        return mask

    # -- parametric evaluation --------------------------------------------------

    def corners(self, elems) -> np.ndarray:
        conn = self.connectivity()[np.asarray(elems)]
        return self.nodes.reshape(-1, 2)[conn]

    def param_to_xy(self, elems, xi, eta) -> np.ndarray:
        c = self.corners(elems)
        xi = np.asarray(xi, dtype=float)[..., None]
        eta = np.asarray(eta, dtype=float)[..., None]
        return (
            (1 - xi) * (1 - eta) * c[:, 0]
            + xi * (1 - eta) * c[:, 1]
            + xi * eta * c[:, 2]
            + (1 - xi) * eta * c[:, 3]
        )

    # -- point location -----------------------------------------------------------

    def locate(self, points, max_walk: int = 80):
        """Locate ambient (planar/meridian) points: returns (elems, xi, eta).

        Chart guesses (vertical strip over the patch, polar fan over the cap)
        are polished by Newton inversion of the bilinear map, walking to a
        neighboring element when the local coordinates land outside [0, 1].
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        elems = np.empty(len(pts), dtype=int)
        xis = np.empty(len(pts))
        etas = np.empty(len(pts))
        for p_idx, p in enumerate(pts):
            i, j = self._chart_guess(p)
            ok = False
            for _ in range(max_walk):
                xi, eta = self._invert_cell(i, j, p)
                step_i = 0 if -1e-9 <= xi <= 1 + 1e-9 else (1 if xi > 1 else -1)
                step_j = 0 if -1e-9 <= eta <= 1 + 1e-9 else (1 if eta > 1 else -1)
                if step_i == 0 and step_j == 0:
                    ok = True
                    break
                if self.periodic:
                    i = (i + step_i) % self.n_station_cells
                else:
                    i = int(np.clip(i + step_i, 0, self.n_station_cells - 1))
                j = int(np.clip(j + step_j, 0, self.n_t - 1))
            if not ok:
                raise ValueError(f"point {p} could not be located in the mesh")
            elems[p_idx] = self.element_of(i, j)
            xis[p_idx] = min(max(xi, 0.0), 1.0)
            etas[p_idx] = min(max(eta, 0.0), 1.0)
        return elems, xis, etas

    def _chart_guess(self, p) -> tuple[int, int]:
        guess_j = self.n_t // 2
        for start, xs in self.patch_blocks:
            if xs[0] <= p[0] <= xs[-1]:
                bot = float(self.geom.h(abs(p[0])))
                d = self.eps_eff + float(self.geom.h1(abs(p[0]))) - bot
                if d > 0 and -0.5 * d <= p[1] - bot <= 1.5 * d:
                    k = int(np.clip(np.searchsorted(xs, p[0]) - 1, 0, len(xs) - 2))
                    tloc = (p[1] - bot) / d
                    guess_j = int(np.clip(tloc * self.n_t, 0, self.n_t - 1))
                    return start + k, guess_j
        tau = self.curves.angle_of(p)
        taus = self.cap_taus_unwrapped
        tau_u = tau if tau >= taus[0] - 1e-12 else tau + 2.0 * math.pi
        if taus[0] <= tau_u <= taus[-1]:
            k = int(np.clip(np.searchsorted(taus, tau_u) - 1, 0, len(taus) - 2))
            i = self.cap_start + k
        elif tau_u < taus[0]:
            i = max(self.cap_start - 1, 0)
        else:
            i = min(self.cap_start + len(taus) - 1, self.n_station_cells - 1)
        return int(np.clip(i, 0, self.n_station_cells - 1)), guess_j

    def _invert_cell(self, i, j, p, iters: int = 12):
        e = int(self.element_of(i, j))
        c = self.corners([e])[0]
        a = c[1] - c[0]
        b = c[3] - c[0]
        d = c[0] - c[1] + c[2] - c[3]
        xi, eta = 0.5, 0.5
        target = p - c[0]
        for _ in range(iters):
            r = a * xi + b * eta + d * (xi * eta) - target
            j00 = a[0] + d[0] * eta
            j01 = b[0] + d[0] * xi
            j10 = a[1] + d[1] * eta
            j11 = b[1] + d[1] * xi
            det = j00 * j11 - j01 * j10
            if det == 0.0:
                break
            dxi = (r[0] * j11 - r[1] * j01) / det
            deta = (-r[0] * j10 + r[1] * j00) / det
            xi -= dxi
            eta -= deta
            if abs(dxi) + abs(deta) < 1e-14:
                break
        return xi, eta


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _log_stations(x_lo: float, x_hi: float, ppd: int) -> np.ndarray:
    n = max(3, int(math.ceil(ppd * math.log10(x_hi / x_lo))) + 1)
    return np.geomspace(x_lo, x_hi, n)


def _patch_xs_half(geom: GapGeometry, res: Resolution, eps_eff: float,
                   sigma: float | None) -> np.ndarray:
    """Station radii 0 (or sigma) .. 2R with log grading toward the axis."""
    xp = 2.0 * geom.R
    if sigma is not None:
        if not 0.0 < sigma < geom.R:
            raise ValueError(f"excision radius {sigma} outside (0, R)")
        return _log_stations(sigma, xp, res.points_per_decade)
    scale = eps_eff ** (1.0 / geom.m)
    x_lo = max(min(scale / 8.0, xp / 100.0), xp * 1e-8)
    inner = np.linspace(0.0, x_lo, res.n_axis, endpoint=False)
    return np.concatenate([inner, _log_stations(x_lo, xp, res.points_per_decade)])


def _chord_nodes(B: np.ndarray, T: np.ndarray, t: np.ndarray) -> np.ndarray:
    return B[:, None, :] + t[None, :, None] * (T - B)[:, None, :]


def build_mesh(
    geom: GapGeometry,
    res: Resolution | None = None,
    eps_override: float | None = None,
    sigma: float | None = None,
) -> Mesh:
    """Build the solver mesh for a geometry.

    geom.n selects planar (n=2) or axisymmetric meridian (n=3) meshing; other
    dimensions have no direct solve.  ``eps_override`` replaces the gap offset
    (0 for touching-domain problems, which then require ``sigma`` > 0).
    """
    if geom.n not in (2, 3):
        raise ValueError(
            f"direct solves support n=2 or axisymmetric n=3 only, got n={geom.n}"
        )
    res = res or Resolution()
    curves = CurvePair.build(geom, eps_override=eps_override)
    eps_eff = curves.eps_eff
    if eps_eff == 0.0 and sigma is None:
        raise ValueError("touching domain (eps=0) requires an excision radius sigma")
    axisym = geom.n == 3
    excised = sigma is not None

    xs_half = _patch_xs_half(geom, res, eps_eff, sigma)
    tau_lo = curves.inner.tau_patch * 1.05
    t = np.linspace(0.0, 1.0, res.n_t + 1)

    def graph_points(xs):
        bot = np.stack([xs, np.asarray(geom.h(np.abs(xs)), dtype=float)], axis=-1)
        top = np.stack(
            [xs, eps_eff + np.asarray(geom.h1(np.abs(xs)), dtype=float)], axis=-1
        )
        return _chord_nodes(bot, top, t)

    ctr = curves.center()

    def cap_points(taus_unwrapped):
        out = np.empty((len(taus_unwrapped), len(t), 2))
        for k, tau_u in enumerate(taus_unwrapped):
            tau = tau_u if tau_u <= math.pi else tau_u - 2.0 * math.pi
            d = np.array([math.sin(tau), -math.cos(tau)])
            b = ctr + curves.outer.radius(tau) * d
            top = ctr + curves.inner.radius(tau) * d
            out[k] = b[None, :] + t[:, None] * (top - b)[None, :]
        return out

    if axisym:
        cap = np.linspace(tau_lo, math.pi, res.n_cap)
        blocks_nodes = [graph_points(xs_half), cap_points(cap)]
        patch_blocks = [(0, xs_half)]
        cap_start = len(xs_half)
        periodic = False
        cut_first, cut_last = excised, False
    elif not excised:
        xs = np.concatenate([-xs_half[::-1], xs_half[1:] if xs_half[0] == 0.0 else xs_half])
        cap = np.linspace(tau_lo, 2.0 * math.pi - tau_lo, res.n_cap)
        blocks_nodes = [graph_points(xs), cap_points(cap)]
        patch_blocks = [(0, xs)]
        cap_start = len(xs)
        periodic = True
        cut_first = cut_last = False
    else:
        # open annulus: right patch half, cap over the top, left patch half
        cap = np.linspace(tau_lo, 2.0 * math.pi - tau_lo, res.n_cap)
        xs_left = -xs_half[::-1]
        blocks_nodes = [graph_points(xs_half), cap_points(cap), graph_points(xs_left)]
        patch_blocks = [(0, xs_half), (len(xs_half) + len(cap), xs_left)]
        cap_start = len(xs_half)
        periodic = False
        cut_first = cut_last = True

    nodes = np.concatenate(blocks_nodes, axis=0)
    mesh = Mesh(
        geom=geom,
        curves=curves,
        eps_eff=eps_eff,
        axisym=axisym,
        periodic=periodic,
        nodes=nodes,
        t=t,
        patch_blocks=patch_blocks,
        cap_start=cap_start,
        cap_taus_unwrapped=cap,
        cut_first=cut_first,
        cut_last=cut_last,
        _cache={},
    )
    _check_element_quality(mesh)
    return mesh


def _check_element_quality(mesh: Mesh) -> None:
    c = mesh.corners(np.arange(mesh.n_elements))
    x, y = c[..., 0], c[..., 1]
    area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
    if np.any(area <= 0.0):
        bad = int(np.argmin(area))
        raise RuntimeError(
            f"mesh generation failed: non-positive cell area (element {bad}, "
            f"area {float(area[bad]):.3e})"
        )

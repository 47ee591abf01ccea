"""ESPRIT-based joint direction and polarization estimation.

The nine antennas form three identical triads, so the signal subspace splits
into three 3 x K blocks related by two diagonal rotation operators. Their
eigenvalues give cyclically ambiguous ("fine") direction cosines, their
eigenvectors give each source's triad response, and closed-form ratios of
that response give unambiguous ("coarse") angles used to resolve the fine
ones.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import numerics
from .errors import (
    DegeneratePolarization,
    IllConditionedT,
    NoFeasibleInteger,
    RankDeficient,
    TinyDenominator,
    TriadEspritError,
)
from .geometry import ArrayLayout, TriadKind
from .manifold import TWO_PI, DirectionCosines, direction_cosines, wrap_angle

# Sign of the phase compensation applied in d_vector. +1 undoes the factors
# exp(-j 2pi u_y d / lambda) of the forward model; pinned by a regression test.
PHASE_SIGN = 1

IM_DEGENERACY = 1e-10
T_COND_LIMIT = 1e8


@dataclass
class SubspaceDecomposition:
    es: np.ndarray
    eigenvalues: np.ndarray
    all_eigenvalues: np.ndarray

    @property
    def es1(self) -> np.ndarray:
        return self.es[0:3]

    @property
    def es2(self) -> np.ndarray:
        return self.es[3:6]

    @property
    def es3(self) -> np.ndarray:
        return self.es[6:9]


@dataclass
class RotationEstimates:
    """Rotation-operator estimates.

    ``eigvecs_y`` holds the eigenvectors of ``phi_y`` as columns. Because
    ``phi_y = T^-1 Phi_y T`` for the subspace relation ``Es1 = A1 T``, the
    eigenvector matrix is ``T^-1`` and ``t_hat`` is its inverse.
    """

    phi_y: np.ndarray
    phi_x: np.ndarray
    eigvecs_y: np.ndarray
    t_hat: np.ndarray
    d_y: np.ndarray
    d_x: np.ndarray


@dataclass
class CoarseAngles:
    theta1: float
    theta2: float
    theta3: float
    theta4: float


@dataclass
class SourceEstimate:
    u_x: float
    u_y: float
    theta1: float
    theta2: float
    theta3: float
    theta4: float
    u_x_fine: float
    u_y_fine: float
    u_x_coarse: float
    u_y_coarse: float
    theta1_coarse: float
    theta2_coarse: float
    theta3_coarse: float
    theta4_coarse: float
    wavelength: float
    n_y: int
    n_x: int
    sigma_y: complex
    sigma_x: complex
    pair_index: int
    d: tuple[complex, complex]
    zenith: bool = False
    clipped: bool = False


@dataclass
class EstimationResult:
    sources: list[SourceEstimate]
    signal_eigenvalues: np.ndarray
    noise_eigenvalues: np.ndarray
    permutation: tuple[int, ...]
    wavelength_mode: str
    frequencies: np.ndarray | None = None
    kind: str = TriadKind.DIPOLE.value
    extras: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        """K x 2 array of final (u_x, u_y)."""
        return np.array([[s.u_x, s.u_y] for s in self.sources])

    @property
    def u_coarse(self) -> np.ndarray:
        return np.array([[s.u_x_coarse, s.u_y_coarse] for s in self.sources])

    def angles(self, coarse: bool = False) -> np.ndarray:
        suffix = "_coarse" if coarse else ""
        return np.array([
            [getattr(s, f"theta{i}{suffix}") for i in range(1, 5)] for s in self.sources
        ])

    def to_dict(self, degrees: bool = True) -> dict:
        conv = math.degrees if degrees else float
        out_sources = []
        for s in self.sources:
            rec = {}
            for key, val in asdict(s).items():
                if key.startswith("theta"):
                    rec[key + ("_deg" if degrees else "")] = conv(val)
                elif isinstance(val, complex):
                    rec[key] = [val.real, val.imag]
                elif key == "d":
                    rec[key] = [[z.real, z.imag] for z in val]
                else:
                    rec[key] = val
            out_sources.append(rec)
        return {
            "kind": self.kind,
            "wavelength_mode": self.wavelength_mode,
            "permutation": list(self.permutation),
            "signal_eigenvalues": [float(x) for x in self.signal_eigenvalues],
            "noise_eigenvalues": [float(x) for x in self.noise_eigenvalues],
            "frequencies": None if self.frequencies is None else [float(f) for f in self.frequencies],
            "sources": out_sources,
        }


def covariance(y) -> np.ndarray:
    """Unnormalized correlation ``Y Y^H``, symmetrized."""
    y = np.asarray(getattr(y, "y", y), dtype=complex)
    if y.shape[0] != 9:
        raise ValueError(f"expected 9 rows, got {y.shape[0]}")
    r = y @ y.conj().T
    return 0.5 * (r + r.conj().T)


def signal_subspace(r, k: int) -> SubspaceDecomposition:
    if k not in (1, 2, 3):
        raise ValueError(f"number of sources must be 1, 2 or 3, got {k}")
    w, v = numerics.eig_hermitian(r)
    return SubspaceDecomposition(es=v[:, :k], eigenvalues=w[:k], all_eigenvalues=w)


def rotation_operators(sub: SubspaceDecomposition) -> RotationEstimates:
    phi_y = numerics.lstsq(sub.es1, sub.es2)
    phi_x = numerics.lstsq(sub.es1, sub.es3)
    d_y, vecs = numerics.eig_general_small(phi_y)
    d_x, _ = numerics.eig_general_small(phi_x)
    if np.linalg.cond(vecs) > T_COND_LIMIT:
        raise IllConditionedT(f"eigenvector matrix condition number {np.linalg.cond(vecs):.3g}")
    return RotationEstimates(
        phi_y=phi_y,
        phi_x=phi_x,
        eigvecs_y=vecs,
        t_hat=np.linalg.inv(vecs),
        d_y=np.asarray(d_y),
        d_x=np.asarray(d_x),
    )


def recover_steering(sub: SubspaceDecomposition, rot: RotationEstimates) -> np.ndarray:
    """Triad responses ``A1_hat`` (3 x K), each column up to a complex scale.

    Averages the estimates from the first and second triad blocks, the
    second one de-rotated by its eigenvalue.
    """
    t_inv = rot.eigvecs_y
    if np.linalg.cond(t_inv) > T_COND_LIMIT:
        raise IllConditionedT(f"T condition number {np.linalg.cond(t_inv):.3g}")
    if np.any(rot.d_y == 0):
        raise IllConditionedT("zero rotation eigenvalue")
    return sub.es1 @ t_inv + (sub.es2 @ t_inv) / rot.d_y[None, :]


def fine_direction_cosine(sigma: complex, spacing: float, wavelength: float) -> float:
    """Cyclically ambiguous direction cosine from a rotation eigenvalue."""
    if sigma == 0:
        raise ValueError("rotation eigenvalue is zero")
    return -wavelength / (TWO_PI * spacing) * float(np.angle(sigma))


def fine_uy(rot: RotationEstimates, wavelengths, delta_y: float) -> np.ndarray:
    return np.array([
        fine_direction_cosine(s, delta_y, lam) for s, lam in zip(rot.d_y, wavelengths)
    ])


def d_vector(a_hat, sigma_y: complex, m1: int, m2: int) -> np.ndarray:
    """Element ratios of one triad with the intra-triad phase removed.

    Returns ``[x/z, y/z]`` of the bare field response (electric for dipoles,
    magnetic for loops). The unknown column scale cancels.
    """
    a_hat = np.asarray(a_hat, dtype=complex)
    if abs(a_hat[2]) <= 1e-12 * np.linalg.norm(a_hat):
        raise TinyDenominator("z-element response vanishes; polarization ratio undefined")
    ang = float(np.angle(sigma_y))
    return np.array([
        a_hat[0] / a_hat[2] * np.exp(1j * PHASE_SIGN * (m1 + m2) * ang),
        a_hat[1] / a_hat[2] * np.exp(1j * PHASE_SIGN * m2 * ang),
    ])


def field_ratios(theta1, theta2, theta3, theta4, kind: TriadKind) -> np.ndarray:
    """``[x/z, y/z]`` of the field response, for any real angles."""
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s2, c2 = math.sin(theta2), math.cos(theta2)
    s3, c3 = math.sin(theta3), math.cos(theta3)
    ej4 = complex(math.cos(theta4), math.sin(theta4))
    if kind is TriadKind.DIPOLE:
        f = (c1 * s2 * s3 * ej4 - s1 * c3, s1 * s2 * s3 * ej4 + c1 * c3, -c2 * s3 * ej4)
    else:
        f = (-s1 * s3 * ej4 - c1 * s2 * c3, c1 * s3 * ej4 - s1 * s2 * c3, c2 * c3)
    if f[2] == 0:
        return np.array([complex("nan"), complex("nan")])
    return np.array([f[0] / f[2], f[1] / f[2]])


def polarization(d, theta1: float, theta2: float, kind: TriadKind) -> tuple[float, float]:
    """Polarization angles (theta3, theta4) from ``d`` given a direction."""
    d = np.asarray(d, dtype=complex)
    s1, c1 = math.sin(theta1), math.cos(theta1)
    c2 = math.cos(theta2)
    # dipole: z = cot(theta3) exp(-j theta4) / cos(theta2)
    # loop:   z = -tan(theta3) exp(+j theta4) / cos(theta2)
    z = d[0] * s1 - d[1] * c1
    if kind is TriadKind.DIPOLE:
        theta4 = -float(np.angle(z))
    else:
        theta4 = float(np.angle(-z))
    theta4 = wrap_angle(theta4)
    sin4 = math.sin(theta4)
    # least-squares combination of the two imaginary parts; equals
    # Im(d2) / cos(theta1) when that is well defined
    x = c1 * d[1].imag - s1 * d[0].imag
    if abs(sin4) > 1e-6:
        ratio = x * c2 / sin4
    else:
        ratio = abs(z) * c2
    ratio = max(ratio, 0.0)
    if kind is TriadKind.DIPOLE:
        theta3 = math.atan2(1.0, ratio)
    else:
        theta3 = math.atan(ratio)
    return theta3, theta4


def _direction_candidates(d):
    im1, im2 = d[0].imag, d[1].imag
    if abs(im1) < IM_DEGENERACY and abs(im2) < IM_DEGENERACY:
        raise DegeneratePolarization(
            "imaginary parts of d vanish (linear polarization); azimuth undetermined"
        )
    base = math.atan2(-im1, im2)
    if base > math.pi / 2:
        base -= math.pi
    elif base <= -math.pi / 2:
        base += math.pi
    out = []
    for theta1 in (base, base + math.pi):
        s = d[0].real * math.cos(theta1) + d[1].real * math.sin(theta1)
        out.append((theta1 % TWO_PI, math.atan(-s)))
    return out


def coarse_angles(d, kind: TriadKind) -> CoarseAngles:
    """Closed-form direction and polarization from ``d``.

    The azimuth is known only modulo pi from the imaginary parts of ``d``.
    Both candidates are completed and the one reproducing ``d`` best with a
    non-negative elevation is kept; the two candidates are exact aliases of
    each other apart from the sign of the elevation.
    """
    d = np.asarray(d, dtype=complex)
    if not np.all(np.isfinite(d)):
        raise DegeneratePolarization("d vector is not finite")
    kind = TriadKind(kind)
    best = None
    for theta1, theta2 in _direction_candidates(d):
        theta3, theta4 = polarization(d, theta1, theta2, kind)
        resid = float(np.linalg.norm(field_ratios(theta1, theta2, theta3, theta4, kind) - d))
        key = (theta2 < 0.0, resid if math.isfinite(resid) else math.inf)
        if best is None or key < best[0]:
            best = (key, CoarseAngles(theta1, theta2, theta3, theta4))
    angles = best[1]
    if angles.theta2 < 0.0:
        angles.theta2 = 0.0
    return angles


def coarse_direction_cosines(theta1: float, theta2: float) -> DirectionCosines:
    return direction_cosines(theta1, theta2)


def disambiguate(u_fine: float, u_coarse: float, spacing_over_lambda: float) -> tuple[float, int]:
    """Pick the ambiguity integer that brings the fine estimate closest to the coarse one.

    Candidates are ``u_fine + n / spacing_over_lambda`` restricted to [-1, 1].
    """
    s = float(spacing_over_lambda)
    if not s > 0:
        raise ValueError(f"spacing must be positive, got {s!r}")
    lo = math.ceil((-1.0 - u_fine) * s - 1e-9)
    hi = math.floor((1.0 - u_fine) * s + 1e-9)
    if lo > hi:
        raise NoFeasibleInteger(
            f"no integer places u_fine={u_fine:.6g} inside [-1, 1] at spacing {s:.6g}"
        )
    n = min(max(round((u_coarse - u_fine) * s), lo), hi)
    return u_fine + n / s, int(n)


def pair_eigenvalues(q_coarse: Sequence[complex], d_x: Sequence[complex]) -> tuple[int, ...]:
    """One-to-one association of sources with x-rotation eigenvalues.

    Repeatedly takes the closest remaining (source, eigenvalue) pair. Entry
    ``k`` of the result is the eigenvalue index assigned to source ``k``.
    """
    q = np.asarray(q_coarse, dtype=complex)
    dx = np.asarray(d_x, dtype=complex)
    k = len(q)
    dist = np.abs(q[:, None] - dx[None, :])
    perm = [-1] * k
    rows = set(range(k))
    cols = set(range(len(dx)))
    while rows:
        best = None
        for i in sorted(rows):
            for j in sorted(cols):
                if best is None or dist[i, j] < best[0]:
                    best = (dist[i, j], i, j)
        _, i, j = best
        perm[i] = j
        rows.remove(i)
        cols.remove(j)
    return tuple(perm)


def final_doa(u_x: float, u_y: float) -> tuple[float, float, bool, bool]:
    """Azimuth and elevation from direction cosines.

    Returns ``(theta1, theta2, zenith, clipped)``. ``zenith`` flags a zero
    horizontal component (azimuth undefined, reported as 0); ``clipped``
    flags a norm above one that was clipped to the horizon.
    """
    r = math.hypot(u_x, u_y)
    zenith = r < 1e-15
    theta1 = 0.0 if zenith else math.atan2(u_y, u_x) % TWO_PI
    clipped = r > 1.0
    theta2 = math.acos(min(r, 1.0))
    return theta1, theta2, zenith, clipped


def refine_polarization(d, theta1: float, theta2: float, kind: TriadKind) -> tuple[float, float]:
    """Polarization re-evaluated at the final direction estimate."""
    return polarization(d, theta1, theta2, TriadKind(kind))


def estimate_frequencies(y, a_full) -> np.ndarray:
    """Digital frequency of each recovered source waveform.

    Waveforms are ``pinv(A) Y``; each frequency is the phase of the lag-one
    autocorrelation over 2 pi, folded into (0, 0.5).
    """
    y = np.asarray(getattr(y, "y", y), dtype=complex)
    a_full = numerics.as_matrix(a_full)
    sv = np.linalg.svd(a_full, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise RankDeficient("estimated steering matrix is rank deficient")
    s = numerics.pinv(a_full) @ y
    lag = np.sum(s[:, 1:] * np.conj(s[:, :-1]), axis=1)
    f = (np.angle(lag) / TWO_PI) % 1.0
    return np.where(f > 0.5, 1.0 - f, f)


def _assign_wavelengths(known, est_freqs) -> np.ndarray:
    known = np.asarray(known, dtype=float)
    if np.allclose(known, known[0]):
        return known.copy()
    est = est_freqs.max() / est_freqs
    best = min(
        itertools.permutations(range(len(known))),
        key=lambda p: np.sum(np.abs(np.log(est) - np.log(known[list(p)]))),
    )
    return known[list(best)]


class _Stage:
    def __init__(self):
        self.name = None

    def __call__(self, name):
        self.name = name
        return self

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, TriadEspritError) and exc.stage is None:
            exc.stage = self.name
        return False


def run_pipeline(
    y,
    k: int,
    layout: ArrayLayout,
    wavelengths: Sequence[float] | str = "estimate",
) -> EstimationResult:
    """Estimate direction and polarization of ``k`` sources from snapshots.

    ``wavelengths`` is either a sequence of source wavelengths (in units of
    the reference wavelength) or ``"estimate"`` to derive them from the
    recovered waveforms. Known wavelengths are matched to the recovered
    sources through their estimated frequencies, so their order is
    irrelevant. Raised package errors carry the failing step in ``.stage``.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"number of sources must be 1, 2 or 3, got {k}")
    kind = layout.kind
    stage = _Stage()

    with stage("covariance"):
        r = covariance(y)
    with stage("signal_subspace"):
        sub = signal_subspace(r, k)
    with stage("rotation_operators"):
        rot = rotation_operators(sub)
    with stage("recover_steering"):
        a1 = recover_steering(sub, rot)

    with stage("estimate_frequencies"):
        if isinstance(wavelengths, str):
            if wavelengths != "estimate":
                raise ValueError(f"unknown wavelength mode {wavelengths!r}")
            freqs = estimate_frequencies(y, sub.es @ rot.eigvecs_y)
            lam = freqs.max() / freqs
            mode = "estimate"
        else:
            known = np.asarray(wavelengths, dtype=float)
            if known.shape != (k,) or np.any(known <= 0):
                raise ValueError(f"need {k} positive wavelengths, got {wavelengths!r}")
            freqs = None
            if np.allclose(known, known[0]):
                lam = known.copy()
            else:
                freqs = estimate_frequencies(y, sub.es @ rot.eigvecs_y)
                lam = _assign_wavelengths(known, freqs)
            mode = "known"

    with stage("fine_uy"):
        uy_fine = fine_uy(rot, lam, layout.delta_y)

    ds, coarse, ucoarse = [], [], []
    for i in range(k):
        with stage("d_vector"):
            d = d_vector(a1[:, i], rot.d_y[i], layout.m1, layout.m2)
        with stage("coarse_angles"):
            c = coarse_angles(d, kind)
        ds.append(d)
        coarse.append(c)
        ucoarse.append(coarse_direction_cosines(c.theta1, c.theta2))

    uy_final, n_y = [], []
    with stage("disambiguate_uy"):
        for i in range(k):
            u, n = disambiguate(uy_fine[i], ucoarse[i].u_y, layout.delta_y / lam[i])
            uy_final.append(u)
            n_y.append(n)

    with stage("pair_eigenvalues"):
        q_coarse = [
            np.exp(-1j * TWO_PI * layout.delta_x * ucoarse[i].u_x / lam[i]) for i in range(k)
        ]
        perm = pair_eigenvalues(q_coarse, rot.d_x)

    ux_fine, ux_final, n_x = [], [], []
    with stage("disambiguate_ux"):
        for i in range(k):
            uf = fine_direction_cosine(rot.d_x[perm[i]], layout.delta_x, lam[i])
            u, n = disambiguate(uf, ucoarse[i].u_x, layout.delta_x / lam[i])
            ux_fine.append(uf)
            ux_final.append(u)
            n_x.append(n)

    estimates = []
    for i in range(k):
        with stage("final_doa"):
            t1, t2, zenith, clipped = final_doa(ux_final[i], uy_final[i])
        with stage("refine_polarization"):
            t3, t4 = refine_polarization(ds[i], t1, t2, kind)
        c = coarse[i]
        estimates.append(SourceEstimate(
            u_x=ux_final[i], u_y=uy_final[i],
            theta1=t1, theta2=t2, theta3=t3, theta4=t4,
            u_x_fine=ux_fine[i], u_y_fine=float(uy_fine[i]),
            u_x_coarse=ucoarse[i].u_x, u_y_coarse=ucoarse[i].u_y,
            theta1_coarse=c.theta1, theta2_coarse=c.theta2,
            theta3_coarse=c.theta3, theta4_coarse=c.theta4,
            wavelength=float(lam[i]), n_y=n_y[i], n_x=n_x[i],
            sigma_y=complex(rot.d_y[i]), sigma_x=complex(rot.d_x[perm[i]]),
            pair_index=perm[i], d=(complex(ds[i][0]), complex(ds[i][1])),
            zenith=zenith, clipped=clipped,
        ))

    return EstimationResult(
        sources=estimates,
        signal_eigenvalues=sub.eigenvalues,
        noise_eigenvalues=sub.all_eigenvalues[k:],
        permutation=perm,
        wavelength_mode=mode,
        frequencies=freqs,
        kind=kind.value,
    )

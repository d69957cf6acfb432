"""Randomized qubit surroundings in the doped host crystal.

Builds the yttrium site lattice of the monoclinic host from the unit-cell data
file, dopes a sphere around the qubit, evaluates static dipole-dipole shifts,
draws inhomogeneous transition frequencies, and assigns frequency channels and
initial ground states.  Bulk data lives in numpy arrays; ``DopedIon`` is the
scalar view used at API boundaries.
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .holeburning import CHANNEL_LO, CHANNEL_WIDTH, PopulationProfile

__all__ = [
    "DopedIon",
    "IonSurrounding",
    "UnitCell",
    "assign_frequencies",
    "assign_initial_states",
    "channel_index",
    "dipole_shift",
    "dope_sphere",
    "load_unit_cell",
]

EPS0 = 8.8541878128e-12     # vacuum permittivity (F/m)
PLANCK = 6.62607015e-34     # Planck constant (J s)
EPS_DC = 11.0               # DC dielectric constant of the host
GAMMA_0 = 1.8e9             # concentration-independent inhomogeneous width (Hz)
GAMMA_C = 1800e9            # concentration slope (Hz per unit concentration)

# k = (eps+2)^2/(9 eps) * 1/(4 pi eps0 h), Hz m^3 / (C m)^2
DIPOLE_K = ((EPS_DC + 2.0) ** 2 / (9.0 * EPS_DC)) / (4.0 * math.pi * EPS0 * PLANCK)

# C2/c coset representatives acting on fractional coordinates and on polar
# vectors: identity, twofold rotation about b, inversion, b-mirror (glide).
_SYM_FRAC = (
    lambda x, y, z: (x, y, z),
    lambda x, y, z: (-x, y, 0.5 - z),
    lambda x, y, z: (-x, -y, -z),
    lambda x, y, z: (x, -y, 0.5 + z),
)
_SYM_VEC = np.array(
    [
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0],
    ]
)


@dataclass(frozen=True)
class UnitCell:
    """Monoclinic cell with the yttrium orbits of the host crystal."""

    a: float
    b: float
    c: float
    alpha: float
    beta: float
    gamma: float
    y_orbits: tuple            # ((site_class, (x, y, z)), ...)
    delta_mu: float            # |mu_g - mu_e| (C m)
    d1_angle_deg: float        # D1 direction in the a-c plane, from the a axis

    def __post_init__(self):
        if abs(self.alpha - 90.0) > 1e-9 or abs(self.gamma - 90.0) > 1e-9:
            raise ValueError("cell must be monoclinic (alpha = gamma = 90)")

    @property
    def cart(self) -> np.ndarray:
        """Cell vectors as rows (nm), b along y, a along x."""
        beta = math.radians(self.beta)
        return np.array(
            [
                [self.a, 0.0, 0.0],
                [0.0, self.b, 0.0],
                [self.c * math.cos(beta), 0.0, self.c * math.sin(beta)],
            ]
        )

    def site_positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All yttrium sites of one cell: fractional positions, orientation
        class (0-3) and site class (1 or 2).  8 basic molecules = 16 Y."""
        fracs, oclass, sclass = [], [], []
        for site_class, (x, y, z) in self.y_orbits:
            for k, op in enumerate(_SYM_FRAC):
                for cx, cy in ((0.0, 0.0), (0.5, 0.5)):
                    fx, fy, fz = op(x, y, z)
                    fracs.append(((fx + cx) % 1.0, (fy + cy) % 1.0, fz % 1.0))
                    oclass.append(k)
                    sclass.append(site_class)
        return np.asarray(fracs), np.asarray(oclass), np.asarray(sclass)

    def dipole_directions(self) -> np.ndarray:
        """Unit dipole-difference direction for each orientation class."""
        ang = math.radians(self.d1_angle_deg)
        ref = np.array([math.cos(ang), 0.0, math.sin(ang)])
        return _SYM_VEC * ref[None, :]


def load_unit_cell(path=None) -> UnitCell:
    if path is None:
        ref = importlib.resources.files("isdsim.data") / "yso_lattice.yaml"
        raw = yaml.safe_load(ref.read_text())
    else:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    return UnitCell(
        a=float(raw["a_nm"]),
        b=float(raw["b_nm"]),
        c=float(raw["c_nm"]),
        alpha=float(raw["alpha_deg"]),
        beta=float(raw["beta_deg"]),
        gamma=float(raw["gamma_deg"]),
        y_orbits=tuple(
            (int(o["site_class"]), tuple(float(v) for v in o["xyz"]))
            for o in raw["y_orbits"]
        ),
        delta_mu=float(raw["delta_mu_cm"]),
        d1_angle_deg=float(raw["d1_angle_from_a_deg"]),
    )


@dataclass(frozen=True)
class DopedIon:
    """Scalar view of one dopant."""

    position: np.ndarray       # nm
    delta_mu: np.ndarray       # C m
    site_class: int = 1
    detuning: float = 0.0      # Hz rel. qubit 0
    channel: int | None = None
    initial_state: int | None = None


def dipole_shift(ion_a: DopedIon, ion_b: DopedIon) -> float:
    """Frequency shift (Hz) each ion's excitation inflicts on the other."""
    return float(
        _shifts_vec(
            ion_a.position[None, :],
            ion_a.delta_mu[None, :],
            ion_b.position,
            ion_b.delta_mu,
        )[0]
    )


def _shifts_vec(pos_nm, mus, ref_pos_nm, ref_mu):
    """Vectorized dipole-dipole shifts of many ions against one reference."""
    r = (pos_nm - ref_pos_nm[None, :]) * 1e-9
    d2 = np.einsum("ij,ij->i", r, r)
    if np.any(d2 <= 0.0):
        raise ValueError("coincident ion positions")
    d = np.sqrt(d2)
    rhat = r / d[:, None]
    dots = np.einsum("ij,ij->i", mus, rhat)
    ref_dot = rhat @ ref_mu
    mu_mu = mus @ ref_mu
    # grouping keeps the formula bitwise symmetric under operand exchange
    return DIPOLE_K / d**3 * (mu_mu - 3.0 * (dots * ref_dot))


@dataclass
class IonSurrounding:
    """The qubit plus its randomized site-1 neighborhood."""

    qubit_position: np.ndarray
    qubit_mu: np.ndarray
    positions: np.ndarray          # (n, 3) nm
    mus: np.ndarray                # (n, 3) C m
    shifts_to_qubit: np.ndarray    # (n,) Hz
    site2_count: int
    c_total: float
    radius: float
    rng_seed: object
    detunings: np.ndarray | None = None   # Hz rel. qubit
    channels: np.ndarray | None = None    # qubit index per ion
    in_channel_detunings: np.ndarray | None = None
    initial_states: np.ndarray | None = None  # ground index, -1 = unset
    gamma_inh: float | None = None
    # per-site random variates drawn at doping time (common-random-number
    # coupling: surroundings at different concentrations share them, which
    # makes cross-concentration comparisons nearly noise-free)
    raw_cauchy: np.ndarray | None = None
    raw_uniform: np.ndarray | None = None

    @property
    def n_ions(self) -> int:
        return self.positions.shape[0]

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.positions - self.qubit_position[None, :], axis=1)

    def qubit(self) -> DopedIon:
        return DopedIon(self.qubit_position, self.qubit_mu, 1, 0.0, 0, None)

    def ion(self, i: int) -> DopedIon:
        return DopedIon(
            self.positions[i],
            self.mus[i],
            1,
            None if self.detunings is None else float(self.detunings[i]),
            None if self.channels is None else int(self.channels[i]),
            None if self.initial_states is None else int(self.initial_states[i]),
        )

    # -- columnar text serialization for replay --------------------------------

    def save(self, path):
        det = self.detunings if self.detunings is not None else np.full(self.n_ions, np.nan)
        ch = self.channels if self.channels is not None else np.full(self.n_ions, -1)
        st = self.initial_states if self.initial_states is not None else np.full(self.n_ions, -1)
        with open(path, "w") as fh:
            fh.write("# isdsim ion surrounding v1\n")
            fh.write(f"# c_total={self.c_total!r} radius={self.radius!r} "
                     f"site2_count={self.site2_count} seed={self.rng_seed!r}\n")
            fh.write(f"# qubit_position={','.join(repr(float(v)) for v in self.qubit_position)}\n")
            fh.write(f"# qubit_mu={','.join(repr(float(v)) for v in self.qubit_mu)}\n")
            fh.write("x_nm,y_nm,z_nm,mux,muy,muz,shift_hz,detuning_hz,channel,state\n")
            for i in range(self.n_ions):
                vals = [*self.positions[i], *self.mus[i], self.shifts_to_qubit[i], det[i]]
                fh.write(
                    ",".join(repr(float(v)) for v in vals)
                    + f",{int(ch[i])},{int(st[i])}\n"
                )

    @staticmethod
    def load(path) -> "IonSurrounding":
        meta = {}
        qpos = qmu = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("# qubit_position="):
                    qpos = np.array([float(v) for v in line.split("=", 1)[1].split(",")])
                elif line.startswith("# qubit_mu="):
                    qmu = np.array([float(v) for v in line.split("=", 1)[1].split(",")])
                elif line.startswith("#") and "=" in line:
                    for part in line[1:].split():
                        if "=" in part:
                            k, v = part.split("=", 1)
                            meta[k] = v
                elif line and not line.startswith("#") and not line.startswith("x_nm"):
                    rows.append([float(v) for v in line.split(",")])
        arr = np.asarray(rows) if rows else np.zeros((0, 10))
        s = IonSurrounding(
            qubit_position=qpos,
            qubit_mu=qmu,
            positions=arr[:, 0:3],
            mus=arr[:, 3:6],
            shifts_to_qubit=arr[:, 6],
            site2_count=int(meta.get("site2_count", 0)),
            c_total=float(meta.get("c_total", 0.0)),
            radius=float(meta.get("radius", 0.0)),
            rng_seed=meta.get("seed"),
        )
        if arr.shape[0] and not np.all(np.isnan(arr[:, 7])):
            s.detunings = arr[:, 7]
            s.channels = arr[:, 8].astype(np.int64)
            s.in_channel_detunings = s.detunings - np.where(
                s.channels % 2, (s.channels + 1) // 2, -(s.channels // 2)
            ) * CHANNEL_WIDTH
            s.initial_states = arr[:, 9].astype(np.int8)
        return s


class _SiteTable:
    """All site-1 lattice positions inside a sphere, built once per process."""

    _cache: dict = {}

    def __init__(self, cell: UnitCell, radius: float):
        cart = cell.cart
        fracs, oclass, sclass = cell.site_positions()
        s1 = sclass == 1
        frac1, oc1 = fracs[s1], oclass[s1]
        margin = float(np.linalg.norm(cart.sum(axis=0)))
        # integer cell ranges covering the sphere
        inv = np.linalg.inv(cart.T)
        lim = radius + margin
        corners = np.array(
            [[sx, sy, sz] for sx in (-lim, lim) for sy in (-lim, lim) for sz in (-lim, lim)]
        )
        ranges = inv @ corners.T
        lo = np.floor(ranges.min(axis=1)).astype(int) - 1
        hi = np.ceil(ranges.max(axis=1)).astype(int) + 1
        pos_chunks, cls_chunks = [], []
        r2 = radius * radius
        for na in range(lo[0], hi[0] + 1):
            nb = np.arange(lo[1], hi[1] + 1)
            nc = np.arange(lo[2], hi[2] + 1)
            gb, gc = np.meshgrid(nb, nc, indexing="ij")
            base = (
                na * cart[0][None, :]
                + gb.ravel()[:, None] * cart[1][None, :]
                + gc.ravel()[:, None] * cart[2][None, :]
            )
            for (fx, fy, fz), oc in zip(frac1, oc1):
                p = base + (fx * cart[0] + fy * cart[1] + fz * cart[2])[None, :]
                keep = np.einsum("ij,ij->i", p, p) <= r2
                if keep.any():
                    pos_chunks.append(p[keep])
                    cls_chunks.append(np.full(int(keep.sum()), oc, dtype=np.uint8))
        self.positions = np.concatenate(pos_chunks)
        self.oclass = np.concatenate(cls_chunks)
        # canonical order for reproducibility independent of chunking
        order = np.lexsort(
            (self.positions[:, 2], self.positions[:, 1], self.positions[:, 0])
        )
        self.positions = np.ascontiguousarray(self.positions[order])
        self.oclass = np.ascontiguousarray(self.oclass[order])
        self.n_site1 = self.positions.shape[0]
        self.n_site2 = self.n_site1  # the two orbits have equal multiplicity

    @classmethod
    def get(cls, cell: UnitCell, radius: float) -> "_SiteTable":
        key = (id(cell.y_orbits), cell.a, cell.b, cell.c, cell.beta, radius)
        if key not in cls._cache:
            cls._cache[key] = cls(cell, radius)
        return cls._cache[key]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def trial_rng(campaign_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream: independent of worker scheduling."""
    bits = np.zeros(2, dtype=np.uint64)
    bits[0] = np.uint64(trial_index)
    bits[1] = np.uint64(campaign_seed)
    return np.random.Generator(np.random.Philox(key=bits))


def dope_sphere(
    cell: UnitCell,
    c_total: float,
    radius: float = 50.0,
    seed=0,
    site1_fraction: float = 0.5,
) -> IonSurrounding:
    """Randomly replace yttrium by dopants inside a sphere around the qubit.

    Every yttrium site independently becomes a dopant with probability
    ``c_total``; only the site-1 half is carried forward (site-2 dopants are
    counted but cause no shifts).  The qubit sits at the site-1 position
    nearest the sphere center.
    """
    if not 0.0 <= c_total <= 0.05:
        raise ValueError("c_total must lie in [0, 0.05] (linear-broadening regime)")
    rng = _rng(seed)
    table = _SiteTable.get(cell, radius)
    dirs = cell.dipole_directions() * cell.delta_mu

    d2 = np.einsum("ij,ij->i", table.positions, table.positions)
    q_idx = int(np.argmin(d2))
    q_pos = table.positions[q_idx]
    q_mu = dirs[table.oclass[q_idx]]

    p_site1 = 2.0 * site1_fraction * c_total
    u_dope = rng.random(table.n_site1)
    raw_cauchy = rng.standard_cauchy(table.n_site1)
    raw_uniform = rng.random(table.n_site1)
    picks = u_dope < p_site1
    picks[q_idx] = False
    idx = np.nonzero(picks)[0]
    positions = table.positions[idx]
    mus = dirs[table.oclass[idx]]
    site2_count = int(rng.binomial(table.n_site2, 2.0 * (1.0 - site1_fraction) * c_total))

    if idx.size:
        shifts = _shifts_vec(positions, mus, q_pos, q_mu)
    else:
        shifts = np.zeros(0)
    return IonSurrounding(
        qubit_position=q_pos.copy(),
        qubit_mu=q_mu.copy(),
        positions=positions,
        mus=mus,
        shifts_to_qubit=shifts,
        site2_count=site2_count,
        c_total=c_total,
        radius=radius,
        rng_seed=seed,
        raw_cauchy=raw_cauchy[idx],
        raw_uniform=raw_uniform[idx],
    )


def gamma_inh(c_total: float) -> float:
    """Inhomogeneous FWHM: Gamma_0 + Gamma_c * c_total."""
    return GAMMA_0 + GAMMA_C * c_total


def assign_frequencies(s: IonSurrounding, c_total: float | None = None, seed=1) -> IonSurrounding:
    """Draw each neighbor's detuning from the Lorentzian inhomogeneous profile.

    The qubit is pinned to the profile center (detuning exactly 0); neighbors
    are Cauchy distributed with FWHM Gamma_inh, untruncated.
    """
    c = s.c_total if c_total is None else c_total
    g = gamma_inh(c)
    s.gamma_inh = g
    if s.raw_cauchy is not None:
        variates = s.raw_cauchy
    else:
        variates = _rng(seed).standard_cauchy(s.n_ions)
    s.detunings = 0.5 * g * variates
    s.channels, s.in_channel_detunings = channel_index(s.detunings)
    return s


def channel_index(detuning):
    """Qubit index owning each detuning, plus the in-channel detuning.

    Channel q covers [-335, 665) MHz around its center; centers are spaced
    1 GHz and numbered 0, +1 GHz -> 1, -1 GHz -> 2, +2 GHz -> 3, ...
    """
    d = np.asarray(detuning, dtype=float)
    k = np.floor((d - CHANNEL_LO) / CHANNEL_WIDTH).astype(np.int64)
    q = np.where(k > 0, 2 * k - 1, -2 * k)
    delta = d - k * CHANNEL_WIDTH
    if np.ndim(detuning) == 0:
        return int(q), float(delta)
    return q, delta


def assign_initial_states(
    s: IonSurrounding, windows: PopulationProfile | None = None, seed=2
) -> IonSurrounding:
    """Sample each neighbor's initial ground state.

    Without transmission windows all three ground states are equally likely;
    with windows the probabilities follow the hole-burnt profile at the ion's
    detuning from its own channel center (1 GHz periodic).
    """
    if s.raw_uniform is not None:
        u = s.raw_uniform
    else:
        u = _rng(seed).random(s.n_ions)
    if windows is None:
        s.initial_states = np.minimum((u * 3).astype(np.int8), 2)
        return s
    if s.in_channel_detunings is None:
        raise ValueError("assign_frequencies must run before windowed state assignment")
    probs = windows.ground_probabilities(s.in_channel_detunings)
    cum = np.cumsum(probs, axis=1)
    s.initial_states = np.minimum(
        (u[:, None] > cum).sum(axis=1), 2
    ).astype(np.int8)
    return s

"""Gaussian edge environments and the conductance laws driving them.

The randomness of the whole laboratory enters through a single object: an
i.i.d. standard-Gaussian field ``zeta`` indexed by the edges of a lattice.
Conductances are produced pointwise as ``a_e = eta(zeta_e)`` for a smooth law
``eta`` bounded away from 0 and infinity with bounded first and second
derivatives.  We keep ``zeta`` (not just ``a``) because sensitivity formulas
need ``eta'(zeta_e)``.

All sampling is counter-based (Philox keyed by the 64-bit seed), so a given
seed reproduces the same environment bit-for-bit regardless of how many
workers are running.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import PERIODIC, LatticeGeometry

SNAPSHOT_MAGIC = b"HGL1"


@dataclass(frozen=True)
class ConductanceLaw:
    """Scalar map eta with declared bounds and derivative bounds.

    c_min <= eta <= c_max, |eta'| <= m1, |eta''| <= m2; spot-checked in tests.
    """

    name: str
    eta: Callable[[np.ndarray], np.ndarray]
    eta_prime: Callable[[np.ndarray], np.ndarray]
    eta_second: Callable[[np.ndarray], np.ndarray]
    c_min: float
    c_max: float
    m1: float
    m2: float


def _tanh_law(name: str, center: float, amplitude: float) -> ConductanceLaw:
    a = float(amplitude)
    return ConductanceLaw(
        name=name,
        eta=lambda t: center + a * np.tanh(t),
        eta_prime=lambda t: a / np.cosh(t) ** 2,
        eta_second=lambda t: -2.0 * a * np.tanh(t) / np.cosh(t) ** 2,
        c_min=center - a,
        c_max=center + a,
        m1=abs(a),
        # max of |2 tanh sech^2| = 4/(3 sqrt 3)
        m2=abs(a) * 4.0 / (3.0 * np.sqrt(3.0)),
    )


def _constant_law(value: float) -> ConductanceLaw:
    v = float(value)
    return ConductanceLaw(
        name=f"constant:{v:g}",
        eta=lambda t: np.full_like(np.asarray(t, dtype=np.float64), v),
        eta_prime=lambda t: np.zeros_like(np.asarray(t, dtype=np.float64)),
        eta_second=lambda t: np.zeros_like(np.asarray(t, dtype=np.float64)),
        c_min=v,
        c_max=v,
        m1=0.0,
        m2=0.0,
    )


def make_law(name: str, **params) -> ConductanceLaw:
    """Construct a named conductance law.

    "tanh"           -- eta(t) = center + amplitude * tanh(t); default 2 + tanh(t)
    "constant"       -- eta == value
    "small-contrast" -- eta(t) = 1 + contrast * tanh(t)
    """
    if name == "tanh":
        return _tanh_law("tanh", params.get("center", 2.0), params.get("amplitude", 1.0))
    if name == "constant":
        return _constant_law(params.get("value", 1.0))
    if name == "small-contrast":
        c = params.get("contrast", 0.05)
        return _tanh_law(f"small-contrast:{c:g}", 1.0, c)
    raise ValueError(f"unknown conductance law {name!r}")


DEFAULT_LAW = make_law("tanh")


@dataclass(frozen=True)
class Environment:
    """A sampled Gaussian edge field together with its geometry and law."""

    geometry: LatticeGeometry
    zeta: np.ndarray
    seed: int
    law: ConductanceLaw

    def __post_init__(self):
        if self.zeta.shape != (self.geometry.n_edges,):
            raise ValueError("zeta length must equal the number of edges")
        self.zeta.setflags(write=False)


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def derive_seed(base: int, *indices: int) -> int:
    """Deterministic 64-bit child seed for task (base, i, j, ...)."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_environment(
    geometry: LatticeGeometry, law: ConductanceLaw = DEFAULT_LAW, seed: int = 0
) -> Environment:
    """Draw zeta ~ i.i.d. N(0,1) on every edge, deterministically from seed."""
    zeta = _philox(seed).standard_normal(geometry.n_edges)
    return Environment(geometry=geometry, zeta=zeta, seed=int(seed), law=law)


def conductances(env: Environment) -> np.ndarray:
    """Edge field a_e = eta(zeta_e)."""
    return env.law.eta(env.zeta)


def perturb_edge(env: Environment, edge_index: int, fresh_seed: int) -> Environment:
    """Replace zeta at one edge by an independent N(0,1) draw."""
    if not 0 <= edge_index < env.geometry.n_edges:
        raise IndexError(f"edge {edge_index} out of range")
    zeta = env.zeta.copy()
    zeta[edge_index] = _philox(fresh_seed).standard_normal()
    return Environment(env.geometry, zeta, env.seed, env.law)


def ou_resample(env: Environment, t: float, fresh_seed: int) -> Environment:
    """Ornstein-Uhlenbeck step of duration t on the whole field.

    zeta_out = exp(-t) zeta + sqrt(1 - exp(-2t)) zeta' with fresh zeta'.
    Preserves the i.i.d. N(0,1) marginal for every t >= 0; t=0 is the identity
    and t -> infinity decorrelates completely.
    """
    if t < 0:
        raise ValueError(f"OU time must be nonnegative, got {t}")
    if t == 0.0:
        return env
    decay = np.exp(-t)
    fresh = _philox(fresh_seed).standard_normal(env.geometry.n_edges)
    zeta = decay * env.zeta + np.sqrt(max(0.0, 1.0 - decay * decay)) * fresh
    return Environment(env.geometry, zeta, env.seed, env.law)


def shift(env: Environment, x) -> Environment:
    """Translate the environment: (shift zeta)_e = zeta_{x+e}; torus only."""
    geom = env.geometry
    if geom.bc != PERIODIC:
        raise ValueError("shift is only defined on periodic geometry")
    x = np.asarray(x, dtype=int)
    zg = geom.edge_grid(env.zeta)
    shifted = np.roll(zg, shift=tuple(-x), axis=tuple(range(1, geom.d + 1)))
    return Environment(geom, shifted.reshape(geom.n_edges).copy(), env.seed, env.law)


# -- snapshot format --------------------------------------------------------
#
# header: magic "HGL1" | u32 d | u32 L per axis | u64 seed
#         | u16 law-name length | law name utf-8 | u8 dtype tag (0 = f64 LE)
# payload: zeta in edge-index order (direction-major, sites row-major).


def save_environment(path, env: Environment) -> None:
    geom = env.geometry
    name = env.law.name.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", geom.d))
        fh.write(struct.pack(f"<{geom.d}I", *geom.shape))
        fh.write(struct.pack("<Q", env.seed % (1 << 64)))
        fh.write(struct.pack("<H", len(name)))
        fh.write(name)
        fh.write(struct.pack("<B", 0))
        fh.write(env.zeta.astype("<f8").tobytes())


def load_environment(path, bc: str = PERIODIC, law: ConductanceLaw | None = None) -> Environment:
    """Read an environment snapshot; the law is re-resolved from its name."""
    with open(path, "rb") as fh:
        if fh.read(4) != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not an HGL1 snapshot")
        (d,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{d}I", fh.read(4 * d))
        (seed,) = struct.unpack("<Q", fh.read(8))
        (nlen,) = struct.unpack("<H", fh.read(2))
        name = fh.read(nlen).decode("utf-8")
        (tag,) = struct.unpack("<B", fh.read(1))
        if tag != 0:
            raise ValueError(f"{path}: unsupported element type tag {tag}")
        geom = LatticeGeometry(d=d, shape=shape, bc=bc)
        zeta = np.frombuffer(fh.read(8 * geom.n_edges), dtype="<f8").copy()
    if law is None:
        law = _law_from_name(name)
    return Environment(geometry=geom, zeta=zeta, seed=seed, law=law)


def _law_from_name(name: str) -> ConductanceLaw:
    if name == "tanh":
        return make_law("tanh")
    if name.startswith("constant:"):
        return make_law("constant", value=float(name.split(":", 1)[1]))
    if name.startswith("small-contrast:"):
        return make_law("small-contrast", contrast=float(name.split(":", 1)[1]))
    raise ValueError(f"cannot reconstruct conductance law from name {name!r}")

"""Dense complex linear algebra substrate.

Operators and projectors on C^D, tensor embeddings of subsystem states into a
qubit register, Haar-random unitary sampling, and time evolution from several
unitary sources (Hamiltonian, circular unitary ensemble, brickwork circuit).
Everything is dense; the default dimension cap is 2**14.
"""

from __future__ import annotations

import math
import threading
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

#: Default hard cap on the Hilbert-space dimension for dense embeddings.
DIM_CAP_DEFAULT = 2 ** 14

#: Frobenius-norm tolerances, scaled by the dimension where noted.
HERMITICITY_TOL = 1e-10   # times D
IDEMPOTENCE_TOL = 1e-10   # times D
UNITARITY_TOL = 1e-10     # times D
RANK_TOL = 1e-8
STATE_NORM_TOL = 1e-12


def derive_rng(seed, *key):
    """Derive an independent random generator from a master seed and a key.

    Parameters
    ----------
    seed : int or None
        Master seed. ``None`` draws fresh OS entropy.
    key : ints and/or strings
        Stream identifier, e.g. ``("typicality", sample_index)``. Strings are
        hashed with CRC32 so the derivation is stable across runs.

    Returns
    -------
    numpy.random.Generator
    """
    spawn_key = tuple(
        zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key
    )
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


def _resolve_rng(seed=None, rng=None):
    """Accept either a seed or an explicit generator (generator wins)."""
    if rng is not None:
        return rng
    return np.random.default_rng(seed)


def sample_haar_unitary(dim: int, seed=None, rng=None) -> np.ndarray:
    """Draw a unitary from the Haar measure on U(dim).

    Uses the Ginibre + QR construction: QR of a complex Gaussian matrix,
    with the diagonal of R rotated onto the positive real axis. Without that
    phase correction the QR decomposition is not unique and the distribution
    of Q would not be Haar.

    Parameters
    ----------
    dim : int
        Dimension D >= 1.
    seed, rng :
        Either a seed for a fresh generator or an existing generator.

    Returns
    -------
    numpy.ndarray
        D x D complex unitary, ``U^dag U = 1`` to ``1e-10 * D``.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    rng = _resolve_rng(seed, rng)
    a = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r).copy()
    # map zero pivots (probability zero, but finite-precision safe) to phase 1
    diag[diag == 0] = 1.0
    q *= diag / np.abs(diag)
    return q


def sample_haar_state(dim: int, seed=None, rng=None) -> np.ndarray:
    """Draw a Haar-random unit vector in C^dim (normalized complex Gaussian)."""
    rng = _resolve_rng(seed, rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def gue_hamiltonian(dim: int, seed=None, rng=None) -> np.ndarray:
    """Draw a GUE Hamiltonian normalized so the spectrum concentrates in [-2, 2].

    Entry variances are E[H_ii^2] = E[|H_ij|^2] = 1/dim, i.e. the density
    exp(-(dim/2) Tr H^2); the semicircle radius is then 2.
    """
    rng = _resolve_rng(seed, rng)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / (2.0 * math.sqrt(dim))


@dataclass(frozen=True)
class Operator:
    """A dense D x D complex matrix with finite entries."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"operator must be square, got shape {entries.shape}")
        if entries.shape[0] < 1:
            raise ValueError("operator dimension must be >= 1")
        if not np.all(np.isfinite(entries.view(float))):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Projector(Operator):
    """An orthogonal projector with its integer rank.

    ``validate`` checks hermiticity, idempotence and the trace/rank match at
    the module tolerances; constructors in this package call it so that
    numerical degradation surfaces as an error instead of propagating.
    """

    rank: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not (0 <= self.rank <= self.dim):
            raise ValueError(f"rank {self.rank} out of range for dim {self.dim}")

    def validate(self) -> None:
        """Raise ValueError if the projector invariants fail at tolerance."""
        p = self.entries
        d = self.dim
        herm = np.linalg.norm(p - p.conj().T)
        if herm > HERMITICITY_TOL * d:
            raise ValueError(f"projector not Hermitian: defect {herm:.3e}")
        idem = np.linalg.norm(p @ p - p)
        if idem > IDEMPOTENCE_TOL * d:
            raise ValueError(f"projector not idempotent: defect {idem:.3e}")
        tr = np.trace(p)
        if abs(tr.imag) > RANK_TOL or abs(tr.real - self.rank) > RANK_TOL:
            raise ValueError(
                f"projector trace {tr:.6e} does not match rank {self.rank}")

    @classmethod
    def from_isometry(cls, v: np.ndarray) -> "Projector":
        """Projector V V^dag onto the column span of an isometry V."""
        v = np.asarray(v, dtype=complex)
        p = cls(v @ v.conj().T, rank=v.shape[1])
        p.validate()
        return p

    @classmethod
    def coordinate(cls, dim: int, rank: int) -> "Projector":
        """Projector onto the span of the first ``rank`` coordinate vectors."""
        return cls(np.diag(np.r_[np.ones(rank), np.zeros(dim - rank)]).astype(complex),
                   rank=rank)


def conjugate(p: Projector, u: np.ndarray) -> Projector:
    """Return U P U^dag as a validated projector of the same rank."""
    u = np.asarray(u, dtype=complex)
    if u.shape != p.entries.shape:
        raise ValueError(f"dimension mismatch: P is {p.entries.shape}, U is {u.shape}")
    q = Projector(u @ p.entries @ u.conj().T, rank=p.rank)
    q.validate()
    return q


def _check_sites(sites: Sequence[int], n_total: int, label: str) -> tuple:
    sites = tuple(int(s) for s in sites)
    if len(set(sites)) != len(sites):
        raise ValueError(f"{label} sites contain duplicates: {sites}")
    if any(s < 0 or s >= n_total for s in sites):
        raise ValueError(f"{label} sites {sites} out of range for {n_total} qubits")
    return sites


@dataclass(frozen=True)
class ManyBodySetup:
    """A qubit register split into observed, core and complement factors.

    The register has ``n_total`` qubits (D = 2^N). The observable projector
    acts as |chi><chi| on the ``n_observed`` observed qubits tensored with the
    identity on the rest; the core projector acts as |psi><psi| on the
    ``n_core`` core qubits tensored with the identity on the bath. By default
    the observed qubits are the first ``n_observed`` and the core qubits the
    first ``n_core``, so the observed subsystem is nested inside the core.

    Parameters
    ----------
    n_total, n_observed, n_core : int
        Qubit counts N, N_S, N_sigma with N_S <= N_sigma <= N.
    observed_state : array of shape (2**n_observed,)
        Unit vector |chi>.
    core_state : array of shape (2**n_core,)
        Unit vector |psi>.
    observed_sites, core_sites : optional tuples of qubit indices
        Explicit site layouts; default is the leading qubits.
    """

    n_total: int
    n_observed: int
    n_core: int
    observed_state: np.ndarray
    core_state: np.ndarray
    observed_sites: Optional[Sequence[int]] = None
    core_sites: Optional[Sequence[int]] = None

    def __post_init__(self):
        if not (1 <= self.n_observed <= self.n_core <= self.n_total):
            raise ValueError(
                f"need 1 <= n_observed <= n_core <= n_total, got "
                f"({self.n_observed}, {self.n_core}, {self.n_total})")
        for name, vec, n in (("observed_state", self.observed_state, self.n_observed),
                             ("core_state", self.core_state, self.n_core)):
            vec = np.asarray(vec, dtype=complex).ravel()
            if vec.shape != (2 ** n,):
                raise ValueError(f"{name} must have length {2 ** n}, got {vec.shape}")
            if abs(np.linalg.norm(vec) - 1.0) > STATE_NORM_TOL:
                raise ValueError(f"{name} is not unit-norm to {STATE_NORM_TOL}")
            object.__setattr__(self, name, vec)
        obs = (tuple(range(self.n_observed)) if self.observed_sites is None
               else _check_sites(self.observed_sites, self.n_total, "observed"))
        core = (tuple(range(self.n_core)) if self.core_sites is None
                else _check_sites(self.core_sites, self.n_total, "core"))
        if len(obs) != self.n_observed or len(core) != self.n_core:
            raise ValueError("site layout lengths do not match qubit counts")
        object.__setattr__(self, "observed_sites", obs)
        object.__setattr__(self, "core_sites", core)

    @property
    def dim(self) -> int:
        return 2 ** self.n_total

    @property
    def d_s(self) -> int:
        return 2 ** self.n_observed

    @property
    def d_sigma(self) -> int:
        return 2 ** self.n_core

    @property
    def d_eta(self) -> int:
        """Bath dimension D/D_sigma; equals the core-projector rank D_rho."""
        return self.dim // self.d_sigma

    @property
    def d_env(self) -> int:
        """Environment dimension D/D_S; equals the observable rank D_R."""
        return self.dim // self.d_s

    @property
    def d_rho(self) -> int:
        return self.d_eta

    @property
    def d_r(self) -> int:
        return self.d_env


def _site_permutation(sites: Sequence[int], n_total: int) -> np.ndarray:
    """Map canonical basis index j to the index in (sites, others) block order.

    Qubit 0 is the leftmost (most significant) tensor factor.
    """
    order = list(sites) + [q for q in range(n_total) if q not in sites]
    j = np.arange(2 ** n_total)
    out = np.zeros_like(j)
    for k, q in enumerate(order):
        bit = (j >> (n_total - 1 - q)) & 1
        out |= bit << (n_total - 1 - k)
    return out


def embed_isometry(setup: ManyBodySetup, which: str) -> np.ndarray:
    """Isometry from the complement factor into the full register.

    For ``which='observable'`` the columns are |chi> tensor |e_m> over the
    environment basis (shape D x D_R); for ``which='core'`` they are
    |psi> tensor |e_m> over the bath (shape D x D_rho). The columns are an
    orthonormal basis of the corresponding embedded projector's range.
    """
    if which == "observable":
        state, sites = setup.observed_state, setup.observed_sites
    elif which == "core":
        state, sites = setup.core_state, setup.core_sites
    else:
        raise ValueError(f"which must be 'observable' or 'core', got {which!r}")
    d = setup.dim
    d_rest = d // len(state)
    block = np.kron(state[:, None], np.eye(d_rest, dtype=complex))
    perm = _site_permutation(sites, setup.n_total)
    return block[perm]


def tensor_embed(setup: ManyBodySetup, which: str,
                 dim_cap: int = DIM_CAP_DEFAULT) -> Projector:
    """Embed the observed or core state projector into the full register.

    Returns |chi><chi| (x) 1_E for ``which='observable'`` (rank D/D_S) or
    |psi><psi| (x) 1_eta for ``which='core'`` (rank D/D_sigma), with the
    site layout of ``setup`` applied.

    Raises
    ------
    ValueError
        If the full dimension exceeds ``dim_cap``.
    """
    if setup.dim > dim_cap:
        raise ValueError(
            f"dimension {setup.dim} exceeds cap {dim_cap}; "
            "raise dim_cap explicitly to allow this allocation")
    return Projector.from_isometry(embed_isometry(setup, which))


@dataclass
class UnitarySource:
    """A family of unitaries U(t), one of three variants.

    ``hamiltonian``: autonomous evolution exp(-i H t); the eigendecomposition
    of H is computed once and cached (thread-safe single init).
    ``haar_cue``: each integer t > 0 labels an independent Haar unitary drawn
    from the seed, with t = 0 the identity; this realizes "evolve to the
    Haar-typicality regime" without a model Hamiltonian.
    ``circuit``: brickwork of Haar-random two-qubit gates; integer t counts
    applied layers, each layer's gates derived deterministically from the seed.
    """

    kind: str
    dim: int
    seed: Optional[int] = None
    h: Optional[np.ndarray] = None
    n_sites: Optional[int] = None
    gate_set: str = "haar2"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock,
                                  repr=False, compare=False)

    @classmethod
    def hamiltonian(cls, h: np.ndarray) -> "UnitarySource":
        """Autonomous source exp(-i H t) for a Hermitian matrix H."""
        h = np.asarray(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {h.shape}")
        defect = np.linalg.norm(h - h.conj().T)
        if defect > HERMITICITY_TOL * h.shape[0]:
            raise ValueError(f"Hamiltonian not Hermitian: defect {defect:.3e}")
        return cls(kind="hamiltonian", dim=h.shape[0], h=h)

    @classmethod
    def haar_cue(cls, dim: int, seed: int) -> "UnitarySource":
        """Independent Haar unitaries indexed by integer time."""
        return cls(kind="haar_cue", dim=dim, seed=seed)

    @classmethod
    def circuit(cls, n_sites: int, seed: int,
                gate_set: str = "haar2") -> "UnitarySource":
        """Brickwork circuit of Haar two-qubit gates on ``n_sites`` qubits."""
        if n_sites < 2:
            raise ValueError("circuit source needs at least 2 qubits")
        if gate_set != "haar2":
            raise ValueError(f"unknown gate set {gate_set!r}")
        return cls(kind="circuit", dim=2 ** n_sites, seed=seed, n_sites=n_sites)

    def eigensystem(self):
        """Eigenvalues and eigenvectors of H, computed once and cached."""
        if self.kind != "hamiltonian":
            raise ValueError(f"eigensystem undefined for kind {self.kind!r}")
        with self._lock:
            if "eig" not in self._cache:
                self._cache["eig"] = np.linalg.eigh(self.h)
        return self._cache["eig"]

    def _circuit_layer(self, layer: int) -> np.ndarray:
        """Dense unitary of one brickwork layer (even pairs on even layers)."""
        n = self.n_sites
        u = np.eye(self.dim, dtype=complex)
        start = 0 if layer % 2 == 0 else 1
        tensor = u.reshape((2,) * n + (self.dim,))
        for slot, a in enumerate(range(start, n - 1, 2)):
            gate = sample_haar_unitary(4, rng=derive_rng(self.seed, "layer", layer, slot))
            g = gate.reshape(2, 2, 2, 2)
            # contract the gate onto qubit legs (a, a+1) of the row index
            tensor = np.tensordot(g, tensor, axes=[(2, 3), (a, a + 1)])
            tensor = np.moveaxis(tensor, (0, 1), (a, a + 1))
        return tensor.reshape(self.dim, self.dim)


def evolve(source: UnitarySource, t: float) -> np.ndarray:
    """Unitary at time t for the given source.

    Hamiltonian sources accept any real t (with U(t1) U(t2) = U(t1+t2));
    the ensemble variants accept nonnegative integers, t = 0 giving the
    identity.
    """
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    if source.kind == "hamiltonian":
        evals, vecs = source.eigensystem()
        phases = np.exp(-1j * float(t) * evals)
        return (vecs * phases) @ vecs.conj().T
    step = int(round(t))
    if abs(t - step) > 1e-12 or step < 0:
        raise ValueError(
            f"{source.kind} sources are defined on nonnegative integer times, got {t}")
    if step == 0:
        return np.eye(source.dim, dtype=complex)
    if source.kind == "haar_cue":
        return sample_haar_unitary(source.dim, rng=derive_rng(source.seed, "cue", step))
    if source.kind == "circuit":
        with source._lock:
            depth, u = source._cache.get("circuit", (0, np.eye(source.dim, dtype=complex)))
            while depth < step:
                u = source._circuit_layer(depth) @ u
                depth += 1
                source._cache["circuit"] = (depth, u)
            if depth == step:
                return u
        # ask for an earlier time than the cached product: rebuild cheaply
        u = np.eye(source.dim, dtype=complex)
        for layer in range(step):
            u = source._circuit_layer(layer) @ u
        return u
    raise ValueError(f"unknown source kind {source.kind!r}")

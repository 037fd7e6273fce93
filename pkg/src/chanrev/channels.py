"""Linear maps between matrix algebras and the Petz recovery construction.

A :class:`Channel` stores its superoperator matrix, acting on column-stacked
(Fortran order) vectorizations: ``vec(T(X)) = S @ vec(X)``.  The Choi matrix
is ``J = sum_ij E_ij (x) T(E_ij)`` with the input factor first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .ensembles import ginibre, random_state, rng_from
from .errors import DimensionMismatch, NotInvertible, NotPositive

ATOL = la.ATOL


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def conjugation_super(x: np.ndarray) -> np.ndarray:
    """Superoperator of ``Y -> x Y x*``."""
    x = np.asarray(x, dtype=complex)
    return np.kron(np.conj(x), x)


def sandwich_super(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Superoperator of ``Y -> left Y right``."""
    return np.kron(np.asarray(right).T, np.asarray(left))


class DensityOperator:
    """A validated density matrix with cached spectral data."""

    def __init__(self, matrix, atol: float = ATOL, normalize: bool = False):
        m = la.hermitian_part(matrix, atol)
        if normalize:
            m = m / np.trace(m).real
        w = np.linalg.eigvalsh(m)
        if w[0] < -max(atol, 1e-12 * abs(w[-1])):
            raise NotPositive(f"state has negative eigenvalue {w[0]:.3e}")
        if abs(np.trace(m).real - 1.0) > max(atol, 1e-12) * max(1, m.shape[0]):
            raise ValueError(f"state has trace {np.trace(m).real!r}, expected 1")
        self.matrix = m

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectral(self) -> la.SpectralDecomposition:
        return la.hermitian_spectral(self.matrix)

    @cached_property
    def support(self) -> la.SupportProjection:
        return la.support_projection(self.matrix)

    @property
    def is_invertible(self) -> bool:
        return self.support.rank == self.dim

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, rank={self.support.rank})"


class Channel:
    """Linear map ``M_in -> M_out`` held as a superoperator matrix."""

    def __init__(
        self,
        superop,
        in_dim: int,
        out_dim: int,
        kraus: Sequence[np.ndarray] | None = None,
        label: str = "",
    ):
        s = np.asarray(superop, dtype=complex)
        if s.shape != (out_dim * out_dim, in_dim * in_dim):
            raise DimensionMismatch(
                f"superoperator shape {s.shape} does not match {in_dim}->{out_dim}"
            )
        self.superop = s
        self.in_dim = in_dim
        self.out_dim = out_dim
        self._kraus = None if kraus is None else [np.asarray(k, dtype=complex) for k in kraus]
        self.label = label

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_kraus(cls, ops: Sequence[np.ndarray], label: str = "") -> "Channel":
        ops = [np.asarray(k, dtype=complex) for k in ops]
        if not ops:
            raise ValueError("at least one Kraus operator is required")
        out_dim, in_dim = ops[0].shape
        if any(k.shape != (out_dim, in_dim) for k in ops):
            raise DimensionMismatch("Kraus operators must share one shape")
        s = sum(conjugation_super(k) for k in ops)
        return cls(s, in_dim, out_dim, kraus=ops, label=label)

    @classmethod
    def from_choi(cls, choi, in_dim: int, out_dim: int, label: str = "") -> "Channel":
        j = np.asarray(choi, dtype=complex)
        if j.shape != (in_dim * out_dim, in_dim * out_dim):
            raise DimensionMismatch(f"Choi matrix shape {j.shape}")
        j4 = j.reshape(in_dim, out_dim, in_dim, out_dim)  # [c, r, d, s]
        s = j4.transpose(3, 1, 2, 0).reshape(out_dim * out_dim, in_dim * in_dim)
        return cls(s, in_dim, out_dim, label=label)

    @classmethod
    def from_superoperator(cls, superop, in_dim: int, out_dim: int, label: str = "") -> "Channel":
        return cls(superop, in_dim, out_dim, label=label)

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], in_dim: int, out_dim: int, label: str = ""
    ) -> "Channel":
        """Tabulate a linear function on the matrix units."""
        cols = []
        for k in range(in_dim * in_dim):
            e = np.zeros(in_dim * in_dim, dtype=complex)
            e[k] = 1.0
            cols.append(vec(func(unvec(e, in_dim))))
        return cls(np.column_stack(cols), in_dim, out_dim, label=label)

    # -- representations --------------------------------------------------

    @cached_property
    def choi(self) -> np.ndarray:
        i, o = self.in_dim, self.out_dim
        s4 = self.superop.reshape(o, o, i, i)  # [s, r, d, c]
        return s4.transpose(3, 1, 2, 0).reshape(i * o, i * o)

    @property
    def kraus(self) -> list[np.ndarray]:
        """Kraus operators; derived from the Choi matrix when not supplied."""
        if self._kraus is None:
            w, v = la.eigh(self.choi)
            scale = max(1.0, abs(w[0]))
            if w[-1] < -ATOL * scale:
                raise NotPositive("map is not completely positive; no Kraus form")
            keep = w > ATOL * scale
            self._kraus = [
                np.sqrt(lam) * v[:, k].reshape(self.in_dim, self.out_dim).T
                for k, lam in zip(np.flatnonzero(keep), w[keep])
            ]
        return self._kraus

    # -- action -----------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def adjoint(self) -> "Channel":
        kraus = None if self._kraus is None else [la.dag(k) for k in self._kraus]
        return Channel(la.dag(self.superop), self.out_dim, self.in_dim, kraus=kraus,
                       label=f"{self.label}*" if self.label else "")

    def compose(self, first: "Channel") -> "Channel":
        """``self o first``."""
        if first.out_dim != self.in_dim:
            raise DimensionMismatch("cannot compose: dimensions differ")
        return Channel(self.superop @ first.superop, first.in_dim, self.out_dim)

    def is_trace_preserving(self, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.adjoint()(np.eye(self.out_dim)), np.eye(self.in_dim), atol=atol))

    def is_unital(self, atol: float = ATOL) -> bool:
        return bool(np.allclose(self(np.eye(self.in_dim)), np.eye(self.out_dim), atol=atol))

    def __repr__(self) -> str:
        name = f" {self.label!r}" if self.label else ""
        return f"Channel{name}({self.in_dim}->{self.out_dim})"


def apply(T: Channel, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (T.in_dim, T.in_dim):
        raise DimensionMismatch(f"input shape {x.shape}, channel expects {T.in_dim}x{T.in_dim}")
    return unvec(T.superop @ vec(x), T.out_dim)


def apply_kraus(T: Channel, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return sum(k @ x @ la.dag(k) for k in T.kraus)


def adjoint(T: Channel) -> Channel:
    return T.adjoint()


# -- standard maps -----------------------------------------------------------


def identity_channel(d: int) -> Channel:
    return Channel.from_kraus([np.eye(d)], label="identity")


def unitary_channel(u) -> Channel:
    return Channel.from_kraus([np.asarray(u, dtype=complex)], label="unitary")


def pinching(projections: Sequence[np.ndarray]) -> Channel:
    return Channel.from_kraus(list(projections), label="pinching")


def diagonal_pinching(d: int) -> Channel:
    return pinching([np.diag(np.eye(d)[k]).astype(complex) for k in range(d)])


def transpose_map(d: int) -> Channel:
    return Channel.from_function(lambda x: x.T, d, d, label="transpose")


def ancilla_embedding(d: int, omega) -> Channel:
    """``x -> x (x) omega`` for a fixed ancilla state ``omega``."""
    omega = np.asarray(omega, dtype=complex)
    k = omega.shape[0]
    w, v = la.eigh(omega)
    ops = [np.kron(np.eye(d), np.sqrt(max(lam, 0.0)) * v[:, [j]]) for j, lam in enumerate(w) if lam > ATOL]
    return Channel.from_kraus(ops, label="ancilla")


def partial_trace_channel(d: int, k: int) -> Channel:
    """Trace out the second factor of ``C^d (x) C^k``."""
    ops = [np.kron(np.eye(d), np.eye(k)[[j], :]) for j in range(k)]
    return Channel.from_kraus(ops, label="partial_trace")


def classical_channel(stochastic) -> Channel:
    """Measure-and-prepare map in the computational basis, ``P[j, i] = p(j|i)``."""
    p = np.asarray(stochastic, dtype=float)
    n_out, n_in = p.shape
    ops = []
    for i in range(n_in):
        for j in range(n_out):
            if p[j, i] > 0:
                k = np.zeros((n_out, n_in), dtype=complex)
                k[j, i] = np.sqrt(p[j, i])
                ops.append(k)
    return Channel.from_kraus(ops, label="classical")


def depolarizing(d: int, p: float) -> Channel:
    return Channel.from_function(
        lambda x: (1 - p) * x + p * np.trace(x) * np.eye(d) / d, d, d, label="depolarizing"
    )


# -- positivity hierarchy ----------------------------------------------------


@dataclass
class PositivityReport:
    completely_positive: bool
    two_positive: bool
    two_positive_exact: bool
    schwarz_sampled: bool
    trace_preserving: bool
    adjoint_unital: bool
    faithful_adjoint: bool
    positive_sampled: bool
    choi_min_eigenvalue: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _choi_min(T: Channel) -> tuple[float, float]:
    w = np.linalg.eigvalsh(0.5 * (T.choi + la.dag(T.choi)))
    return float(w[0]), max(1.0, float(np.max(np.abs(w))))


def _schmidt_rank_two_vector(i: int, o: int, rng) -> np.ndarray:
    a = ginibre(i, 2, rng)
    b = ginibre(o, 2, rng)
    v = np.kron(a[:, 0], b[:, 0]) + np.kron(a[:, 1], b[:, 1])
    return v / np.linalg.norm(v)


def schwarz_violation(phi: Channel, samples: int, seed=0) -> float:
    """Largest sampled violation of ``phi(a*a) >= phi(a)* phi(a)``."""
    rng = rng_from(seed)
    worst = 0.0
    for _ in range(samples):
        a = ginibre(phi.in_dim, phi.in_dim, rng)
        fa = phi(a)
        diff = phi(la.dag(a) @ a) - la.dag(fa) @ fa
        worst = max(worst, -la.min_eigenvalue(0.5 * (diff + la.dag(diff))))
    return worst


def positivity_report(T: Channel, samples: int = 200, seed: int = 0, atol: float = ATOL) -> PositivityReport:
    """Place ``T`` in the positivity hierarchy.

    Complete positivity is decided from the Choi spectrum.  2-positivity is
    exact whenever complete positivity holds or ``min(in, out) <= 2``;
    otherwise it is falsified by sampling Schmidt-rank-2 vectors against the
    Choi matrix.  The Schwarz inequality is sampled on the adjoint ``T*``
    (the map required to be unital Schwarz), and so is plain positivity.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = rng_from(seed)
    jmin, jscale = _choi_min(T)
    cp = jmin >= -atol * jscale
    if cp or min(T.in_dim, T.out_dim) <= 2:
        two_pos, exact = cp, True
    else:
        j = T.choi
        two_pos = all(
            np.real(np.vdot(v, j @ v)) >= -atol * jscale
            for v in (_schmidt_rank_two_vector(T.in_dim, T.out_dim, rng) for _ in range(samples))
        )
        exact = not two_pos
    positive = True
    for _ in range(samples):
        psi = ginibre(T.in_dim, 1, rng)
        out = T(psi @ la.dag(psi))
        if la.min_eigenvalue(0.5 * (out + la.dag(out))) < -atol * max(1.0, la.operator_norm(out)):
            positive = False
            break
    tstar = T.adjoint()
    schwarz = positive and schwarz_violation(tstar, samples, rng) <= atol * 10
    tp = T.is_trace_preserving(atol)
    faithful = False
    if positive:
        rho = random_state(T.in_dim, rng)
        faithful = la.support_projection(0.5 * (T(rho) + la.dag(T(rho)))).rank == T.out_dim
    return PositivityReport(
        completely_positive=bool(cp),
        two_positive=bool(two_pos),
        two_positive_exact=bool(exact),
        schwarz_sampled=bool(schwarz),
        trace_preserving=tp,
        adjoint_unital=tp,
        faithful_adjoint=bool(faithful),
        positive_sampled=positive,
        choi_min_eigenvalue=jmin,
    )


def generalized_schwarz_check(
    T: Channel, c, samples: int = 100, seed: int = 0, atol: float = ATOL
) -> tuple[bool, float]:
    """Sample ``T(a* c^-1 a) >= T(a)* T(c)^- T(a)`` over random ``a``.

    Returns ``(holds, worst_violation)`` where the violation is the largest
    negative eigenvalue magnitude of the difference.
    """
    c = la.hermitian_part(c)
    if la.support_projection(c).rank < c.shape[0]:
        raise NotInvertible("c must be positive invertible")
    c_inv = np.linalg.inv(c)
    tc_inv = la.pinv_psd(0.5 * (T(c) + la.dag(T(c))))
    rng = rng_from(seed)
    worst = 0.0
    for _ in range(samples):
        a = ginibre(T.in_dim, T.in_dim, rng)
        ta = T(a)
        diff = T(la.dag(a) @ c_inv @ a) - la.dag(ta) @ tc_inv @ ta
        diff = 0.5 * (diff + la.dag(diff))
        scale = max(1.0, la.operator_norm(diff))
        worst = max(worst, -la.min_eigenvalue(diff) / scale)
    return worst <= atol * 10, worst


# -- Petz dual and recovery map ----------------------------------------------


def _state_matrix(rho) -> np.ndarray:
    return np.asarray(rho.matrix if isinstance(rho, DensityOperator) else la.hermitian_part(rho))


def petz_dual(T: Channel, rho, strict: bool = False) -> Channel:
    """``T_rho(b) = T(rho)^-1/2 T(rho^1/2 b rho^1/2) T(rho)^-1/2``.

    A singular ``T(rho)`` is handled with generalized inverse powers, which
    is the same as working with the compression to ``supp rho`` and
    ``supp T(rho)``; pass ``strict=True`` to raise instead.
    """
    r = _state_matrix(rho)
    tr = T(r)
    tr = 0.5 * (tr + la.dag(tr))
    if strict and la.support_projection(tr).rank < T.out_dim:
        raise NotInvertible("T(rho) is singular")
    left = la.psd_power(tr, -0.5)
    right = la.sqrtm_psd(r)
    s = conjugation_super(left) @ T.superop @ conjugation_super(right)
    return Channel(s, T.in_dim, T.out_dim, label="petz_dual")


def petz_recovery(T: Channel, rho, strict: bool = False, extend: bool = True) -> Channel:
    """The Petz recovery map ``T_rho*``, ``b -> rho^1/2 T*(T(rho)^-1/2 b T(rho)^-1/2) rho^1/2``.

    With ``extend=True`` and a singular ``T(rho)``, the map is completed on
    the complement of ``supp T(rho)`` by ``b -> Tr(b (1 - p0)) rho`` so
    that it is trace preserving on the whole output space.
    """
    rec = petz_dual(T, rho, strict).adjoint()
    rec.label = "petz_recovery"
    if not extend:
        return rec
    r = _state_matrix(rho)
    p0 = la.support_projection(0.5 * (T(r) + la.dag(T(r)))).projection
    if np.allclose(p0, np.eye(T.out_dim), atol=ATOL):
        return rec
    q = np.eye(T.out_dim) - p0
    extra = np.outer(vec(r), np.conj(vec(q)))
    return Channel(rec.superop + extra, rec.in_dim, rec.out_dim, label="petz_recovery")


@dataclass
class Compression:
    """A channel compressed to ``p A p -> p0 B p0``.

    ``in_isometry`` (columns spanning ``supp rho``) and ``out_isometry``
    (spanning ``supp T(rho)``) map compressed coordinates back to the full
    spaces.
    """

    channel: Channel
    in_isometry: np.ndarray
    out_isometry: np.ndarray

    @property
    def trivial(self) -> bool:
        v, w = self.in_isometry, self.out_isometry
        return v.shape[0] == v.shape[1] and w.shape[0] == w.shape[1]

    def compress_input(self, x) -> np.ndarray:
        v = self.in_isometry
        return la.dag(v) @ np.asarray(x) @ v

    def compress_output(self, y) -> np.ndarray:
        w = self.out_isometry
        return la.dag(w) @ np.asarray(y) @ w

    def expand_input(self, x) -> np.ndarray:
        v = self.in_isometry
        return v @ np.asarray(x) @ la.dag(v)

    def expand_output(self, y) -> np.ndarray:
        w = self.out_isometry
        return w @ np.asarray(y) @ la.dag(w)


def restrict_to_support(T: Channel, rho) -> Compression:
    """Compress ``T`` to ``supp rho -> supp T(rho)``.

    For invertible ``rho`` and ``T(rho)`` the channel is returned unchanged
    (identity isometries).
    """
    r = _state_matrix(rho)
    p = la.support_projection(r)
    tr = T(r)
    p0 = la.support_projection(0.5 * (tr + la.dag(tr)))
    if p.rank == T.in_dim and p0.rank == T.out_dim:
        return Compression(T, np.eye(T.in_dim, dtype=complex), np.eye(T.out_dim, dtype=complex))
    v, w = p.isometry, p0.isometry
    s = conjugation_super(la.dag(w)) @ T.superop @ conjugation_super(v)
    return Compression(Channel(s, p.rank, p0.rank, label=T.label), v, w)


def extend_recovery(recovery: Channel, compression: Compression, rho) -> Channel:
    """Rebuild a full-space map ``S(b) = S~(p0 b p0) + Tr(b (1 - p0)) rho``."""
    v, w = compression.in_isometry, compression.out_isometry
    r = _state_matrix(rho)
    d_out = w.shape[0]
    s = conjugation_super(v) @ recovery.superop @ conjugation_super(la.dag(w))
    q = np.eye(d_out) - w @ la.dag(w)
    s = s + np.outer(vec(r), np.conj(vec(q)))
    return Channel(s, d_out, v.shape[0], label="extended_recovery")


def hs_adjoint_residual(T: Channel, samples: int = 50, seed: int = 0) -> float:
    """Max ``|<T*(b), a> - <b, T(a)>|`` over random pairs."""
    rng = rng_from(seed)
    ts = T.adjoint()
    worst = 0.0
    for _ in range(samples):
        a = ginibre(T.in_dim, T.in_dim, rng)
        b = ginibre(T.out_dim, T.out_dim, rng)
        worst = max(worst, abs(la.hs_inner(ts(b), a) - la.hs_inner(b, T(a))))
    return worst


def rho_inner(a, b, rho) -> complex:
    """``<a, b>_rho = Tr a* rho^1/2 b rho^1/2``."""
    s = la.sqrtm_psd(rho)
    return complex(np.trace(la.dag(a) @ s @ b @ s))

"""Truncated multimode Fock states and the linear-optical elements acting on them.

A :class:`FockState` is a sparse map from occupation tuples to complex
amplitudes.  Every transform is exact inside the truncated space: if an
operation would populate a mode beyond ``n_max`` it raises
:class:`TruncationOverflow` instead of discarding weight.

Beam-splitter phase convention is the symmetric one, with a factor ``i`` on
reflection::

    a_in^dag -> t a_out1^dag + i r a_out2^dag
    b_in^dag -> i r a_out1^dag + t b_out2^dag

so two 50:50 passes give ``i`` times a port swap, and a pass followed by its
adjoint (``reflectivity`` with ``inverse=True``) is the identity.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NotTwoQubit, TruncationOverflow, UnknownMode

AMPLITUDE_CUTOFF = 1e-15


class Mode(str, enum.Enum):
    AS_H = "AS_H"
    AS_V = "AS_V"
    IN_H = "IN_H"
    IN_V = "IN_V"
    SPIN_U = "SPIN_U"
    SPIN_D = "SPIN_D"
    S_H = "S_H"
    S_V = "S_V"
    OUT1_H = "OUT1_H"
    OUT1_V = "OUT1_V"
    OUT2_H = "OUT2_H"
    OUT2_V = "OUT2_V"


class Bin(str, enum.Enum):
    MATCHED = "matched"
    MISMATCHED = "mismatched"


@dataclass(frozen=True, order=True)
class ModeLabel:
    name: Mode
    temporal_bin: Bin = Bin.MATCHED

    def __str__(self):
        return f"{self.name.value}[{self.temporal_bin.value}]"


def _label(mode) -> ModeLabel:
    if isinstance(mode, ModeLabel):
        return mode
    return ModeLabel(Mode(mode))


@dataclass(frozen=True)
class PolarizationQubit:
    """Single-photon polarization state ``alpha|H> + beta|V>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"polarization qubit not normalized (|a|^2+|b|^2 = {norm!r})")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "PolarizationQubit":
        """Bloch-sphere point: ``cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>``."""
        return cls(math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2))

    def orthogonal(self) -> "PolarizationQubit":
        return PolarizationQubit(-self.beta.conjugate(), self.alpha.conjugate())

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def fidelity(self, other: "PolarizationQubit") -> float:
        return abs(np.vdot(self.vector, other.vector)) ** 2


S2 = 1 / math.sqrt(2)
H = PolarizationQubit(1, 0)
V = PolarizationQubit(0, 1)
PLUS = PolarizationQubit(S2, S2)
MINUS = PolarizationQubit(S2, -S2)
R = PolarizationQubit(S2, 1j * S2)
L = PolarizationQubit(S2, -1j * S2)

NAMED_QUBITS = {"H": H, "V": V, "+": PLUS, "-": MINUS, "R": R, "L": L}


class FockState:
    """Immutable sparse state over an ordered tuple of :class:`ModeLabel`."""

    __slots__ = ("modes", "n_max", "_amps", "_index")

    def __init__(self, modes: Sequence, amplitudes: Mapping[tuple, complex], n_max: int = 2):
        modes = tuple(_label(m) for m in modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate mode labels in {modes}")
        if n_max < 1:
            raise ValueError("n_max must be positive")
        amps = {}
        for occ, amp in amplitudes.items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != len(modes):
                raise ValueError(f"occupation {occ} does not match {len(modes)} modes")
            if any(n < 0 or n > n_max for n in occ):
                raise TruncationOverflow(f"occupation {occ} outside 0..{n_max}")
            amp = complex(amp)
            if not cmath.isfinite(amp):
                raise ValueError(f"non-finite amplitude at {occ}")
            if abs(amp) > AMPLITUDE_CUTOFF:
                amps[occ] = amps.get(occ, 0) + amp
        total = sum(abs(a) ** 2 for a in amps.values())
        if total > 1 + 1e-9:
            raise ValueError(f"state norm {total} exceeds 1")
        self.modes = modes
        self.n_max = n_max
        self._amps = amps
        self._index = {m: i for i, m in enumerate(modes)}

    # construction helpers

    @classmethod
    def vacuum(cls, modes: Sequence, n_max: int = 2) -> "FockState":
        modes = tuple(modes)
        return cls(modes, {(0,) * len(modes): 1.0}, n_max)

    @classmethod
    def basis(cls, modes: Sequence, occupation: Sequence[int], n_max: int = 2) -> "FockState":
        return cls(modes, {tuple(occupation): 1.0}, n_max)

    @classmethod
    def empty(cls, modes: Sequence, n_max: int = 2) -> "FockState":
        return cls(modes, {}, n_max)

    # read-only views

    @property
    def amplitudes(self) -> Mapping[tuple, complex]:
        return MappingProxyType(self._amps)

    def __len__(self):
        return len(self._amps)

    def __repr__(self):
        terms = " + ".join(f"({a:.4g})|{','.join(map(str, o))}>" for o, a in sorted(self._amps.items()))
        return f"FockState[{', '.join(map(str, self.modes))}]({terms or '0'})"

    def index(self, mode) -> int:
        try:
            return self._index[_label(mode)]
        except (KeyError, ValueError):
            raise UnknownMode(f"{mode} not in state modes") from None

    def bins_of(self, name) -> list[int]:
        """Indices of every temporal bin carried by a physical mode."""
        if isinstance(name, ModeLabel):
            return [self.index(name)]
        name = Mode(name)
        idx = [i for i, m in enumerate(self.modes) if m.name == name]
        if not idx:
            raise UnknownMode(f"{name.value} not in state modes")
        return idx

    def has(self, mode) -> bool:
        if isinstance(mode, ModeLabel):
            return mode in self._index
        return any(m.name == Mode(mode) for m in self.modes)

    def norm(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._amps.values()))

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return self._amps.get(tuple(occupation), 0j)

    def occupation_of(self, occupation: tuple, name) -> int:
        return sum(occupation[i] for i in self.bins_of(name))

    def number_distribution(self, names: Iterable) -> dict[tuple, float]:
        """Joint photon-number distribution of the given physical modes (bins summed)."""
        groups = [self.bins_of(n) for n in names]
        out: dict[tuple, float] = {}
        for occ, amp in self._amps.items():
            key = tuple(sum(occ[i] for i in g) for g in groups)
            out[key] = out.get(key, 0.0) + abs(amp) ** 2
        return out

    def inner(self, other: "FockState") -> complex:
        if self.modes != other.modes:
            other = other.reorder(self.modes)
        return sum(a.conjugate() * other._amps.get(o, 0) for o, a in self._amps.items())

    def allclose(self, other: "FockState", atol: float = 1e-10, up_to_phase: bool = False) -> bool:
        if set(self.modes) != set(other.modes):
            return False
        other = other.reorder(self.modes)
        phase = 1.0
        if up_to_phase:
            ov = other.inner(self)
            if abs(ov) > atol:
                phase = ov / abs(ov)
        keys = set(self._amps) | set(other._amps)
        return all(abs(self._amps.get(k, 0) - phase * other._amps.get(k, 0)) <= atol for k in keys)

    # structural transforms

    def _replace(self, amps, modes=None, n_max=None) -> "FockState":
        return FockState(self.modes if modes is None else modes, amps, self.n_max if n_max is None else n_max)

    def scaled(self, factor: complex) -> "FockState":
        return self._replace({o: a * factor for o, a in self._amps.items()})

    def normalized(self) -> "FockState":
        n = self.norm()
        if n == 0:
            return self
        return self.scaled(1 / math.sqrt(n))

    def with_n_max(self, n_max: int) -> "FockState":
        return self._replace(self._amps, n_max=n_max)

    def with_modes(self, extra: Iterable) -> "FockState":
        """Append vacuum modes (labels already present are skipped)."""
        extra = [m for m in (_label(e) for e in extra) if m not in self._index]
        if not extra:
            return self
        pad = (0,) * len(extra)
        return self._replace({o + pad: a for o, a in self._amps.items()}, modes=self.modes + tuple(extra))

    def reorder(self, modes: Sequence) -> "FockState":
        modes = tuple(_label(m) for m in modes)
        if set(modes) != set(self.modes):
            raise UnknownMode(f"reorder needs the same mode set, got {modes}")
        perm = [self.index(m) for m in modes]
        return self._replace({tuple(o[i] for i in perm): a for o, a in self._amps.items()}, modes=modes)

    def relabel(self, mapping: Mapping) -> "FockState":
        """Rename physical modes, keeping temporal bins."""
        mapping = {Mode(k): Mode(v) for k, v in mapping.items()}
        for k in mapping:
            self.bins_of(k)
        modes = tuple(ModeLabel(mapping.get(m.name, m.name), m.temporal_bin) for m in self.modes)
        return self._replace(self._amps, modes=modes)

    def drop_modes(self, names: Iterable) -> "FockState":
        """Remove modes that are in vacuum on every term of the support."""
        drop = sorted({i for n in names for i in self.bins_of(n)})
        for occ in self._amps:
            if any(occ[i] for i in drop):
                raise ValueError("cannot drop a populated mode; project it first")
        keep = [i for i in range(len(self.modes)) if i not in drop]
        amps = {tuple(o[i] for i in keep): a for o, a in self._amps.items()}
        return self._replace(amps, modes=tuple(self.modes[i] for i in keep))

    def tensor(self, other: "FockState") -> "FockState":
        if set(self.modes) & set(other.modes):
            raise ValueError("tensor product of states sharing modes")
        amps = {o1 + o2: a1 * a2 for o1, a1 in self._amps.items() for o2, a2 in other._amps.items()}
        return FockState(self.modes + other.modes, amps, max(self.n_max, other.n_max))

    def __add__(self, other: "FockState") -> "FockState":
        other = other.reorder(self.modes)
        amps = dict(self._amps)
        for o, a in other._amps.items():
            amps[o] = amps.get(o, 0) + a
        return FockState(self.modes, amps, max(self.n_max, other.n_max))


# linear optics


@lru_cache(maxsize=4096)
def _expansion(n1: int, n2: int, u: tuple) -> tuple:
    """Output terms ``((m1, m2), coeff)`` of ``|n1, n2>`` under the 2x2 mode map ``u``.

    ``u = (u00, u01, u10, u11)`` with ``u_kj`` the amplitude for input mode ``j``
    to exit in output mode ``k``.
    """
    u00, u01, u10, u11 = u
    norm = 1 / math.sqrt(math.factorial(n1) * math.factorial(n2))
    acc: dict[int, complex] = {}
    for k in range(n1 + 1):
        c1 = math.comb(n1, k) * u00**k * u10 ** (n1 - k)
        if c1 == 0:
            continue
        for l in range(n2 + 1):
            c2 = math.comb(n2, l) * u01**l * u11 ** (n2 - l)
            if c2 == 0:
                continue
            m = k + l
            acc[m] = acc.get(m, 0) + c1 * c2
    total = n1 + n2
    out = []
    for m, c in acc.items():
        coeff = c * norm * math.sqrt(math.factorial(m) * math.factorial(total - m))
        if abs(coeff) > AMPLITUDE_CUTOFF:
            out.append(((m, total - m), coeff))
    return tuple(out)


def apply_two_mode_unitary(state: FockState, a, b, u) -> FockState:
    """Apply a 2x2 mode transformation to the labelled modes ``a`` and ``b``."""
    i, j = state.index(a), state.index(b)
    u = np.asarray(u, dtype=complex)
    key = (complex(u[0, 0]), complex(u[0, 1]), complex(u[1, 0]), complex(u[1, 1]))
    out: dict[tuple, complex] = {}
    for occ, amp in state.amplitudes.items():
        for (m1, m2), c in _expansion(occ[i], occ[j], key):
            if m1 > state.n_max or m2 > state.n_max:
                raise TruncationOverflow(
                    f"{m1 if m1 > state.n_max else m2} photons routed into one mode (n_max={state.n_max})"
                )
            new = list(occ)
            new[i], new[j] = m1, m2
            new = tuple(new)
            out[new] = out.get(new, 0) + amp * c
    return state._replace(out)


def beam_splitter_matrix(reflectivity: float = 0.5, inverse: bool = False) -> np.ndarray:
    if not 0 <= reflectivity <= 1:
        raise ValueError("reflectivity must lie in [0, 1]")
    t, r = math.sqrt(1 - reflectivity), math.sqrt(reflectivity)
    u = np.array([[t, 1j * r], [1j * r, t]])
    return u.conj().T if inverse else u


def _bin_pairs(state: FockState, a, b) -> list[tuple[ModeLabel, ModeLabel]]:
    if isinstance(a, ModeLabel) or isinstance(b, ModeLabel):
        a, b = _label(a), _label(b)
        if a.temporal_bin != b.temporal_bin:
            raise ValueError("modes in different temporal bins never interfere")
        state.index(a), state.index(b)
        return [(a, b)]
    a, b = Mode(a), Mode(b)
    bins = {state.modes[i].temporal_bin for i in state.bins_of(a)}
    bins |= {state.modes[i].temporal_bin for i in state.bins_of(b)}
    return [(ModeLabel(a, tb), ModeLabel(b, tb)) for tb in sorted(bins)]


def apply_mode_transform(state: FockState, a, b, u) -> FockState:
    """Apply ``u`` to the physical mode pair ``(a, b)`` independently in every temporal bin."""
    pairs = _bin_pairs(state, a, b)
    state = state.with_modes([m for p in pairs for m in p])
    for la, lb in pairs:
        state = apply_two_mode_unitary(state, la, lb, u)
    return state


def apply_beam_splitter(state: FockState, a, b, reflectivity: float = 0.5, out_a=None, out_b=None,
                        inverse: bool = False) -> FockState:
    """Mix modes ``a`` and ``b`` on a beam splitter, bin by bin.

    Output port 1 keeps the label of ``a`` (or is renamed to ``out_a``), port 2
    that of ``b``.
    """
    state = apply_mode_transform(state, a, b, beam_splitter_matrix(reflectivity, inverse))
    rename = {}
    if out_a is not None:
        rename[_label(a).name] = out_a
    if out_b is not None:
        rename[_label(b).name] = out_b
    return state.relabel(rename) if rename else state


def apply_pbs(state: FockState, in_h, in_v, out_t, out_r) -> FockState:
    """Ideal polarizing beam splitter: the H input transmits, the V input reflects."""
    state.bins_of(in_h), state.bins_of(in_v)
    return state.relabel({in_h: out_t, in_v: out_r})


def apply_phase(state: FockState, mode, phase: float) -> FockState:
    """Multiply each term by ``exp(i * phase * n)`` with ``n`` the photons in ``mode`` (all bins)."""
    idx = state.bins_of(mode)
    if phase == 0:
        return state
    return state._replace({o: a * cmath.exp(1j * phase * sum(o[i] for i in idx)) for o, a in state.amplitudes.items()})


def apply_pauli_z(state: FockState, h_mode, v_mode) -> FockState:
    state.bins_of(h_mode)
    idx = state.bins_of(v_mode)
    return state._replace({o: (-a if sum(o[i] for i in idx) % 2 else a) for o, a in state.amplitudes.items()})


def apply_pauli_x(state: FockState, h_mode, v_mode) -> FockState:
    """Swap the two polarization (or dual-rail) modes."""
    state = state.with_modes([m for p in _bin_pairs(state, h_mode, v_mode) for m in p])
    h, v = Mode(h_mode), Mode(v_mode)
    return state.relabel({h: v, v: h}).reorder(state.modes)


def apply_polarization_unitary(state: FockState, h_mode, v_mode, u) -> FockState:
    """Act with the 2x2 single-photon unitary ``u`` on the (H, V) mode pair.

    ``u`` is written in the ``(|H>, |V>)`` basis, so a single photon
    ``alpha|H> + beta|V>`` maps to ``u @ (alpha, beta)``.
    """
    return apply_mode_transform(state, h_mode, v_mode, u)


# measurement helpers


def project_and_renormalize(state: FockState, mode, occupation: int) -> tuple[FockState, float]:
    """Condition on ``mode`` holding ``occupation`` photons (bins summed).

    Returns the normalized conditional state and the outcome probability.  A
    zero-probability outcome returns an empty state with probability 0.
    """
    idx = state.bins_of(mode)
    if occupation < 0 or occupation > state.n_max * len(idx):
        raise ValueError(f"occupation {occupation} outside truncated range")
    kept = {o: a for o, a in state.amplitudes.items() if sum(o[i] for i in idx) == occupation}
    prob = sum(abs(a) ** 2 for a in kept.values())
    total = state.norm()
    if prob <= 0 or total <= 0:
        return FockState.empty(state.modes, state.n_max), 0.0
    scale = 1 / math.sqrt(prob)
    return state._replace({o: a * scale for o, a in kept.items()}), prob / total


def project_modes(state: FockState, fixed: Mapping[ModeLabel, int]) -> FockState:
    """Unnormalized projection of several labelled modes onto fixed occupations; those modes are removed."""
    idx = {state.index(m): n for m, n in fixed.items()}
    keep = [i for i in range(len(state.modes)) if i not in idx]
    amps = {}
    for o, a in state.amplitudes.items():
        if all(o[i] == n for i, n in idx.items()):
            amps[tuple(o[i] for i in keep)] = a
    return state._replace(amps, modes=tuple(state.modes[i] for i in keep))


# Bell basis

BELL_NAMES = ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus")


def _bell_vectors() -> dict[str, dict[tuple, complex]]:
    # keys are (n_aH, n_aV, n_bH, n_bV)
    hh, hv, vh, vv = (1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)
    return {
        "PhiPlus": {hh: S2, vv: S2},
        "PhiMinus": {hh: S2, vv: -S2},
        "PsiPlus": {hv: S2, vh: S2},
        "PsiMinus": {hv: S2, vh: -S2},
    }


BELL_STATES = _bell_vectors()


def _qubit_indices(state: FockState, qubit_a, qubit_b) -> list[int]:
    idx = []
    for m in (*qubit_a, *qubit_b):
        bins = state.bins_of(m)
        if len(bins) != 1:
            raise NotTwoQubit(f"{m} spans several temporal bins")
        idx.extend(bins)
    return idx


def bell_project(state: FockState, qubit_a=(Mode.IN_H, Mode.IN_V), qubit_b=(Mode.AS_H, Mode.AS_V),
                 which: str = "PsiPlus") -> FockState:
    """Contract the two photonic qubits with a Bell bra, leaving the remaining modes.

    The result is unnormalized; its squared norm is the branch probability.
    """
    idx = _qubit_indices(state, qubit_a, qubit_b)
    keep = [i for i in range(len(state.modes)) if i not in idx]
    bell = BELL_STATES[which]
    out: dict[tuple, complex] = {}
    for occ, amp in state.amplitudes.items():
        q = tuple(occ[i] for i in idx)
        if q[0] + q[1] != 1 or q[2] + q[3] != 1:
            raise NotTwoQubit(f"occupation {q} is not one photon per qubit")
        c = bell.get(q, 0)
        if c:
            rest = tuple(occ[i] for i in keep)
            out[rest] = out.get(rest, 0) + c.conjugate() * amp
    return FockState(tuple(state.modes[i] for i in keep), out, state.n_max)


def bell_decompose(state: FockState, qubit_a=(Mode.IN_H, Mode.IN_V), qubit_b=(Mode.AS_H, Mode.AS_V)) -> dict[str, complex]:
    """Overlaps of a pure two-photon polarization state with the four Bell states."""
    if len(state.modes) != 4:
        raise NotTwoQubit("state must contain exactly the four polarization modes")
    out = {}
    for name in BELL_NAMES:
        rest = bell_project(state, qubit_a, qubit_b, name)
        out[name] = rest.amplitude(())
    return out


def qubit_state(qubit: PolarizationQubit, h_mode=Mode.S_H, v_mode=Mode.S_V, n_max: int = 2) -> FockState:
    """One photon in polarization ``qubit`` on the given mode pair."""
    return FockState((h_mode, v_mode), {(1, 0): qubit.alpha, (0, 1): qubit.beta}, n_max)

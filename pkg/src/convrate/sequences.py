"""Mode-sequence machinery: validation, generation, transition products.

Sequences are plain tuples of mode ids. The (m,K) constraint is evaluated
over every window of K consecutive entries that lies fully inside the
sequence. Exhaustive enumeration walks the automaton whose state is the
last K-1 symbols, pruning a branch as soon as the newest complete window
overflows; the same automaton yields exact sequence counts by dynamic
programming without enumerating.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ParameterError, ResourceCapError, UnsupportedConfigurationError
from .mk import MkConstraint
from .model import SystemModel

#: Default cap on enumerated sequence length.
ENUMERATION_CAP = 24
#: Largest supported window for enumeration (automaton state is 2^(K-1)).
MAX_WINDOW = 12
#: Leaf products are flushed through the batched eigensolver in chunks.
EIG_CHUNK = 65536


@dataclass(frozen=True)
class SequenceValidation:
    """Falsy when some window overflows; reports the first violating window."""

    ok: bool
    violation_start: int | None = None
    window_sum: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def _as_binary(seq: Sequence[int]) -> tuple[int, ...]:
    out = []
    for entry in seq:
        if isinstance(entry, bool) or not isinstance(entry, (int, np.integer)):
            raise TypeError(f"sequence entries must be integers 0 or 1, got {entry!r}")
        if entry not in (0, 1):
            raise TypeError(f"sequence entries must be 0 or 1, got {entry}")
        out.append(int(entry))
    return tuple(out)


def validate_mk(seq: Sequence[int], mk: MkConstraint) -> SequenceValidation:
    """Check every complete K-window for at most ``m_bar`` skips."""
    seq = _as_binary(seq)
    K, m_bar = mk.K, mk.m_bar
    if len(seq) < K:
        return SequenceValidation(True)
    window = sum(seq[:K])
    if window > m_bar:
        return SequenceValidation(False, 0, window)
    for start in range(1, len(seq) - K + 1):
        window += seq[start + K - 1] - seq[start - 1]
        if window > m_bar:
            return SequenceValidation(False, start, window)
    return SequenceValidation(True)


def worst_case_sequence(mk: MkConstraint, length: int) -> tuple[int, ...]:
    """Front-loaded pattern skipping the first ``m_bar`` slots of each window.

    Attains the skip-count bound for every prefix and is admissible.
    """
    if length < 0:
        raise ParameterError(f"length must be >= 0, got {length}")
    return tuple(1 if (k % mk.K) < mk.m_bar else 0 for k in range(length))


def count_mk_sequences(mk: MkConstraint, length: int) -> int:
    """Exact number of admissible binary sequences of the given length."""
    if length < 0:
        raise ParameterError(f"length must be >= 0, got {length}")
    K, m_bar = mk.K, mk.m_bar
    states: dict[tuple[int, ...], int] = {(): 1}
    for _ in range(length):
        successors: dict[tuple[int, ...], int] = defaultdict(int)
        for state, count in states.items():
            for sym in (0, 1):
                if len(state) == K - 1 and sum(state) + sym > m_bar:
                    continue
                key = (state + (sym,))[-(K - 1):] if K > 1 else ()
                successors[key] += count
        states = dict(successors)
    return sum(states.values())


def _check_enumeration_caps(mk: MkConstraint, length: int, max_length: int) -> None:
    if length < 0:
        raise ParameterError(f"length must be >= 0, got {length}")
    if mk.K > MAX_WINDOW:
        raise ResourceCapError(
            f"window K={mk.K} exceeds the supported maximum {MAX_WINDOW} for enumeration"
        )
    if length > max_length:
        count = count_mk_sequences(mk, length)
        raise ResourceCapError(
            f"length {length} exceeds the enumeration cap {max_length}; "
            f"this would visit {count} sequences (reduce the length, or raise "
            "the cap to proceed)",
            estimated_count=count,
        )


def enumerate_mk_sequences(mk: MkConstraint, length: int,
                           max_length: int = ENUMERATION_CAP) -> Iterator[tuple[int, ...]]:
    """Yield every admissible binary sequence of the given length, each once."""
    _check_enumeration_caps(mk, length, max_length)
    K, m_bar = mk.K, mk.m_bar
    prefix: list[int] = []

    def extend() -> Iterator[tuple[int, ...]]:
        if len(prefix) == length:
            yield tuple(prefix)
            return
        window = prefix[-(K - 1):] if K > 1 else []
        complete = len(window) == K - 1
        base = sum(window)
        for sym in (0, 1):
            if complete and base + sym > m_bar:
                continue
            prefix.append(sym)
            yield from extend()
            prefix.pop()

    yield from extend()


def admissible_prefixes(mk: MkConstraint, depth: int) -> list[tuple[int, ...]]:
    """All admissible prefixes of exactly ``depth`` symbols.

    Together the subtrees below these prefixes partition the full
    enumeration, which makes them natural units for parallel evaluation.
    """
    return list(enumerate_mk_sequences(mk, depth, max_length=depth))


def random_mk_sequence(mk: MkConstraint, length: int, rng,
                       skip_prob: float = 0.5) -> tuple[int, ...]:
    """Random admissible sequence; skips with ``skip_prob`` where the window allows.

    The window check is applied from the first symbol on (not only once a
    window is complete), so the result never paints itself into a corner
    where the first complete window is forced to overflow.
    """
    if length < 0:
        raise ParameterError(f"length must be >= 0, got {length}")
    K, m_bar = mk.K, mk.m_bar
    out: list[int] = []
    for _ in range(length):
        window = out[-(K - 1):] if K > 1 else []
        can_skip = sum(window) + 1 <= m_bar
        out.append(1 if can_skip and rng.random() < skip_prob else 0)
    return tuple(out)


def transition_product(system: SystemModel, seq: Sequence[int]) -> np.ndarray:
    """Ordered product ``A_{sigma_{L-1}} ... A_{sigma_1} A_{sigma_0}``.

    The latest mode multiplies from the left; the empty sequence yields the
    identity. Undeclared modes raise ``KeyError``.
    """
    product = np.eye(system.n)
    for sym in seq:
        product = system.matrix(int(sym)) @ product
    return product


@dataclass(frozen=True)
class JsrResult:
    """Brute-force averaged spectral radius with a sequence attaining it."""

    rho_hat: float
    sequence: tuple[int, ...]
    count: int


def averaged_spectral_radius(system: SystemModel, mk: MkConstraint, length: int,
                             max_length: int = ENUMERATION_CAP,
                             prefix: Sequence[int] = (),
                             eig_chunk: int = EIG_CHUNK) -> JsrResult:
    """Maximum of ``spectral_radius(product)^(1/L)`` over admissible sequences.

    Walks the window automaton depth-first with incremental products and
    evaluates leaf products through a batched eigensolver. ``prefix`` pins
    the first symbols, restricting the search to one subtree (the parallel
    work-unit contract); results from a prefix partition combine by max on
    ``rho_hat`` and sum on ``count``.
    """
    if length < 1:
        raise ParameterError(f"length must be >= 1, got {length}")
    _check_enumeration_caps(mk, length, max_length)
    declared = set(system.modes)
    if declared == {0}:
        if any(int(s) != 0 for s in prefix):
            raise ParameterError("prefix uses mode 1 but the system only declares mode 0")
        product = np.linalg.matrix_power(system.modes[0], length)
        radius = float(np.max(np.abs(np.linalg.eigvals(product))))
        return JsrResult(radius ** (1.0 / length), (0,) * length, 1)
    if declared != {0, 1}:
        raise UnsupportedConfigurationError(
            f"(m,K) sequence search covers binary mode sets, got modes {sorted(declared)}"
        )

    prefix = _as_binary(prefix)
    if len(prefix) > length:
        raise ParameterError(f"prefix length {len(prefix)} exceeds sequence length {length}")
    if not validate_mk(prefix, mk):
        raise ParameterError("prefix violates the (m,K) constraint")
    K, m_bar = mk.K, mk.m_bar
    A = system.modes
    matrices = (A[0], A[1])

    best_radius = -1.0
    best_bits = 0
    count = 0
    buffer_products: list[np.ndarray] = []
    buffer_bits: list[int] = []

    def flush() -> None:
        nonlocal best_radius, best_bits, count
        if not buffer_products:
            return
        stacked = np.stack(buffer_products)
        radii = np.abs(np.linalg.eigvals(stacked)).max(axis=1)
        top = int(np.argmax(radii))
        if radii[top] > best_radius:
            best_radius = float(radii[top])
            best_bits = buffer_bits[top]
        count += len(buffer_products)
        buffer_products.clear()
        buffer_bits.clear()

    start_window = prefix[-(K - 1):] if K > 1 else ()
    start_product = transition_product(system, prefix)
    start_bits = sum(sym << i for i, sym in enumerate(prefix))
    # stack entries: (depth, last K-1 symbols, their sum, product, packed bits)
    stack = [(len(prefix), start_window, sum(start_window), start_product, start_bits)]
    while stack:
        depth, window, window_sum, product, bits = stack.pop()
        if depth == length:
            buffer_products.append(product)
            buffer_bits.append(bits)
            if len(buffer_products) >= eig_chunk:
                flush()
            continue
        complete = len(window) == K - 1
        for sym in (0, 1):
            if complete and window_sum + sym > m_bar:
                continue
            if K > 1:
                new_window = (window + (sym,))[-(K - 1):]
                new_sum = window_sum + sym - (window[0] if complete else 0)
            else:
                new_window, new_sum = (), 0
            stack.append((depth + 1, new_window, new_sum,
                          matrices[sym] @ product, bits | (sym << depth)))
    flush()
    if count == 0:
        raise ParameterError("no admissible sequence extends the given prefix")
    sequence = tuple((best_bits >> i) & 1 for i in range(length))
    return JsrResult(best_radius ** (1.0 / length), sequence, count)

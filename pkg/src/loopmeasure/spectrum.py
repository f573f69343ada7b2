"""Length spectrum enumeration for free Fuchsian groups.

Free homotopy classes of loops correspond to conjugacy classes of the
deck group, i.e. to cyclically reduced cyclic words in the generators.
The enumeration walks the tree of lexicographically minimal rotations
(necklaces) directly, with inverse-adjacency pruning, so every class of
word length <= max_word_length is produced exactly once, with its minimal
period known.  Orientations count separately: a word and its inverse give
two records.

Letters are encoded as integers: generator i is letter 2i (written as a
lowercase letter), its inverse is 2i+1 (uppercase); the inverse of letter
x is x ^ 1, and the ordering a < A < b < B is the canonical order.

For integer generator matrices (the shipped modular-torus preset) word
matrices are accumulated in exact integer arithmetic, so traces, the
hyperbolic/parabolic split, and sort order are exact.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .errors import (
    DomainError,
    HorizonError,
    MalformedRecordError,
    SpectrumChecksumError,
    SpectrumVersionError,
    UnsupportedPresentationError,
)
from .hypgeom import CLASSIFICATION_TOL, MoebiusMatrix

__all__ = [
    "CyclicWord",
    "GroupPresentation",
    "GeodesicRecord",
    "SpectrumTable",
    "MarkovTriple",
    "matrix_of_word",
    "enumerate_spectrum",
    "primitivity",
    "homology_class",
    "counting_function",
    "markov_simple_lengths",
    "markov_triples",
    "save_spectrum",
    "load_spectrum",
    "export_csv",
    "crc64",
]


def _inverse_letter(x: int) -> int:
    return x ^ 1


def _letter_char(x: int) -> str:
    base = "abcdefghijklmnopqrstuvwxyz"[x // 2]
    return base.upper() if x & 1 else base


def _char_letter(ch: str) -> int:
    if not ch.isalpha() or not ch.isascii():
        raise DomainError(f"invalid word character {ch!r}")
    idx = ord(ch.lower()) - ord("a")
    return 2 * idx + (1 if ch.isupper() else 0)


def _free_reduce(letters: tuple[int, ...]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == (x ^ 1):
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def _cyclic_reduce(letters: tuple[int, ...]) -> tuple[int, ...]:
    w = list(_free_reduce(letters))
    while len(w) >= 2 and w[0] == (w[-1] ^ 1):
        w = w[1:-1]
        # interior may expose a new reducible pair after trimming
        w = list(_free_reduce(tuple(w)))
    return tuple(w)


def _min_rotation(letters: tuple[int, ...]) -> tuple[int, ...]:
    n = len(letters)
    if n <= 1:
        return letters
    return min(letters[i:] + letters[:i] for i in range(n))


@dataclass(frozen=True, slots=True)
class CyclicWord:
    """Conjugacy class representative: cyclically reduced, minimal rotation.

    The constructor canonicalizes arbitrary input letters; words produced
    by the enumerator are already canonical and skip that work.
    """

    letters: tuple[int, ...]

    def __init__(self, letters, *, _canonical: bool = False):
        letters = tuple(int(x) for x in letters)
        if any(x < 0 for x in letters):
            raise DomainError("letters must be nonnegative integers")
        if not _canonical:
            letters = _min_rotation(_cyclic_reduce(letters))
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_string(cls, s: str) -> "CyclicWord":
        return cls(tuple(_char_letter(ch) for ch in s))

    def __str__(self) -> str:
        return "".join(_letter_char(x) for x in self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord(tuple((x ^ 1) for x in reversed(self.letters)))

    def rotations(self) -> list[tuple[int, ...]]:
        n = len(self.letters)
        return [self.letters[i:] + self.letters[:i] for i in range(max(n, 1))]


def primitivity(word: CyclicWord) -> int:
    """Largest k such that the word is a k-th power; 1 means primitive."""
    letters = word.letters
    n = len(letters)
    if n == 0:
        raise DomainError("the empty word has no primitivity index")
    for p in range(1, n + 1):
        if n % p:
            continue
        if all(letters[i] == letters[i % p] for i in range(n)):
            return n // p
    raise AssertionError("unreachable: period n always matches")


def homology_class(word: CyclicWord, rank: int = 2) -> tuple[int, ...]:
    """Signed letter counts, the image in H_1 = Z^rank."""
    if rank != 2:
        raise DomainError("homology_class is implemented for rank 2 only")
    h = [0] * rank
    for x in word.letters:
        if x // 2 >= rank:
            raise DomainError(f"letter {x} outside rank-{rank} alphabet")
        h[x // 2] += -1 if x & 1 else 1
    return tuple(h)


@dataclass(frozen=True, slots=True)
class GroupPresentation:
    """Finitely generated matrix group with a free marking.

    nonfree presentations may be constructed but are rejected by the
    enumerator unless they are explicitly flagged free.
    """

    name: str
    generators: tuple[MoebiusMatrix, ...]
    is_free: bool = True

    def __post_init__(self) -> None:
        if not self.generators:
            raise DomainError("a presentation needs at least one generator")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def nonhyperbolic_generators(self) -> tuple[int, ...]:
        """Indices of generators that are not hyperbolic (allowed, flagged)."""
        return tuple(
            i for i, g in enumerate(self.generators) if not g.is_hyperbolic
        )

    def integer_letter_matrices(self) -> list[tuple[int, int, int, int]] | None:
        """Exact letter matrices [g0, g0^-1, g1, g1^-1, ...] if integral."""
        out: list[tuple[int, int, int, int]] = []
        for g in self.generators:
            entries = (g.a, g.b, g.c, g.d)
            ints = tuple(round(v) for v in entries)
            if any(abs(v - w) > 1e-12 for v, w in zip(entries, ints)):
                return None
            a, b, c, d = ints
            if a * d - b * c != 1:
                return None
            out.append((a, b, c, d))
            out.append((d, -b, -c, a))
        return out

    def float_letter_matrices(self) -> list[tuple[float, float, float, float]]:
        out: list[tuple[float, float, float, float]] = []
        for g in self.generators:
            out.append((g.a, g.b, g.c, g.d))
            inv = g.inverse()
            out.append((inv.a, inv.b, inv.c, inv.d))
        return out

    @classmethod
    def modular_torus(cls) -> "GroupPresentation":
        """Uniformization of the hexagonal once-punctured torus.

        Generators A = [[1,1],[1,2]], B = [[1,-1],[-1,2]]; both have trace
        3 and the commutator is parabolic with trace -2.  These facts are
        asserted at load, exactly, in integer arithmetic.
        """
        a = (1, 1, 1, 2)
        b = (1, -1, -1, 2)

        def mul(m, n):
            return (
                m[0] * n[0] + m[1] * n[2],
                m[0] * n[1] + m[1] * n[3],
                m[2] * n[0] + m[3] * n[2],
                m[2] * n[1] + m[3] * n[3],
            )

        def inv(m):
            return (m[3], -m[1], -m[2], m[0])

        if a[0] + a[3] != 3 or b[0] + b[3] != 3:
            raise AssertionError("modular torus preset: generator traces must be 3")
        comm = mul(mul(a, b), mul(inv(a), inv(b)))
        if comm[0] + comm[3] != -2:
            raise AssertionError("modular torus preset: commutator trace must be -2")
        return cls(
            name="modular-torus",
            generators=(MoebiusMatrix(*a), MoebiusMatrix(*b)),
            is_free=True,
        )


@dataclass(frozen=True, slots=True)
class GeodesicRecord:
    """One oriented free homotopy class with a closed geodesic.

    iteration divides word_length; length = 2 acosh(|trace|/2).
    """

    word: CyclicWord
    trace: float
    length: float
    is_primitive: bool
    iteration: int
    homology: tuple[int, int]
    word_length: int

    def __post_init__(self) -> None:
        if self.word_length % self.iteration:
            raise DomainError("iteration must divide word_length")

    def sort_key(self) -> tuple:
        return (self.length, self.word.letters)


@dataclass(frozen=True, slots=True)
class SpectrumTable:
    """Enumerated length spectrum, sorted by (length, word).

    reliable_horizon is the shortest geodesic length among words of the
    maximal enumerated word length: below it the table is provably
    complete, above it longer words could still contribute.
    """

    group_name: str
    generators: tuple[MoebiusMatrix, ...]
    max_word_length: int
    records: tuple[GeodesicRecord, ...]
    reliable_horizon: float
    homology_filter: tuple[int, int] | None = None
    skipped_nonhyperbolic: int = 0

    @property
    def n_records(self) -> int:
        return len(self.records)

    @property
    def n_primitive(self) -> int:
        return sum(1 for r in self.records if r.is_primitive)

    def restrict(self, homology: tuple[int, int]) -> "SpectrumTable":
        """Sub-table of one homology class; horizon carries over."""
        if self.homology_filter is not None and self.homology_filter != tuple(homology):
            raise DomainError("table is already filtered to a different class")
        hom = (int(homology[0]), int(homology[1]))
        return SpectrumTable(
            group_name=self.group_name,
            generators=self.generators,
            max_word_length=self.max_word_length,
            records=tuple(r for r in self.records if r.homology == hom),
            reliable_horizon=self.reliable_horizon,
            homology_filter=hom,
            skipped_nonhyperbolic=self.skipped_nonhyperbolic,
        )

    def primitive_lengths(self, horizon: float | None = None) -> list[float]:
        h = self.reliable_horizon if horizon is None else horizon
        return [r.length for r in self.records if r.is_primitive and r.length <= h]


@dataclass(frozen=True, slots=True)
class MarkovTriple:
    """Positive integers with m1^2 + m2^2 + m3^2 = 3 m1 m2 m3, sorted."""

    m: tuple[int, int, int]

    def __post_init__(self) -> None:
        m1, m2, m3 = self.m
        if not (0 < m1 <= m2 <= m3):
            raise DomainError("Markov triple must be sorted positive integers")
        if m1 * m1 + m2 * m2 + m3 * m3 != 3 * m1 * m2 * m3:
            raise DomainError(f"{self.m} does not satisfy the Markov equation")

    def children(self) -> list["MarkovTriple"]:
        m1, m2, m3 = self.m
        out = []
        for trip in (
            (3 * m2 * m3 - m1, m2, m3),
            (m1, 3 * m1 * m3 - m2, m3),
            (m1, m2, 3 * m1 * m2 - m3),
        ):
            out.append(MarkovTriple(tuple(sorted(trip))))
        return out


def matrix_of_word(word: CyclicWord, group: GroupPresentation) -> MoebiusMatrix:
    """Product of letter matrices; exact integers when the group allows."""
    if len(word.letters) == 0:
        return MoebiusMatrix(1.0, 0.0, 0.0, 1.0)
    int_gens = group.integer_letter_matrices()
    if int_gens is not None:
        m = (1, 0, 0, 1)
        for x in word.letters:
            if x >= 2 * group.rank:
                raise DomainError(f"letter {x} outside the group alphabet")
            g = int_gens[x]
            m = (
                m[0] * g[0] + m[1] * g[2],
                m[0] * g[1] + m[1] * g[3],
                m[2] * g[0] + m[3] * g[2],
                m[2] * g[1] + m[3] * g[3],
            )
        return MoebiusMatrix(float(m[0]), float(m[1]), float(m[2]), float(m[3]))
    gens = group.float_letter_matrices()
    mf = (1.0, 0.0, 0.0, 1.0)
    for x in word.letters:
        if x >= 2 * group.rank:
            raise DomainError(f"letter {x} outside the group alphabet")
        g = gens[x]
        mf = (
            mf[0] * g[0] + mf[1] * g[2],
            mf[0] * g[1] + mf[1] * g[3],
            mf[2] * g[0] + mf[3] * g[2],
            mf[2] * g[1] + mf[3] * g[3],
        )
    return MoebiusMatrix(*mf)


def _length_from_abs_trace(abs_tr: float) -> float:
    return 2.0 * math.acosh(abs_tr / 2.0)


def enumerate_spectrum(
    group: GroupPresentation,
    max_word_length: int,
    homology_filter: tuple[int, int] | None = None,
) -> SpectrumTable:
    """All oriented classes of word length <= max_word_length.

    Classes whose matrix is parabolic or elliptic (|trace| <= 2 + 1e-9)
    are skipped and counted in skipped_nonhyperbolic.  The reliable
    horizon is taken over the full, unfiltered stream, so a homology
    filter does not inflate it.
    """
    if not group.is_free:
        raise UnsupportedPresentationError(
            "enumeration requires a free presentation; "
            "construct the group with is_free=True if it really is free"
        )
    if max_word_length < 1:
        raise DomainError("max_word_length must be >= 1")
    if group.rank < 1:
        raise DomainError("rank must be >= 1")
    hom_filter = None
    if homology_filter is not None:
        if group.rank != 2:
            raise DomainError("homology filtering is implemented for rank 2 only")
        hom_filter = (int(homology_filter[0]), int(homology_filter[1]))

    k = 2 * group.rank
    int_gens = group.integer_letter_matrices()
    use_int = int_gens is not None
    gens = int_gens if use_int else group.float_letter_matrices()
    tol = 0 if use_int else CLASSIFICATION_TOL

    records: list[GeodesicRecord] = []
    skipped = 0
    horizon = math.inf

    # homology step per letter: letter 2i -> +e_i, 2i+1 -> -e_i (rank 2)
    h1_step = [0] * k
    h2_step = [0] * k
    h1_step[0], h1_step[1] = 1, -1
    if group.rank >= 2:
        h2_step[2], h2_step[3] = 1, -1

    for n in range(1, max_word_length + 1):
        w = [0] * (n + 1)

        def emit(p: int, tr, h1: int, h2: int) -> None:
            nonlocal skipped, horizon
            if n % p:
                return
            if w[n] == (w[1] ^ 1):  # wraparound reduction
                return
            abs_tr = abs(tr)
            if abs_tr <= 2 + tol:
                skipped += 1
                return
            length = _length_from_abs_trace(float(abs_tr))
            if n == max_word_length and length < horizon:
                horizon = length
            if hom_filter is not None and (h1, h2) != hom_filter:
                return
            word = CyclicWord(tuple(w[1:]), _canonical=True)
            records.append(
                GeodesicRecord(
                    word=word,
                    trace=float(tr),
                    length=length,
                    is_primitive=(p == n),
                    iteration=n // p,
                    homology=(h1, h2),
                    word_length=n,
                )
            )

        # necklace DFS; (a,b,c,d) is the matrix of w[1..t-1]
        def gen(t: int, p: int, a, b, c, d, h1: int, h2: int) -> None:
            if t > n:
                emit(p, a + d, h1, h2)
                return
            prev = w[t - 1]
            c0 = w[t - p]
            first = t == 1
            # candidate c0 continues the period p
            if first or c0 != (prev ^ 1):
                w[t] = c0
                g = gens[c0]
                gen(
                    t + 1,
                    p,
                    a * g[0] + b * g[2],
                    a * g[1] + b * g[3],
                    c * g[0] + d * g[2],
                    c * g[1] + d * g[3],
                    h1 + h1_step[c0],
                    h2 + h2_step[c0],
                )
            for cand in range(c0 + 1, k):
                if not first and cand == (prev ^ 1):
                    continue
                w[t] = cand
                g = gens[cand]
                gen(
                    t + 1,
                    t,
                    a * g[0] + b * g[2],
                    a * g[1] + b * g[3],
                    c * g[0] + d * g[2],
                    c * g[1] + d * g[3],
                    h1 + h1_step[cand],
                    h2 + h2_step[cand],
                )

        if use_int:
            gen(1, 1, 1, 0, 0, 1, 0, 0)
        else:
            gen(1, 1, 1.0, 0.0, 0.0, 1.0, 0, 0)

    records.sort(key=GeodesicRecord.sort_key)
    return SpectrumTable(
        group_name=group.name,
        generators=group.generators,
        max_word_length=max_word_length,
        records=tuple(records),
        reliable_horizon=horizon,
        homology_filter=hom_filter,
        skipped_nonhyperbolic=skipped,
    )


def counting_function(table: SpectrumTable, length: float) -> int:
    """Number of oriented primitive classes with geodesic length <= length."""
    if length > table.reliable_horizon:
        raise HorizonError(
            f"counting at L={length} exceeds the reliable horizon "
            f"{table.reliable_horizon}",
            horizon=table.reliable_horizon,
        )
    if table.homology_filter is not None:
        raise DomainError("counting_function expects an unfiltered table")
    return sum(1 for r in table.records if r.is_primitive and r.length <= length)


def markov_triples(depth: int) -> list[MarkovTriple]:
    """Markov triples reachable from (1,1,1) in <= depth Vieta moves."""
    if depth < 0:
        raise DomainError("depth must be >= 0")
    seen = {(1, 1, 1)}
    frontier = [MarkovTriple((1, 1, 1))]
    out = [MarkovTriple((1, 1, 1))]
    for _ in range(depth):
        nxt = []
        for trip in frontier:
            for child in trip.children():
                if child.m not in seen:
                    seen.add(child.m)
                    nxt.append(child)
                    out.append(child)
        frontier = nxt
    return out


def markov_simple_lengths(depth: int) -> list[tuple[int, float]]:
    """(m, 2 acosh(3m/2)) for every Markov number at tree depth <= depth.

    On the modular torus these are exactly the lengths of the simple
    closed geodesics (trace 3m).
    """
    ms = sorted({m for trip in markov_triples(depth) for m in trip.m})
    return [(m, _length_from_abs_trace(3.0 * m)) for m in ms]


# ---------------------------------------------------------------------------
# persistence: magic "GSPC", version 1, CRC-64/XZ over header + records
# ---------------------------------------------------------------------------

_MAGIC = b"GSPC"
_VERSION = 1

_CRC64_POLY = 0xC96C5795D7870F42
_CRC64_TABLE: list[int] = []
for _i in range(256):
    _c = _i
    for _ in range(8):
        _c = (_c >> 1) ^ (_CRC64_POLY if _c & 1 else 0)
    _CRC64_TABLE.append(_c)
del _i, _c


def crc64(data: bytes, crc: int = 0) -> int:
    """CRC-64/XZ (ECMA-182 reflected); crc64(b"123456789") = 0x995DC9BBDF1939FA."""
    crc ^= 0xFFFFFFFFFFFFFFFF
    table = _CRC64_TABLE
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


def _pack_word(letters: tuple[int, ...], nbytes: int) -> bytes:
    out = bytearray(nbytes)
    for i, x in enumerate(letters):
        if x > 3:
            raise MalformedRecordError(
                "2-bit word packing supports rank <= 2 alphabets only"
            )
        out[i >> 2] |= x << ((i & 3) * 2)
    return bytes(out)


def _unpack_word(blob: bytes, word_length: int) -> tuple[int, ...]:
    return tuple((blob[i >> 2] >> ((i & 3) * 2)) & 3 for i in range(word_length))


def save_spectrum(table: SpectrumTable, path: str) -> None:
    """Write the binary cache; load_spectrum(path) round-trips bit-exactly."""
    name_b = table.group_name.encode("utf-8")
    word_bytes = (table.max_word_length + 3) // 4
    head = bytearray()
    head += _MAGIC
    head += struct.pack("<I", _VERSION)
    head += struct.pack("<H", len(name_b)) + name_b
    head += struct.pack("<I", len(table.generators))
    for g in table.generators:
        head += struct.pack("<4d", g.a, g.b, g.c, g.d)
    head += struct.pack("<IQ", table.max_word_length, len(table.records))
    if table.homology_filter is None:
        head += struct.pack("<B2i", 0, 0, 0)
    else:
        head += struct.pack("<B2i", 1, *table.homology_filter)
    head += struct.pack(
        "<QdQ",
        table.skipped_nonhyperbolic,
        table.reliable_horizon,
        table.n_primitive,
    )
    rec_fmt = struct.Struct(f"<H{word_bytes}sddI2iB")
    body = bytearray()
    for r in table.records:
        body += rec_fmt.pack(
            r.word_length,
            _pack_word(r.word.letters, word_bytes),
            r.length,
            r.trace,
            r.iteration,
            r.homology[0],
            r.homology[1],
            1 if r.is_primitive else 0,
        )
    crc = crc64(bytes(head) + bytes(body))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(struct.pack("<Q", crc))
        fh.write(body)


def load_spectrum(path: str) -> SpectrumTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        if blob[:4] != _MAGIC:
            raise MalformedRecordError(f"bad magic {blob[:4]!r}")
        off = 4
        (version,) = struct.unpack_from("<I", blob, off)
        off += 4
        if version != _VERSION:
            raise SpectrumVersionError(found=version, expected=_VERSION)
        (name_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        (n_gens,) = struct.unpack_from("<I", blob, off)
        off += 4
        gens = []
        for _ in range(n_gens):
            a, b, c, d = struct.unpack_from("<4d", blob, off)
            off += 32
            gens.append(MoebiusMatrix(a, b, c, d))
        max_wl, n_records = struct.unpack_from("<IQ", blob, off)
        off += 12
        filt_flag, f1, f2 = struct.unpack_from("<B2i", blob, off)
        off += 9
        skipped, horizon, n_prim = struct.unpack_from("<QdQ", blob, off)
        off += 24
        (crc_stored,) = struct.unpack_from("<Q", blob, off)
        header_end = off
        off += 8
        body = blob[off:]
        crc_actual = crc64(blob[:header_end] + body)
        if crc_actual != crc_stored:
            raise SpectrumChecksumError(
                f"checksum mismatch: stored {crc_stored:#018x}, "
                f"computed {crc_actual:#018x}"
            )
        word_bytes = (max_wl + 3) // 4
        rec_fmt = struct.Struct(f"<H{word_bytes}sddI2iB")
        if len(body) != n_records * rec_fmt.size:
            raise MalformedRecordError(
                f"record section is {len(body)} bytes, "
                f"expected {n_records * rec_fmt.size}"
            )
        records = []
        for i in range(n_records):
            wl, wblob, length, trace, iteration, h1, h2, flags = rec_fmt.unpack_from(
                body, i * rec_fmt.size
            )
            if wl > max_wl or iteration == 0:
                raise MalformedRecordError(f"record {i} fields out of range")
            letters = _unpack_word(wblob, wl)
            records.append(
                GeodesicRecord(
                    word=CyclicWord(letters, _canonical=True),
                    trace=trace,
                    length=length,
                    is_primitive=bool(flags & 1),
                    iteration=iteration,
                    homology=(h1, h2),
                    word_length=wl,
                )
            )
        table = SpectrumTable(
            group_name=name,
            generators=tuple(gens),
            max_word_length=max_wl,
            records=tuple(records),
            reliable_horizon=horizon,
            homology_filter=(f1, f2) if filt_flag else None,
            skipped_nonhyperbolic=skipped,
        )
        if table.n_primitive != n_prim:
            raise MalformedRecordError(
                "primitive count in header disagrees with records"
            )
        return table
    except struct.error as exc:
        raise MalformedRecordError(f"truncated spectrum cache: {exc}") from exc
    except IndexError as exc:
        raise MalformedRecordError(f"truncated spectrum cache: {exc}") from exc


def export_csv(table: SpectrumTable, path: str) -> None:
    """Plot-ready CSV: word,length,trace,primitive,iteration,h1,h2."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word,length,trace,primitive,iteration,h1,h2\n")
        for r in table.records:
            fh.write(
                f"{r.word},{r.length:.17g},{r.trace:.17g},"
                f"{int(r.is_primitive)},{r.iteration},"
                f"{r.homology[0]},{r.homology[1]}\n"
            )

"""Words over free groups, group presentations, piece analysis and the
small-cancellation word-problem solver.

Letters are encoded as nonzero integers: ``k > 0`` is generator ``k - 1``
and ``-k`` is its inverse.  The total order used everywhere for
canonicalization puts each generator immediately before its inverse:
``a < a^-1 < b < b^-1 < ...``.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional


class PresentationError(ValueError):
    """Raised for malformed presentation text (carries line/column)."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + where)


class SmallCancellationRequired(ValueError):
    """Dehn reduction was asked to run on a presentation that is not C'(1/6)."""


def letter_key(letter: int) -> tuple[int, int]:
    """Sort key realizing the fixed letter order a < a^-1 < b < b^-1 < ..."""
    return (letter, 0) if letter > 0 else (-letter, 1)


def word_key(letters: tuple[int, ...]) -> tuple:
    """ShortLex key: length first, then letterwise order."""
    return (len(letters), tuple(letter_key(x) for x in letters))


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if x == 0:
            raise ValueError("letter 0 is not a valid generator reference")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word.  Construct arbitrary letter sequences through
    :func:`free_reduce`; the constructor insists on reducedness."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        prev = None
        for x in self.letters:
            if x == 0:
                raise ValueError("letter 0 is not a valid generator reference")
            if prev == -x:
                raise ValueError("word is not freely reduced")
            prev = x

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return free_reduce(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def conjugate_by(self, u: "Word") -> "Word":
        """u * self * u^-1, freely reduced."""
        return free_reduce(u.letters + self.letters + tuple(-x for x in reversed(u.letters)))

    def is_identity(self) -> bool:
        return not self.letters

    @property
    def key(self):
        return word_key(self.letters)


def free_reduce(letters: Iterable[int]) -> Word:
    """Return the unique freely reduced form of a letter sequence."""
    return Word(_reduce(letters))


def _rotations(letters: tuple[int, ...]):
    n = len(letters)
    return [letters[i:] + letters[:i] for i in range(n)]


def _invert(letters: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(letters))


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word stored by its canonical rotation.

    ``canonical`` is the lexicographically least rotation under the fixed
    letter order; ``original_length`` records the length of the word the
    cyclic word was made from, before cyclic reduction.
    """

    canonical: Word
    original_length: int

    @staticmethod
    def from_word(w: Word) -> "CyclicWord":
        letters = list(w.letters)
        orig = len(letters)
        while len(letters) >= 2 and letters[0] == -letters[-1]:
            letters.pop()
            letters.pop(0)
        if not letters:
            return CyclicWord(Word(()), orig)
        best = min(_rotations(tuple(letters)), key=word_key)
        return CyclicWord(Word(best), orig)

    def __len__(self):
        return len(self.canonical)

    def rotations(self) -> list[tuple[int, ...]]:
        return _rotations(self.canonical.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord.from_word(self.canonical.inverse())


_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Presentation:
    """A finite presentation: generator names plus cyclic relator words."""

    generator_names: tuple[str, ...]
    relators: tuple[CyclicWord, ...]
    lambda_target: Fraction = Fraction(1, 6)

    def __post_init__(self):
        if len(set(self.generator_names)) != len(self.generator_names):
            raise PresentationError("duplicate generator names")
        for name in self.generator_names:
            if not _NAME_RE.fullmatch(name):
                raise PresentationError(f"invalid generator name {name!r}")

    @property
    def num_generators(self) -> int:
        return len(self.generator_names)

    def generator_index(self, name: str) -> int:
        return self.generator_names.index(name)

    def proper_power_indices(self) -> tuple[int, ...]:
        """Indices of relators that are proper powers (flagged, not rejected)."""
        return tuple(i for i, r in enumerate(self.relators) if is_proper_power(r))

    def letter_name(self, letter: int) -> str:
        name = self.generator_names[abs(letter) - 1]
        return name if letter > 0 else name + "^-1"

    def word_str(self, w: Word) -> str:
        if not w.letters:
            return "1"
        return " ".join(self.letter_name(x) for x in w.letters)


def _relator_dedup_key(r: CyclicWord):
    return min(r.canonical.letters, r.inverse().canonical.letters)


class _RelatorParser:
    """Recursive-descent parser for relator expressions.

    Syntax: juxtaposed generator tokens, ``^k`` powers (k nonzero),
    ``[x,y]`` commutators, ``( ... )^k`` grouping.  A single upper-case
    letter is an alias for the inverse of the matching lower-case
    generator, provided the upper-case form is not itself a generator.
    """

    def __init__(self, text: str, names: tuple[str, ...], line: int):
        self.text = text
        self.pos = 0
        self.line = line
        self.names = sorted(range(len(names)), key=lambda i: -len(names[i]))
        self.name_list = names
        self.name_set = set(names)

    def error(self, msg):
        raise PresentationError(msg, self.line, self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_word(self, stop: str = "") -> list[int]:
        letters: list[int] = []
        while True:
            ch = self.peek()
            if ch == "" or ch in stop:
                return letters
            letters.extend(self.parse_factor())

    def parse_factor(self) -> list[int]:
        atom = self.parse_atom()
        if self.peek() == "^":
            self.pos += 1
            k = self.parse_int()
            if k < 0:
                atom = [-x for x in reversed(atom)]
                k = -k
            atom = atom * k
        return atom

    def parse_atom(self) -> list[int]:
        ch = self.peek()
        if ch == "[":
            self.pos += 1
            x = self.parse_word(stop=",")
            if self.peek() != ",":
                self.error("expected ',' in commutator")
            self.pos += 1
            y = self.parse_word(stop="]")
            if self.peek() != "]":
                self.error("expected ']' closing commutator")
            self.pos += 1
            xi = [-l for l in reversed(x)]
            yi = [-l for l in reversed(y)]
            return x + y + xi + yi
        if ch == "(":
            self.pos += 1
            w = self.parse_word(stop=")")
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return w
        return [self.parse_name()]

    def parse_name(self) -> int:
        self.skip_ws()
        rest = self.text[self.pos:]
        for i in self.names:
            name = self.name_list[i]
            if rest.startswith(name):
                self.pos += len(name)
                return i + 1
        ch = rest[:1]
        if ch.isupper() and ch.lower() in self.name_set and ch not in self.name_set:
            self.pos += 1
            return -(self.name_list.index(ch.lower()) + 1)
        self.error(f"unknown generator at {rest[:8]!r}")

    def parse_int(self) -> int:
        self.skip_ws()
        m = re.match(r"-?\d+", self.text[self.pos:])
        if not m:
            self.error("expected integer exponent")
        self.pos += len(m.group())
        k = int(m.group())
        if k == 0:
            self.error("zero exponent is not allowed")
        return k


def parse_presentation(text: str, lambda_target: Fraction = Fraction(1, 6)) -> Presentation:
    """Parse presentation-file contents.

    The format is line oriented: one ``gens:`` line with whitespace
    separated identifiers, then one ``rel:`` line per relator.  ``#``
    starts a comment.  Relators are cyclically reduced and canonicalized;
    duplicates up to rotation and inversion are rejected.
    """
    names: Optional[tuple[str, ...]] = None
    relators: list[CyclicWord] = []
    seen_keys = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("gens:"):
            if names is not None:
                raise PresentationError("duplicate gens: line", lineno)
            names = tuple(line[len("gens:"):].split())
            if not names:
                raise PresentationError("gens: line lists no generators", lineno)
        elif line.startswith("rel:"):
            if names is None:
                raise PresentationError("rel: before gens:", lineno)
            body = line[len("rel:"):]
            parser = _RelatorParser(body, names, lineno)
            letters = parser.parse_word()
            if parser.peek() != "":
                parser.error("trailing characters after relator")
            word = free_reduce(letters)
            cyc = CyclicWord.from_word(word)
            if len(cyc) == 0:
                raise PresentationError("empty relator", lineno)
            key = _relator_dedup_key(cyc)
            if key in seen_keys:
                raise PresentationError("duplicate relator (up to rotation/inversion)", lineno)
            seen_keys.add(key)
            relators.append(cyc)
        else:
            raise PresentationError(f"unrecognized line {line[:20]!r}", lineno)
    if names is None:
        raise PresentationError("missing gens: line")
    return Presentation(names, tuple(relators), lambda_target)


def serialize_presentation(p: Presentation) -> str:
    lines = ["gens: " + " ".join(p.generator_names)]
    for r in p.relators:
        lines.append("rel: " + p.word_str(r.canonical))
    return "\n".join(lines) + "\n"


@dataclass
class PieceReport:
    """Longest piece per relator, with one maximal witness each.

    A piece is a common prefix of two distinct cyclic permutations drawn
    from the relators and their inverses.  Relators with no piece map to
    length 0 and carry no witness.
    """

    per_relator: dict[int, int]
    witnesses: dict[int, Word]


def _lcp(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


@functools.lru_cache(maxsize=None)
def compute_pieces(p: Presentation) -> PieceReport:
    """Brute force over all ordered pairs of distinct cyclic permutations
    of the relators and their inverses, taking longest common prefixes."""
    rotations: list[tuple[tuple[int, ...], int]] = []
    for idx, r in enumerate(p.relators):
        for rot in r.rotations():
            rotations.append((rot, idx))
        for rot in _rotations(_invert(r.canonical.letters)):
            rotations.append((rot, idx))
    per = {i: 0 for i in range(len(p.relators))}
    wit: dict[int, Word] = {}
    for a, ia in rotations:
        for b, _ib in rotations:
            if a == b:
                continue
            m = _lcp(a, b)
            if m > per[ia]:
                per[ia] = m
                wit[ia] = Word(a[:m])
    return PieceReport(per, wit)


@dataclass(frozen=True)
class SmallCancellationVerdict:
    satisfied: bool
    lam: Fraction
    relator_index: Optional[int] = None
    piece: Optional[Word] = None
    piece_length: Optional[int] = None
    relator_length: Optional[int] = None

    def __bool__(self):
        return self.satisfied


@functools.lru_cache(maxsize=None)
def check_small_cancellation(p: Presentation, lam: Fraction) -> SmallCancellationVerdict:
    """Check the metric condition: every piece q in a relator r must have
    |q| < lam * |r| strictly; ties are violations.  An empty relator set
    is vacuously satisfied."""
    lam = Fraction(lam)
    if not 0 < lam <= 1:
        raise ValueError("lambda must satisfy 0 < lambda <= 1")
    report = compute_pieces(p)
    for idx in range(len(p.relators)):
        plen = report.per_relator[idx]
        rlen = len(p.relators[idx])
        if plen and Fraction(plen) >= lam * rlen:
            return SmallCancellationVerdict(
                False, lam, idx, report.witnesses[idx], plen, rlen)
    return SmallCancellationVerdict(True, lam)


def is_proper_power(r: CyclicWord) -> bool:
    """True iff the cyclically reduced word equals w^k for some k >= 2,
    decided by checking divisor-length periods of the letter sequence."""
    letters = r.canonical.letters
    n = len(letters)
    if n == 0:
        return False
    for d in range(1, n):
        if n % d:
            continue
        if all(letters[i] == letters[i % d] for i in range(n)):
            return True
    return False


@functools.lru_cache(maxsize=None)
def _dehn_index(p: Presentation):
    """Rotation table for Dehn matching: first letter -> list of
    (rotation, relator length).  Lists are ordered by (relator index,
    inverse flag, rotation offset), which fixes the deterministic
    tie-break for equal-length matches."""
    table: dict[int, list[tuple[tuple[int, ...], int]]] = {}
    for idx, r in enumerate(p.relators):
        base = r.canonical.letters
        for source in (base, _invert(base)):
            for rot in _rotations(source):
                table.setdefault(rot[0], []).append((rot, len(rot)))
    return table


def greendlinger_step(w: Word, p: Presentation) -> Optional[Word]:
    """One Dehn step: if a subword of a cyclic rotation of ``w`` matches
    strictly more than half of a relator or an inverted relator, replace
    it by the inverse of the complement and freely reduce.

    The match chosen is deterministic: longest first, then the smallest
    rotation offset of ``w``, then table order over relators.  Returns
    None when no subword exceeds half a relator.
    """
    letters = w.letters
    n = len(letters)
    if n == 0:
        return None
    table = _dehn_index(p)
    doubled = letters + letters
    best = None  # (match_len, offset, rotation)
    for off in range(n):
        cands = table.get(doubled[off])
        if not cands:
            continue
        window = doubled[off:off + n]
        for rot, rlen in cands:
            limit = min(n, rlen)
            m = 0
            while m < limit and window[m] == rot[m]:
                m += 1
            if 2 * m > rlen and (best is None or m > best[0]):
                best = (m, off, rot)
    if best is None:
        return None
    m, off, rot = best
    rotated = doubled[off:off + n]
    complement_inv = _invert(rot[m:])
    return free_reduce(complement_inv + rotated[m:])


def _cyclic_core(w: Word) -> Word:
    letters = list(w.letters)
    while len(letters) >= 2 and letters[0] == -letters[-1]:
        letters.pop()
        letters.pop(0)
    return Word(tuple(letters))


def dehn_reduce(w: Word, p: Presentation) -> Word:
    """Iterate greendlinger_step to a fixed point.

    For a C'(1/6) presentation the result is empty exactly when ``w``
    represents the identity.  The reduction works on the cyclic word, so
    intermediate words are conjugacy representatives; emptiness is what
    the caller may rely on.  Raises SmallCancellationRequired when the
    presentation fails C'(1/6), since termination of an unbounded search
    is not guaranteed otherwise.
    """
    if not check_small_cancellation(p, Fraction(1, 6)):
        raise SmallCancellationRequired(
            "dehn_reduce requires a C'(1/6) presentation")
    cur = free_reduce(w.letters)
    while True:
        cur = _cyclic_core(cur)
        nxt = greendlinger_step(cur, p)
        if nxt is None:
            return cur
        if len(nxt) >= len(cur):
            raise AssertionError("Dehn step failed to shorten the word")
        cur = nxt


def words_equal(p: Presentation, a: Word, b: Word) -> bool:
    """Equality in the presented group, via Dehn's algorithm."""
    if a.letters == b.letters:
        return True
    return dehn_reduce(a * b.inverse(), p).is_identity()


def random_trivial_word(p: Presentation, rng, max_relators: int = 5,
                        max_conjugator: int = 6) -> Word:
    """A random product of conjugated relators: trivially the identity.

    Used both as the trivial-word stress source for the Dehn solver and
    as the closed-loop sampler for filling experiments on presentation
    complexes.
    """
    if not p.relators:
        return Word(())
    count = rng.randint(1, max_relators)
    letters: list[int] = []
    gens = p.num_generators
    for _ in range(count):
        r = p.relators[rng.randrange(len(p.relators))]
        rot = rng.randrange(len(r))
        sign = rng.choice((1, -1))
        body = r.rotations()[rot]
        if sign < 0:
            body = _invert(body)
        conj: list[int] = []
        for _ in range(rng.randint(0, max_conjugator)):
            choices = [x for x in range(-gens, gens + 1)
                       if x != 0 and (not conj or x != -conj[-1])]
            conj.append(rng.choice(choices))
        letters.extend(conj)
        letters.extend(body)
        letters.extend(-x for x in reversed(conj))
    return free_reduce(letters)

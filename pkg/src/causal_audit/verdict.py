"""Edge verdicts from ten ratings: causality, no causality, or hallucination.

Ratings travel in canonical prompt order::

    0 general A->B     1 general B->A
    2..5  A-side specific claims, patterns hh, hl, lh, ll
    6..9  B-side specific claims, same pattern order

A bar-pair matches a rating with its mirror of the same prompt kind:
general (0, 1), hh (2, 6), hl (3, 7), lh (4, 8), ll (5, 9).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .prompts import PATTERN_CODES, Side

POLARITY_CYCLE = "polarity_cycle"
COLORED_SPLIT = "colored_split"
GENERAL_COLORED_CONTRADICTION = "general_colored_contradiction"
REASON_ORDER = (POLARITY_CYCLE, COLORED_SPLIT, GENERAL_COLORED_CONTRADICTION)

DEFAULT_T_STRONG = 3
RATING_MIN, RATING_MAX = 1, 4

# (antecedent, consequent) polarity of each specific claim, index-aligned with PATTERN_CODES
_PATTERNS = tuple((code[0], code[1]) for code in PATTERN_CODES)


class Dominance(str, Enum):
    A = "A"
    B = "B"
    NONE = "None"

    def swapped(self) -> Dominance:
        return {Dominance.A: Dominance.B, Dominance.B: Dominance.A}.get(self, self)


class Strength(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class StrengthThreshold:
    t_strong: int = DEFAULT_T_STRONG

    def __post_init__(self):
        if not isinstance(self.t_strong, int) or not 2 <= self.t_strong <= 4:
            raise ValueError(f"t_strong must be an integer in [2, 4], got {self.t_strong!r}")


DEFAULT_THRESHOLD = StrengthThreshold()


@dataclass(frozen=True)
class BarPair:
    kind: str  # "general" or a polarity pattern code
    a_side: int
    b_side: int

    def swapped(self) -> BarPair:
        return BarPair(self.kind, self.b_side, self.a_side)


class VerdictKind(str, Enum):
    CAUSALITY = "causality"
    NO_CAUSALITY = "no_causality"
    HALLUCINATION = "hallucination"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    dominant: Side | None = None
    reasons: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.kind is VerdictKind.HALLUCINATION) != bool(self.reasons):
            raise ValueError("reasons must be non-empty exactly for hallucination verdicts")
        if (self.kind is VerdictKind.CAUSALITY) != (self.dominant is not None):
            raise ValueError("dominant side is set exactly for causality verdicts")

    @property
    def code(self) -> str:
        return {VerdictKind.CAUSALITY: "C", VerdictKind.NO_CAUSALITY: "N", VerdictKind.HALLUCINATION: "H"}[self.kind]

    @property
    def is_hallucination(self) -> bool:
        return self.kind is VerdictKind.HALLUCINATION

    def to_dict(self) -> dict:
        return {
            "verdict": self.kind.value,
            "code": self.code,
            "dominant": self.dominant.value if self.dominant else None,
            "reasons": list(self.reasons),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Verdict:
        dom = data.get("dominant")
        return cls(VerdictKind(data["verdict"]), Side(dom) if dom else None, tuple(data.get("reasons", ())))


CAUSALITY_A = Verdict(VerdictKind.CAUSALITY, Side.A)
CAUSALITY_B = Verdict(VerdictKind.CAUSALITY, Side.B)
NO_CAUSALITY = Verdict(VerdictKind.NO_CAUSALITY)


@dataclass(frozen=True)
class EdgeAuditProfile:
    """Ten ratings for one edge from one responder.

    A rating of ``None`` marks an unparseable response; such profiles are
    reported but never evaluated.
    """

    edge_label: str
    responder: str
    ratings: tuple[int | None, ...]
    a_name: str = "A"
    b_name: str = "B"
    raw_responses: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ratings", tuple(self.ratings))
        if len(self.ratings) != 10:
            raise ValueError(f"a profile holds exactly 10 ratings, got {len(self.ratings)}")
        for r in self.ratings:
            if r is not None and (not isinstance(r, int) or not RATING_MIN <= r <= RATING_MAX):
                raise ValueError(f"rating {r!r} outside [1, 4]")
        if self.raw_responses is not None:
            object.__setattr__(self, "raw_responses", tuple(self.raw_responses))

    @classmethod
    def from_pairs(cls, general: tuple[int, int], specific: Sequence[tuple[int, int]], **kw) -> EdgeAuditProfile:
        """Build from bar-pairs: ``general`` and four specific pairs in hh, hl, lh, ll order."""
        if len(specific) != 4:
            raise ValueError("expected 4 specific bar-pairs")
        ratings = (general[0], general[1], *(p[0] for p in specific), *(p[1] for p in specific))
        kw.setdefault("edge_label", "E1")
        kw.setdefault("responder", "fixture")
        return cls(ratings=ratings, **kw)

    @property
    def unparseable(self) -> bool:
        return any(r is None for r in self.ratings)

    @property
    def general_pair(self) -> BarPair:
        return BarPair("general", self.ratings[0], self.ratings[1])

    @property
    def specific_pairs(self) -> tuple[BarPair, ...]:
        r = self.ratings
        return tuple(BarPair(code, r[2 + i], r[6 + i]) for i, code in enumerate(PATTERN_CODES))

    @property
    def pairs(self) -> tuple[BarPair, ...]:
        return (self.general_pair, *self.specific_pairs)

    def swapped(self) -> EdgeAuditProfile:
        return EdgeAuditProfile(self.edge_label, self.responder, swap_ratings(self.ratings),
                                self.b_name, self.a_name, None)

    def to_dict(self) -> dict:
        d = {"edge": self.edge_label, "responder": self.responder, "a": self.a_name, "b": self.b_name,
             "ratings": list(self.ratings)}
        if self.raw_responses is not None:
            d["raw_responses"] = list(self.raw_responses)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> EdgeAuditProfile:
        raw = data.get("raw_responses")
        return cls(data["edge"], data["responder"], tuple(data["ratings"]), data.get("a", "A"),
                   data.get("b", "B"), tuple(raw) if raw is not None else None)


def swap_ratings(r: Sequence) -> tuple:
    return (r[1], r[0], r[6], r[7], r[8], r[9], r[2], r[3], r[4], r[5])


def classify_strength(r: int, th: StrengthThreshold = DEFAULT_THRESHOLD) -> Strength:
    return Strength.STRONG if r >= th.t_strong else Strength.WEAK


def _dom(a: int, b: int, t: int) -> int:
    # 0 = none, 1 = A, 2 = B. Equal -> none; otherwise the larger side wins only if strong.
    if a > b:
        return 1 if a >= t else 0
    if b > a:
        return 2 if b >= t else 0
    return 0


_DOM = (Dominance.NONE, Dominance.A, Dominance.B)


def pair_dominance(p: BarPair, th: StrengthThreshold = DEFAULT_THRESHOLD) -> Dominance:
    return _DOM[_dom(p.a_side, p.b_side, th.t_strong)]


def colored_dominance(pairs: Sequence[BarPair], th: StrengthThreshold = DEFAULT_THRESHOLD) -> tuple[Dominance, bool]:
    if len(pairs) != 4:
        raise ValueError("colored dominance needs exactly 4 specific bar-pairs")
    doms = [pair_dominance(p, th) for p in pairs]
    return _tally(doms.count(Dominance.A), doms.count(Dominance.B))


def _tally(a: int, b: int) -> tuple[Dominance, bool]:
    if a > b:
        return Dominance.A, False
    if b > a:
        return Dominance.B, False
    return Dominance.NONE, a >= 1


@dataclass(frozen=True)
class CycleRecord:
    """Two strong claims that chain back to their starting variable.

    ``a_claim`` is the A-side pattern (A polarity, B polarity), ``b_claim`` the
    B-side pattern (B polarity, A polarity). ``chains`` lists which loops close:
    "A->B->A" when the A-claim's effect on B is the B-claim's premise, and
    "B->A->B" when the B-claim's effect on A is the A-claim's premise.
    """

    a_claim: str
    b_claim: str
    chains: tuple[str, ...]


def _cycles(r: Sequence[int], t: int) -> list[CycleRecord]:
    out = []
    for i, (p, q) in enumerate(_PATTERNS):
        if r[2 + i] < t:
            continue
        for j, (s, rr) in enumerate(_PATTERNS):
            if r[6 + j] < t:
                continue
            chains = []
            if q == s:
                chains.append("A->B->A")
            if rr == p:
                chains.append("B->A->B")
            if chains:
                out.append(CycleRecord(PATTERN_CODES[i], PATTERN_CODES[j], tuple(chains)))
    return out


def detect_polarity_cycle(profile: EdgeAuditProfile, th: StrengthThreshold = DEFAULT_THRESHOLD) -> list[CycleRecord]:
    return _cycles(profile.ratings, th.t_strong)


# hh -> ll, hl -> hl, lh -> lh, ll -> hh
_CYCLE_FREE_PARTNER = (3, 1, 2, 0)


def _has_cycle(r: Sequence[int], t: int) -> bool:
    # Strong A claim (p, q) and strong B claim (s, r) are cycle-free only when
    # s = not q and r = not p, i.e. the B pattern is the A pattern reversed and negated.
    a_strong = [i for i in range(4) if r[2 + i] >= t]
    if not a_strong:
        return False
    for j in range(4):
        if r[6 + j] >= t:
            for i in a_strong:
                if j != _CYCLE_FREE_PARTNER[i]:
                    return True
    return False


_HALLUCINATIONS: dict[tuple[bool, bool, bool], Verdict] = {}
for _c in (False, True):
    for _s in (False, True):
        for _x in (False, True):
            if _c or _s or _x:
                _reasons = tuple(name for name, on in zip(REASON_ORDER, (_c, _s, _x)) if on)
                _HALLUCINATIONS[(_c, _s, _x)] = Verdict(VerdictKind.HALLUCINATION, None, _reasons)


def evaluate_ratings(r: Sequence[int], t_strong: int = DEFAULT_T_STRONG) -> Verdict:
    """Rule interpreter over a raw 10-rating sequence in canonical order."""
    general = _dom(r[0], r[1], t_strong)
    a = b = 0
    for i in range(2, 6):
        d = _dom(r[i], r[i + 4], t_strong)
        if d == 1:
            a += 1
        elif d == 2:
            b += 1
    colored = 1 if a > b else 2 if b > a else 0
    split = a == b and a > 0
    cycle = _has_cycle(r, t_strong)
    contradiction = general != colored
    if cycle or split or contradiction:
        return _HALLUCINATIONS[(cycle, split, contradiction)]
    if general == 1:
        return CAUSALITY_A
    if general == 2:
        return CAUSALITY_B
    return NO_CAUSALITY


def evaluate(profile: EdgeAuditProfile, th: StrengthThreshold = DEFAULT_THRESHOLD) -> Verdict:
    if profile.unparseable:
        raise ValueError(f"profile {profile.edge_label}/{profile.responder} has unparseable ratings")
    return evaluate_ratings(profile.ratings, th.t_strong)


def verdict_reasons_explained(profile: EdgeAuditProfile, th: StrengthThreshold = DEFAULT_THRESHOLD) -> dict:
    """Intermediate results behind a verdict, for logs and the verbose audit."""
    general = pair_dominance(profile.general_pair, th)
    colored, split = colored_dominance(profile.specific_pairs, th)
    return {
        "general_dominance": general.value,
        "pair_dominance": {p.kind: pair_dominance(p, th).value for p in profile.specific_pairs},
        "colored_dominance": colored.value,
        "colored_split": split,
        "cycles": [{"a_claim": c.a_claim, "b_claim": c.b_claim, "chains": list(c.chains)}
                   for c in detect_polarity_cycle(profile, th)],
        "verdict": evaluate(profile, th).to_dict(),
    }


def swap_verdict(v: Verdict) -> Verdict:
    if v.kind is VerdictKind.CAUSALITY:
        return CAUSALITY_B if v.dominant is Side.A else CAUSALITY_A
    return v


"""Iterative fixed-point fusion engine.

Every method shares one skeleton: per-item vote counts and per-source
trust scores are updated in alternation until the trust change drops under
a threshold, then the highest-vote value on each item is selected as true.
Methods differ in their vote rule, trust rule, initialization, and
normalization step. Conflicting values are grouped into tolerance buckets
first, so the baseline vote method selects exactly the dominant bucketed
value.

Per-attribute variants treat each (source, attribute) pair as an
independent virtual source; on single-attribute data they coincide with
the global variants.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import FusionConfig, RunConfig
from .metrics import source_accuracy
from .model import (
    ClaimSet,
    DataItem,
    GoldStandard,
    Kind,
    TruthFuseError,
    Value,
)
from .normalize import (
    SimilarityParams,
    bucketize,
    similarity,
    subsumes,
    tolerances,
    values_match,
)

METHOD_NAMES = (
    "vote", "hub", "avglog", "invest", "pooledinvest", "cosine",
    "2-estimates", "3-estimates", "truthfinder", "accupr", "popaccu",
    "accusim", "accuformat", "accucopy",
)

_CANONICAL = {
    "vote": "Vote", "hub": "Hub", "avglog": "AvgLog", "invest": "Invest",
    "pooledinvest": "PooledInvest", "cosine": "Cosine",
    "2-estimates": "2-Estimates", "3-estimates": "3-Estimates",
    "truthfinder": "TruthFinder", "accupr": "AccuPr", "popaccu": "PopAccu",
    "accusim": "AccuSim", "accuformat": "AccuFormat", "accucopy": "AccuCopy",
}

_ALIASES = {
    "twoestimates": "2-estimates", "2estimates": "2-estimates",
    "threeestimates": "3-estimates", "3estimates": "3-estimates",
}


class FusionError(TruthFuseError):
    """A fusion run was invoked with inconsistent inputs."""


@dataclass(frozen=True)
class MethodSpec:
    """A fusion method plus whether trust is kept per (source, attribute)."""

    name: str
    per_attribute_trust: bool = False

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise FusionError(
                f"unknown method {self.name!r}; valid methods: "
                f"{', '.join(method_labels())}")

    @classmethod
    def parse(cls, token: str) -> "MethodSpec":
        t = token.strip().lower().replace("_", "-")
        per_attr = False
        if t.endswith("attr"):
            per_attr = True
            t = t[: -len("attr")]
        t = _ALIASES.get(t.replace("-", ""), t)
        if t not in METHOD_NAMES:
            raise FusionError(
                f"unknown method {token!r}; valid methods: "
                f"{', '.join(method_labels())}")
        return cls(t, per_attr)

    def label(self) -> str:
        return _CANONICAL[self.name] + ("Attr" if self.per_attribute_trust
                                        else "")


def method_labels() -> list[str]:
    return [_CANONICAL[m] for m in METHOD_NAMES]


@dataclass
class FusionResult:
    """Outcome of a fusion run: a selected value per item, the final trust
    map, and convergence diagnostics."""

    method: MethodSpec
    selected: dict[DataItem, Value]
    selected_vote: dict[DataItem, float]
    confidence: dict[DataItem, float]
    trust: dict
    rounds_used: int
    converged: bool
    wall_time: float
    tie_count: int
    trust_deltas: list[float] = field(default_factory=list)
    copy_matrix: object | None = None   # filled by copy-aware fusion


@dataclass
class FusionState:
    """One round's state: per-source trust, per-(item, value) votes, and
    (order-3 estimates only) per-value trust."""

    round: int
    trust: np.ndarray
    votes: np.ndarray
    value_trust: np.ndarray | None = None


class FusionEngine:
    """Array-backed view of a ClaimSet shared by every fusion method.

    Candidates are tolerance buckets; claims index into (virtual source,
    candidate) pairs. The engine is read-only after construction; distinct
    runs on it are independent.
    """

    def __init__(self, claims: ClaimSet, config: FusionConfig,
                 per_attribute: bool = False):
        self.claims = claims
        self.cfg = config
        self.per_attribute = per_attribute
        if not claims.claims:
            raise FusionError("cannot fuse an empty claim set")
        self.taus = tolerances(claims)
        self.sim_params = SimilarityParams(
            decay_width_multiplier=config.sim_decay_width_multiplier,
            time_zero_at=config.sim_time_zero_at,
            rho=config.rho)

        self.items: list[DataItem] = list(claims.items)
        item_index = {it: i for i, it in enumerate(self.items)}

        vsrc_keys: set = set()
        for c in claims.claims:
            vsrc_keys.add(self._vkey(c.source, c.item.attribute))
        self.vsrc_list = sorted(vsrc_keys)
        vsrc_index = {k: i for i, k in enumerate(self.vsrc_list)}

        cand_values: list[Value] = []
        cand_members: list[tuple[Value, ...]] = []
        cand_item: list[int] = []
        item_start = [0]
        claim_vsrc: list[int] = []
        claim_cand: list[int] = []
        for it in self.items:
            tau = self.taus[it.attribute]
            for b in bucketize(it, claims, tau):
                ci = len(cand_values)
                cand_values.append(b.center)
                cand_members.append(b.members)
                cand_item.append(item_index[it])
                member_set = set(b.members)
                for c in claims.by_item[it]:
                    if c.value in member_set:
                        claim_vsrc.append(
                            vsrc_index[self._vkey(c.source, it.attribute)])
                        claim_cand.append(ci)
            item_start.append(len(cand_values))

        self.cand_values = cand_values
        self.cand_members = cand_members
        self.n_items = len(self.items)
        self.n_cands = len(cand_values)
        self.n_vsrc = len(self.vsrc_list)
        self.cand_item = np.asarray(cand_item, dtype=np.int64)
        self.item_start = np.asarray(item_start[:-1], dtype=np.int64)
        self.claim_vsrc = np.asarray(claim_vsrc, dtype=np.int64)
        self.claim_cand = np.asarray(claim_cand, dtype=np.int64)
        self.claim_item = self.cand_item[self.claim_cand]
        self.src_nvals = np.bincount(self.claim_vsrc,
                                     minlength=self.n_vsrc).astype(float)
        self.cand_counts = np.bincount(self.claim_cand,
                                       minlength=self.n_cands).astype(float)
        self.item_nprov = np.bincount(self.claim_item,
                                      minlength=self.n_items).astype(float)
        self.item_ncand = np.bincount(self.cand_item,
                                      minlength=self.n_items).astype(float)
        self._build_similarity()
        self._build_format_pairs()
        self._pop_term = self._build_popularity_term()

    def _vkey(self, source: str, attribute: str):
        return (source, attribute) if self.per_attribute else source

    def _build_similarity(self) -> None:
        rows: list[int] = []
        cols: list[int] = []
        sims: list[float] = []
        for item_idx in range(self.n_items):
            lo = int(self.item_start[item_idx])
            hi = (int(self.item_start[item_idx + 1])
                  if item_idx + 1 < self.n_items else self.n_cands)
            if hi - lo < 2:
                continue
            attr = self.claims.attribute_of(self.items[item_idx])
            tau = self.taus[attr.name]
            for i in range(lo, hi):
                for j in range(lo, hi):
                    if i == j:
                        continue
                    s = similarity(self.cand_values[i], self.cand_values[j],
                                   attr, self.sim_params, tau)
                    if s > 0.0:
                        rows.append(i)
                        cols.append(j)
                        sims.append(s)
        self.sim_i = np.asarray(rows, dtype=np.int64)
        self.sim_j = np.asarray(cols, dtype=np.int64)
        self.sim_w = np.asarray(sims, dtype=float)

    def _build_format_pairs(self) -> None:
        """Claim -> candidate pairs where the claim's value subsumes a
        strictly finer member of another candidate on the same item."""
        pairs_claim: list[int] = []
        pairs_cand: list[int] = []
        for k in range(len(self.claim_cand)):
            own = int(self.claim_cand[k])
            item_idx = int(self.cand_item[own])
            item = self.items[item_idx]
            attr = self.claims.attribute_of(item)
            if attr.kind is not Kind.NUMBER:
                continue
            coarse = self._claim_value(k)
            if coarse.granularity is None:
                continue
            lo = int(self.item_start[item_idx])
            hi = (int(self.item_start[item_idx + 1])
                  if item_idx + 1 < self.n_items else self.n_cands)
            for cand in range(lo, hi):
                if cand == own:
                    continue
                if any(subsumes(coarse, m, attr)
                       for m in self.cand_members[cand]):
                    pairs_claim.append(k)
                    pairs_cand.append(cand)
        self.fmt_claim = np.asarray(pairs_claim, dtype=np.int64)
        self.fmt_cand = np.asarray(pairs_cand, dtype=np.int64)

    def _claim_value(self, claim_idx: int) -> Value:
        vk = self.vsrc_list[int(self.claim_vsrc[claim_idx])]
        source = vk[0] if self.per_attribute else vk
        item = self.items[int(self.claim_item[claim_idx])]
        for c in self.claims.by_item[item]:
            if c.source == source:
                return c.value
        raise FusionError("claim index out of sync")  # pragma: no cover

    def _build_popularity_term(self) -> np.ndarray:
        """Static per-candidate log-mass of competing observed values,
        used by the empirical-popularity vote rule."""
        n = self.cand_counts
        nlogn = np.where(n > 0, n * np.log(np.maximum(n, 1.0)), 0.0)
        item_nlogn = np.bincount(self.cand_item, weights=nlogn,
                                 minlength=self.n_items)
        rest = self.item_nprov[self.cand_item] - n
        rest_term = np.where(rest > 0,
                             rest * np.log(np.maximum(rest, 1.0)), 0.0)
        return item_nlogn[self.cand_item] - nlogn - rest_term

    # -- small shared helpers -------------------------------------------

    def _clamp(self, t: np.ndarray) -> np.ndarray:
        c = self.cfg.trust_clamp
        return np.clip(t, c, 1.0 - c)

    def _per_item_sum(self, per_cand: np.ndarray) -> np.ndarray:
        return np.add.reduceat(per_cand, self.item_start)

    def _per_item_max(self, per_cand: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(per_cand, self.item_start)

    def _norm_max(self, x: np.ndarray) -> np.ndarray:
        m = float(np.max(np.abs(x))) if x.size else 0.0
        return x / m if m > 0 else x

    @staticmethod
    def _rescale01(x: np.ndarray) -> np.ndarray:
        lo, hi = float(np.min(x)), float(np.max(x))
        if hi <= lo:
            # All-equal family: no spread to rescale; confine to the unit
            # range so reciprocal weights cannot amplify it round over round.
            return np.clip(x, 0.0, 1.0)
        return (x - lo) / (hi - lo)

    def _boost(self, votes: np.ndarray,
               rho: float | None = None) -> np.ndarray:
        """Credit each value with rho * sim * vote of every similar value."""
        r = self.cfg.rho if rho is None else rho
        if r == 0.0 or self.sim_i.size == 0:
            return votes
        boosted = votes.copy()
        np.add.at(boosted, self.sim_i, r * self.sim_w * votes[self.sim_j])
        return boosted

    def _format_credit(self, votes: np.ndarray, trust: np.ndarray,
                       weights: np.ndarray | None) -> np.ndarray:
        """Partial-provider credit: a coarse value's provider adds
        w_fmt * trust (scaled by its independence weight) to each strictly
        finer value it subsumes."""
        if self.cfg.w_fmt == 0.0 or self.fmt_claim.size == 0:
            return votes
        out = votes.copy()
        credit = self.cfg.w_fmt * trust[self.claim_vsrc[self.fmt_claim]]
        if weights is not None:
            credit = credit * weights[self.fmt_claim]
        np.add.at(out, self.fmt_cand, credit)
        return out

    def select(self, votes: np.ndarray) -> tuple[np.ndarray, int]:
        """Per-item argmax with deterministic smallest-value tie-break
        (candidates are stored in ascending value order)."""
        maxv = self._per_item_max(votes)
        is_max = votes == maxv[self.cand_item]
        idx = np.where(is_max, np.arange(self.n_cands), self.n_cands)
        chosen = np.minimum.reduceat(idx, self.item_start)
        ties = int(np.sum(np.add.reduceat(is_max.astype(np.int64),
                                          self.item_start) > 1))
        return chosen.astype(np.int64), ties

    def trust_array(self, input_trust: dict) -> np.ndarray:
        """Materialize an input trust map over the virtual sources.

        For per-attribute runs a plain per-source map is broadcast across
        attributes. Every virtual source must be covered.
        """
        t = np.empty(self.n_vsrc, dtype=float)
        for i, key in enumerate(self.vsrc_list):
            if key in input_trust:
                t[i] = float(input_trust[key])
            elif self.per_attribute and key[0] in input_trust:
                t[i] = float(input_trust[key[0]])
            else:
                raise FusionError(f"input trust does not cover source "
                                  f"{key!r}")
        return t

    def trust_map(self, trust: np.ndarray) -> dict:
        return {key: float(trust[i]) for i, key in enumerate(self.vsrc_list)}

    # -- vote rules (one pass, given fixed trust) ------------------------

    def votes_once(self, method: str, trust: np.ndarray,
                   value_trust: np.ndarray | None = None,
                   weights: np.ndarray | None = None) -> np.ndarray:
        """One vote-update pass for ``method`` under fixed trust.

        ``weights`` are optional per-claim independence weights (copy-aware
        fusion); they scale each claim's vote contribution.
        """
        if method == "vote":
            return self.cand_counts.copy()
        if method in ("hub", "avglog"):
            return self._norm_max(self._weighted_cand_sum(trust, weights))
        if method == "invest":
            base = self._invest_base(trust, weights)
            return self._norm_max(base ** self.cfg.invest_exponent)
        if method == "pooledinvest":
            return self._pooled_votes(self._invest_base(trust, weights))
        if method == "cosine":
            return self._cosine_votes(trust, weights)
        if method == "2-estimates":
            return self._rescale01(self._estimates_votes(trust, None,
                                                         weights))
        if method == "3-estimates":
            vt = (value_trust if value_trust is not None
                  else np.full(self.n_cands, self.cfg.init_value_trust))
            return self._rescale01(self._estimates_votes(trust, vt, weights))
        if method == "truthfinder":
            per_claim = -np.log(1.0 - self._clamp(trust))[self.claim_vsrc]
            votes = self._claim_sum(per_claim, weights)
            return self._boost(votes)
        if method in ("accupr", "accusim", "accuformat"):
            t = self._clamp(trust)
            per_claim = np.log(self.cfg.n_false * t / (1.0 - t))
            votes = self._claim_sum(per_claim[self.claim_vsrc], weights)
            if method == "accuformat":
                votes = self._format_credit(votes, trust, weights)
            if method in ("accusim", "accuformat"):
                votes = self._boost(votes)
            return votes
        if method == "popaccu":
            t = self._clamp(trust)
            per_claim = np.log(t / (1.0 - t))
            votes = self._claim_sum(per_claim[self.claim_vsrc], weights)
            return votes + self._pop_term
        raise FusionError(f"no vote rule for method {method!r}")

    def _claim_sum(self, per_claim: np.ndarray,
                   weights: np.ndarray | None) -> np.ndarray:
        if weights is not None:
            per_claim = per_claim * weights
        return np.bincount(self.claim_cand, weights=per_claim,
                           minlength=self.n_cands)

    def _weighted_cand_sum(self, trust: np.ndarray,
                           weights: np.ndarray | None) -> np.ndarray:
        return self._claim_sum(trust[self.claim_vsrc], weights)

    def _invest_base(self, trust: np.ndarray,
                     weights: np.ndarray | None) -> np.ndarray:
        return self._claim_sum((trust / self.src_nvals)[self.claim_vsrc],
                               weights)

    def _pooled_votes(self, base: np.ndarray) -> np.ndarray:
        h = self.cfg.pooled_exponent
        powed = np.power(np.maximum(base, 0.0), h)
        denom = self._per_item_sum(powed)[self.cand_item]
        total = self._per_item_sum(base)[self.cand_item]
        return np.where(denom > 0, np.divide(
            powed, denom, out=np.zeros_like(powed),
            where=denom > 0) * total, base)

    def _cosine_votes(self, trust: np.ndarray,
                      weights: np.ndarray | None) -> np.ndarray:
        cube = np.power(trust, self.cfg.cosine_trust_power)
        support = self._claim_sum(cube[self.claim_vsrc], weights)
        item_total = self._per_item_sum(support)[self.cand_item]
        num = 2.0 * support - item_total
        return np.divide(num, item_total,
                         out=np.zeros_like(num),
                         where=np.abs(item_total) > 1e-300)

    def _estimates_votes(self, trust: np.ndarray,
                         value_trust: np.ndarray | None,
                         weights: np.ndarray | None) -> np.ndarray:
        t_support = self._weighted_cand_sum(trust, weights)
        item_t = self._per_item_sum(t_support)[self.cand_item]
        nprov = self.item_nprov[self.cand_item]
        if value_trust is None:
            num = t_support + (nprov - self.cand_counts) - (item_t - t_support)
        else:
            num = (value_trust * (2.0 * t_support - item_t)
                   + nprov - self.cand_counts)
        return num / nprov

    # -- posteriors (Bayesian family) ------------------------------------

    def posteriors(self, votes: np.ndarray,
                   observed_only: bool = False) -> np.ndarray:
        """Per-candidate truth probabilities from log-scale vote counts.

        The denominator pools the observed values plus, unless
        ``observed_only``, the remaining unobserved portion of a domain of
        n_false + 1 values (each contributing e^0).
        """
        m = self._per_item_max(votes)[self.cand_item]
        expd = np.exp(votes - m)
        denom = self._per_item_sum(expd)[self.cand_item]
        if not observed_only:
            extra = np.maximum(
                self.cfg.n_false + 1 - self.item_ncand[self.cand_item], 0.0)
            denom = denom + extra * np.exp(-m)
        return expd / denom

    def trust_from_posteriors(self, post: np.ndarray) -> np.ndarray:
        avg = np.bincount(self.claim_vsrc, weights=post[self.claim_cand],
                          minlength=self.n_vsrc) / self.src_nvals
        return self._clamp(avg)

    # -- iterative rounds -------------------------------------------------

    def init_state(self, method: str) -> FusionState:
        cfg = self.cfg
        if method in ("hub", "avglog"):
            return FusionState(0, np.zeros(self.n_vsrc),
                               np.full(self.n_cands, cfg.init_vote))
        if method == "invest":
            votes = self.cand_counts / self.item_nprov[self.cand_item]
            return FusionState(0, np.ones(self.n_vsrc), votes)
        if method == "pooledinvest":
            votes = 1.0 / self.item_ncand[self.cand_item]
            return FusionState(0, np.ones(self.n_vsrc), votes)
        if method == "cosine":
            return FusionState(0, np.ones(self.n_vsrc),
                               np.ones(self.n_cands))
        if method == "2-estimates":
            return FusionState(0, np.ones(self.n_vsrc),
                               np.zeros(self.n_cands))
        if method == "3-estimates":
            return FusionState(0, np.ones(self.n_vsrc),
                               np.zeros(self.n_cands),
                               np.full(self.n_cands, cfg.init_value_trust))
        if method in ("truthfinder", "accupr", "popaccu", "accusim",
                      "accuformat", "accucopy"):
            return FusionState(0, np.full(self.n_vsrc, cfg.init_trust_bayes),
                               np.zeros(self.n_cands))
        if method == "vote":
            return FusionState(0, np.ones(self.n_vsrc), self.cand_counts)
        raise FusionError(f"no initialization for method {method!r}")

    def step(self, method: str, state: FusionState,
             weights: np.ndarray | None = None) -> tuple[FusionState, float]:
        """Advance one fixed-point round; returns the new state and the
        max absolute trust change."""
        if method in ("hub", "avglog"):
            raw = np.bincount(self.claim_vsrc,
                              weights=state.votes[self.claim_cand],
                              minlength=self.n_vsrc)
            if method == "avglog":
                # +1 smoothing keeps single-value sources from log(1) = 0.
                raw = raw / self.src_nvals * np.log1p(self.src_nvals)
            trust = self._norm_max(raw)
            votes = self.votes_once(method, trust, weights=weights)
        elif method in ("invest", "pooledinvest"):
            inv_w = (state.trust / self.src_nvals)[self.claim_vsrc]
            inv_sum = np.bincount(self.claim_cand, weights=inv_w,
                                  minlength=self.n_cands)
            share = np.divide(inv_w, inv_sum[self.claim_cand],
                              out=np.zeros_like(inv_w),
                              where=inv_sum[self.claim_cand] > 0)
            raw = np.bincount(
                self.claim_vsrc,
                weights=state.votes[self.claim_cand] * share,
                minlength=self.n_vsrc)
            trust = self._norm_max(raw) if method == "invest" else raw
            votes = self.votes_once(method, trust, weights=weights)
        elif method == "cosine":
            trust = (self.cfg.cosine_damping * state.trust
                     + (1.0 - self.cfg.cosine_damping)
                     * self._cosine_trust(state.votes))
            votes = self.votes_once(method, trust, weights=weights)
        elif method == "2-estimates":
            votes = self.votes_once(method, state.trust, weights=weights)
            trust = self._rescale01(self._estimates_trust(votes, None))
        elif method == "3-estimates":
            votes = self.votes_once(method, state.trust,
                                    value_trust=state.value_trust,
                                    weights=weights)
            # The affine [0,1] rescale covers the vote and source-trust
            # families; the per-value error rate is truncated instead, so a
            # low-ranked true value cannot see its votes inverted.
            value_trust = np.clip(
                self._estimates_value_trust(votes, state.trust),
                self.cfg.trust_clamp, 1.0 - self.cfg.trust_clamp)
            trust = self._rescale01(self._estimates_trust(votes, value_trust))
            new = FusionState(state.round + 1, trust, votes, value_trust)
            return new, self._state_delta(state, new)
        elif method == "truthfinder":
            votes = self.votes_once(method, state.trust, weights=weights)
            damp = 1.0 - np.exp(-self.cfg.truthfinder_gamma * votes)
            trust = self._clamp(
                np.bincount(self.claim_vsrc,
                            weights=damp[self.claim_cand],
                            minlength=self.n_vsrc) / self.src_nvals)
        elif method in ("accupr", "accusim", "accuformat"):
            votes = self.votes_once(method, state.trust, weights=weights)
            trust = self.trust_from_posteriors(self.posteriors(votes))
        elif method == "popaccu":
            votes = self.votes_once(method, state.trust, weights=weights)
            trust = self.trust_from_posteriors(
                self.posteriors(votes, observed_only=True))
        else:
            raise FusionError(f"no round rule for method {method!r}")
        new = FusionState(state.round + 1, trust, votes, state.value_trust)
        return new, self._state_delta(state, new)

    def _state_delta(self, old: FusionState, new: FusionState) -> float:
        """Max absolute change across trust and votes.

        Trust alone can be transiently stationary while votes still move
        (e.g. the investment trust update is uniform on uniform-coverage
        data for one round), so both families gate convergence.
        """
        delta = float(np.max(np.abs(new.trust - old.trust)))
        delta = max(delta, float(np.max(np.abs(new.votes - old.votes))))
        return delta

    def _cosine_trust(self, votes: np.ndarray) -> np.ndarray:
        own = votes[self.claim_cand]
        item_sum = self._per_item_sum(votes)
        item_sq = self._per_item_sum(votes * votes)
        num = np.bincount(self.claim_vsrc,
                          weights=2.0 * own - item_sum[self.claim_item],
                          minlength=self.n_vsrc)
        nvals = np.bincount(self.claim_vsrc,
                            weights=self.item_ncand[self.claim_item],
                            minlength=self.n_vsrc)
        sq = np.bincount(self.claim_vsrc,
                         weights=item_sq[self.claim_item],
                         minlength=self.n_vsrc)
        den = np.sqrt(nvals * sq)
        cos = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return np.clip(cos, -1.0, 1.0)

    def _estimates_trust(self, votes: np.ndarray,
                         value_trust: np.ndarray | None) -> np.ndarray:
        own = votes[self.claim_cand]
        if value_trust is None:
            item_anti = self._per_item_sum(1.0 - votes)
            per_claim = own + item_anti[self.claim_item] - (1.0 - own)
        else:
            u = 1.0 / np.maximum(1.0 - value_trust, self.cfg.trust_clamp)
            u_own = u[self.claim_cand]
            item_anti = self._per_item_sum((1.0 - votes) * u)
            per_claim = (own * u_own + item_anti[self.claim_item]
                         - (1.0 - own) * u_own)
        num = np.bincount(self.claim_vsrc, weights=per_claim,
                          minlength=self.n_vsrc)
        den = np.bincount(self.claim_vsrc,
                          weights=self.item_ncand[self.claim_item],
                          minlength=self.n_vsrc)
        return num / np.maximum(den, 1.0)

    def _estimates_value_trust(self, votes: np.ndarray,
                               trust: np.ndarray) -> np.ndarray:
        r = 1.0 / np.maximum(1.0 - trust, self.cfg.trust_clamp)
        r_support = np.bincount(self.claim_cand,
                                weights=r[self.claim_vsrc],
                                minlength=self.n_cands)
        item_r = self._per_item_sum(r_support)[self.cand_item]
        return (votes * r_support
                + (1.0 - votes) * (item_r - r_support)) \
            / self.item_nprov[self.cand_item]

    # -- result assembly --------------------------------------------------

    def build_result(self, method: MethodSpec, votes: np.ndarray,
                     trust: np.ndarray, rounds: int, converged: bool,
                     wall_time: float, deltas: list[float],
                     confidence: np.ndarray | None = None) -> FusionResult:
        chosen, ties = self.select(votes)
        if confidence is None:
            pos = np.maximum(votes, 0.0)
            item_pos = self._per_item_sum(pos)
            conf = np.divide(
                pos[chosen], item_pos,
                out=np.full(self.n_items, 1.0),
                where=item_pos > 0)
        else:
            conf = confidence[chosen]
        selected = {}
        selected_vote = {}
        conf_map = {}
        for i, it in enumerate(self.items):
            c = int(chosen[i])
            selected[it] = self.cand_values[c]
            selected_vote[it] = float(votes[c])
            conf_map[it] = float(conf[i])
        trust_out = ({} if method.name == "vote"
                     else self.trust_map(trust))
        return FusionResult(
            method=method, selected=selected, selected_vote=selected_vote,
            confidence=conf_map, trust=trust_out, rounds_used=rounds,
            converged=converged, wall_time=wall_time, tie_count=ties,
            trust_deltas=deltas)


def run_fusion(method: MethodSpec, claims: ClaimSet, config: RunConfig,
               input_trust: dict | None = None,
               known_copiers: dict[tuple[str, str], float] | None = None,
               detect_copying: bool = True) -> FusionResult:
    """Resolve conflicts in ``claims`` with the given method.

    Without ``input_trust`` the method iterates vote and trust updates to a
    fixed point (round cap exceeded flags the result non-converged, it does
    not raise). With ``input_trust`` a single deterministic vote pass runs
    under the fixed trust. The vote baseline never iterates.
    """
    if method.name == "accucopy":
        from .copydetect import run_accucopy
        return run_accucopy(claims, config, input_trust=input_trust,
                            known_copiers=known_copiers,
                            detect=detect_copying,
                            per_attribute=method.per_attribute_trust)
    engine = FusionEngine(claims, config.fusion, method.per_attribute_trust)
    t0 = time.perf_counter()
    bayes = method.name in ("truthfinder", "accupr", "popaccu", "accusim",
                            "accuformat")

    if method.name == "vote":
        votes = engine.cand_counts.copy()
        conf = votes / engine.item_nprov[engine.cand_item]
        return engine.build_result(method, votes, np.ones(engine.n_vsrc),
                                   rounds=0, converged=True,
                                   wall_time=time.perf_counter() - t0,
                                   deltas=[], confidence=conf)

    if input_trust is not None:
        trust = engine.trust_array(input_trust)
        votes = engine.votes_once(method.name, trust)
        conf = None
        if bayes:
            conf = engine.posteriors(votes,
                                     observed_only=method.name == "popaccu")
        return engine.build_result(method, votes, trust, rounds=1,
                                   converged=True,
                                   wall_time=time.perf_counter() - t0,
                                   deltas=[], confidence=conf)

    state = engine.init_state(method.name)
    deltas: list[float] = []
    converged = False
    while state.round < config.fusion.round_cap:
        state, delta = engine.step(method.name, state)
        deltas.append(delta)
        if delta < config.fusion.epsilon:
            converged = True
            break
    conf = None
    if bayes:
        conf = engine.posteriors(state.votes,
                                 observed_only=method.name == "popaccu")
    return engine.build_result(method, state.votes, state.trust,
                               rounds=state.round, converged=converged,
                               wall_time=time.perf_counter() - t0,
                               deltas=deltas, confidence=conf)


def accu_posteriors(claims: ClaimSet, trust: dict, config: RunConfig,
                    variant: str = "accupr",
                    per_attribute: bool = False,
                    ) -> dict[DataItem, dict[Value, float]]:
    """Per-item truth posteriors for the Bayesian vote rules under fixed
    trust (one vote pass)."""
    engine = FusionEngine(claims, config.fusion, per_attribute)
    t = engine.trust_array(trust)
    votes = engine.votes_once(variant, t)
    post = engine.posteriors(votes, observed_only=variant == "popaccu")
    out: dict[DataItem, dict[Value, float]] = {}
    for c in range(engine.n_cands):
        item = engine.items[int(engine.cand_item[c])]
        out.setdefault(item, {})[engine.cand_values[c]] = float(post[c])
    return out


# -- sampled trustworthiness ---------------------------------------------


def sample_trust(method: MethodSpec, claims: ClaimSet, gold: GoldStandard,
                 config: RunConfig) -> dict:
    """Each method's trust formula evaluated once with the gold standard
    substituted for the selected values.

    Accuracy-style methods sample the gold accuracy (clamped away from 0
    and 1); link-style methods sample one trust update over binary gold
    votes; the cosine method samples the cosine against the gold selection
    vector. Sources with no gold overlap fall back to the method's default
    initialization. Per-attribute variants sample per (source, attribute),
    falling back to the source's global sample when an attribute has fewer
    gold observations than the configured minimum.
    """
    if not gold.entries:
        raise FusionError("sample_trust requires a non-empty gold standard")
    global_map = _sample_global(method.name, claims, gold, config)
    if not method.per_attribute_trust:
        return global_map
    out: dict = {}
    provided_pairs = {(c.source, c.item.attribute) for c in claims.claims}
    attrs = sorted({it.attribute for it in claims.items})
    for attr in attrs:
        sub_gold_entries = {it: v for it, v in gold.entries.items()
                            if it.attribute == attr}
        sub_gold = GoldStandard(sub_gold_entries)
        per_attr = (_sample_global(method.name, claims, sub_gold, config)
                    if sub_gold_entries else {})
        for source in claims.sources:
            if (source, attr) not in provided_pairs:
                continue
            covered = sum(
                1 for c in claims.by_source[source]
                if c.item.attribute == attr and c.item in gold.entries)
            if covered >= config.fusion.attr_min_gold and source in per_attr:
                out[(source, attr)] = per_attr[source]
            else:
                out[(source, attr)] = global_map[source]
    return out


_ACCURACY_SAMPLED = ("truthfinder", "accupr", "popaccu", "accusim",
                     "accuformat", "accucopy")


def _sample_global(name: str, claims: ClaimSet, gold: GoldStandard,
                   config: RunConfig) -> dict[str, float]:
    cfg = config.fusion
    taus = tolerances(claims)
    if name == "vote":
        return {s: 1.0 for s in claims.sources}
    if name in _ACCURACY_SAMPLED:
        out = {}
        for s in claims.sources:
            acc = source_accuracy(s, claims, gold, taus)
            if acc is None:
                acc = cfg.init_trust_bayes
            out[s] = float(np.clip(acc, cfg.trust_clamp,
                                   1.0 - cfg.trust_clamp))
        return out

    # Link- and agreement-style methods: one trust update over binary
    # gold votes, restricted to gold-covered claims. Rows carry
    # (candidate key, own value correct, #candidates, #correct candidates).
    per_source: dict[str, list[tuple[tuple, bool, int, int]]] = {
        s: [] for s in claims.sources}
    for item in sorted(gold.entries, key=DataItem.sort_key):
        if item not in claims.by_item:
            continue
        truth = gold.entries[item]
        attr = claims.attribute_of(item)
        tau = taus[item.attribute]
        buckets = bucketize(item, claims, tau)
        n_correct = sum(1 for b in buckets
                        if values_match(b.center, truth, attr, tau))
        for bi, b in enumerate(buckets):
            ok = values_match(b.center, truth, attr, tau)
            for s in b.providers:
                per_source[s].append(((item, bi), ok, len(buckets),
                                      n_correct))

    if name in ("hub", "avglog", "invest", "pooledinvest"):
        raw: dict[str, float] = {}
        if name in ("invest", "pooledinvest"):
            # Uniform prior trust: investment shares depend only on the
            # numbers of provided values.
            nv = {s: max(len(per_source[s]), 1) for s in claims.sources}
            inv_sum: dict[tuple, float] = {}
            for s, rows in per_source.items():
                for cand, _, _, _ in rows:
                    inv_sum[cand] = inv_sum.get(cand, 0.0) + 1.0 / nv[s]
        for s, rows in per_source.items():
            if not rows:
                raw[s] = 0.0
                continue
            correct = sum(1 for _, ok, _, _ in rows if ok)
            if name == "hub":
                raw[s] = float(correct)
            elif name == "avglog":
                raw[s] = correct / len(rows) * math.log1p(len(rows))
            else:
                raw[s] = sum((1.0 / nv[s]) / inv_sum[cand]
                             for cand, ok, _, _ in rows if ok)
        if name == "pooledinvest":
            return raw
        top = max(raw.values(), default=0.0)
        return {s: (v / top if top > 0 else 0.0) for s, v in raw.items()}

    if name == "cosine":
        out = {}
        for s, rows in per_source.items():
            if not rows:
                out[s] = 0.0
                continue
            num = sum((1.0 if ok else -1.0) * 2
                      - _gold_vector_sum(nc, n_correct)
                      for _, ok, nc, n_correct in rows)
            den = sum(nc for _, _, nc, _ in rows)
            out[s] = num / den if den else 0.0
        return out

    if name in ("2-estimates", "3-estimates"):
        out = {}
        for s, rows in per_source.items():
            if not rows:
                out[s] = 1.0
                continue
            num = 0.0
            den = 0
            for _, ok, nc, n_correct in rows:
                own = 1.0 if ok else 0.0
                num += 2.0 * own + nc - 1.0 - n_correct
                den += nc
            out[s] = num / den if den else 1.0
        return out

    raise FusionError(f"no sampling rule for method {name!r}")


def _gold_vector_sum(n_candidates: int, n_correct: int) -> float:
    """Sum of the gold selection vector (+1 matching, -1 otherwise) over an
    item's candidates."""
    return 2.0 * n_correct - n_candidates

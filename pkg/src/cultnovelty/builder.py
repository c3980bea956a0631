"""Dataset construction: country detection, dish matching, splits, clustering.

Reproduces the corpus-construction protocol on a user-supplied recipe
corpus: detect a country in each title, match dish aliases, split each
(dish, origin) into a knowledge set and variations with a seeded 30%
same-country hold-out, and cluster countries by shared popular
ingredients under greedy modularity maximization.
"""

from __future__ import annotations

import json
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .corpus import Document
from .distances import Registry
from .errors import EmptyCorpus, IneligibleDish, ParseError

DEFAULT_HOLDOUT = 0.3
DEFAULT_TOP_FRACTION = 0.2
MIN_KNOWLEDGE = 2
MIN_VARIATIONS = 2


@dataclass(frozen=True)
class DishSpec:
    """One curated dish: canonical name, local aliases, and exclusions."""

    canonical_name: str
    aliases: frozenset[str]
    excluded_patterns: frozenset[str] = frozenset()
    country_overrides: Optional[Mapping[str, str]] = None  # title pattern -> forced ISO

    def __post_init__(self) -> None:
        if not self.aliases:
            raise ValueError(f"dish {self.canonical_name!r} has no aliases")
        if self.country_overrides is None:
            object.__setattr__(self, "country_overrides", {})

    @classmethod
    def create(
        cls,
        canonical_name: str,
        aliases: Iterable[str] = (),
        excluded_patterns: Iterable[str] = (),
        country_overrides: Optional[Mapping[str, str]] = None,
    ) -> "DishSpec":
        alias_set = frozenset(a.lower() for a in aliases) | {canonical_name.lower()}
        return cls(
            canonical_name=canonical_name,
            aliases=alias_set,
            excluded_patterns=frozenset(p.lower() for p in excluded_patterns),
            country_overrides=dict(country_overrides or {}),
        )


@dataclass(frozen=True)
class CorpusSplit:
    """Knowledge/variation document split for one (dish, origin) pair."""

    knowledge: tuple[Document, ...]
    variations: tuple[Document, ...]
    holdout_seed: int


@dataclass(frozen=True)
class CountryCluster:
    """One community of the ingredient-similarity partition.

    modularity is the partition-level score, repeated on every cluster.
    """

    members: frozenset[str]
    modularity: float


def load_dish_specs(path: Union[str, Path]) -> list[DishSpec]:
    """Load a dish-spec JSON file: a list of {name, aliases, excluded, country_overrides}."""
    path = Path(path)
    try:
        entries = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(entries, list):
        raise ParseError(f"{path}: expected a JSON array of dish specs")
    specs = []
    for i, entry in enumerate(entries):
        try:
            specs.append(
                DishSpec.create(
                    canonical_name=str(entry["name"]),
                    aliases=[str(a) for a in entry.get("aliases", [])],
                    excluded_patterns=[str(p) for p in entry.get("excluded", [])],
                    country_overrides={
                        str(k): str(v).upper()
                        for k, v in entry.get("country_overrides", {}).items()
                    },
                )
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: dish entry {i}: {exc}") from exc
    return specs


@lru_cache(maxsize=8192)
def _word_pattern(surface: str, plural: bool) -> re.Pattern:
    escaped = re.escape(surface.lower())
    suffix = r"(?:e?s)?" if plural else ""
    return re.compile(rf"(?<!\w){escaped}{suffix}(?!\w)")


def _find_word(surface: str, text_lower: str, plural: bool = False) -> Optional[re.Match]:
    return _word_pattern(surface, plural).search(text_lower)


def detect_country(title: str, registry: Registry) -> Optional[str]:
    """Find the country a title names, by country name or demonym.

    Whole-word, case-insensitive matching; the longest matched surface
    wins, and exact ties resolve to the lexicographically smallest ISO.
    Returns None when no surface matches.
    """
    title_lower = title.lower()
    best: Optional[tuple[int, str]] = None  # (-match_len, iso), minimized
    for record in registry.records():
        for surface in record.surfaces:
            m = _find_word(surface, title_lower)
            if m is None:
                continue
            key = (-(m.end() - m.start()), record.iso)
            if best is None or key < best:
                best = key
    return best[1] if best else None


def match_dish(title: str, dish: DishSpec) -> bool:
    """True when an alias occurs as a whole word and no exclusion does.

    Aliases also match their simple plural (alias + "s"/"es").
    """
    title_lower = title.lower()
    for pattern in dish.excluded_patterns:
        if _find_word(pattern, title_lower, plural=True):
            return False
    return any(_find_word(alias, title_lower, plural=True) for alias in dish.aliases)


def forced_country(title: str, dish: DishSpec) -> Optional[str]:
    """Per-dish misattribution override: title pattern forces a country."""
    title_lower = title.lower()
    for pattern in sorted(dish.country_overrides):
        if _find_word(pattern, title_lower):
            return dish.country_overrides[pattern]
    return None


def matched_documents(corpus: Iterable[Document], dish: DishSpec) -> list[Document]:
    """Dish-matched documents with effective country and product stamped on.

    Documents whose country stays UNKNOWN are excluded; the per-dish
    country overrides are applied here, after generic detection.
    """
    out = []
    for doc in sorted(corpus, key=lambda d: d.id):
        if not match_dish(doc.title, dish):
            continue
        country = forced_country(doc.title, dish) or doc.country
        if country == "UNKNOWN":
            continue
        out.append(replace(doc, country=country, product=dish.canonical_name))
    return out


def build_split(
    corpus: Iterable[Document],
    dish: DishSpec,
    origin: str,
    holdout_fraction: float = DEFAULT_HOLDOUT,
    seed: int = 0,
) -> CorpusSplit:
    """Split one (dish, origin) into knowledge and variation documents.

    Origin-country matches are shuffled with the seeded generator and
    floor(holdout_fraction * n) of them join the variations alongside all
    other-country matches. Raises IneligibleDish when either side ends up
    below its floor of two documents.
    """
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must lie in [0, 1)")
    matched = matched_documents(corpus, dish)
    origin_docs = [d for d in matched if d.country == origin]
    foreign_docs = [d for d in matched if d.country != origin]

    rng = random.Random(seed)
    shuffled = list(origin_docs)
    rng.shuffle(shuffled)
    n_holdout = math.floor(holdout_fraction * len(origin_docs))
    held_out = shuffled[:n_holdout]
    knowledge = shuffled[n_holdout:]
    variations = held_out + foreign_docs

    if len(knowledge) < MIN_KNOWLEDGE or len(variations) < MIN_VARIATIONS:
        raise IneligibleDish(
            f"{dish.canonical_name}/{origin}: knowledge={len(knowledge)}, "
            f"variations={len(variations)} below floors "
            f"({MIN_KNOWLEDGE}/{MIN_VARIATIONS})"
        )
    return CorpusSplit(
        knowledge=tuple(sorted(knowledge, key=lambda d: d.id)),
        variations=tuple(sorted(variations, key=lambda d: d.id)),
        holdout_seed=seed,
    )


def top_ingredients(docs: Sequence[Document], top_fraction: float = DEFAULT_TOP_FRACTION) -> frozenset[str]:
    """The most frequent ingredients across docs, ties at the cutoff included.

    Keeps max(1, round(top_fraction * distinct)) ranks; every ingredient
    whose document frequency reaches the cutoff count survives.
    """
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(doc.ingredients)
    if not counts:
        return frozenset()
    k = max(1, round(top_fraction * len(counts)))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    cutoff = ranked[k - 1][1]
    return frozenset(name for name, c in counts.items() if c >= cutoff)


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def modularity(
    partition: Sequence[frozenset[str]],
    edges: Mapping[tuple[str, str], float],
) -> float:
    """Newman modularity of a node partition under weighted edges.

    Q = sum over communities of [ internal/(2m) - (degree/(2m))^2 ];
    an edgeless graph has Q = 0 by convention.
    """
    two_m = 2.0 * math.fsum(edges.values())
    if two_m == 0.0:
        return 0.0
    degree: dict[str, float] = {}
    for (a, b), w in edges.items():
        degree[a] = degree.get(a, 0.0) + w
        degree[b] = degree.get(b, 0.0) + w
    community_of: dict[str, int] = {}
    for idx, members in enumerate(partition):
        for node in members:
            community_of[node] = idx
    internal = [0.0] * len(partition)
    deg_sum = [0.0] * len(partition)
    for (a, b), w in edges.items():
        if community_of[a] == community_of[b]:
            internal[community_of[a]] += 2.0 * w
    for node, deg in degree.items():
        if node in community_of:
            deg_sum[community_of[node]] += deg
    return math.fsum(
        internal[i] / two_m - (deg_sum[i] / two_m) ** 2 for i in range(len(partition))
    )


def greedy_modularity_partition(
    nodes: Sequence[str],
    edges: Mapping[tuple[str, str], float],
) -> list[frozenset[str]]:
    """Agglomerative modularity maximization with deterministic merge order.

    Starts from singletons and repeatedly merges the community pair with
    the largest positive modularity gain; gain ties break on the
    lexicographically smallest pair of community representatives.
    """
    communities: dict[str, set[str]] = {n: {n} for n in sorted(nodes)}
    two_m = 2.0 * math.fsum(edges.values())
    if two_m == 0.0:
        return [frozenset(c) for c in communities.values()]

    degree: dict[str, float] = {n: 0.0 for n in nodes}
    inter: dict[tuple[str, str], float] = {}
    for (a, b), w in edges.items():
        degree[a] += w
        degree[b] += w
        if a != b:
            key = (a, b) if a < b else (b, a)
            inter[key] = inter.get(key, 0.0) + w

    comm_degree = {rep: degree[rep] for rep in communities}

    while len(communities) > 1:
        # sorted iteration + strictly-better updates make gain ties resolve
        # to the lexicographically smallest representative pair
        best_gain = 0.0
        best_pair: Optional[tuple[str, str]] = None
        for (ra, rb), w in sorted(inter.items()):
            gain = 2.0 * (w / two_m - (comm_degree[ra] / two_m) * (comm_degree[rb] / two_m))
            if gain > best_gain + 1e-12:
                best_gain = gain
                best_pair = (ra, rb)
        if best_pair is None:
            break
        ra, rb = best_pair
        # fold rb into ra; the representative stays the smallest member
        communities[ra] |= communities.pop(rb)
        comm_degree[ra] += comm_degree.pop(rb)
        merged_inter: dict[tuple[str, str], float] = {}
        for (x, y), w in inter.items():
            x2 = ra if x == rb else x
            y2 = ra if y == rb else y
            if x2 == y2:
                continue
            key = (x2, y2) if x2 < y2 else (y2, x2)
            merged_inter[key] = merged_inter.get(key, 0.0) + w
        inter = merged_inter

    return [frozenset(c) for _, c in sorted(communities.items())]


def country_clusters(
    corpus: Iterable[Document],
    top_fraction: float = DEFAULT_TOP_FRACTION,
) -> list[CountryCluster]:
    """Cluster countries by Jaccard similarity of their popular ingredients.

    Builds one node per country present in the corpus, weights edges by
    the Jaccard similarity of the countries' top-ingredient sets, and
    partitions with greedy modularity maximization.
    """
    by_country: dict[str, list[Document]] = {}
    for doc in corpus:
        if doc.country != "UNKNOWN":
            by_country.setdefault(doc.country, []).append(doc)
    if not by_country:
        raise EmptyCorpus("no country-annotated documents to cluster")

    kept = {c: top_ingredients(docs, top_fraction) for c, docs in by_country.items()}
    countries = sorted(kept)
    edges: dict[tuple[str, str], float] = {}
    for i, a in enumerate(countries):
        for b in countries[i + 1 :]:
            sim = jaccard(kept[a], kept[b])
            if sim > 0.0:
                edges[(a, b)] = sim

    partition = greedy_modularity_partition(countries, edges)
    score = modularity(partition, edges)
    return [CountryCluster(members=members, modularity=score) for members in partition]

"""Jurisdiction registry: label universes, citation styles, and article canonicalization.

Each supported law keeps its native article numbering. Canonical ids are plain
strings ("7", "4.3"); equality across laws is never implied even when the digit
strings match, so cross-law comparisons always go through ArticleRef.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import OutOfUniverse, RegevalError, UnrecognizedIdentifier

LAWS = ("LGPD", "PDPA", "PIPEDA")

THEMES = ("consent", "notice", "collection", "retention", "security", "transfer")

# Per-law anchor article for each shared compliance theme.
THEME_ANCHORS: dict[str, dict[str, str]] = {
    "consent": {"LGPD": "7", "PDPA": "13", "PIPEDA": "4.3"},
    "notice": {"LGPD": "6", "PDPA": "20", "PIPEDA": "4.2"},
    "collection": {"LGPD": "6", "PDPA": "18", "PIPEDA": "4.4"},
    "retention": {"LGPD": "15", "PDPA": "25", "PIPEDA": "4.5"},
    "security": {"LGPD": "46", "PDPA": "24", "PIPEDA": "4.7"},
    "transfer": {"LGPD": "33", "PDPA": "26", "PIPEDA": "4.1"},
}


@dataclass(frozen=True, order=True)
class ArticleRef:
    """A native article identifier scoped to one law."""

    law: str
    article: str

    def __str__(self) -> str:
        return f"{self.law}:{self.article}"


@dataclass(frozen=True)
class Jurisdiction:
    """One law's label universe plus the lexical rules for its identifiers."""

    code: str
    universe: tuple[str, ...]
    citation_style: str
    prefixes: tuple[str, ...]
    id_pattern: str
    allow_bare_ids: bool

    def __post_init__(self) -> None:
        if not self.universe:
            raise RegevalError(f"{self.code}: label universe must be non-empty")
        if len(set(self.universe)) != len(self.universe):
            raise RegevalError(f"{self.code}: label universe contains duplicates")

    def universe_index(self, article: str) -> int:
        """Position of an article in the stable universe order."""
        try:
            return self.universe.index(article)
        except ValueError:
            raise OutOfUniverse(f"{self.code}: article {article!r} not in universe") from None

    def contains(self, article: str) -> bool:
        return article in self.universe

    def render(self, article: str) -> str:
        """Render a canonical id in this law's citation style."""
        return self.citation_style.format(id=article)

    def sort_articles(self, articles: Iterable[str]) -> list[str]:
        return sorted(articles, key=self.universe_index)


def _canonical_token(token: str, id_pattern: str) -> str:
    """Strip leading zeros from the numeric components of an id token."""
    if re.fullmatch(r"\d+", token):
        return str(int(token))
    if re.fullmatch(r"\d+\.\d+", token):
        major, minor = token.split(".")
        return f"{int(major)}.{int(minor)}"
    return token


class JurisdictionRegistry:
    """All configured jurisdictions, loaded from a config file or bundled defaults."""

    def __init__(self, jurisdictions: Mapping[str, Jurisdiction]):
        self._by_code = dict(jurisdictions)
        self._surface_re: dict[str, re.Pattern[str]] = {}

    @classmethod
    def from_config(cls, config: Mapping[str, Mapping]) -> "JurisdictionRegistry":
        laws = {}
        for code, entry in config.items():
            universe_cfg = entry["universe"]
            if "ids" in universe_cfg:
                universe = tuple(str(i) for i in universe_cfg["ids"])
            elif "range" in universe_cfg:
                lo, hi = universe_cfg["range"]
                universe = tuple(str(i) for i in range(int(lo), int(hi) + 1))
            else:
                raise RegevalError(f"{code}: universe needs 'ids' or 'range'")
            laws[code] = Jurisdiction(
                code=code,
                universe=universe,
                citation_style=entry["citation_style"],
                prefixes=tuple(entry.get("prefixes", ())),
                id_pattern=entry["id_pattern"],
                allow_bare_ids=bool(entry.get("allow_bare_ids", False)),
            )
        return cls(laws)

    @classmethod
    def from_file(cls, path: str | Path) -> "JurisdictionRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_config(json.load(fh))

    @classmethod
    def default(cls) -> "JurisdictionRegistry":
        data = resources.files("regeval.data").joinpath("jurisdictions.json").read_text("utf-8")
        return cls.from_config(json.loads(data))

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(self._by_code)

    def get(self, code: str) -> Jurisdiction:
        try:
            return self._by_code[code]
        except KeyError:
            raise RegevalError(f"unknown jurisdiction: {code!r}") from None

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def to_config(self) -> dict:
        return {
            code: {
                "citation_style": jur.citation_style,
                "universe": {"ids": list(jur.universe)},
                "prefixes": list(jur.prefixes),
                "id_pattern": jur.id_pattern,
                "allow_bare_ids": jur.allow_bare_ids,
            }
            for code, jur in self._by_code.items()
        }

    def _surface_form(self, jur: Jurisdiction) -> re.Pattern[str]:
        pattern = self._surface_re.get(jur.code)
        if pattern is None:
            words = sorted((p for p in jur.prefixes if p != "§"), key=len, reverse=True)
            prefix = rf"(?:§|(?<![A-Za-z])(?:{'|'.join(map(re.escape, words))}))"
            pattern = re.compile(
                rf"^[\s\(\[\"']*(?:{prefix}\s*\.?)?\s*({jur.id_pattern})[\s\)\]\"'.,;:!?]*$",
                re.IGNORECASE,
            )
            self._surface_re[jur.code] = pattern
        return pattern

    def canonicalize_article(self, raw: str, law: str) -> ArticleRef:
        """Resolve one identifier surface form to its canonical ArticleRef.

        Raises UnrecognizedIdentifier when the text is not an identifier at all
        and OutOfUniverse when it parses but names an unknown provision.
        """
        jur = self.get(law)
        if not raw or not raw.strip():
            raise UnrecognizedIdentifier(f"{law}: empty identifier text")
        match = self._surface_form(jur).match(raw)
        if match is None:
            raise UnrecognizedIdentifier(f"{law}: no identifier in {raw!r}")
        canonical = _canonical_token(match.group(1), jur.id_pattern)
        if not jur.contains(canonical):
            raise OutOfUniverse(f"{law}: article {canonical!r} not in universe")
        return ArticleRef(law, canonical)


def theme_anchor(theme: str, law: str, registry: JurisdictionRegistry | None = None) -> ArticleRef:
    """Fixed anchor article for a compliance theme under one law."""
    key = theme.lower()
    if key not in THEME_ANCHORS:
        raise RegevalError(f"unknown theme: {theme!r}")
    anchors = THEME_ANCHORS[key]
    if law not in anchors:
        raise RegevalError(f"unknown jurisdiction: {law!r}")
    if registry is not None and not registry.get(law).contains(anchors[law]):
        raise OutOfUniverse(f"{law}: anchor {anchors[law]!r} missing from configured universe")
    return ArticleRef(law, anchors[law])

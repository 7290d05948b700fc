"""Provider interfaces and deterministic mocks for every external capability.

The engine talks to text generation, image generation, speech, transcription,
knowledge lookup, weather and travel-time estimation only through the small
classes here. The mock implementations are pure functions of their fixtures,
the configured seed and the request, so whole journeys replay byte-for-byte.
Live HTTP adapters exist behind a config switch and are never needed by tests.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import httpx

from .geo import GeoPoint, Route


class ProviderKind(str, Enum):
    TEXT = "text"
    IMAGE = "image"
    SPEECH = "speech"
    TRANSCRIBE = "transcribe"
    KNOWLEDGE = "knowledge"
    WEATHER = "weather"
    ETA = "eta"


class Weather(str, Enum):
    CLEAR = "clear"
    RAIN = "rain"
    SNOW = "snow"
    CLOUDY = "cloudy"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ProviderRequest:
    kind: ProviderKind
    payload: dict
    request_id: str


@dataclass(frozen=True)
class ProviderResult:
    request_id: str
    payload: dict
    latency_ms: float = 0.0


@dataclass(frozen=True)
class Fact:
    fact_id: str
    text: str
    source_id: str


@dataclass(frozen=True)
class TextResult:
    text: str
    options: tuple[tuple[str, str], ...] = ()
    used_fallback: bool = False


class ProviderError(RuntimeError):
    """A provider call failed; carries the request so callers can retry."""

    def __init__(self, message: str, request: ProviderRequest | None = None):
        super().__init__(message)
        self.request = request


def stable_hash(*parts) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int(hashlib.sha256(joined.encode("utf-8")).hexdigest()[:12], 16)


def _asset_text(name: str) -> str:
    return resources.files("scenic.assets").joinpath(name).read_text(encoding="utf-8")


def _asset_json(name: str) -> dict:
    return json.loads(_asset_text(name))


@dataclass(frozen=True)
class TemplateVariant:
    text: str
    options: tuple[tuple[str, str], ...] = ()


class TemplateLibrary:
    """Templates keyed by (role, key), parsed from the plain-text asset."""

    def __init__(self, text: str | None = None):
        self._variants: dict[tuple[str, str], list[TemplateVariant]] = {}
        self.parse(text if text is not None else _asset_text("templates.txt"))

    def parse(self, text: str) -> None:
        section: tuple[str, str] | None = None
        lines: list[str] = []
        options: list[tuple[str, str]] = []

        def flush():
            if section is None:
                return
            body = " ".join(l.strip() for l in lines if l.strip())
            if body or options:
                self._variants.setdefault(section, []).append(
                    TemplateVariant(text=body, options=tuple(options))
                )

        for raw in text.splitlines():
            line = raw.rstrip()
            if line.startswith("#"):
                continue
            header = re.fullmatch(r"\[([a-z_]+)\.([a-z_]+)\]", line.strip())
            if header:
                flush()
                section = (header.group(1), header.group(2))
                lines = []
                options = []
                continue
            opt = re.fullmatch(r"([A-C]): (.+)", line.strip())
            if opt and section is not None:
                options.append((opt.group(1), opt.group(2)))
                continue
            lines.append(line)
        flush()

    def add(self, role: str, key: str, text: str, options=()) -> None:
        self._variants.setdefault((role, key), []).append(
            TemplateVariant(text=text, options=tuple(options))
        )

    def variants(self, role: str, key: str) -> list[TemplateVariant]:
        return list(self._variants.get((role, key), []))

    def roles(self) -> set[str]:
        return {role for role, _ in self._variants}


class _RequestIds:
    """Monotonic per-session request id source (deterministic call order)."""

    def __init__(self):
        self._next = 0

    def take(self, kind: ProviderKind) -> str:
        self._next += 1
        return f"{kind.value}-{self._next}"


class MockTextProvider:
    """Template expansion, deterministic in (template set, seed, request)."""

    def __init__(self, templates: TemplateLibrary, seed: int, ids: _RequestIds | None = None):
        self.templates = templates
        self.seed = seed
        self._ids = ids or _RequestIds()
        self.features = _asset_json("features.json")

    def feature_for(self, type_tag: str) -> str:
        return self.features["features"].get(type_tag, self.features["fallback"])

    def generate(self, role: str, key: str, fields: dict, salt: str = "") -> TextResult:
        request = ProviderRequest(
            kind=ProviderKind.TEXT,
            payload={"role": role, "key": key, "fields": dict(fields), "salt": salt,
                     "seed": self.seed},
            request_id=self._ids.take(ProviderKind.TEXT),
        )
        if role not in self.templates.roles():
            raise ProviderError(f"unknown text role {role!r}", request)
        used_fallback = False
        variants = self.templates.variants(role, key)
        if not variants:
            variants = self.templates.variants(role, "generic")
            used_fallback = True
        if not variants:
            variants = self.templates.variants(role, "default")
            used_fallback = key not in ("default", "")
        if not variants:
            raise ProviderError(f"no template for role {role!r} key {key!r}", request)
        pick = variants[stable_hash(self.seed, role, key, salt) % len(variants)]
        try:
            text = pick.text.format(**fields)
            options = tuple((label, opt.format(**fields)) for label, opt in pick.options)
        except (KeyError, IndexError) as exc:
            raise ProviderError(f"template placeholder missing: {exc}", request) from exc
        return TextResult(text=text, options=options, used_fallback=used_fallback)


class MockKnowledgeProvider:
    """Facts from the fixture gazetteer: by POI id, else by type, else empty."""

    def __init__(self, gazetteer: dict | None = None, ids: _RequestIds | None = None):
        data = gazetteer if gazetteer is not None else _asset_json("gazetteer.json")
        self._by_id = {
            poi_id: [Fact(**f) for f in facts] for poi_id, facts in data.get("pois", {}).items()
        }
        self._by_type = {
            tag: [Fact(**f) for f in facts] for tag, facts in data.get("types", {}).items()
        }
        self._ids = ids or _RequestIds()

    def facts(self, poi_id: str, type_tag: str = "") -> list[Fact]:
        self._ids.take(ProviderKind.KNOWLEDGE)
        if poi_id in self._by_id:
            return list(self._by_id[poi_id])
        if type_tag in self._by_type:
            return list(self._by_type[type_tag])
        return []


class MockImageProvider:
    """Content-addressed placeholder cards; the ref alone can be re-rendered."""

    def __init__(self, seed: int, ids: _RequestIds | None = None):
        self.seed = seed
        self._ids = ids or _RequestIds()

    def image(self, spec: str) -> str:
        self._ids.take(ProviderKind.IMAGE)
        slug = re.sub(r"[^a-z0-9]+", "-", spec.lower()).strip("-")[:48] or "card"
        return f"mockimg/{slug}-{stable_hash(self.seed, spec) % 0xFFFF:04x}.svg"

    @staticmethod
    def render_card(ref: str) -> str:
        """Procedurally draw the SVG card named by a mock image ref."""
        name = Path(ref).stem
        words = [w for w in name.split("-") if w]
        title = " ".join(words[:6]).title() or "Card"
        hue = stable_hash(ref) % 360
        return (
            '<svg xmlns="http://www.w3.org/2000/svg" width="480" height="320">'
            f'<rect width="480" height="320" rx="24" fill="hsl({hue}, 70%, 85%)"/>'
            f'<circle cx="240" cy="120" r="64" fill="hsl({(hue + 120) % 360}, 60%, 70%)"/>'
            f'<text x="240" y="230" font-size="28" text-anchor="middle" '
            f'font-family="sans-serif" fill="#333">{title}</text>'
            "</svg>"
        )


class MockSpeechProvider:
    def __init__(self, ids: _RequestIds | None = None):
        self._ids = ids or _RequestIds()

    def speak(self, text: str) -> str:
        self._ids.take(ProviderKind.SPEECH)
        return f"mockaudio/{stable_hash(text):012x}.wav"


class MockTranscribeProvider:
    def __init__(self, ids: _RequestIds | None = None):
        self._ids = ids or _RequestIds()

    def transcribe(self, audio_ref: str) -> str:
        self._ids.take(ProviderKind.TRANSCRIBE)
        return f"(transcribed audio {Path(audio_ref).stem})"


class MockWeatherProvider:
    """Seed-derived weather, stable for a whole session."""

    _REPORTABLE = (Weather.CLEAR, Weather.RAIN, Weather.SNOW, Weather.CLOUDY)

    def __init__(self, seed: int, fail: bool = False, ids: _RequestIds | None = None):
        self.seed = seed
        self.fail = fail
        self._ids = ids or _RequestIds()

    def weather(self, point: GeoPoint) -> Weather:
        self._ids.take(ProviderKind.WEATHER)
        if self.fail:
            return Weather.UNKNOWN
        idx = stable_hash(self.seed, round(point.lat, 2), round(point.lon, 2)) % len(
            self._REPORTABLE
        )
        return self._REPORTABLE[idx]


class MockEtaProvider:
    def __init__(self, ids: _RequestIds | None = None):
        self._ids = ids or _RequestIds()

    def eta_seconds(self, route: Route, cruise_speed: float, stop_seconds: float = 0.0) -> float:
        self._ids.take(ProviderKind.ETA)
        if route.length == 0.0:
            return 0.0
        return route.length / cruise_speed + stop_seconds


@dataclass
class ProviderHub:
    """One session's bundle of providers, sharing a request id sequence."""

    text: MockTextProvider
    knowledge: MockKnowledgeProvider
    image: MockImageProvider
    speech: MockSpeechProvider
    transcribe: MockTranscribeProvider
    weather: MockWeatherProvider
    eta: MockEtaProvider
    seed: int = 0


def mock_hub(seed: int, templates: TemplateLibrary | None = None,
             gazetteer: dict | None = None) -> ProviderHub:
    ids = _RequestIds()
    lib = templates or TemplateLibrary()
    return ProviderHub(
        text=MockTextProvider(lib, seed, ids),
        knowledge=MockKnowledgeProvider(gazetteer, ids),
        image=MockImageProvider(seed, ids),
        speech=MockSpeechProvider(ids),
        transcribe=MockTranscribeProvider(ids),
        weather=MockWeatherProvider(seed, ids=ids),
        eta=MockEtaProvider(ids),
        seed=seed,
    )


class LiveHttpProvider:
    """Thin JSON-over-HTTPS adapter: POST {base_url}/{kind}, retry once.

    Only wired in when the provider mode is 'live'; mocks stay the default so
    nothing in the test suite needs network access or vendor keys.
    """

    def __init__(self, base_url: str, timeout: float = 10.0,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)
        self._ids = _RequestIds()

    def call(self, kind: ProviderKind, payload: dict) -> ProviderResult:
        request = ProviderRequest(kind=kind, payload=payload, request_id=self._ids.take(kind))
        last_error: Exception | None = None
        for _ in range(2):  # one retry
            try:
                response = self._client.post(f"{self.base_url}/{kind.value}", json=payload)
                response.raise_for_status()
                body = response.json()
                try:
                    latency_ms = response.elapsed.total_seconds() * 1000.0
                except RuntimeError:
                    latency_ms = 0.0
                return ProviderResult(
                    request_id=request.request_id, payload=body, latency_ms=latency_ms
                )
            except httpx.HTTPError as exc:
                last_error = exc
        raise ProviderError(f"live provider {kind.value} failed: {last_error}", request)

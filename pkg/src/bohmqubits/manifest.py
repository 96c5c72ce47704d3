"""Run manifests: canonicalized configs and their digests.

Every artifact records the digest of the canonicalized run configuration, so
a result can be traced back to (and regenerated from) the exact parameters
that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from . import __version__
from .errors import ConfigError


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace variance.

    Floats pass through json's repr-based formatting, which round-trips
    exactly for doubles.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def config_digest(config: dict) -> str:
    try:
        text = canonical_json(config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config is not canonicalizable: {exc}") from exc
    return hashlib.sha256(text.encode()).hexdigest()


def spec_digest_bytes(spec_dict: dict) -> bytes:
    """32-byte digest of a spec dictionary for binary file headers."""
    return hashlib.sha256(canonical_json(spec_dict).encode()).digest()


@dataclass
class RunManifest:
    """Everything needed to regenerate a run's artifacts."""

    spec: dict
    integrator: dict
    analysis: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    config_hash: str = ""

    @classmethod
    def from_config(cls, config: dict) -> "RunManifest":
        m = cls(
            spec=dict(config.get("spec", {})),
            integrator=dict(config.get("integrator", {})),
            analysis=dict(config.get("analysis", {})),
            seeds=list(config.get("seeds", [])),
            outputs=list(config.get("outputs", [])),
        )
        m.config_hash = m.compute_hash()
        return m

    def compute_hash(self) -> str:
        body = asdict(self)
        body.pop("config_hash")
        return config_digest(body)

    def verify(self) -> bool:
        return self.config_hash == self.compute_hash()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

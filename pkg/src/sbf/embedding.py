"""Text-embedding backends, cosine similarity, and the embedding cache.

The metric core only ever calls `embed_batch`; where vectors come from is a
backend concern. Three kinds are supported:

  local_model    sentence-transformers model executed in-process
  remote_service HTTP service speaking the POST /embed protocol
  fixture        explicit text -> vector table from a JSON file (test double)

Vectors are unit-normalized at ingestion by default so every downstream
comparison is a plain dot product.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BackendConfigError,
    BackendContractError,
    DegenerateVectorError,
    DimensionMismatchError,
    FixtureLookupError,
    TransportError,
)

DEFAULT_MODEL_ID = "all-MiniLM-L6-v2"

BACKEND_KINDS = ("local_model", "remote_service", "fixture")


@dataclass(frozen=True)
class BackendConfig:
    """Which backend to use and how to reach it.

    Exactly the fields required by `kind` may be set: endpoint for
    remote_service, fixture_path for fixture.
    """

    kind: str
    model_id: str = DEFAULT_MODEL_ID
    endpoint: str | None = None
    fixture_path: str | None = None
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise BackendConfigError(f"unknown backend kind: {self.kind!r}")
        if self.kind == "remote_service" and not self.endpoint:
            raise BackendConfigError("remote_service backend needs an endpoint")
        if self.kind != "remote_service" and self.endpoint:
            raise BackendConfigError(f"{self.kind} backend does not take an endpoint")
        if self.kind == "fixture" and not self.fixture_path:
            raise BackendConfigError("fixture backend needs a fixture_path")
        if self.kind != "fixture" and self.fixture_path:
            raise BackendConfigError(f"{self.kind} backend does not take a fixture_path")

    @property
    def namespace(self) -> str:
        """Cache namespace: distinct backends must never share entries."""
        if self.kind == "fixture":
            digest = hashlib.sha256(str(self.fixture_path).encode()).hexdigest()[:16]
            tail = f"fixture-{digest}"
        elif self.kind == "remote_service":
            digest = hashlib.sha256(str(self.endpoint).encode()).hexdigest()[:16]
            tail = f"{self.model_id}@{digest}"
        else:
            tail = self.model_id
        return f"{tail}.norm" if self.normalize else f"{tail}.raw"


def fixture_backend(path: str | Path, normalize: bool = True) -> BackendConfig:
    return BackendConfig(kind="fixture", fixture_path=str(path), normalize=normalize)


def local_backend(model_id: str = DEFAULT_MODEL_ID, normalize: bool = True) -> BackendConfig:
    return BackendConfig(kind="local_model", model_id=model_id, normalize=normalize)


def remote_backend(
    endpoint: str, model_id: str = DEFAULT_MODEL_ID, normalize: bool = True
) -> BackendConfig:
    return BackendConfig(
        kind="remote_service", model_id=model_id, endpoint=endpoint, normalize=normalize
    )


class EmbeddingCache:
    """Memoizes vectors by (backend namespace, exact text).

    In-memory always; optionally persisted under `disk_dir` as one small
    JSON file per entry, keyed by the SHA-256 of the text. Concurrent
    readers are fine; writes are serialized.
    """

    def __init__(self, disk_dir: str | Path | None = None, enabled: bool = True):
        self.disk_dir = Path(disk_dir) if disk_dir else None
        self.enabled = enabled
        self._mem: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.RLock()

    @staticmethod
    def text_key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def _disk_path(self, namespace: str, text: str) -> Path:
        assert self.disk_dir is not None
        safe_ns = namespace.replace("/", "_")
        return self.disk_dir / safe_ns / f"{self.text_key(text)}.json"

    def get(self, namespace: str, text: str) -> np.ndarray | None:
        if not self.enabled:
            return None
        with self._lock:
            hit = self._mem.get((namespace, text))
        if hit is not None:
            return hit
        if self.disk_dir is not None:
            path = self._disk_path(namespace, text)
            if path.is_file():
                vec = np.asarray(json.loads(path.read_text()), dtype=np.float64)
                vec.flags.writeable = False
                with self._lock:
                    self._mem[(namespace, text)] = vec
                return vec
        return None

    def put(self, namespace: str, text: str, vec: np.ndarray) -> None:
        if not self.enabled:
            return
        vec = np.asarray(vec, dtype=np.float64).copy()
        vec.flags.writeable = False
        with self._lock:
            self._mem[(namespace, text)] = vec
        if self.disk_dir is not None:
            path = self._disk_path(namespace, text)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                json.dump(vec.tolist(), fh)
            os.replace(tmp, path)

    def clear(self) -> None:
        with self._lock:
            self._mem.clear()
        if self.disk_dir is not None and self.disk_dir.is_dir():
            for ns in self.disk_dir.iterdir():
                if ns.is_dir():
                    for f in ns.glob("*.json"):
                        f.unlink()

    def stats(self) -> dict:
        with self._lock:
            mem = len(self._mem)
        disk = 0
        if self.disk_dir is not None and self.disk_dir.is_dir():
            disk = sum(1 for _ in self.disk_dir.glob("*/*.json"))
        return {"memory_entries": mem, "disk_entries": disk,
                "disk_dir": str(self.disk_dir) if self.disk_dir else None}


_default_cache = EmbeddingCache()


def default_cache() -> EmbeddingCache:
    return _default_cache


class _FixtureBackend:
    def __init__(self, path: str):
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise BackendContractError(f"fixture file {path} must map text to vectors")
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in raw.items()}
        dims = {v.shape for v in self.table.values()}
        if len(dims) > 1:
            raise BackendContractError(f"fixture file {path} mixes vector lengths: {dims}")
        self.path = path

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for t in texts:
            if t not in self.table:
                raise FixtureLookupError(t)
            rows.append(self.table[t])
        return np.stack(rows)


class _LocalModelBackend:
    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise BackendConfigError(
                "local_model backend needs the sentence-transformers package "
                "(pip install 'sbf[local]')"
            ) from e
        self.model = SentenceTransformer(model_id)
        self._lock = threading.Lock()

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        with self._lock:
            out = self.model.encode(
                list(texts),
                convert_to_numpy=True,
                normalize_embeddings=False,
                show_progress_bar=False,
            )
        return np.asarray(out, dtype=np.float64)


class _RemoteServiceBackend:
    def __init__(self, endpoint: str, model_id: str, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        import requests

        url = f"{self.endpoint}/embed"
        try:
            resp = requests.post(
                url,
                json={"model": self.model_id, "texts": list(texts)},
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise TransportError(self.endpoint, str(e)) from e
        if resp.status_code != 200:
            try:
                detail = resp.json().get("error", resp.text)
            except ValueError:
                detail = resp.text
            raise TransportError(self.endpoint, f"HTTP {resp.status_code}: {detail}")
        body = resp.json()
        rows = body.get("embeddings")
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise BackendContractError(
                f"service returned {0 if not isinstance(rows, list) else len(rows)} "
                f"rows for {len(texts)} texts"
            )
        mat = np.asarray(rows, dtype=np.float64)
        if mat.ndim != 2 or ("dim" in body and mat.shape[1] != body["dim"]):
            raise BackendContractError("service response rows are not a uniform matrix")
        return mat


_backend_instances: dict[BackendConfig, object] = {}
_backend_lock = threading.Lock()


def get_backend(config: BackendConfig):
    """Instantiate (once per config) the concrete backend."""
    with _backend_lock:
        inst = _backend_instances.get(config)
        if inst is None:
            if config.kind == "fixture":
                inst = _FixtureBackend(config.fixture_path)  # type: ignore[arg-type]
            elif config.kind == "local_model":
                inst = _LocalModelBackend(config.model_id)
            else:
                inst = _RemoteServiceBackend(config.endpoint, config.model_id)  # type: ignore[arg-type]
            _backend_instances[config] = inst
        return inst


def _validate_rows(mat: np.ndarray, texts: Sequence[str]) -> None:
    if mat.ndim != 2 or mat.shape[0] != len(texts):
        raise BackendContractError(
            f"backend returned shape {mat.shape} for {len(texts)} texts"
        )
    if not np.isfinite(mat).all():
        raise BackendContractError("backend returned non-finite values")


def unit_vector(vec: np.ndarray, what: str = "vector") -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DegenerateVectorError(f"zero-norm {what} cannot be normalized")
    return vec / norm


def embed_batch(
    texts: Sequence[str],
    config: BackendConfig,
    cache: EmbeddingCache | None = None,
) -> np.ndarray:
    """Embed texts, one row per text, memoized by (backend, exact text).

    Pass an EmbeddingCache to control caching (EmbeddingCache(enabled=False)
    disables it); the default is a process-wide in-memory cache.
    """
    if len(texts) == 0:
        raise ValueError("embed_batch needs at least one text")
    for t in texts:
        if not t:
            raise ValueError("embed_batch texts must be non-empty")
    if cache is None:
        cache = _default_cache

    ns = config.namespace
    rows: list[np.ndarray | None] = [cache.get(ns, t) for t in texts]
    missing = [i for i, r in enumerate(rows) if r is None]
    if missing:
        batch = [texts[i] for i in missing]
        mat = get_backend(config).embed(batch)
        _validate_rows(mat, batch)
        for j, i in enumerate(missing):
            vec = mat[j]
            if config.normalize:
                vec = unit_vector(vec, what=f"embedding of {texts[i]!r}")
            cache.put(ns, texts[i], vec)
            vec = np.asarray(vec, dtype=np.float64)
            rows[i] = vec

    final = [np.asarray(r, dtype=np.float64) for r in rows]
    dims = {r.shape[0] for r in final}
    if len(dims) > 1:
        raise BackendContractError(f"mixed embedding dims in one batch: {dims}")
    return np.stack(final)


def cos_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; exactly dot(u, v) for unit-normalized inputs."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape[0] != v.shape[0]:
        raise DimensionMismatchError(f"cos_sim dims differ: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cos_sim of a zero-norm vector is undefined")
    return float(np.dot(u, v) / (nu * nv))

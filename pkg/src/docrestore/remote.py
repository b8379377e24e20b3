"""Remote backend adapters speaking the documented wire protocol.

Rasters travel as base64 bytes with explicit width/height/channel
headers inside JSON bodies. Transient transport failures are retried up
to the configured count; timeouts, malformed responses, and contract
violations are reported as distinct error types, and a contract-
violating response is never delivered to callers.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass
from typing import Any

import numpy as np
import requests

from .model import BBox, CharObservation
from .raster import crop


class AdapterError(RuntimeError):
    """Base class for remote backend failures."""


class AdapterTimeoutError(AdapterError):
    """Endpoint unreachable or too slow, after all retries."""


class AdapterProtocolError(AdapterError):
    """Transport-level failure or a response that is not valid JSON."""


class AdapterContractError(AdapterError):
    """Response parsed but violates the backend contract."""


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str
    timeout: float = 10.0
    retries: int = 2
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.retries < 0:
            raise ValueError(f"retries must be >= 0, got {self.retries}")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


def raster_to_wire(image: np.ndarray) -> dict:
    """Encode a 2-D uint8 raster with explicit dimension headers."""
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("expected a 2-D uint8 array")
    return {
        "width": int(image.shape[1]),
        "height": int(image.shape[0]),
        "channels": 1,
        "dtype": "uint8",
        "data": base64.b64encode(np.ascontiguousarray(image).tobytes()).decode("ascii"),
    }


def raster_from_wire(obj: Any) -> np.ndarray:
    """Decode and validate a wire raster; size must match its headers."""
    if not isinstance(obj, dict):
        raise AdapterContractError("raster field must be an object")
    try:
        width = int(obj["width"])
        height = int(obj["height"])
        channels = int(obj.get("channels", 1))
        dtype = obj.get("dtype", "uint8")
        raw = base64.b64decode(obj["data"], validate=True)
    except (KeyError, TypeError, ValueError) as exc:
        raise AdapterContractError(f"malformed raster: {exc}") from exc
    if dtype != "uint8" or channels != 1:
        raise AdapterContractError(
            f"unsupported raster format dtype={dtype} channels={channels}"
        )
    if width < 1 or height < 1 or len(raw) != width * height:
        raise AdapterContractError(
            f"raster data length {len(raw)} does not match {width}x{height}"
        )
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()


def check_candidates(raw: Any, k: int) -> list[tuple[str, float]]:
    """Validate a Top-k candidate list: labels, probabilities in [0,1],
    sorted descending, no longer than k."""
    if not isinstance(raw, list):
        raise AdapterContractError("candidates must be a list")
    if len(raw) > k:
        raise AdapterContractError(f"candidate list longer than k={k}")
    out: list[tuple[str, float]] = []
    prev = None
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise AdapterContractError(f"candidate entry {item!r} is not [label, prob]")
        label, prob = item
        if not isinstance(label, str) or not label:
            raise AdapterContractError(f"candidate label {label!r} invalid")
        if not isinstance(prob, (int, float)) or not (0.0 <= float(prob) <= 1.0):
            raise AdapterContractError(f"probability {prob!r} outside [0,1]")
        if prev is not None and float(prob) > prev + 1e-12:
            raise AdapterContractError("candidate list not sorted descending")
        prev = float(prob)
        out.append((label, float(prob)))
    return out


class _RemoteBase:
    def __init__(self, config: RemoteConfig) -> None:
        self.config = config
        self._gate = threading.Semaphore(config.max_in_flight)
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        last: Exception | None = None
        for _ in range(self.config.retries + 1):
            try:
                with self._gate:
                    resp = self._session.post(
                        url, json=payload, timeout=self.config.timeout
                    )
            except (requests.Timeout, requests.ConnectionError) as exc:
                last = AdapterTimeoutError(f"{url}: {exc}")
                continue
            if resp.status_code >= 500:
                last = AdapterProtocolError(f"{url}: server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise AdapterProtocolError(
                    f"{url}: unexpected status {resp.status_code}"
                )
            try:
                body = resp.json()
            except ValueError as exc:
                raise AdapterProtocolError(f"{url}: response is not JSON") from exc
            if not isinstance(body, dict):
                raise AdapterProtocolError(f"{url}: response body must be an object")
            return body
        assert last is not None
        raise last


class RemoteOcr(_RemoteBase):
    """Recognizer adapter: POST /ocr with the cropped patch raster."""

    def recognize(self, image: np.ndarray, box: BBox, k: int) -> CharObservation:
        patch = crop(image, box)
        body = self._post("/ocr", {"patch": raster_to_wire(patch), "k": k})
        cands = check_candidates(body.get("candidates"), k)
        return CharObservation(box=box, candidates=tuple(cands), source="ocr")


class RemoteLm(_RemoteBase):
    """Language-model adapter: POST /lm with the slot-marked context."""

    def predict(self, context: str, k: int) -> dict[int, list[tuple[str, float]]]:
        body = self._post("/lm", {"context": context, "k": k})
        slots = body.get("slots")
        if not isinstance(slots, dict):
            raise AdapterContractError("response must carry a slots object")
        out: dict[int, list[tuple[str, float]]] = {}
        for key, raw in slots.items():
            try:
                slot = int(key)
            except (TypeError, ValueError) as exc:
                raise AdapterContractError(f"slot key {key!r} is not an integer") from exc
            out[slot] = check_candidates(raw, k)
        return out


class RemoteInpaint(_RemoteBase):
    """Inpainting adapter: POST /inpaint with damaged/content/mask rasters."""

    def restore(
        self, patch: np.ndarray, content: np.ndarray, mask: np.ndarray
    ) -> np.ndarray:
        body = self._post(
            "/inpaint",
            {
                "x_d": raster_to_wire(patch),
                "x_c": raster_to_wire(content),
                "x_m": raster_to_wire(mask),
            },
        )
        result = raster_from_wire(body.get("x_r"))
        if result.shape != patch.shape:
            raise AdapterContractError(
                f"restored raster {result.shape} does not match input {patch.shape}"
            )
        return result

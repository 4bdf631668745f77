"""Canonical byte encodings used for signing, hashing and asset payloads.

Canonical form is JSON with sorted keys and no whitespace. Byte values are
carried as base64 strings. Round trips are byte-identical because key order,
separators and float repr are all fixed by json.dumps.
"""
from __future__ import annotations

import base64
import hashlib
import hmac
import json


def canon(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def b64e(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def b64d(s: str) -> bytes:
    return base64.b64decode(s.encode("ascii"))


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sign(secret: bytes, channel_id: str, method: str, key: str, value: bytes,
         client_stamp: int) -> str:
    msg = canon([channel_id, method, key, b64e(value), client_stamp])
    return hmac.new(secret, msg, hashlib.sha256).hexdigest()

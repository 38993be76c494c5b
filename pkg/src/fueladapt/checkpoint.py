"""Bit-exact binary checkpoints for policies and policy libraries.

Layout: magic `CMRL`, format version (u32 LE), a length-prefixed JSON
metadata blob (sorted keys, no whitespace), then every parameter array
as a u64 LE element count followed by raw little-endian float64 bytes.
Array order is fixed by the network layout recorded in the metadata, so
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .meta import Complement
from .nets import NetParams, NetSpec
from .policy import PolicyParams

MAGIC = b"CMRL"
VERSION = 1


@dataclass
class Checkpoint:
    params: PolicyParams
    rng: np.random.Generator
    step_count: int
    meta: dict


def _spec_meta(spec: NetSpec) -> dict:
    return {"sizes": list(spec.layer_sizes), "activations": list(spec.activations)}


def _spec_from_meta(d: dict) -> NetSpec:
    return NetSpec(tuple(d["sizes"]), tuple(d["activations"]))


def _rng_state_meta(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _rng_from_meta(state: dict) -> np.random.Generator:
    bg = getattr(np.random, state["bit_generator"])()
    bg.state = state
    return np.random.Generator(bg)


def _write_array(fh, arr: np.ndarray) -> None:
    flat = np.ascontiguousarray(arr, dtype="<f8").ravel()
    fh.write(struct.pack("<Q", flat.size))
    fh.write(flat.tobytes())


def _read_array(fh, shape: tuple) -> np.ndarray:
    (count,) = struct.unpack("<Q", _read_exact(fh, 8))
    expected = int(np.prod(shape))
    if count != expected:
        raise ValueError(f"array holds {count} values, layout wants {expected}")
    data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
    return data.reshape(shape).astype(np.float64)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("checkpoint truncated")
    return data


def _write_net(fh, net: NetParams) -> None:
    for w, b in zip(net.weights, net.biases):
        _write_array(fh, w)
        _write_array(fh, b)


def _read_net(fh, spec: NetSpec) -> NetParams:
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        weights.append(_read_array(fh, (fan_out, fan_in)))
        biases.append(_read_array(fh, (fan_out,)))
    return NetParams(weights, biases)


def _write_policy(fh, params: PolicyParams) -> None:
    _write_net(fh, params.action_net)
    _write_net(fh, params.value_net)


def _read_policy(fh, action_spec: NetSpec, value_spec: NetSpec) -> PolicyParams:
    action = _read_net(fh, action_spec)
    value = _read_net(fh, value_spec)
    return PolicyParams(action_net=action, value_net=value,
                        action_spec=action_spec, value_spec=value_spec)


def _open_container(fh, expect_kind: str) -> dict:
    if _read_exact(fh, 4) != MAGIC:
        raise ValueError("bad magic; not a checkpoint file")
    (version,) = struct.unpack("<I", _read_exact(fh, 4))
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack("<Q", _read_exact(fh, 8))
    meta = json.loads(_read_exact(fh, meta_len).decode("utf-8"))
    if meta.get("kind") != expect_kind:
        raise ValueError(f"expected a {expect_kind} file, found {meta.get('kind')!r}")
    return meta


def _write_container(fh, meta: dict) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<I", VERSION))
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    fh.write(struct.pack("<Q", len(blob)))
    fh.write(blob)


def save_checkpoint(path: str, params: PolicyParams, rng: np.random.Generator,
                    step_count: int, extra: dict | None = None) -> None:
    meta = {
        "kind": "policy",
        "step_count": int(step_count),
        "rng": _rng_state_meta(rng),
        "action_spec": _spec_meta(params.action_spec),
        "value_spec": _spec_meta(params.value_spec),
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        _write_container(fh, meta)
        _write_policy(fh, params)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        meta = _open_container(fh, "policy")
        params = _read_policy(
            fh, _spec_from_meta(meta["action_spec"]), _spec_from_meta(meta["value_spec"])
        )
        if fh.read(1):
            raise ValueError("trailing bytes after checkpoint payload")
    return Checkpoint(
        params=params,
        rng=_rng_from_meta(meta["rng"]),
        step_count=meta["step_count"],
        meta=meta.get("extra", {}),
    )


def save_complement(path: str, complement: Complement,
                    action_spec: NetSpec | None = None,
                    value_spec: NetSpec | None = None) -> None:
    if complement.members:
        action_spec = complement.members[0].action_spec
        value_spec = complement.members[0].value_spec
    if action_spec is None or value_spec is None:
        raise ValueError("empty library needs explicit network layouts")
    meta = {
        "kind": "complement",
        "n_members": len(complement.members),
        "max_size": complement.max_size,
        "action_spec": _spec_meta(action_spec),
        "value_spec": _spec_meta(value_spec),
    }
    with open(path, "wb") as fh:
        _write_container(fh, meta)
        for member in complement.members:
            _write_policy(fh, member)


def load_complement(path: str) -> Complement:
    with open(path, "rb") as fh:
        meta = _open_container(fh, "complement")
        a_spec = _spec_from_meta(meta["action_spec"])
        v_spec = _spec_from_meta(meta["value_spec"])
        members = [_read_policy(fh, a_spec, v_spec) for _ in range(meta["n_members"])]
        if fh.read(1):
            raise ValueError("trailing bytes after library payload")
    return Complement(members=members, max_size=meta["max_size"])

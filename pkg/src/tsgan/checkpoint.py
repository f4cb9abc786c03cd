"""Single-file checkpoint container.

A checkpoint is a JSON document with a versioned header, the training
config, the fitted scaler (decimal text, 17 significant digits), the full
loss history, the RNG state, both Adam states, and every named parameter
block as base64-encoded little-endian float64 bytes. Serialization is
byte-deterministic for identical runs (sorted keys, fixed separators).
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .errors import DataError
from .gan import Discriminator, Generator, LossHistory, TrainConfig, TrainedModel
from .optim import AdamState
from .scaling import ScalerParams

FORMAT = "tsgan-checkpoint"
VERSION = 1


def _encode_array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape),
            "data": base64.b64encode(
                np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")}


def _decode_array(obj: dict) -> np.ndarray:
    flat = np.frombuffer(base64.b64decode(obj["data"]), dtype="<f8")
    return flat.reshape(obj["shape"]).copy()


def _encode_blocks(blocks: dict[str, np.ndarray]) -> dict:
    return {name: _encode_array(a) for name, a in blocks.items()}


def _decode_blocks(obj: dict) -> dict[str, np.ndarray]:
    return {name: _decode_array(v) for name, v in obj.items()}


def _encode_adam(state: AdamState) -> dict:
    return {"lr": state.lr, "beta1": state.beta1, "beta2": state.beta2,
            "epsilon": state.epsilon, "t": state.t,
            "m": _encode_blocks(state.m), "v": _encode_blocks(state.v)}


def _decode_adam(obj: dict) -> AdamState:
    return AdamState(lr=obj["lr"], beta1=obj["beta1"], beta2=obj["beta2"],
                     epsilon=obj["epsilon"], t=obj["t"],
                     m=_decode_blocks(obj["m"]), v=_decode_blocks(obj["v"]))


def _sanitize(obj):
    """Recursively convert numpy scalars/arrays (RNG state) to JSON types."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.dtype.str, "values": obj.tolist()}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _unsanitize(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["values"], dtype=obj["__ndarray__"])
        return {k: _unsanitize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unsanitize(v) for v in obj]
    return obj


def save(path, model: TrainedModel) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": {
            "noise_dim": model.config.noise_dim,
            "condition_dim": model.config.condition_dim,
            "batch_size": model.config.batch_size,
            "epochs": model.config.epochs,
            "lr": model.config.lr,
            "beta1": model.config.beta1,
            "beta2": model.config.beta2,
            "seed": model.config.seed,
            "hidden_size": model.config.hidden_size,
            "disc_layers": list(model.config.disc_layers),
            "clip_norm": model.config.clip_norm,
            "init_scheme": model.config.init_scheme,
        },
        "scaler": {"mean": repr(model.scaler.mean),
                   "stddev": repr(model.scaler.stddev),
                   "n_fitted": model.scaler.n_fitted},
        "epoch": model.epoch,
        "loss_history": {"d_epoch": model.history.d_epoch,
                         "g_epoch": model.history.g_epoch,
                         "d_batch": model.history.d_batch,
                         "g_batch": model.history.g_batch},
        "rng_state": _sanitize(model.rng_state),
        "params": _encode_blocks({**model.generator.params(),
                                  **model.discriminator.params()}),
        "adam_g": _encode_adam(model.adam_g),
        "adam_d": _encode_adam(model.adam_d),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise DataError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported checkpoint version {doc.get('version')}")

    cfg = doc["config"]
    config = TrainConfig(**{**cfg, "disc_layers": tuple(cfg["disc_layers"])})
    scaler = ScalerParams(mean=float(doc["scaler"]["mean"]),
                          stddev=float(doc["scaler"]["stddev"]),
                          n_fitted=int(doc["scaler"]["n_fitted"]))
    params = _decode_blocks(doc["params"])

    rng = np.random.default_rng(0)  # placeholder; weights are overwritten
    gen = Generator(config, rng)
    disc = Discriminator(config, rng)
    for name, target in {**gen.params(), **disc.params()}.items():
        target[...] = params[name]

    hist = doc["loss_history"]
    history = LossHistory(d_epoch=hist["d_epoch"], g_epoch=hist["g_epoch"],
                          d_batch=hist["d_batch"], g_batch=hist["g_batch"])
    return TrainedModel(generator=gen, discriminator=disc,
                        adam_g=_decode_adam(doc["adam_g"]),
                        adam_d=_decode_adam(doc["adam_d"]),
                        scaler=scaler, config=config, epoch=doc["epoch"],
                        history=history,
                        rng_state=_unsanitize(doc["rng_state"]))

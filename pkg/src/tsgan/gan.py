"""Conditional GAN over windowed closing prices.

Generator: an LSTM that walks the d-step condition window, one close per
step, with a per-sample Gaussian noise vector concatenated to every step
input; a scalar head reads the final short-term state. Discriminator: an
MLP scoring (condition window, value) as a raw logit.

Training alternates one discriminator step and one generator step per
mini-batch. All randomness flows through a single seeded Generator so runs
are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scaling
from .data import PairSet
from .errors import DataError, NumericError
from .nn import (DenseLayer, LstmCell, LstmState, clip_global_norm,
                 dense_backward, dense_forward, lstm_backward, lstm_forward)
from .optim import AdamState, adam_step, bce_with_logits, sigmoid

LN2 = float(np.log(2.0))


@dataclass
class TrainConfig:
    noise_dim: int = 8
    condition_dim: int = 60
    batch_size: int = 64
    epochs: int = 50
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    hidden_size: int = 64
    disc_layers: tuple = (128, 64, 32)
    clip_norm: float = 5.0
    init_scheme: str = "uniform-xavier"

    def __post_init__(self):
        for name in ("noise_dim", "condition_dim", "batch_size", "epochs",
                     "lr", "hidden_size"):
            if getattr(self, name) <= 0:
                raise DataError(f"TrainConfig.{name} must be positive")
        self.disc_layers = tuple(int(w) for w in self.disc_layers)


@dataclass
class LossHistory:
    d_epoch: list = field(default_factory=list)
    g_epoch: list = field(default_factory=list)
    d_batch: list = field(default_factory=list)
    g_batch: list = field(default_factory=list)


class Generator:
    """LSTM over the condition window plus repeated noise; scalar head."""

    def __init__(self, config: TrainConfig, rng: np.random.Generator):
        self.noise_dim = config.noise_dim
        self.lstm = LstmCell.create(1 + config.noise_dim, config.hidden_size,
                                    rng, config.init_scheme)
        self.head = DenseLayer.create(config.hidden_size, 1, "identity",
                                      rng, config.init_scheme)

    def params(self) -> dict[str, np.ndarray]:
        out = {f"gen.lstm.{k}": m for k, m in self.lstm.matrices().items()}
        out["gen.head.weights"] = self.head.weights
        out["gen.head.bias"] = self.head.bias
        return out

    def forward(self, conditions: np.ndarray, z: np.ndarray, keep_cache=True):
        """Generate one scalar per row of `conditions` using noise rows `z`.

        Returns (values (k,), cache or None).
        """
        conditions = np.atleast_2d(np.asarray(conditions, dtype=np.float64))
        k, d = conditions.shape
        xs = np.empty((d, k, 1 + self.noise_dim))
        xs[:, :, 0] = conditions.T
        xs[:, :, 1:] = z
        state, caches = lstm_forward(
            self.lstm, xs, LstmState.zeros(self.lstm.hidden_size, k))
        out, head_cache = dense_forward(self.head, state.z)
        xhat = out[:, 0]
        if not np.all(np.isfinite(xhat)):
            raise NumericError("generator produced non-finite output")
        return xhat, ((caches, head_cache) if keep_cache else None)

    def backward(self, cache, dxhat: np.ndarray) -> dict[str, np.ndarray]:
        caches, head_cache = cache
        dfinal, head_grads = dense_backward(self.head, head_cache,
                                            dxhat[:, None])
        lstm_grads, _ = lstm_backward(self.lstm, caches, dfinal)
        out = {f"gen.lstm.{k}": g for k, g in lstm_grads.mats.items()}
        out["gen.head.weights"] = head_grads.weights
        out["gen.head.bias"] = head_grads.bias
        return out


class Discriminator:
    """MLP over [condition window, value]: ReLU hidden layers, logit out."""

    def __init__(self, config: TrainConfig, rng: np.random.Generator):
        widths = [config.condition_dim + 1, *config.disc_layers, 1]
        self.layers = []
        for i in range(len(widths) - 1):
            act = "identity" if i == len(widths) - 2 else "relu"
            self.layers.append(DenseLayer.create(widths[i], widths[i + 1],
                                                 act, rng, config.init_scheme))

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"disc.{i}.weights"] = layer.weights
            out[f"disc.{i}.bias"] = layer.bias
        return out

    def forward(self, conditions: np.ndarray, values: np.ndarray):
        """Returns (logits (k,), caches)."""
        conditions = np.atleast_2d(np.asarray(conditions, dtype=np.float64))
        x = np.concatenate([conditions,
                            np.asarray(values, dtype=np.float64)[:, None]],
                           axis=1)
        caches = []
        for layer in self.layers:
            x, cache = dense_forward(layer, x)
            caches.append(cache)
        return x[:, 0], caches

    def backward(self, caches, dlogits: np.ndarray):
        """Returns (gradient w.r.t. the stacked input, parameter grads)."""
        g = dlogits[:, None]
        grads = {}
        for i in range(len(self.layers) - 1, -1, -1):
            g, layer_grads = dense_backward(self.layers[i], caches[i], g)
            grads[f"disc.{i}.weights"] = layer_grads.weights
            grads[f"disc.{i}.bias"] = layer_grads.bias
        return g, grads


def _slice_cache(cache, start):
    """Restrict a generator forward cache to batch rows start: onward."""
    lstm_cache, head_cache = cache
    sliced = {key: (val if key == "squeeze" else val[:, start:])
              for key, val in lstm_cache.items()}
    xb, pre, post, squeeze = head_cache
    return sliced, (xb[start:], pre[start:], post[start:], squeeze)


def _clip(grads: dict[str, np.ndarray], clip_norm: float) -> None:
    if clip_norm > 0:
        clip_global_norm(list(grads.values()), clip_norm)


def train_discriminator_step(disc: Discriminator, gen: Generator,
                             conditions: np.ndarray, targets: np.ndarray,
                             adam_d: AdamState, rng: np.random.Generator,
                             clip_norm: float = 5.0, fake=None) -> float:
    """Real pass labeled 1, fake pass labeled 0; the generator output is a
    constant here (no gradient reaches G). Returns the mean half-sum loss.

    `fake` may carry precomputed generator output for this batch; otherwise
    noise is drawn here and the generator runs cache-free."""
    k = targets.shape[0]
    if fake is None:
        z = rng.standard_normal((k, gen.noise_dim))
        fake, _ = gen.forward(conditions, z, keep_cache=False)

    logits_real, caches_real = disc.forward(conditions, targets)
    logits_fake, caches_fake = disc.forward(conditions, fake)
    loss = 0.5 * (bce_with_logits(logits_real, 1.0)
                  + bce_with_logits(logits_fake, 0.0))

    d_real = 0.5 * (sigmoid(logits_real) - 1.0) / k
    d_fake = 0.5 * sigmoid(logits_fake) / k
    _, grads_real = disc.backward(caches_real, d_real)
    _, grads_fake = disc.backward(caches_fake, d_fake)
    grads = {name: grads_real[name] + grads_fake[name] for name in grads_real}
    _clip(grads, clip_norm)
    adam_step(disc.params(), grads, adam_d)
    return loss


def train_generator_step(gen: Generator, disc: Discriminator,
                         conditions: np.ndarray, adam_g: AdamState,
                         rng: np.random.Generator,
                         clip_norm: float = 5.0, fake=None,
                         gen_cache=None) -> float:
    """Fake batch labeled 1 (the fooling objective); gradients flow through
    the discriminator into G, but only G's parameters are updated.

    `fake`/`gen_cache` may carry a precomputed generator pass; otherwise
    noise is drawn here."""
    conditions = np.atleast_2d(conditions)
    k = conditions.shape[0]
    if fake is None:
        z = rng.standard_normal((k, gen.noise_dim))
        fake, gen_cache = gen.forward(conditions, z)
    logits, disc_caches = disc.forward(conditions, fake)
    loss = bce_with_logits(logits, 1.0)

    dlogits = (sigmoid(logits) - 1.0) / k
    dinput, _ = disc.backward(disc_caches, dlogits)
    grads = gen.backward(gen_cache, dinput[:, -1])
    _clip(grads, clip_norm)
    adam_step(gen.params(), grads, adam_g)
    return loss


@dataclass
class TrainedModel:
    generator: Generator
    discriminator: Discriminator
    adam_g: AdamState
    adam_d: AdamState
    scaler: scaling.ScalerParams
    config: TrainConfig
    epoch: int
    history: LossHistory
    rng_state: dict


def train(config: TrainConfig, pairs: PairSet, scaler: scaling.ScalerParams,
          progress=None) -> TrainedModel:
    """Run the full alternating training loop.

    Pairs are reshuffled every epoch with the run RNG; the last partial
    batch is dropped so every update sees exactly `batch_size` samples.
    """
    if len(pairs) == 0:
        raise DataError("no training pairs")
    if pairs.condition_dim != config.condition_dim:
        raise DataError(f"pair window {pairs.condition_dim} != configured "
                        f"condition_dim {config.condition_dim}")
    rng = np.random.default_rng(config.seed)
    gen = Generator(config, rng)
    disc = Discriminator(config, rng)
    adam_g = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    adam_d = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    history = LossHistory()

    k = config.batch_size
    n_batches = len(pairs) // k
    if n_batches == 0:
        raise DataError(f"fewer pairs ({len(pairs)}) than one batch ({k})")

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(len(pairs))
        d_losses = np.empty(n_batches)
        g_losses = np.empty(n_batches)
        for b in range(n_batches):
            idx = perm[b * k:(b + 1) * k]
            cond = pairs.conditions[idx]
            target = pairs.targets[idx]
            try:
                # one double-width generator pass serves both steps: rows
                # :k are the D step's fake batch (no gradient), rows k:
                # the G step's. G's output doesn't depend on D, and two
                # consecutive (k, l) normal draws consume the noise stream
                # exactly like one (2k, l) draw, so this matches running
                # the steps independently.
                z2 = rng.standard_normal((2 * k, gen.noise_dim))
                fake_all, cache = gen.forward(np.concatenate([cond, cond]),
                                              z2)
                d_losses[b] = train_discriminator_step(
                    disc, gen, cond, target, adam_d, rng, config.clip_norm,
                    fake=fake_all[:k])
                g_losses[b] = train_generator_step(
                    gen, disc, cond, adam_g, rng, config.clip_norm,
                    fake=fake_all[k:], gen_cache=_slice_cache(cache, k))
            except NumericError as exc:
                raise NumericError(f"{exc} (epoch {epoch}, batch {b})") from None
        history.d_batch.extend(d_losses.tolist())
        history.g_batch.extend(g_losses.tolist())
        history.d_epoch.append(float(d_losses.mean()))
        history.g_epoch.append(float(g_losses.mean()))
        if progress is not None:
            progress(epoch, history.d_epoch[-1], history.g_epoch[-1])

    return TrainedModel(generator=gen, discriminator=disc, adam_g=adam_g,
                        adam_d=adam_d, scaler=scaler, config=config,
                        epoch=config.epochs, history=history,
                        rng_state=rng.bit_generator.state)


def synthesize_series(gen: Generator, scaler: scaling.ScalerParams,
                      real_closes: np.ndarray, condition_dim: int,
                      mode: str = "conditioned", seed: int = 0,
                      chunk: int = 1024) -> np.ndarray:
    """Generate one value per real target (indices d..N-1) at price scale.

    conditioned: every window is the real history (one-step, teacher-forced).
    recursive: after a real warm-up window, windows are previously
    generated values; a stress-test mode.
    """
    d = condition_dim
    real_closes = np.asarray(real_closes, dtype=np.float64)
    n = real_closes.shape[0]
    if n <= d:
        raise DataError(f"series of length {n} too short for window d={d}")
    normalized = scaling.transform(real_closes, scaler)
    rng = np.random.default_rng(seed)

    if mode == "conditioned":
        out = np.empty(n - d)
        for start in range(0, n - d, chunk):
            stop = min(start + chunk, n - d)
            windows = np.lib.stride_tricks.sliding_window_view(
                normalized, d)[start:stop]
            z = rng.standard_normal((stop - start, gen.noise_dim))
            out[start:stop], _ = gen.forward(windows, z, keep_cache=False)
    elif mode == "recursive":
        buf = list(normalized[:d])
        out = np.empty(n - d)
        for t in range(n - d):
            window = np.array(buf[-d:])[None, :]
            z = rng.standard_normal((1, gen.noise_dim))
            value, _ = gen.forward(window, z, keep_cache=False)
            out[t] = value[0]
            buf.append(out[t])
    else:
        raise DataError(f"unknown synthesis mode {mode!r}")
    return scaling.inverse_transform(out, scaler)

"""Two-stage latent-space adversarial model for short duration sequences.

Stage 1 trains an embedder/recovery pair as an autoencoder onto a latent
sequence ``H``. Stage 2 freezes both and trains a generator (noise -> latent)
against a discriminator that separates real ``H`` from generated latents.
Synthetic data is ``recovery(generator(Z))``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import TimeSeriesDataset
from .gru import RecurrentNet

__all__ = [
    "SequenceBatch",
    "Stage1Config",
    "Stage2Config",
    "TimeGanModel",
    "TrainingDiverged",
    "train_stage1",
    "train_stage2",
    "generate",
    "gradient_check",
    "discriminator_accuracy",
    "save_model",
    "load_model",
]

MODEL_SCHEMA = 1
CLIP_NORM = 5.0


class TrainingDiverged(RuntimeError):
    def __init__(self, stage, epoch, history):
        super().__init__(f"{stage}: non-finite loss at epoch {epoch}")
        self.stage, self.epoch, self.history = stage, epoch, list(history)


@dataclass(frozen=True)
class SequenceBatch:
    """Raw sequences ``(n, T, k)`` with per-position min/max bounds ``(T, k)``.

    Bounds are computed from the data unless given. A position whose min equals
    its max cannot be normalised and is rejected.
    """

    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    labels: tuple = ()
    provenance: str = "simulated"

    @classmethod
    def from_array(cls, values, labels=(), provenance="simulated", bounds=None):
        v = np.asarray(values, dtype=float)
        if v.ndim != 3:
            raise ValueError("sequences must be n x T x k")
        if bounds is None:
            if len(v) < 1:
                raise ValueError("need at least one sequence to derive bounds")
            lo, hi = v.min(axis=0), v.max(axis=0)
        else:
            lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        if np.any(hi <= lo):
            raise ValueError("constant feature: min == max at some position")
        return cls(v, lo, hi, tuple(labels), provenance)

    @classmethod
    def from_dataset(cls, ds: TimeSeriesDataset, framing: str = "time"):
        """``framing="time"``: segments become the T steps of a 1-feature
        sequence; ``"feature"``: one time step with k features."""
        x = ds.values
        v = x[:, :, None] if framing == "time" else x[:, None, :]
        return cls.from_array(v, ds.segments, ds.provenance)

    @property
    def shape(self):
        return self.values.shape

    def normalized(self):
        return (self.values - self.lo) / (self.hi - self.lo)

    def denormalize(self, u):
        return np.asarray(u) * (self.hi - self.lo) + self.lo

    def to_dataset(self, source="") -> TimeSeriesDataset:
        n, T, k = self.values.shape
        flat = self.values.reshape(n, T * k)
        labels = self.labels if len(self.labels) == T * k else tuple(f"c{i}" for i in range(T * k))
        return TimeSeriesDataset(labels, flat, self.provenance, source)


@dataclass
class Stage1Config:
    epochs: int = 2000
    lr: float = 1e-2
    h_lat: int = 8
    layers: int = 1
    seed: int = 0
    optimizer: str = "adam"


@dataclass
class Stage2Config:
    epochs: int = 2000
    lr: float = 1e-3
    z_dim: int = 4
    seed: int = 0
    optimizer: str = "adam"
    g_steps: int = 2
    moment_weight: float = 1.0

    def validate(self):
        if self.z_dim < 1:
            raise ValueError("z_dim must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class TimeGanModel:
    T: int
    k: int
    h_lat: int
    embedder: RecurrentNet
    recovery: RecurrentNet
    lo: np.ndarray
    hi: np.ndarray
    labels: tuple = ()
    generator: RecurrentNet | None = None
    discriminator: RecurrentNet | None = None
    z_dim: int = 0
    stage1_log: list = field(default_factory=list)
    stage2_log: list = field(default_factory=list)
    stage1_done: bool = False
    stage2_done: bool = False
    data_moments: tuple | None = None

    @property
    def autoencoder_params(self) -> dict:
        p = {f"embedder.{k}": v for k, v in self.embedder.parameters().items()}
        p.update({f"recovery.{k}": v for k, v in self.recovery.parameters().items()})
        return p

    @property
    def adversarial_params(self) -> dict:
        p = {}
        if self.generator is not None:
            p.update({f"generator.{k}": v for k, v in self.generator.parameters().items()})
        if self.discriminator is not None:
            p.update({f"discriminator.{k}": v for k, v in self.discriminator.parameters().items()})
        return p

    def autoencoder_digest(self) -> str:
        h = hashlib.sha256()
        for name, v in sorted(self.autoencoder_params.items()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(v).tobytes())
        return h.hexdigest()

    def embed(self, u):
        return self.embedder(u)


# ---------------------------------------------------------------- optimisers

class _Optimizer:
    def __init__(self, params: dict, lr: float, kind: str):
        if kind not in ("gd", "adam"):
            raise ValueError(f"unknown optimizer {kind!r}")
        self.params, self.lr, self.kind = params, lr, kind
        self.t = 0
        if kind == "adam":
            self.m = {k: np.zeros_like(v) for k, v in params.items()}
            self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict):
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        scale = CLIP_NORM / norm if norm > CLIP_NORM else 1.0
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        for k, p in self.params.items():
            g = grads[k] * scale
            if self.kind == "gd":
                p -= self.lr * g
            else:
                self.m[k] = b1 * self.m[k] + (1 - b1) * g
                self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
                mh = self.m[k] / (1 - b1 ** self.t)
                vh = self.v[k] / (1 - b2 ** self.t)
                p -= self.lr * mh / (np.sqrt(vh) + eps)


# -------------------------------------------------------------------- losses

def _softplus(x):
    return np.logaddexp(0.0, x)


def reconstruction_loss(model: TimeGanModel, u):
    """Mean squared reconstruction error and its gradients (embedder + recovery)."""
    H, se = model.embedder.forward(u)
    Xr, sr = model.recovery.forward(H)
    diff = Xr - u
    loss = float(np.mean(diff * diff))
    gr, dH = model.recovery.backward(sr, 2.0 * diff / diff.size)
    ge, _ = model.embedder.backward(se, dH)
    grads = {f"embedder.{k}": v for k, v in ge.items()}
    grads.update({f"recovery.{k}": v for k, v in gr.items()})
    return loss, grads


def discriminator_loss(model: TimeGanModel, H_real, H_fake):
    """Binary cross-entropy of per-step logits: real -> 1, generated -> 0."""
    D = model.discriminator
    lr_, sr = D.forward(H_real)
    lf, sf = D.forward(H_fake)
    loss = float(np.mean(_softplus(-lr_)) + np.mean(_softplus(lf)))
    # d softplus(-l)/dl = -sigmoid(-l) ; d softplus(l)/dl = sigmoid(l)
    g1, _ = D.backward(sr, -1.0 / (1.0 + np.exp(lr_)) / lr_.size)
    g2, _ = D.backward(sf, 1.0 / (1.0 + np.exp(-lf)) / lf.size)
    return loss, {f"discriminator.{k}": g1[k] + g2[k] for k in g1}


def _moments(x, eps=1e-6):
    mu = x.mean(axis=0)
    sd = np.sqrt(x.var(axis=0) + eps)
    return mu, sd


def generator_loss(model: TimeGanModel, Z, moment_weight: float = 0.0):
    """Non-saturating adversarial loss, plus optional first/second moment
    matching of the recovered sequences against the training data."""
    G, D, R = model.generator, model.discriminator, model.recovery
    Hf, sg = G.forward(Z)
    lf, sd = D.forward(Hf)
    loss = float(np.mean(_softplus(-lf)))
    _, dHf = D.backward(sd, -1.0 / (1.0 + np.exp(lf)) / lf.size)
    if moment_weight > 0:
        Xf, sr = R.forward(Hf)
        mu, sdv = _moments(Xf)
        mu0, sd0 = model.data_moments
        nm = mu.size
        loss += moment_weight * float(np.sum((mu - mu0) ** 2) + np.sum((sdv - sd0) ** 2)) / nm
        n = Xf.shape[0]
        dmu = moment_weight * 2.0 * (mu - mu0) / nm
        dsd = moment_weight * 2.0 * (sdv - sd0) / nm
        dXf = dmu / n + dsd * (Xf - mu) / (n * sdv)
        _, dH2 = R.backward(sr, np.broadcast_to(dXf, Xf.shape).copy())
        dHf = dHf + dH2
    gg, _ = G.backward(sg, dHf)
    return loss, {f"generator.{k}": v for k, v in gg.items()}


# ------------------------------------------------------------------ training

def _init_autoencoder(batch: SequenceBatch, cfg: Stage1Config) -> TimeGanModel:
    n, T, k = batch.shape
    rng = np.random.default_rng(cfg.seed)
    emb = RecurrentNet(k, cfg.h_lat, cfg.h_lat, rng, cfg.layers, "sigmoid")
    rec = RecurrentNet(cfg.h_lat, cfg.h_lat, k, rng, cfg.layers, "sigmoid")
    return TimeGanModel(T, k, cfg.h_lat, emb, rec, batch.lo.copy(), batch.hi.copy(), batch.labels)


def train_stage1(batch: SequenceBatch, config: Stage1Config | None = None) -> TimeGanModel:
    """Fit embedder and recovery jointly by minimising reconstruction MSE."""
    cfg = config or Stage1Config()
    if cfg.epochs < 0:
        raise ValueError("epochs must be >= 0")
    model = _init_autoencoder(batch, cfg)
    u = batch.normalized()
    opt = _Optimizer(model.autoencoder_params, cfg.lr, cfg.optimizer)
    for ep in range(cfg.epochs):
        loss, grads = reconstruction_loss(model, u)
        if not np.isfinite(loss):
            raise TrainingDiverged("stage1", ep, model.stage1_log)
        model.stage1_log.append(loss)
        opt.step(grads)
    if cfg.epochs:
        model.stage1_log.append(reconstruction_loss(model, u)[0])
    model.stage1_done = cfg.epochs > 0
    model.data_moments = _moments(u)
    return model


def _noise(rng, n, T, z_dim):
    return rng.uniform(0.0, 1.0, size=(n, T, z_dim))


def train_stage2(batch: SequenceBatch, model: TimeGanModel, config: Stage2Config | None = None,
                 ) -> TimeGanModel:
    """Adversarial training in latent space; embedder and recovery stay frozen.

    Each epoch takes one discriminator step followed by ``g_steps`` generator
    steps, all full-batch with fresh noise.
    """
    cfg = config or Stage2Config()
    cfg.validate()
    if not model.stage1_done:
        raise ValueError("stage 1 must be trained first")
    rng = np.random.default_rng(cfg.seed)
    n, T, k = batch.shape
    model.z_dim = cfg.z_dim
    model.generator = RecurrentNet(cfg.z_dim, model.h_lat, model.h_lat, rng, 1, "sigmoid")
    model.discriminator = RecurrentNet(model.h_lat, model.h_lat, 1, rng, 1, "linear")
    u = batch.normalized()
    model.data_moments = _moments(u)
    H_real = model.embedder(u)
    gp = {f"generator.{k}": v for k, v in model.generator.parameters().items()}
    dp = {f"discriminator.{k}": v for k, v in model.discriminator.parameters().items()}
    opt_g = _Optimizer(gp, cfg.lr, cfg.optimizer)
    opt_d = _Optimizer(dp, cfg.lr, cfg.optimizer)
    for ep in range(cfg.epochs):
        H_fake = model.generator(_noise(rng, n, T, cfg.z_dim))
        ld, gd = discriminator_loss(model, H_real, H_fake)
        opt_d.step(gd)
        for _ in range(cfg.g_steps):
            lg, gg = generator_loss(model, _noise(rng, n, T, cfg.z_dim), cfg.moment_weight)
            opt_g.step(gg)
        if not (np.isfinite(ld) and np.isfinite(lg)):
            raise TrainingDiverged("stage2", ep, model.stage2_log)
        model.stage2_log.append((ld, lg))
    model.stage2_done = True
    return model


def generate(model: TimeGanModel, n: int, seed: int = 0) -> SequenceBatch:
    """Draw ``n`` synthetic sequences in seconds (provenance ``synthetic``)."""
    if not (model.stage1_done and model.stage2_done):
        raise ValueError("model is not fully trained")
    if n < 0:
        raise ValueError("n must be >= 0")
    bounds = (model.lo, model.hi)
    if n == 0:
        return SequenceBatch(np.zeros((0, model.T, model.k)), model.lo, model.hi, model.labels,
                             "synthetic")
    rng = np.random.default_rng(seed)
    u = model.recovery(model.generator(_noise(rng, n, model.T, model.z_dim)))
    vals = u * (model.hi - model.lo) + model.lo
    return SequenceBatch.from_array(vals, model.labels, "synthetic", bounds)


def discriminator_accuracy(model: TimeGanModel, real: SequenceBatch, n_fake: int | None = None,
                           seed: int = 0) -> float:
    """Balanced accuracy of the trained discriminator on real vs generated latents.

    ``real`` should be held out from training; it is normalised with the
    model's stored bounds.
    """
    u = (real.values - model.lo) / (model.hi - model.lo)
    n_fake = len(u) if n_fake is None else n_fake
    rng = np.random.default_rng(seed)
    Hf = model.generator(_noise(rng, n_fake, model.T, model.z_dim))
    lr_ = model.discriminator(model.embedder(u)).mean(axis=(1, 2))
    lf = model.discriminator(Hf).mean(axis=(1, 2))
    return 0.5 * (float(np.mean(lr_ > 0)) + float(np.mean(lf <= 0)))


# --------------------------------------------------------- gradient checking

def gradient_check(model: TimeGanModel, batch, epsilon: float = 1e-5, *, per_tensor: int = 6,
                   seed: int = 0, moment_weight: float = 1.0) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Covers the reconstruction loss (embedder, recovery) and, when the
    adversarial networks exist, the discriminator and generator losses.
    ``batch`` is a SequenceBatch or an already normalised ``(n, T, k)`` array.
    Relative error is ``|a - f| / max(|a|, |f|, 1e-6)``.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    u = batch.normalized() if isinstance(batch, SequenceBatch) else np.asarray(batch, float)
    rng = np.random.default_rng(seed)
    checks = [(lambda: reconstruction_loss(model, u), model.autoencoder_params)]
    if model.generator is not None and model.discriminator is not None:
        if model.data_moments is None:
            model.data_moments = _moments(u)
        Z = _noise(rng, len(u), model.T, model.z_dim)
        Hr = model.embedder(u)
        Hf = model.generator(Z)
        dparams = {k: v for k, v in model.adversarial_params.items() if k.startswith("disc")}
        gparams = {k: v for k, v in model.adversarial_params.items() if k.startswith("gen")}
        checks.append((lambda: discriminator_loss(model, Hr, Hf), dparams))
        checks.append((lambda: generator_loss(model, Z, moment_weight), gparams))
    worst = 0.0
    for fn, params in checks:
        _, grads = fn()
        for name, p in params.items():
            flat = p.reshape(-1)
            idx = rng.choice(flat.size, size=min(per_tensor, flat.size), replace=False)
            for i in idx:
                old = flat[i]
                flat[i] = old + epsilon
                lp = fn()[0]
                flat[i] = old - epsilon
                lm = fn()[0]
                flat[i] = old
                num = (lp - lm) / (2 * epsilon)
                ana = grads[name].reshape(-1)[i]
                rel = abs(ana - num) / max(abs(ana), abs(num), 1e-6)
                worst = max(worst, rel)
    return worst


# --------------------------------------------------------------- persistence

def _net_state(net: RecurrentNet | None):
    if net is None:
        return None
    return {"k_in": net.k_in, "hidden": net.hidden, "k_out": net.k_out, "out_act": net.out_act,
            "layers": len(net.cells),
            "params": {k: v.tolist() for k, v in net.parameters().items()}}


def _net_load(state):
    if state is None:
        return None
    net = RecurrentNet(state["k_in"], state["hidden"], state["k_out"], np.random.default_rng(0),
                       state["layers"], state["out_act"])
    for k, v in net.parameters().items():
        v[...] = np.asarray(state["params"][k], dtype=float)
    return net


def save_model(model: TimeGanModel, path) -> None:
    """Write a JSON parameter file (schema-versioned, with normalisation bounds)."""
    doc = {
        "schema_version": MODEL_SCHEMA,
        "T": model.T, "k": model.k, "h_lat": model.h_lat, "z_dim": model.z_dim,
        "labels": list(model.labels),
        "bounds": {"lo": model.lo.tolist(), "hi": model.hi.tolist()},
        "stage1_done": model.stage1_done, "stage2_done": model.stage2_done,
        "data_moments": None if model.data_moments is None else [m.tolist() for m in model.data_moments],
        "stage1_log": model.stage1_log,
        "stage2_log": [list(x) for x in model.stage2_log],
        "networks": {name: _net_state(getattr(model, name))
                     for name in ("embedder", "recovery", "generator", "discriminator")},
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> TimeGanModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != MODEL_SCHEMA:
        raise ValueError(f"{path}: unsupported model schema {doc.get('schema_version')!r}")
    nets = {k: _net_load(v) for k, v in doc["networks"].items()}
    dm = doc.get("data_moments")
    return TimeGanModel(
        doc["T"], doc["k"], doc["h_lat"], nets["embedder"], nets["recovery"],
        np.asarray(doc["bounds"]["lo"]), np.asarray(doc["bounds"]["hi"]), tuple(doc["labels"]),
        nets["generator"], nets["discriminator"], doc["z_dim"], doc["stage1_log"],
        [tuple(x) for x in doc["stage2_log"]], doc["stage1_done"], doc["stage2_done"],
        None if dm is None else tuple(np.asarray(m) for m in dm))

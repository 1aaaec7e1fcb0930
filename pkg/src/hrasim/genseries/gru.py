"""Gated recurrent units with hand-written backpropagation through time.

Cell update (Cho et al. form, reset gate applied before the recurrent
product)::

    z  = sigmoid(x Wz + h Uz + bz)
    r  = sigmoid(x Wr + h Ur + br)
    n  = tanh(x Wn + (r * h) Un + bn)
    h' = (1 - z) * n + z * h

All arrays are float64; batches are laid out ``(n, T, features)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["sigmoid", "GruCell", "RecurrentNet"]


def sigmoid(x):
    # split by sign so large |x| never overflows exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _glorot(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


@dataclass
class GruCell:
    """Weights of one GRU layer, ``k_in`` inputs and ``h`` hidden units."""

    k_in: int
    h: int
    params: dict

    GATES = ("z", "r", "n")

    @classmethod
    def init(cls, k_in: int, h: int, rng: np.random.Generator) -> "GruCell":
        p = {}
        for g in cls.GATES:
            p["W" + g] = _glorot(rng, k_in, h)
            # orthogonal recurrent weights keep early gradients well scaled
            q, _ = np.linalg.qr(rng.standard_normal((h, h)))
            p["U" + g] = q
            p["b" + g] = np.zeros(h)
        return cls(k_in, h, p)

    def check(self):
        for g in self.GATES:
            assert self.params["W" + g].shape == (self.k_in, self.h)
            assert self.params["U" + g].shape == (self.h, self.h)
            assert self.params["b" + g].shape == (self.h,)
        if not all(np.all(np.isfinite(v)) for v in self.params.values()):
            raise FloatingPointError("non-finite GRU weights")

    def forward(self, X):
        p = self.params
        n, T, _ = X.shape
        h = np.zeros((n, self.h))
        H = np.empty((n, T, self.h))
        cache = []
        for t in range(T):
            x = X[:, t, :]
            z = sigmoid(x @ p["Wz"] + h @ p["Uz"] + p["bz"])
            r = sigmoid(x @ p["Wr"] + h @ p["Ur"] + p["br"])
            rh = r * h
            nn = np.tanh(x @ p["Wn"] + rh @ p["Un"] + p["bn"])
            h_new = (1.0 - z) * nn + z * h
            cache.append((x, h, z, r, rh, nn))
            H[:, t, :] = h = h_new
        return H, cache

    def backward(self, cache, dH):
        p = self.params
        g = {k: np.zeros_like(v) for k, v in p.items()}
        n, T, _ = dH.shape
        dX = np.empty((n, T, self.k_in))
        dh_next = np.zeros((n, self.h))
        for t in reversed(range(T)):
            x, h, z, r, rh, nn = cache[t]
            dh_new = dH[:, t, :] + dh_next
            dnn = dh_new * (1.0 - z)
            dz = dh_new * (h - nn)
            dh = dh_new * z
            dan = dnn * (1.0 - nn * nn)
            g["Wn"] += x.T @ dan
            g["Un"] += rh.T @ dan
            g["bn"] += dan.sum(0)
            drh = dan @ p["Un"].T
            dx = dan @ p["Wn"].T
            dr = drh * h
            dh += drh * r
            dar = dr * r * (1.0 - r)
            g["Wr"] += x.T @ dar
            g["Ur"] += h.T @ dar
            g["br"] += dar.sum(0)
            dx += dar @ p["Wr"].T
            dh += dar @ p["Ur"].T
            daz = dz * z * (1.0 - z)
            g["Wz"] += x.T @ daz
            g["Uz"] += h.T @ daz
            g["bz"] += daz.sum(0)
            dx += daz @ p["Wz"].T
            dh += daz @ p["Uz"].T
            dX[:, t, :] = dx
            dh_next = dh
        return g, dX


class RecurrentNet:
    """A stack of GRU layers followed by a per-time-step affine map.

    ``out_act`` is ``"sigmoid"`` (bounded outputs, as for latent codes and
    normalised data) or ``"linear"`` (discriminator logits).
    """

    def __init__(self, k_in: int, hidden: int, k_out: int, rng: np.random.Generator,
                 layers: int = 1, out_act: str = "sigmoid"):
        if out_act not in ("sigmoid", "linear"):
            raise ValueError(out_act)
        self.k_in, self.hidden, self.k_out, self.out_act = k_in, hidden, k_out, out_act
        self.cells = [GruCell.init(k_in if i == 0 else hidden, hidden, rng) for i in range(layers)]
        self.Wo = _glorot(rng, hidden, k_out)
        self.bo = np.zeros(k_out)

    # flat name -> array view used by optimisers, hashing and gradient checks
    def parameters(self) -> dict:
        out = {}
        for i, c in enumerate(self.cells):
            for k, v in c.params.items():
                out[f"gru{i}.{k}"] = v
        out["out.W"] = self.Wo
        out["out.b"] = self.bo
        return out

    def forward(self, X):
        caches = []
        H = X
        for c in self.cells:
            H, cache = c.forward(H)
            caches.append(cache)
        A = H @ self.Wo + self.bo
        Y = sigmoid(A) if self.out_act == "sigmoid" else A
        return Y, (caches, H, Y)

    def backward(self, state, dY):
        caches, H, Y = state
        dA = dY * Y * (1.0 - Y) if self.out_act == "sigmoid" else dY
        grads = {"out.W": np.einsum("nth,nto->ho", H, dA), "out.b": dA.sum((0, 1))}
        dH = dA @ self.Wo.T
        for i in reversed(range(len(self.cells))):
            g, dH = self.cells[i].backward(caches[i], dH)
            for k, v in g.items():
                grads[f"gru{i}.{k}"] = v
        return grads, dH

    def __call__(self, X):
        return self.forward(X)[0]
